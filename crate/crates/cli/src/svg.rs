//! Static line charts for sweep CSVs, emitted by hand so output is a pure
//! function of the CSV text.

use std::fmt::Write as _;

/// Chart name and the CSV columns it plots.
pub const GROUPS: [(&str, &[&str]); 4] = [
    ("spectral", &["lambda1", "k_pr"]),
    ("functionals", &["pinching_deficit", "hm_residual"]),
    (
        "deviations",
        &["einstein_dev", "tau_2q", "h2_dev", "theta_hat"],
    ),
    ("cmc", &["cmc_eps", "scal_eps", "lemma_gap"]),
];

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

/// One chart per column group, in [`GROUPS`] order.
pub fn charts_from_csv(csv_text: &str) -> Result<Vec<(&'static str, String)>, String> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        rows.push(
            rec.iter()
                .map(|s| s.parse::<f64>().unwrap_or(f64::NAN))
                .collect::<Vec<_>>(),
        );
    }
    let column = |name: &str| -> Result<Vec<f64>, String> {
        let i = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format!("CSV has no column `{name}`"))?;
        Ok(rows
            .iter()
            .map(|r| r.get(i).copied().unwrap_or(f64::NAN))
            .collect())
    };
    let x = column(&header[0])?;
    GROUPS
        .iter()
        .map(|&(group, cols)| {
            let series = cols
                .iter()
                .map(|&c| Ok((c, column(c)?)))
                .collect::<Result<Vec<_>, String>>()?;
            Ok((group, line_chart(group, &header[0], &x, &series)))
        })
        .collect()
}

/// Four significant digits for tick labels.
fn tick(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 {
        "0".into()
    } else if (1e-3..1e5).contains(&a) {
        format!("{}", pinchlab::pinch::round_sig(x, 4))
    } else {
        format!("{x:.3e}")
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-12 * lo.abs().max(hi.abs()).max(1e-300) {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn line_chart(title: &str, x_label: &str, x: &[f64], series: &[(&str, Vec<f64>)]) -> String {
    let (x0, x1) = range(x.iter().copied());
    let (y0, y1) = range(series.iter().flat_map(|(_, ys)| ys.iter().copied()));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |v: f64| LEFT + (v - x0) / (x1 - x0) * pw;
    let sy = |v: f64| TOP + (y1 - v) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );

    for k in 0..=4 {
        let v = y0 + (y1 - y0) * k as f64 / 4.0;
        let y = sy(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            tick(v)
        );
    }
    for &v in x.iter().filter(|v| v.is_finite()) {
        let px = sx(v);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#,
            TOP + ph,
            TOP + ph + 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph + 16.0,
            tick(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );

    for (i, (name, ys)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        // NaN cells split the line into separate runs.
        let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for (&xv, &yv) in x.iter().zip(ys) {
            if xv.is_finite() && yv.is_finite() {
                runs.last_mut().unwrap().push((sx(xv), sy(yv)));
            } else if !runs.last().unwrap().is_empty() {
                runs.push(Vec::new());
            }
        }
        for run in runs.iter().filter(|r| !r.is_empty()) {
            let pts: Vec<String> = run.iter().map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                pts.join(" ")
            );
            for (a, b) in run {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{a:.2}" cy="{b:.2}" r="2.5" fill="{color}"/>"#
                );
            }
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 18.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 24.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "param,lambda1,k_pr,pinching_deficit,hm_residual,einstein_dev,tau_2q,h2_dev,theta_hat,cmc_eps,scal_eps,lemma_gap,notes\n\
        0,2,1,0,0,0,0,0,0,0,0,0,\n\
        0.1,1.9,1.1,-0.4,0.01,0.8,0.3,0.2,NaN,0.6,2,0.01,theta_hat undefined\n";

    #[test]
    fn one_chart_per_group() {
        let charts = charts_from_csv(CSV).unwrap();
        let names: Vec<_> = charts.iter().map(|(n, _)| *n).collect();
        assert_eq!(names, ["spectral", "functionals", "deviations", "cmc"]);
        for (_, doc) in &charts {
            assert!(doc.starts_with("<svg") && doc.ends_with("</svg>\n"));
        }
        assert_eq!(charts, charts_from_csv(CSV).unwrap());
    }

    #[test]
    fn missing_column_is_an_error() {
        assert!(charts_from_csv("param,lambda1\n1,2\n").is_err());
    }

    #[test]
    fn flat_series_get_a_nonempty_range() {
        let (lo, hi) = range([0.0, 0.0].into_iter());
        assert!(lo < hi);
        let (lo, hi) = range([f64::NAN].into_iter());
        assert_eq!((lo, hi), (0.0, 1.0));
    }
}
