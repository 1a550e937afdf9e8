use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use log::info;
use pinchlab::pinch::{analyze_full, round_sig, PinchReport, REPORT_DIGITS};
use pinchlab::{AnalysisConfig, AnalyticShape, ShapeDescriptor};
use serde::Deserialize;

use crate::shape_args::ShapeArgs;
use crate::{svg, ConfigArgs, Failure};

/// CSV header; column order is part of the output contract.
pub const HEADER: [&str; 13] = [
    "param",
    "lambda1",
    "k_pr",
    "pinching_deficit",
    "hm_residual",
    "einstein_dev",
    "tau_2q",
    "h2_dev",
    "theta_hat",
    "cmc_eps",
    "scal_eps",
    "lemma_gap",
    "notes",
];

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    /// JSON sweep specification (shape, resolution, param, values, config, out).
    #[arg(long, conflicts_with_all = ["shape", "param", "values"])]
    spec: Option<PathBuf>,
    #[command(flatten)]
    shape: ShapeArgs,
    /// Parameter to vary: resolution, radius, a, b, c, R, r, delta, l or m.
    #[arg(long)]
    param: Option<String>,
    /// Comma-separated, strictly increasing values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Vec<f64>,
    #[command(flatten)]
    config: ConfigArgs,
    /// Output CSV (overrides the spec's `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for the SVG charts (default: next to the CSV).
    #[arg(long)]
    svg_dir: Option<PathBuf>,
}

/// A parameter sweep as read from `--spec`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub shape: AnalyticShape,
    #[serde(default)]
    pub resolution: Option<usize>,
    pub param: String,
    pub values: Vec<f64>,
    #[serde(default)]
    pub config: Option<AnalysisConfig>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Param {
    Resolution,
    Radius,
    A,
    B,
    C,
    Major,
    Minor,
    Delta,
    L,
    M,
}

impl Param {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "resolution" | "res" => Param::Resolution,
            "radius" => Param::Radius,
            "a" => Param::A,
            "b" => Param::B,
            "c" => Param::C,
            "R" | "major" => Param::Major,
            "r" | "minor" => Param::Minor,
            "delta" => Param::Delta,
            "l" => Param::L,
            "m" => Param::M,
            _ => return None,
        })
    }

    fn integral(self) -> bool {
        matches!(self, Param::Resolution | Param::L | Param::M)
    }

    fn applies_to(self, shape: &AnalyticShape) -> bool {
        use AnalyticShape::*;
        match self {
            Param::Resolution => true,
            Param::Radius => matches!(shape, Sphere { .. } | PerturbedSphere { .. }),
            Param::A | Param::B | Param::C => matches!(shape, Ellipsoid { .. }),
            Param::Major | Param::Minor => matches!(shape, Torus { .. }),
            Param::Delta | Param::L | Param::M => matches!(shape, PerturbedSphere { .. }),
        }
    }

    /// `base` with this parameter set to `v`; assumes `applies_to` and integrality were checked.
    fn apply(self, base: ShapeDescriptor, v: f64) -> ShapeDescriptor {
        use AnalyticShape::*;
        let mut d = base;
        match (&mut d.shape, self) {
            (_, Param::Resolution) => d.resolution = v as usize,
            (Sphere { radius } | PerturbedSphere { radius, .. }, Param::Radius) => *radius = v,
            (Ellipsoid { a, .. }, Param::A) => *a = v,
            (Ellipsoid { b, .. }, Param::B) => *b = v,
            (Ellipsoid { c, .. }, Param::C) => *c = v,
            (Torus { major, .. }, Param::Major) => *major = v,
            (Torus { minor, .. }, Param::Minor) => *minor = v,
            (PerturbedSphere { delta, .. }, Param::Delta) => *delta = v,
            (PerturbedSphere { l, .. }, Param::L) => *l = v as u32,
            (PerturbedSphere { m, .. }, Param::M) => *m = v as i32,
            _ => unreachable!("parameter checked against shape"),
        }
        d
    }
}

/// A validated sweep, ready to run.
#[derive(Debug, Clone)]
pub struct Plan {
    base: ShapeDescriptor,
    param: Param,
    pub values: Vec<f64>,
    pub config: AnalysisConfig,
    pub out: PathBuf,
}

fn default_resolution(shape: &AnalyticShape) -> usize {
    match shape {
        AnalyticShape::Torus { .. } => 64,
        _ => 4,
    }
}

impl SweepArgs {
    fn plan(&self) -> Result<Plan, Failure> {
        let (base, name, values, spec_config, spec_out) = match &self.spec {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
                let spec: SweepSpec = serde_json::from_str(&text).map_err(|e| {
                    Failure::validation(format!("bad sweep spec {}: {e}", path.display()))
                })?;
                let base = ShapeDescriptor {
                    shape: spec.shape,
                    resolution: spec.resolution.unwrap_or(default_resolution(&spec.shape)),
                };
                (base, spec.param, spec.values, spec.config, spec.out)
            }
            None => {
                let base = self.shape.descriptor()?;
                let name = self
                    .param
                    .clone()
                    .ok_or_else(|| Failure::validation("missing --param"))?;
                (base, name, self.values.clone(), None, None)
            }
        };

        let param = Param::parse(&name)
            .ok_or_else(|| Failure::validation(format!("unknown sweep parameter `{name}`")))?;
        if !param.applies_to(&base.shape) {
            return Err(Failure::validation(format!(
                "parameter `{name}` does not apply to shape {}",
                base.shape.kind_name()
            )));
        }
        validate_values(&values, param.integral())?;

        let config = self.config.resolve_over(spec_config)?;
        let out = self
            .out
            .clone()
            .or(spec_out)
            .ok_or_else(|| Failure::validation("missing --out (or `out` in the spec)"))?;
        Ok(Plan {
            base,
            param,
            values,
            config,
            out,
        })
    }
}

pub fn validate_values(values: &[f64], integral: bool) -> Result<(), Failure> {
    if values.len() < 2 {
        return Err(Failure::validation(format!(
            "a sweep needs at least 2 values, got {}",
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Failure::validation(format!(
            "sweep value {v} is not finite"
        )));
    }
    if let Some(w) = values.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Failure::validation(format!(
            "sweep values must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    if integral {
        if let Some(v) = values.iter().find(|v| v.fract() != 0.0) {
            return Err(Failure::validation(format!(
                "sweep value {v} must be an integer"
            )));
        }
    }
    Ok(())
}

/// Report numbers in CSV cells: 9 significant digits, shortest round-trip text.
pub fn cell(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    let r = round_sig(x, REPORT_DIGITS);
    let a = r.abs();
    if a == 0.0 || (1e-4..1e9).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

fn row_cells(param: f64, rep: Option<&PinchReport>, notes: &[String]) -> Vec<String> {
    let values: [f64; 11] = match rep {
        Some(rep) => {
            let f = &rep.functionals;
            let d = &rep.deviations;
            [
                rep.spectral.lambda1,
                f.k_pr,
                f.pinching.dimensionless,
                f.hm_residual[f.r - 1],
                d.einstein,
                d.tau_2q,
                d.h2_minus_k_q,
                rep.theta_hat.unwrap_or(f64::NAN),
                rep.cmc.cmc_eps,
                rep.cmc.scal_eps,
                rep.cmc.lemma_gap,
            ]
        }
        None => [f64::NAN; 11],
    };
    let mut cells = Vec::with_capacity(HEADER.len());
    cells.push(format!("{param}"));
    cells.extend(values.iter().map(|&x| cell(x)));
    cells.push(notes.join("; "));
    cells
}

pub struct SweepOutcome {
    pub csv: String,
    pub failed: usize,
}

pub fn run(plan: &Plan) -> SweepOutcome {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER).expect("in-memory write");
    let mut failed = 0;
    for &v in &plan.values {
        let desc = plan.param.apply(plan.base, v);
        info!("sweep {:?} = {v}", plan.param);
        let result = desc
            .generate()
            .map_err(|e| format!("generate failed: {e}"))
            .and_then(|mesh| {
                analyze_full(&mesh, &plan.config, Some(desc)).map_err(|e| e.to_string())
            });
        let cells = match result {
            Ok(a) => {
                let rep = &a.report;
                let mut notes = Vec::new();
                if rep.theta_hat.is_none() {
                    notes.push("theta_hat undefined: not star-shaped".to_owned());
                }
                if rep.flagged_vertices > 0 {
                    notes.push(format!("{} flagged vertices", rep.flagged_vertices));
                }
                row_cells(v, Some(rep), &notes)
            }
            Err(msg) => {
                failed += 1;
                log::warn!("sweep row {v} failed: {msg}");
                row_cells(v, None, &[msg])
            }
        };
        w.write_record(&cells).expect("in-memory write");
    }
    let csv = String::from_utf8(w.into_inner().expect("flush")).expect("utf-8");
    SweepOutcome { csv, failed }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<(), Failure> {
    let plan = args.plan()?;
    for w in plan.config.validate().unwrap_or_default() {
        eprintln!("warning: {w}");
    }
    let outcome = run(&plan);
    write(&plan.out, &outcome.csv)?;
    println!(
        "wrote {} ({} rows, {} failed)",
        plan.out.display(),
        plan.values.len(),
        outcome.failed
    );

    let dir = match &args.svg_dir {
        Some(d) => d.clone(),
        None => plan.out.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let stem = plan
        .out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sweep".into());
    let charts = svg::charts_from_csv(&outcome.csv).map_err(Failure::pipeline)?;
    for (group, doc) in charts {
        let path = dir.join(format!("{stem}_{group}.svg"));
        write(&path, &doc)?;
        println!("wrote {}", path.display());
    }

    if outcome.failed == plan.values.len() {
        return Err(Failure::pipeline("every sweep row failed"));
    }
    Ok(())
}
