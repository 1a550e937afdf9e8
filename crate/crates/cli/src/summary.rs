use std::fmt::Write as _;

use pinchlab::pinch::{round_sig, PinchReport};

/// Six significant digits; scientific notation outside [1e-3, 1e6).
pub fn num(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let a = x.abs();
    if a == 0.0 || (1e-3..1e6).contains(&a) {
        format!("{}", round_sig(x, 6))
    } else {
        format!("{x:.5e}")
    }
}

/// One-screen text summary of a report.
pub fn render(rep: &PinchReport) -> String {
    let prov = &rep.provenance;
    let cfg = &prov.config;
    let f = &rep.functionals;
    let d = &rep.deviations;
    let label = match (&prov.shape, &prov.mesh) {
        (Some(s), _) => format!("{} (resolution {})", s.shape.kind_name(), s.resolution),
        (None, Some(name)) => name.clone(),
        (None, None) => "mesh".to_owned(),
    };
    let mut out = String::new();
    let mut row = |key: &str, value: String| {
        let _ = writeln!(out, "  {key:<28} {value}");
    };

    row(
        "input",
        format!(
            "{label}: {} vertices, {} faces, χ = {}",
            prov.vertices, prov.faces, prov.euler_characteristic
        ),
    );
    row(
        "config",
        format!("n = {}, p = {}, q = {}, r = {}", cfg.n, cfg.p, cfg.q, cfg.r),
    );
    row(
        "λ1",
        format!(
            "{}  (residual {}, {} iterations, cluster width {})",
            round_sig(rep.spectral.lambda1, 9),
            num(rep.spectral.residual),
            rep.spectral.iterations,
            num(rep.spectral.cluster_width)
        ),
    );
    row(
        &format!("k_{{{},{}}}", f.p, f.r),
        round_sig(f.k_pr, 9).to_string(),
    );
    row("volume (area)", num(f.volume));
    row(
        "pinching deficit",
        format!(
            "{}  (dimensionless {})",
            num(f.pinching.deficit),
            num(f.pinching.dimensionless)
        ),
    );
    row(
        "Reilly deficit",
        format!("{}  (rhs {})", num(f.reilly.deficit), num(f.reilly.rhs)),
    );
    let hm: Vec<String> = f.hm_residual.iter().map(|&x| num(x)).collect();
    row("Hsiung–Minkowski residual", format!("[{}]", hm.join(", ")));
    row(
        "chain violations",
        format!(
            "{} of {} checked ({} excluded)",
            f.chain.violations, f.chain.checked, f.chain.excluded
        ),
    );
    row(
        "sphere fit",
        format!(
            "radius {}, center ({}, {}, {}), rms {}",
            num(rep.sphere.radius),
            num(rep.sphere.center[0]),
            num(rep.sphere.center[1]),
            num(rep.sphere.center[2]),
            num(rep.sphere.rms_radial_error)
        ),
    );
    row(
        "radii fit / λ1 / k",
        format!(
            "{} / {} / {}",
            num(rep.radii.fit),
            num(rep.radii.from_lambda1),
            num(rep.radii.from_k)
        ),
    );
    match rep.theta_hat {
        Some(t) => row(
            "θ̂",
            format!(
                "{}  (vs λ1 sphere {})",
                num(t),
                rep.theta_hat_lambda1.map_or("-".into(), num)
            ),
        ),
        None => row(
            "θ̂",
            rep.theta_note
                .as_deref()
                .unwrap_or("theta_hat undefined: not star-shaped")
                .replacen("theta_hat", "θ̂", 1),
        ),
    }
    row(
        "Einstein deviation",
        format!("{}  (k = {})", num(d.einstein), num(d.k)),
    );
    row(&format!("‖B − √k‖_{}", 2.0 * d.q), num(d.b_2q));
    row(&format!("‖τ‖_{}", 2.0 * d.q), num(d.tau_2q));
    row(&format!("‖H_2 − k‖_{}", d.q), num(d.h2_minus_k_q));
    row("‖B − √k‖_∞", num(d.umbilic_inf));
    row(
        "CMC / scalar ε",
        format!("{} / {}", num(rep.cmc.cmc_eps), num(rep.cmc.scal_eps)),
    );
    row(
        "lemma gap",
        format!(
            "{}  (ratio {})",
            num(rep.cmc.lemma_gap),
            num(rep.cmc.lemma_ratio)
        ),
    );
    if rep.flagged_vertices > 0 {
        row("flagged vertices", rep.flagged_vertices.to_string());
    }
    out
}
