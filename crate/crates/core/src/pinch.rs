//! Comparison with round spheres and the orchestrated analysis report.
//!
//! [`analyze`] runs the whole pipeline on a mesh: recentering, frames,
//! curvature, the first Laplace eigenvalue, integral functionals, a sphere
//! fit, the quasi-isometry distortion of the radial projection onto that
//! sphere, and the almost-Einstein / almost-umbilic / almost-CMC deviations.

use std::f64::consts::PI;

use log::debug;
use nalgebra::{Matrix2, Matrix2x3, Matrix3x2, Matrix4, Vector4};
use serde::Serialize;
use serde_json::Value;

use crate::config::AnalysisConfig;
use crate::curvature::{curvature_field, operator_norm, sym_eigenvalues, CurvatureField};
use crate::error::{Error, Result};
use crate::functionals::{deficit_report, support_function, DeficitReport, Measure, NormSpec};
use crate::mesh::{centroid_recenter, vertex_frames, Mesh, Vec3, VertexFrame};
use crate::shapes::ShapeDescriptor;
use crate::spectral::{first_eigenvalue, mass_matrix, stiffness_matrix, SpectralResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphereFit {
    pub center: [f64; 3],
    pub radius: f64,
    #[serde(rename = "rms")]
    pub rms_radial_error: f64,
}

impl SphereFit {
    pub fn center(&self) -> Vec3 {
        Vec3::from(self.center)
    }
}

/// Algebraic least-squares sphere followed by one Gauss–Newton step on the radial error.
pub fn fit_sphere(mesh: &Mesh) -> Result<SphereFit> {
    // |x|² = 2 c·x + d, with d = R² − |c|²
    let mut normal = Matrix4::zeros();
    let mut rhs = Vector4::zeros();
    for x in mesh.vertices() {
        let row = Vector4::new(2.0 * x.x, 2.0 * x.y, 2.0 * x.z, 1.0);
        normal += row * row.transpose();
        rhs += row * x.norm_squared();
    }
    let sol = normal
        .cholesky()
        .ok_or_else(|| Error::DegenerateFit("vertices are coplanar".into()))?
        .solve(&rhs);
    let mut center = Vec3::new(sol[0], sol[1], sol[2]);
    let r2 = sol[3] + center.norm_squared();
    if !(r2 > 0.0) {
        return Err(Error::DegenerateFit(format!(
            "negative squared radius {r2}"
        )));
    }
    let mut radius = r2.sqrt();

    // residual ρ_i = |x_i − c| − R, unknowns (c, R)
    let mut jtj = Matrix4::zeros();
    let mut jtr = Vector4::zeros();
    for x in mesh.vertices() {
        let d = x - center;
        let dist = d.norm();
        let g = Vector4::new(-d.x / dist, -d.y / dist, -d.z / dist, -1.0);
        jtj += g * g.transpose();
        jtr += g * (dist - radius);
    }
    if let Some(chol) = jtj.cholesky() {
        let step = chol.solve(&(-jtr));
        center += Vec3::new(step[0], step[1], step[2]);
        radius += step[3];
    }
    let n = mesh.vertex_count() as f64;
    let rms = (mesh
        .vertices()
        .iter()
        .map(|x| ((x - center).norm() - radius).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(SphereFit {
        center: [center.x, center.y, center.z],
        radius,
        rms_radial_error: rms,
    })
}

/// Vertices where ⟨X − c, ν⟩ ≤ 0, i.e. where the radial projection from `center` folds.
pub fn star_violations(mesh: &Mesh, frames: &[VertexFrame], center: &Vec3) -> Vec<usize> {
    mesh.vertices()
        .iter()
        .zip(frames)
        .enumerate()
        .filter(|(_, (x, f))| !((*x - center).dot(&f.normal) > 0.0))
        .map(|(v, _)| v)
        .collect()
}

/// θ̂ = max over faces of |σ² − 1| for the singular values σ of the radial
/// projection onto the sphere (`center`, `radius`), linearized per triangle.
pub fn distortion(mesh: &Mesh, frames: &[VertexFrame], center: &Vec3, radius: f64) -> Result<f64> {
    let bad = star_violations(mesh, frames, center);
    if !bad.is_empty() {
        return Err(Error::NotStarShaped { vertices: bad });
    }
    let project = |x: &Vec3| {
        let d = x - center;
        center + d * (radius / d.norm())
    };
    let mut theta: f64 = 0.0;
    for f in 0..mesh.face_count() {
        let [a, b, c] = mesh.face_points(f);
        let (e1, e2) = (b - a, c - a);
        let (pa, pb, pc) = (project(&a), project(&b), project(&c));
        let image = Matrix3x2::from_columns(&[pb - pa, pc - pa]);
        // orthonormal basis of the source face plane
        let u = e1.normalize();
        let w = e1.cross(&e2).cross(&e1).normalize();
        let basis = Matrix2x3::from_rows(&[u.transpose(), w.transpose()]);
        let source = basis * Matrix3x2::from_columns(&[e1, e2]);
        let inv = source
            .try_inverse()
            .ok_or_else(|| Error::DegenerateFit(format!("face {f} is degenerate")))?;
        let map = image * inv;
        let gram = map.transpose() * map;
        let [s_max, s_min] = sym_eigenvalues(&gram);
        theta = theta.max((s_max - 1.0).abs()).max((s_min - 1.0).abs());
    }
    Ok(theta)
}

/// Per-vertex |Ric − (n−1)k·Id|, operator norm.
pub fn einstein_field(curv: &CurvatureField, k: f64, n: usize) -> Vec<f64> {
    let target = Matrix2::identity() * ((n - 1) as f64 * k);
    curv.map(|c| operator_norm(&(c.ricci - target)))
}

/// ‖Ric − (n−1)k·g‖ in the norm given by `spec`.
pub fn einstein_deviation(
    measure: &Measure,
    curv: &CurvatureField,
    k: f64,
    spec: &NormSpec,
) -> f64 {
    let n = 2;
    if spec.exponent.is_finite() && spec.exponent <= n as f64 / 2.0 {
        debug!("einstein deviation with q = {} <= n/2", spec.exponent);
    }
    measure.lp_norm(&einstein_field(curv, k, n), spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UmbilicDeviations {
    /// ‖B − √k·g‖_{2q}
    pub b_2q: f64,
    /// ‖τ‖_{2q}
    pub tau_2q: f64,
    /// ‖H² − k‖_q
    pub h2_minus_k_q: f64,
    /// ‖B − √k·g‖_∞
    pub b_inf: f64,
}

/// Tensor quantities use per-vertex operator norms.
pub fn umbilic_deviations(
    measure: &Measure,
    curv: &CurvatureField,
    k: f64,
    q: f64,
    normalized: bool,
) -> UmbilicDeviations {
    let root = k.sqrt();
    let b_dev = curv.map(|c| operator_norm(&(c.shape - Matrix2::identity() * root)));
    let tau = curv.map(|c| operator_norm(&c.tau));
    let h2 = curv.map(|c| c.mean * c.mean - k);
    let spec = |p| NormSpec {
        exponent: p,
        normalized,
    };
    UmbilicDeviations {
        b_2q: measure.lp_norm(&b_dev, &spec(2.0 * q)),
        tau_2q: measure.lp_norm(&tau, &spec(2.0 * q)),
        h2_minus_k_q: measure.lp_norm(&h2, &spec(q)),
        b_inf: measure.lp_norm(&b_dev, &NormSpec::sup()),
    }
}

/// Bound on |Ric − (n−1)κ²·Id| given |B − κ·Id| ≤ u pointwise:
/// (2n − 2)·κ·u + (n + 1)·u².
pub fn einstein_from_umbilic_bound(kappa: f64, u: f64, n: usize) -> f64 {
    (2 * n - 2) as f64 * kappa.abs() * u + (n + 1) as f64 * u * u
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CmcReport {
    pub h_bar: f64,
    pub s_bar: f64,
    pub cmc_eps: f64,
    pub scal_eps: f64,
    /// |s̄ − n(n−1)h̄²|
    pub lemma_gap: f64,
    /// lemma_gap / max(cmc_eps, scal_eps); NaN when both vanish.
    pub lemma_ratio: f64,
}

pub fn cmc_report(measure: &Measure, curv: &CurvatureField) -> CmcReport {
    let n = 2.0;
    let vol = measure.volume();
    let mean = curv.mean();
    let scal = curv.scal();
    let h_bar = measure.integrate(&mean) / vol;
    let s_bar = measure.integrate(&scal) / vol;
    let cmc_eps = mean.iter().fold(0.0, |m: f64, h| m.max((h - h_bar).abs()));
    let scal_eps = scal.iter().fold(0.0, |m: f64, s| m.max((s - s_bar).abs()));
    let lemma_gap = (s_bar - n * (n - 1.0) * h_bar * h_bar).abs();
    let eps = cmc_eps.max(scal_eps);
    CmcReport {
        h_bar,
        s_bar,
        cmc_eps,
        scal_eps,
        lemma_gap,
        lemma_ratio: if eps > 0.0 { lemma_gap / eps } else { f64::NAN },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Radii {
    pub fit: f64,
    /// √(n/λ1)
    pub from_lambda1: f64,
    /// 1/√k_{p,r}
    pub from_k: f64,
}

impl Radii {
    /// Largest pairwise relative spread.
    pub fn spread(&self) -> f64 {
        let v = [self.fit, self.from_lambda1, self.from_k];
        let hi = v.iter().copied().fold(f64::MIN, f64::max);
        let lo = v.iter().copied().fold(f64::MAX, f64::min);
        (hi - lo) / lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deviations {
    /// Comparison constant, k_{p,r}.
    pub k: f64,
    pub q: f64,
    pub normalized: bool,
    pub einstein: f64,
    pub b_2q: f64,
    pub tau_2q: f64,
    pub h2_minus_k_q: f64,
    pub umbilic_inf: f64,
}

/// Residuals of the pointwise identities, maxima over vertices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResiduals {
    pub trace_tau: f64,
    /// |eigenvalue of Ric − H_2|
    pub ricci_vs_h2: f64,
    /// ||τ|² − (n(n−1)H² − Scal)|
    pub tau_vs_scal: f64,
    /// |Ric − (n−1)H²·Id − ((n−2)H·τ − τ²)|
    pub ricci_tau: f64,
    /// |Σ angle defects − 2πχ|
    pub gauss_bonnet: f64,
    /// |uᵀKu / uᵀMu − λ1| / λ1
    pub rayleigh: f64,
    /// Largest |∫u dv| for the eigenvector, relative to ‖u‖_M √Vol.
    pub eigvec_constant_overlap: f64,
}

pub fn identity_residuals(
    mesh: &Mesh,
    curv: &CurvatureField,
    spectral: &SpectralResult,
) -> IdentityResiduals {
    let n = 2.0;
    let mut out = IdentityResiduals {
        trace_tau: 0.0,
        ricci_vs_h2: 0.0,
        tau_vs_scal: 0.0,
        ricci_tau: 0.0,
        gauss_bonnet: 0.0,
        rayleigh: 0.0,
        eigvec_constant_overlap: 0.0,
    };
    for c in &curv.vertices {
        out.trace_tau = out.trace_tau.max(c.tau.trace().abs());
        let [r1, r2] = sym_eigenvalues(&c.ricci);
        out.ricci_vs_h2 = out
            .ricci_vs_h2
            .max((r1 - c.h2).abs())
            .max((r2 - c.h2).abs());
        let rhs = n * (n - 1.0) * c.mean * c.mean - c.scal;
        out.tau_vs_scal = out.tau_vs_scal.max((c.tau_norm * c.tau_norm - rhs).abs());
        let lhs = c.ricci - Matrix2::identity() * ((n - 1.0) * c.mean * c.mean);
        let rhs = c.tau * ((n - 2.0) * c.mean) - c.tau * c.tau;
        out.ricci_tau = out.ricci_tau.max((lhs - rhs).abs().max());
    }
    let defects: f64 = crate::curvature::angle_defects(mesh).iter().sum();
    out.gauss_bonnet = (defects - 2.0 * PI * mesh.euler_characteristic() as f64).abs();

    let k = stiffness_matrix(mesh);
    let m = mass_matrix(mesh);
    let u = &spectral.eigenvector;
    let num = k.quadratic_form(u);
    let den: f64 = u.iter().zip(&m).map(|(a, w)| a * a * w).sum();
    out.rayleigh = ((num / den) - spectral.lambda1).abs() / spectral.lambda1;
    let overlap: f64 = u.iter().zip(&m).map(|(a, w)| a * w).sum();
    let vol: f64 = m.iter().sum();
    out.eigvec_constant_overlap = overlap.abs() / (den.sqrt() * vol.sqrt());
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSummary {
    pub lambda1: f64,
    pub residual: f64,
    pub iterations: usize,
    pub cluster_width: f64,
}

impl From<&SpectralResult> for SpectralSummary {
    fn from(s: &SpectralResult) -> Self {
        SpectralSummary {
            lambda1: s.lambda1,
            residual: s.residual,
            iterations: s.iterations,
            cluster_width: s.cluster_width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<ShapeDescriptor>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<String>,
    pub vertices: usize,
    pub faces: usize,
    pub euler_characteristic: i64,
    pub config: AnalysisConfig,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PinchReport {
    pub sphere: SphereFit,
    pub radii: Radii,
    /// Distortion against the fitted sphere; `None` when the mesh is not star-shaped.
    pub theta_hat: Option<f64>,
    /// Distortion against the sphere of radius √(n/λ1) about the fitted center.
    pub theta_hat_lambda1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_note: Option<String>,
    pub deviations: Deviations,
    pub cmc: CmcReport,
    pub functionals: DeficitReport,
    pub spectral: SpectralSummary,
    pub identities: IdentityResiduals,
    pub flagged_vertices: usize,
    pub warnings: Vec<String>,
    pub provenance: Provenance,
}

/// Significant digits of floats in serialized reports.
pub const REPORT_DIGITS: usize = 9;

impl PinchReport {
    /// JSON value with sorted keys and floats rounded to [`REPORT_DIGITS`] significant digits.
    pub fn to_json(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report is serializable");
        round_floats(&mut v, REPORT_DIGITS);
        v
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("valid json");
        s.push('\n');
        s
    }
}

/// `x` rounded to `digits` significant digits (via decimal formatting, so it prints short).
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.max(1) - 1, x).parse().unwrap_or(x)
}

/// Rounds every float in `v` to `digits` significant digits.
pub fn round_floats(v: &mut Value, digits: usize) {
    match v {
        Value::Number(num) => {
            if num.is_f64() {
                if let Some(x) = num.as_f64() {
                    if let Some(n) = serde_json::Number::from_f64(round_sig(x, digits)) {
                        *num = n;
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|x| round_floats(x, digits)),
        Value::Object(map) => map.values_mut().for_each(|x| round_floats(x, digits)),
        _ => {}
    }
}

/// Everything [`analyze`] computes, kept in memory for callers that need per-vertex data.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub mesh: Mesh,
    pub frames: Vec<VertexFrame>,
    pub measure: Measure,
    pub curvature: CurvatureField,
    pub spectral: SpectralResult,
    pub report: PinchReport,
}

pub fn analyze(mesh: &Mesh, config: &AnalysisConfig) -> Result<PinchReport> {
    analyze_full(mesh, config, None).map(|a| a.report)
}

pub fn analyze_shape(shape: &ShapeDescriptor, config: &AnalysisConfig) -> Result<PinchReport> {
    let mesh = shape.generate().map_err(Error::at("generate"))?;
    analyze_full(&mesh, config, Some(*shape)).map(|a| a.report)
}

pub fn analyze_full(
    mesh: &Mesh,
    config: &AnalysisConfig,
    shape: Option<ShapeDescriptor>,
) -> Result<Analysis> {
    let mut warnings = config.validate().map_err(Error::at("config"))?;
    let n = config.n;
    let mesh = centroid_recenter(mesh);
    let frames = vertex_frames(&mesh).map_err(Error::at("frames"))?;
    let measure = Measure::from_frames(&frames);
    let curvature = curvature_field(&mesh, &frames).map_err(Error::at("curvature"))?;
    if !curvature.flagged.is_empty() {
        warnings.push(format!(
            "{} vertices had rank-deficient quadric fits and were filled from neighbors",
            curvature.flagged.len()
        ));
    }
    let spectral = first_eigenvalue(
        &stiffness_matrix(&mesh),
        &mass_matrix(&mesh),
        &config.solver(),
    )
    .map_err(Error::at("spectral"))?;

    let support = support_function(&mesh, &frames);
    let functionals = deficit_report(
        &measure, &curvature, &support, &spectral, config.p, config.r,
    )
    .map_err(Error::at("functionals"))?;
    let k = functionals.k_pr;

    let sphere = fit_sphere(&mesh).map_err(Error::at("sphere_fit"))?;
    let center = sphere.center();
    let from_lambda1 = (n as f64 / spectral.lambda1).sqrt();
    let (theta_hat, theta_hat_lambda1, theta_note) =
        match distortion(&mesh, &frames, &center, sphere.radius) {
            Ok(t) => {
                let t_lambda = distortion(&mesh, &frames, &center, from_lambda1).ok();
                (Some(t), t_lambda, None)
            }
            Err(Error::NotStarShaped { vertices }) => (
                None,
                None,
                Some(format!(
                    "theta_hat undefined: not star-shaped about the fitted center ({} vertices)",
                    vertices.len()
                )),
            ),
            Err(e) => return Err(Error::at("distortion")(e)),
        };

    let dev_spec = NormSpec {
        exponent: config.q,
        normalized: config.normalized_deviations,
    };
    let umbilic = umbilic_deviations(
        &measure,
        &curvature,
        k,
        config.q,
        config.normalized_deviations,
    );
    let deviations = Deviations {
        k,
        q: config.q,
        normalized: config.normalized_deviations,
        einstein: einstein_deviation(&measure, &curvature, k, &dev_spec),
        b_2q: umbilic.b_2q,
        tau_2q: umbilic.tau_2q,
        h2_minus_k_q: umbilic.h2_minus_k_q,
        umbilic_inf: umbilic.b_inf,
    };
    let cmc = cmc_report(&measure, &curvature);
    let identities = identity_residuals(&mesh, &curvature, &spectral);

    let report = PinchReport {
        sphere,
        radii: Radii {
            fit: sphere.radius,
            from_lambda1,
            from_k: 1.0 / k.sqrt(),
        },
        theta_hat,
        theta_hat_lambda1,
        theta_note,
        deviations,
        cmc,
        functionals,
        spectral: SpectralSummary::from(&spectral),
        identities,
        flagged_vertices: curvature.flagged.len(),
        warnings,
        provenance: Provenance {
            shape,
            mesh: if shape.is_none() {
                mesh.name().map(str::to_owned)
            } else {
                None
            },
            vertices: mesh.vertex_count(),
            faces: mesh.face_count(),
            euler_characteristic: mesh.euler_characteristic(),
            config: *config,
            version: env!("CARGO_PKG_VERSION").to_owned(),
        },
    };
    Ok(Analysis {
        mesh,
        frames,
        measure,
        curvature,
        spectral,
        report,
    })
}
