//! Integrals over the surface and the curvature identities and inequalities
//! built from them: Hsiung–Minkowski residuals, the constants `k_{p,r}`,
//! the Reilly bound and its Hölder-refined pinching deficit.

use serde::{Deserialize, Serialize};

use crate::curvature::CurvatureField;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, VertexFrame};
use crate::spectral::SpectralResult;

/// Exponent and measure convention for an L^p norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    /// `f64::INFINITY` selects the max norm; serialized as the string "inf".
    #[serde(with = "exponent_serde")]
    pub exponent: f64,
    /// Integrate against dv/Vol(M) instead of dv.
    pub normalized: bool,
}

impl NormSpec {
    pub fn new(exponent: f64, normalized: bool) -> Result<Self> {
        if !(exponent >= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "norm exponent must be >= 1, got {exponent}"
            )));
        }
        Ok(NormSpec {
            exponent,
            normalized,
        })
    }

    pub fn unnormalized(exponent: f64) -> Self {
        NormSpec {
            exponent,
            normalized: false,
        }
    }

    pub fn normalized(exponent: f64) -> Self {
        NormSpec {
            exponent,
            normalized: true,
        }
    }

    pub fn sup() -> Self {
        NormSpec::unnormalized(f64::INFINITY)
    }
}

mod exponent_serde {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*x)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) if matches!(s.as_str(), "inf" | "infinity" | "Infinity") => {
                Ok(f64::INFINITY)
            }
            Repr::Str(s) => Err(de::Error::custom(format!("bad exponent `{s}`"))),
        }
    }
}

/// Discrete measure: barycentric vertex areas. Built once per mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    weights: Vec<f64>,
    volume: f64,
}

impl Measure {
    pub fn new(mesh: &Mesh) -> Self {
        Self::from_weights(mesh.vertex_areas())
    }

    pub fn from_frames(frames: &[VertexFrame]) -> Self {
        Self::from_weights(frames.iter().map(|f| f.area).collect())
    }

    fn from_weights(weights: Vec<f64>) -> Self {
        let volume = weights.iter().sum();
        Measure { weights, volume }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Vol(M), the total area for surfaces.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Σ_v field(v)·area(v), summed in vertex order.
    pub fn integrate(&self, field: &[f64]) -> f64 {
        field.iter().zip(&self.weights).map(|(f, w)| f * w).sum()
    }

    pub fn lp_norm(&self, field: &[f64], spec: &NormSpec) -> f64 {
        if spec.exponent.is_infinite() {
            return field.iter().fold(0.0, |m, f| m.max(f.abs()));
        }
        let p = spec.exponent;
        let integral: f64 = field
            .iter()
            .zip(&self.weights)
            .map(|(f, w)| f.abs().powf(p) * w)
            .sum();
        let integral = if spec.normalized {
            integral / self.volume
        } else {
            integral
        };
        integral.powf(1.0 / p)
    }
}

pub fn integrate(mesh: &Mesh, field: &[f64]) -> f64 {
    Measure::new(mesh).integrate(field)
}

pub fn lp_norm(mesh: &Mesh, field: &[f64], spec: &NormSpec) -> f64 {
    Measure::new(mesh).lp_norm(field, spec)
}

/// ⟨X, ν⟩ per vertex. Meaningful once the mesh is recentered.
pub fn support_function(mesh: &Mesh, frames: &[VertexFrame]) -> Vec<f64> {
    mesh.vertices()
        .iter()
        .zip(frames)
        .map(|(x, f)| x.dot(&f.normal))
        .collect()
}

fn check_order(r: usize, n: usize) -> Result<()> {
    if r == 0 || r > n {
        return Err(Error::OrderOutOfRange { r, n });
    }
    Ok(())
}

/// ∫(H_{r−1} − H_r⟨X,ν⟩) dv / Vol(M); zero in the continuum for every closed hypersurface.
pub fn hsiung_minkowski_residual(
    measure: &Measure,
    curv: &CurvatureField,
    support: &[f64],
    r: usize,
) -> Result<f64> {
    check_order(r, 2)?;
    let integrand: Vec<f64> = curv
        .vertices
        .iter()
        .zip(support)
        .map(|(c, s)| c.h[r - 1] - c.h[r] * s)
        .collect();
    Ok(measure.integrate(&integrand) / measure.volume())
}

/// k_{p,r} = ‖H_r‖²_{2p} Vol^{2−1/p} / (∫H_{r−1})², unnormalized norms.
pub fn k_constant(measure: &Measure, curv: &CurvatureField, p: f64, r: usize) -> Result<f64> {
    check_order(r, 2)?;
    let denom = measure.integrate(&curv.hr(r - 1));
    if denom.abs() <= 1e-300 || !denom.is_finite() {
        return Err(Error::VanishingDenominator {
            order: r - 1,
            value: denom,
        });
    }
    let norm = measure.lp_norm(&curv.hr(r), &NormSpec::unnormalized(2.0 * p));
    Ok(norm * norm * measure.volume().powf(2.0 - 1.0 / p) / (denom * denom))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReillyCheck {
    pub lhs: f64,
    /// n·Vol·∫H_r², the scale-consistent right-hand side.
    pub rhs: f64,
    pub deficit: f64,
    /// (n/Vol)·∫H_r², the right-hand side as commonly typeset. Reference only.
    pub rhs_as_printed: f64,
}

/// λ1(∫H_{r−1})² against n·Vol·∫H_r². Deficit ≤ 0, with equality on round spheres.
pub fn reilly_check(
    measure: &Measure,
    curv: &CurvatureField,
    spectral: &SpectralResult,
    n: usize,
    r: usize,
) -> Result<ReillyCheck> {
    check_order(r, n)?;
    let int_prev = measure.integrate(&curv.hr(r - 1));
    let hr_sq: Vec<f64> = curv.hr(r).iter().map(|h| h * h).collect();
    let int_sq = measure.integrate(&hr_sq);
    let lhs = spectral.lambda1 * int_prev * int_prev;
    let rhs = n as f64 * measure.volume() * int_sq;
    Ok(ReillyCheck {
        lhs,
        rhs,
        deficit: lhs - rhs,
        rhs_as_printed: n as f64 / measure.volume() * int_sq,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PinchingDeficit {
    /// λ1(∫H_{r−1})² − n·Vol^{2−1/p}·‖H_r‖²_{2p}.
    pub deficit: f64,
    /// `deficit` divided by its subtracted term; equals the value at Vol = 1.
    pub dimensionless: f64,
}

pub fn pinching_deficit(
    measure: &Measure,
    curv: &CurvatureField,
    spectral: &SpectralResult,
    n: usize,
    p: f64,
    r: usize,
) -> Result<PinchingDeficit> {
    check_order(r, n)?;
    let int_prev = measure.integrate(&curv.hr(r - 1));
    let norm = measure.lp_norm(&curv.hr(r), &NormSpec::unnormalized(2.0 * p));
    let bound = n as f64 * measure.volume().powf(2.0 - 1.0 / p) * norm * norm;
    let deficit = spectral.lambda1 * int_prev * int_prev - bound;
    Ok(PinchingDeficit {
        deficit,
        dimensionless: deficit / bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainReport {
    /// Vertices with H_2 > 0 and H > 0 that were tested.
    pub checked: usize,
    /// Vertices skipped because H_2 ≤ 0 or H ≤ 0.
    pub excluded: usize,
    pub violations: usize,
    /// Largest √H_2 / H − 1 over checked vertices (negative when all hold strictly).
    pub worst_margin: f64,
}

/// √H_2 ≤ H·(1 + tol) wherever H_2 > 0 and H > 0.
pub fn chain_inequality_check(curv: &CurvatureField, tol: f64) -> ChainReport {
    let mut report = ChainReport {
        checked: 0,
        excluded: 0,
        violations: 0,
        worst_margin: f64::NEG_INFINITY,
    };
    for c in &curv.vertices {
        if !(c.h2 > 0.0 && c.mean > 0.0) {
            report.excluded += 1;
            continue;
        }
        report.checked += 1;
        let margin = c.h2.sqrt() / c.mean - 1.0;
        report.worst_margin = report.worst_margin.max(margin);
        if margin > tol {
            report.violations += 1;
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeficitReport {
    /// Hsiung–Minkowski residuals for r = 1..=n.
    pub hm_residual: Vec<f64>,
    pub reilly: ReillyCheck,
    pub pinching: PinchingDeficit,
    pub k_pr: f64,
    pub volume: f64,
    pub chain: ChainReport,
    pub p: f64,
    pub r: usize,
}

/// Relative slack allowed on √H_2 ≤ H before a vertex counts as a violation.
pub const CHAIN_TOL: f64 = 1e-12;

pub fn deficit_report(
    measure: &Measure,
    curv: &CurvatureField,
    support: &[f64],
    spectral: &SpectralResult,
    p: f64,
    r: usize,
) -> Result<DeficitReport> {
    let n = 2;
    let hm_residual = (1..=n)
        .map(|order| hsiung_minkowski_residual(measure, curv, support, order))
        .collect::<Result<_>>()?;
    Ok(DeficitReport {
        hm_residual,
        reilly: reilly_check(measure, curv, spectral, n, r)?,
        pinching: pinching_deficit(measure, curv, spectral, n, p, r)?,
        k_pr: k_constant(measure, curv, p, r)?,
        volume: measure.volume(),
        chain: chain_inequality_check(curv, CHAIN_TOL),
        p,
        r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::curvature_field;
    use crate::mesh::{centroid_recenter, vertex_frames};
    use crate::shapes::{generate, AnalyticShape};
    use crate::spectral::{mesh_first_eigenvalue, SolverOptions};
    use std::f64::consts::PI;

    struct Run {
        mesh: Mesh,
        measure: Measure,
        curv: CurvatureField,
        support: Vec<f64>,
    }

    fn run(shape: AnalyticShape, res: usize) -> Run {
        let mesh = centroid_recenter(&generate(&shape, res).unwrap());
        let frames = vertex_frames(&mesh).unwrap();
        let curv = curvature_field(&mesh, &frames).unwrap();
        let support = support_function(&mesh, &frames);
        Run {
            measure: Measure::from_frames(&frames),
            mesh,
            curv,
            support,
        }
    }

    fn unit_sphere() -> AnalyticShape {
        AnalyticShape::Sphere { radius: 1.0 }
    }

    #[test]
    fn integrate_examples() {
        let r = run(unit_sphere(), 4);
        let ones = vec![1.0; r.mesh.vertex_count()];
        let area = integrate(&r.mesh, &ones);
        assert!((area - 4.0 * PI).abs() / (4.0 * PI) < 2e-3);
        let c = vec![2.5; r.mesh.vertex_count()];
        assert!((r.measure.integrate(&c) - 2.5 * r.measure.volume()).abs() < 1e-12);
        let z: Vec<f64> = r.mesh.vertices().iter().map(|v| v.z).collect();
        assert!(r.measure.integrate(&z).abs() < 1e-3 * r.measure.volume());
    }

    #[test]
    fn norm_examples() {
        let r = run(unit_sphere(), 3);
        let vol = r.measure.volume();
        let ones = vec![1.0; r.mesh.vertex_count()];
        for p in [1.0, 2.0, 3.5] {
            assert!(
                (r.measure.lp_norm(&ones, &NormSpec::unnormalized(p)) - vol.powf(1.0 / p)).abs()
                    < 1e-12
            );
            assert!((r.measure.lp_norm(&ones, &NormSpec::normalized(p)) - 1.0).abs() < 1e-12);
        }
        let z: Vec<f64> = r.mesh.vertices().iter().map(|v| v.z).collect();
        assert!((lp_norm(&r.mesh, &z, &NormSpec::sup()) - 1.0).abs() < 1e-3);
        let sq: Vec<f64> = z.iter().map(|x| x * x).collect();
        let l2 = r.measure.lp_norm(&z, &NormSpec::unnormalized(2.0));
        assert!((l2 * l2 - r.measure.integrate(&sq)).abs() < 1e-12);
        assert!(NormSpec::new(0.5, true).is_err());
    }

    #[test]
    fn norm_spec_json() {
        let s = serde_json::to_string(&NormSpec::sup()).unwrap();
        assert_eq!(s, r#"{"exponent":"inf","normalized":false}"#);
        let back: NormSpec = serde_json::from_str(&s).unwrap();
        assert!(back.exponent.is_infinite());
    }

    #[test]
    fn support_function_and_minkowski_identity() {
        let r = run(AnalyticShape::Sphere { radius: 2.0 }, 4);
        for s in &r.support {
            assert!((s - 2.0).abs() < 1e-3);
        }
        let r = run(unit_sphere(), 4);
        let h_support: Vec<f64> = r
            .curv
            .vertices
            .iter()
            .zip(&r.support)
            .map(|(c, s)| c.mean * s)
            .collect();
        let lhs = r.measure.integrate(&h_support);
        assert!((lhs - r.measure.volume()).abs() < 0.01 * r.measure.volume());
    }

    #[test]
    fn support_function_after_recentering() {
        let m = generate(&unit_sphere(), 3).unwrap();
        let shifted = m
            .translated(crate::mesh::Vec3::new(3.0, -1.0, 0.5))
            .unwrap();
        let a = centroid_recenter(&m);
        let b = centroid_recenter(&shifted);
        let sa = support_function(&a, &vertex_frames(&a).unwrap());
        let sb = support_function(&b, &vertex_frames(&b).unwrap());
        for (x, y) in sa.iter().zip(&sb) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn minkowski_residuals() {
        let r = run(unit_sphere(), 4);
        assert!(
            hsiung_minkowski_residual(&r.measure, &r.curv, &r.support, 1)
                .unwrap()
                .abs()
                < 0.01
        );
        let t = run(
            AnalyticShape::Torus {
                major: 2.0,
                minor: 0.5,
            },
            64,
        );
        let res = hsiung_minkowski_residual(&t.measure, &t.curv, &t.support, 1).unwrap();
        assert!(res.abs() < 0.02, "torus residual {res}");
        assert!(hsiung_minkowski_residual(&r.measure, &r.curv, &r.support, 3).is_err());
    }

    #[test]
    fn minkowski_r2_on_ellipsoid_converges() {
        let shape = AnalyticShape::Ellipsoid {
            a: 1.0,
            b: 1.0,
            c: 1.5,
        };
        let values: Vec<f64> = (2..=4)
            .map(|res| {
                let r = run(shape, res);
                hsiung_minkowski_residual(&r.measure, &r.curv, &r.support, 2)
                    .unwrap()
                    .abs()
            })
            .collect();
        assert!(values[1] < values[0] && values[2] < values[1], "{values:?}");
    }

    #[test]
    fn k_constant_on_spheres() {
        for (radius, expect) in [(1.0, 1.0), (2.0, 0.25)] {
            let r = run(AnalyticShape::Sphere { radius }, 4);
            for p in [2.0, 3.0] {
                for order in [1, 2] {
                    let k = k_constant(&r.measure, &r.curv, p, order).unwrap();
                    assert!(
                        (k - expect).abs() < 0.02 * expect,
                        "R={radius} p={p} r={order}: {k}"
                    );
                }
            }
        }
    }

    #[test]
    fn k_constant_scales_inverse_square() {
        let shape = AnalyticShape::Ellipsoid {
            a: 1.0,
            b: 1.0,
            c: 1.5,
        };
        let r1 = run(shape, 3);
        let m2 = r1.mesh.scaled(2.0).unwrap();
        let f2 = vertex_frames(&m2).unwrap();
        let c2 = curvature_field(&m2, &f2).unwrap();
        let k1 = k_constant(&r1.measure, &r1.curv, 2.0, 2).unwrap();
        let k2 = k_constant(&Measure::from_frames(&f2), &c2, 2.0, 2).unwrap();
        assert!((k2 * 4.0 - k1).abs() < 1e-6 * k1);
    }

    #[test]
    fn vanishing_denominator() {
        // a field with ∫H = 0 cannot occur on closed meshes, so zero it by hand
        let mut r = run(unit_sphere(), 2);
        for c in &mut r.curv.vertices {
            c.h[1] = 0.0;
        }
        assert!(matches!(
            k_constant(&r.measure, &r.curv, 2.0, 2),
            Err(Error::VanishingDenominator { order: 1, .. })
        ));
    }

    #[test]
    fn reilly_and_pinching_on_sphere() {
        let r = run(unit_sphere(), 4);
        let spec = mesh_first_eigenvalue(&r.mesh, &SolverOptions::default()).unwrap();
        let check = reilly_check(&r.measure, &r.curv, &spec, 2, 1).unwrap();
        let target = 32.0 * PI * PI;
        assert!((check.lhs - target).abs() < 0.02 * target);
        assert!((check.rhs - target).abs() < 0.02 * target);
        assert!(check.deficit.abs() / check.rhs < 0.02);
        let pd = pinching_deficit(&r.measure, &r.curv, &spec, 2, 2.0, 1).unwrap();
        assert!(
            pd.dimensionless > -0.03 && pd.dimensionless <= 0.005,
            "{pd:?}"
        );

        let r2 = run(AnalyticShape::Sphere { radius: 2.0 }, 4);
        let spec2 = mesh_first_eigenvalue(&r2.mesh, &SolverOptions::default()).unwrap();
        let check = reilly_check(&r2.measure, &r2.curv, &spec2, 2, 2).unwrap();
        assert!(check.deficit.abs() < 0.02 * check.rhs);
    }

    #[test]
    fn chain_check_counts_exclusions() {
        let t = run(
            AnalyticShape::Torus {
                major: 2.0,
                minor: 0.5,
            },
            32,
        );
        let report = chain_inequality_check(&t.curv, CHAIN_TOL);
        assert_eq!(report.violations, 0);
        let nonpositive = t
            .curv
            .vertices
            .iter()
            .filter(|c| !(c.h2 > 0.0 && c.mean > 0.0))
            .count();
        assert_eq!(report.excluded, nonpositive);
        assert!(report.excluded > 0);

        let e = run(
            AnalyticShape::Ellipsoid {
                a: 1.0,
                b: 1.0,
                c: 1.5,
            },
            4,
        );
        let report = chain_inequality_check(&e.curv, CHAIN_TOL);
        assert_eq!((report.violations, report.excluded), (0, 0));
        assert!(report.worst_margin <= 0.0);
    }
}
