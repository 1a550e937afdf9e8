//! Analytic test surfaces and their closed-form curvatures.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Vec3};

pub const DEFAULT_MAX_VERTICES: usize = 1_000_000;
pub const MAX_VERTICES_ENV: &str = "PINCHLAB_MAX_VERTICES";

/// Tolerance on the implicit equation for [`exact_curvature`].
pub const ON_SURFACE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum AnalyticShape {
    Sphere {
        radius: f64,
    },
    Ellipsoid {
        a: f64,
        b: f64,
        c: f64,
    },
    Torus {
        major: f64,
        minor: f64,
    },
    PerturbedSphere {
        #[serde(default = "unit")]
        radius: f64,
        delta: f64,
        #[serde(default = "default_l")]
        l: u32,
        #[serde(default = "default_m")]
        m: i32,
    },
}

fn unit() -> f64 {
    1.0
}
fn default_l() -> u32 {
    3
}
fn default_m() -> i32 {
    2
}

impl AnalyticShape {
    pub fn perturbed(delta: f64) -> Self {
        AnalyticShape::PerturbedSphere {
            radius: 1.0,
            delta,
            l: default_l(),
            m: default_m(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidShape(msg));
        let positive = |x: f64| x.is_finite() && x > 0.0;
        match *self {
            AnalyticShape::Sphere { radius } if !positive(radius) => {
                bad(format!("sphere radius must be positive, got {radius}"))
            }
            AnalyticShape::Ellipsoid { a, b, c }
                if !(positive(a) && positive(b) && positive(c)) =>
            {
                bad(format!(
                    "ellipsoid semi-axes must be positive, got ({a}, {b}, {c})"
                ))
            }
            AnalyticShape::Torus { major, minor }
                if !(positive(minor) && major.is_finite() && major > minor) =>
            {
                bad(format!(
                    "torus needs major > minor > 0, got major {major}, minor {minor}"
                ))
            }
            AnalyticShape::PerturbedSphere {
                radius,
                delta,
                l,
                m,
                ..
            } => {
                if !positive(radius) {
                    bad(format!("sphere radius must be positive, got {radius}"))
                } else if !(0.0..1.0).contains(&delta) {
                    bad(format!(
                        "perturbation amplitude must lie in [0, 1), got {delta}"
                    ))
                } else if m.unsigned_abs() > l {
                    bad(format!(
                        "mode |m| = {} exceeds degree l = {l}",
                        m.unsigned_abs()
                    ))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            AnalyticShape::Sphere { .. } => "sphere",
            AnalyticShape::Ellipsoid { .. } => "ellipsoid",
            AnalyticShape::Torus { .. } => "torus",
            AnalyticShape::PerturbedSphere { .. } => "perturbed_sphere",
        }
    }

    /// Vertex count [`generate`] will produce at `resolution`.
    pub fn vertex_count(&self, resolution: usize) -> usize {
        match self {
            AnalyticShape::Torus { .. } => resolution.saturating_mul(resolution),
            _ => 4usize
                .checked_pow(resolution as u32)
                .and_then(|p| p.checked_mul(10))
                .and_then(|p| p.checked_add(2))
                .unwrap_or(usize::MAX),
        }
    }
}

/// Shape plus resolution, as it appears in configs and report provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeDescriptor {
    #[serde(flatten)]
    pub shape: AnalyticShape,
    pub resolution: usize,
}

impl ShapeDescriptor {
    pub fn generate(&self) -> Result<Mesh> {
        generate(&self.shape, self.resolution)
    }
}

pub fn max_vertices_from_env() -> usize {
    std::env::var(MAX_VERTICES_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_VERTICES)
}

/// Generates a mesh with the vertex cap taken from the environment (default 10⁶).
pub fn generate(shape: &AnalyticShape, resolution: usize) -> Result<Mesh> {
    generate_with_cap(shape, resolution, max_vertices_from_env())
}

pub fn generate_with_cap(shape: &AnalyticShape, resolution: usize, cap: usize) -> Result<Mesh> {
    shape.validate()?;
    if resolution == 0 {
        return Err(Error::InvalidShape("resolution must be at least 1".into()));
    }
    let vertices = shape.vertex_count(resolution);
    if vertices > cap {
        return Err(Error::ResolutionTooLarge {
            resolution,
            vertices,
            cap,
        });
    }
    let mesh = match *shape {
        AnalyticShape::Sphere { radius } => {
            let (v, f) = unit_icosphere(resolution);
            Mesh::new(v.into_iter().map(|p| p * radius).collect(), f)?
        }
        AnalyticShape::Ellipsoid { a, b, c } => {
            let (v, f) = unit_icosphere(resolution);
            let scale = Vec3::new(a, b, c);
            Mesh::new(v.into_iter().map(|p| p.component_mul(&scale)).collect(), f)?
        }
        AnalyticShape::PerturbedSphere {
            radius,
            delta,
            l,
            m,
        } => {
            let (v, f) = unit_icosphere(resolution);
            let harmonic = NormalizedHarmonic::new(l, m);
            let v = v
                .into_iter()
                .map(|u| u * radius * (1.0 + delta * harmonic.eval(&u)))
                .collect();
            Mesh::new(v, f)?
        }
        AnalyticShape::Torus { major, minor } => {
            if resolution < 3 {
                return Err(Error::InvalidShape(
                    "torus grid needs resolution >= 3".into(),
                ));
            }
            let (v, f) = torus_grid(major, minor, resolution);
            Mesh::new(v, f)?
        }
    };
    Ok(mesh.with_name(shape.kind_name()))
}

const ICOSAHEDRON_FACES: [[usize; 3]; 20] = [
    [0, 11, 5],
    [0, 5, 1],
    [0, 1, 7],
    [0, 7, 10],
    [0, 10, 11],
    [1, 5, 9],
    [5, 11, 4],
    [11, 10, 2],
    [10, 7, 6],
    [7, 1, 8],
    [3, 9, 4],
    [3, 4, 2],
    [3, 2, 6],
    [3, 6, 8],
    [3, 8, 9],
    [4, 9, 5],
    [2, 4, 11],
    [6, 2, 10],
    [8, 6, 7],
    [9, 8, 1],
];

/// Unit icosphere: 4-to-1 midpoint subdivision, reprojected after every level.
pub fn unit_icosphere(levels: usize) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces = ICOSAHEDRON_FACES.to_vec();

    for _ in 0..levels {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let mut mid = |i: usize, j: usize| {
                *midpoints.entry((i.min(j), i.max(j))).or_insert_with(|| {
                    vertices.push((vertices[i] + vertices[j]).normalize());
                    vertices.len() - 1
                })
            };
            let ab = mid(a, b);
            let bc = mid(b, c);
            let ca = mid(c, a);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (vertices, faces)
}

/// `n`×`n` grid over (major angle, minor angle); vertex `i*n + j`.
fn torus_grid(major: f64, minor: f64, n: usize) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let mut vertices = Vec::with_capacity(n * n);
    for i in 0..n {
        let phi = 2.0 * PI * i as f64 / n as f64;
        for j in 0..n {
            let theta = 2.0 * PI * j as f64 / n as f64;
            let rho = major + minor * theta.cos();
            vertices.push(Vec3::new(
                rho * phi.cos(),
                rho * phi.sin(),
                minor * theta.sin(),
            ));
        }
    }
    let id = |i: usize, j: usize| (i % n) * n + (j % n);
    let mut faces = Vec::with_capacity(2 * n * n);
    for i in 0..n {
        for j in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    (vertices, faces)
}

/// Real spherical harmonic of degree `l`, order `m`, scaled to max |Y| = 1.
#[derive(Debug, Clone, Copy)]
pub struct NormalizedHarmonic {
    l: u32,
    m: i32,
    scale: f64,
}

impl NormalizedHarmonic {
    pub fn new(l: u32, m: i32) -> Self {
        let mm = m.unsigned_abs();
        let p = |x: f64| associated_legendre(l, mm, x).abs();
        // dense scan, then golden-section refinement around the best sample
        let samples = 4096;
        let step = 2.0 / samples as f64;
        let best = (0..=samples)
            .map(|i| -1.0 + i as f64 * step)
            .max_by(|&a, &b| p(a).total_cmp(&p(b)))
            .unwrap_or(0.0);
        let (mut lo, mut hi) = ((best - step).max(-1.0), (best + step).min(1.0));
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let x1 = hi - g * (hi - lo);
            let x2 = lo + g * (hi - lo);
            if p(x1) >= p(x2) {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        let peak = p(best).max(p(0.5 * (lo + hi)));
        NormalizedHarmonic {
            l,
            m,
            scale: 1.0 / peak,
        }
    }

    /// Value at the direction of `u` (need not be unit length). Always in [-1, 1].
    pub fn eval(&self, u: &Vec3) -> f64 {
        let r = u.norm();
        let cos_theta = (u.z / r).clamp(-1.0, 1.0);
        let phi = u.y.atan2(u.x);
        let mm = self.m.unsigned_abs();
        let angular = if self.m >= 0 {
            (mm as f64 * phi).cos()
        } else {
            (mm as f64 * phi).sin()
        };
        (self.scale * associated_legendre(self.l, mm, cos_theta) * angular).clamp(-1.0, 1.0)
    }
}

/// Associated Legendre function P_l^m(x), Condon–Shortley phase, by upward recurrence in l.
fn associated_legendre(l: u32, m: u32, x: f64) -> f64 {
    if m > l {
        return 0.0;
    }
    let somx2 = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();
    let mut pmm = 1.0;
    let mut fact = 1.0;
    for _ in 0..m {
        pmm *= -fact * somx2;
        fact += 2.0;
    }
    if l == m {
        return pmm;
    }
    let mut pmmp1 = x * (2 * m + 1) as f64 * pmm;
    if l == m + 1 {
        return pmmp1;
    }
    let mut pll = 0.0;
    for ll in (m + 2)..=l {
        pll = (x * (2 * ll - 1) as f64 * pmmp1 - (ll + m - 1) as f64 * pmm) / (ll - m) as f64;
        pmm = pmmp1;
        pmmp1 = pll;
    }
    pll
}

/// Closed-form curvature values at a point of an analytic surface (outward normal, n = 2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactCurvature {
    /// Principal curvatures, largest first.
    pub kappa: [f64; 2],
    pub mean: f64,
    pub h2: f64,
    pub scal: f64,
    pub tau_norm: f64,
}

impl ExactCurvature {
    fn from_principal(k1: f64, k2: f64) -> Self {
        let (hi, lo) = if k1 >= k2 { (k1, k2) } else { (k2, k1) };
        ExactCurvature {
            kappa: [hi, lo],
            mean: 0.5 * (hi + lo),
            h2: hi * lo,
            scal: 2.0 * hi * lo,
            tau_norm: (hi - lo).abs() / 2f64.sqrt(),
        }
    }
}

pub fn exact_curvature(shape: &AnalyticShape, point: &Vec3) -> Result<ExactCurvature> {
    shape.validate()?;
    let off = |residual: f64| Error::OffSurface {
        x: point.x,
        y: point.y,
        z: point.z,
        residual,
    };
    match *shape {
        AnalyticShape::Sphere { radius } => {
            let residual = point.norm() - radius;
            if residual.abs() > ON_SURFACE_TOL {
                return Err(off(residual));
            }
            Ok(ExactCurvature::from_principal(1.0 / radius, 1.0 / radius))
        }
        AnalyticShape::Torus { major, minor } => {
            let rho = point.x.hypot(point.y);
            let residual = (rho - major).hypot(point.z) - minor;
            if residual.abs() > ON_SURFACE_TOL {
                return Err(off(residual));
            }
            let cos_theta = (rho - major) / minor;
            // parallel-circle direction and meridian direction
            let k_parallel = cos_theta / (major + minor * cos_theta);
            Ok(ExactCurvature::from_principal(k_parallel, 1.0 / minor))
        }
        AnalyticShape::Ellipsoid { a, b, c } => {
            let (x, y, z) = (point.x, point.y, point.z);
            let residual = (x / a).powi(2) + (y / b).powi(2) + (z / c).powi(2) - 1.0;
            if residual.abs() > ON_SURFACE_TOL {
                return Err(off(residual));
            }
            let (a2, b2, c2) = (a * a, b * b, c * c);
            let h2 = x * x / (a2 * a2) + y * y / (b2 * b2) + z * z / (c2 * c2);
            let abc2 = a2 * b2 * c2;
            let gauss = 1.0 / (abc2 * h2 * h2);
            let mean = (a2 + b2 + c2 - x * x - y * y - z * z) / (2.0 * abc2 * h2.powf(1.5));
            let disc = (mean * mean - gauss).max(0.0).sqrt();
            Ok(ExactCurvature::from_principal(mean + disc, mean - disc))
        }
        AnalyticShape::PerturbedSphere { .. } => {
            Err(Error::UnsupportedShape("perturbed sphere".into()))
        }
    }
}
