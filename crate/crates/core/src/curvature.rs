//! Per-vertex extrinsic curvature and the intrinsic quantities obtained from
//! it through the Gauss equation.
//!
//! The shape operator is estimated by a least-squares height-function fit
//! over the 2-ring of each vertex, expressed in that vertex's tangent frame:
//! quadratic, linear and (when the ring has at least nine points) cubic
//! terms are fitted, and only the quadratic part is kept. Sign
//! convention: outward-oriented round spheres have positive curvature.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3x2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{corner_angle, Mesh, VertexFrame};

/// Mesh surfaces are 2-dimensional hypersurfaces of R³.
pub const SURFACE_DIM: usize = 2;

/// Relative singular-value cutoff below which a quadric fit counts as rank deficient.
const FIT_RCOND: f64 = 1e-8;

/// 2-rings at least this large get cubic terms in the height fit.
const CUBIC_MIN_POINTS: usize = 9;

/// Fraction of vertices allowed to fall back to neighbor averaging.
pub const MAX_FLAGGED_FRACTION: f64 = 0.01;

/// Eigenvalues of a symmetric 2×2 matrix, largest first.
pub fn sym_eigenvalues(m: &Matrix2<f64>) -> [f64; 2] {
    let mean = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let half_diff = 0.5 * (m[(0, 0)] - m[(1, 1)]);
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let r = half_diff.hypot(off);
    [mean + r, mean - r]
}

/// Largest absolute eigenvalue of a symmetric 2×2 matrix.
pub fn operator_norm(m: &Matrix2<f64>) -> f64 {
    let [a, b] = sym_eigenvalues(m);
    a.abs().max(b.abs())
}

fn symmetrize(m: &Matrix2<f64>) -> Matrix2<f64> {
    0.5 * (m + m.transpose())
}

/// σ_r of `values`; σ_0 = 1.
pub fn symmetric_polynomial(values: &[f64], r: usize) -> Result<f64> {
    let n = values.len();
    if r > n {
        return Err(Error::OrderOutOfRange { r, n });
    }
    // e[k] accumulates σ_k of the prefix processed so far
    let mut e = vec![0.0; r + 1];
    e[0] = 1.0;
    for &x in values {
        for k in (1..=r).rev() {
            e[k] += x * e[k - 1];
        }
    }
    Ok(e[r])
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// H_r = σ_r(κ) / C(n, r) for r = 0..=n, with n = κ.len().
pub fn higher_mean_curvatures(kappa: &[f64]) -> Vec<f64> {
    let n = kappa.len();
    (0..=n)
        .map(|r| symmetric_polynomial(kappa, r).expect("r <= n") / binomial(n, r))
        .collect()
}

/// Ricci operator from the once-traced Gauss formula: Ric = nH·S − S².
pub fn ricci_from_gauss(shape: &Matrix2<f64>, mean: f64, n: usize) -> Matrix2<f64> {
    symmetrize(&(shape * (n as f64 * mean) - shape * shape))
}

/// τ = S − H·Id.
pub fn umbilicity_tensor(shape: &Matrix2<f64>, mean: f64) -> Matrix2<f64> {
    symmetrize(&(shape - Matrix2::identity() * mean))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexCurvature {
    /// Shape operator in the vertex tangent basis.
    #[serde(skip)]
    pub shape: Matrix2<f64>,
    pub kappa: [f64; 2],
    #[serde(rename = "H")]
    pub mean: f64,
    /// H_0, H_1, H_2.
    #[serde(skip)]
    pub h: [f64; 3],
    #[serde(rename = "H2")]
    pub h2: f64,
    pub scal: f64,
    #[serde(skip)]
    pub ricci: Matrix2<f64>,
    #[serde(skip)]
    pub tau: Matrix2<f64>,
    /// Frobenius norm of τ.
    pub tau_norm: f64,
    #[serde(rename = "K_defect")]
    pub k_defect: f64,
}

impl VertexCurvature {
    fn from_shape(shape: Matrix2<f64>, k_defect: f64) -> Self {
        let shape = symmetrize(&shape);
        let kappa = sym_eigenvalues(&shape);
        let n = SURFACE_DIM;
        let hr = higher_mean_curvatures(&kappa);
        let mean = hr[1];
        let tau = umbilicity_tensor(&shape, mean);
        VertexCurvature {
            shape,
            kappa,
            mean,
            h: [hr[0], hr[1], hr[2]],
            h2: hr[2],
            scal: (n * (n - 1)) as f64 * hr[2],
            ricci: ricci_from_gauss(&shape, mean, n),
            tau,
            tau_norm: tau.norm(),
            k_defect,
        }
    }

    pub fn hr(&self, r: usize) -> f64 {
        self.h[r]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureField {
    pub vertices: Vec<VertexCurvature>,
    /// Vertices whose quadric fit was rank deficient and were filled from neighbors.
    pub flagged: Vec<usize>,
}

impl CurvatureField {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn map(&self, f: impl Fn(&VertexCurvature) -> f64) -> Vec<f64> {
        self.vertices.iter().map(f).collect()
    }

    pub fn hr(&self, r: usize) -> Vec<f64> {
        self.map(|c| c.h[r])
    }

    pub fn mean(&self) -> Vec<f64> {
        self.map(|c| c.mean)
    }

    pub fn scal(&self) -> Vec<f64> {
        self.map(|c| c.scal)
    }
}

/// Full curvature stack for a mesh.
pub fn curvature_field(mesh: &Mesh, frames: &[VertexFrame]) -> Result<CurvatureField> {
    let (shapes, flagged) = estimate_shape_operator(mesh, frames)?;
    let defect = angle_defect_gauss(mesh);
    let vertices = shapes
        .into_iter()
        .zip(defect)
        .map(|(s, k)| VertexCurvature::from_shape(s, k))
        .collect();
    Ok(CurvatureField { vertices, flagged })
}

/// Per-vertex shape operators in each frame's tangent basis, plus the indices
/// of vertices whose fit failed and were filled by a 1-ring average.
pub fn estimate_shape_operator(
    mesh: &Mesh,
    frames: &[VertexFrame],
) -> Result<(Vec<Matrix2<f64>>, Vec<usize>)> {
    let nv = mesh.vertex_count();
    let mut shapes: Vec<Option<Matrix2<f64>>> = Vec::with_capacity(nv);
    for v in 0..nv {
        let ring = mesh.two_ring(v);
        if ring.len() < 5 {
            return Err(Error::SparseNeighborhood {
                vertex: v,
                count: ring.len(),
            });
        }
        shapes.push(fit_quadric(mesh, frames, v, &ring));
    }

    let flagged: Vec<usize> = (0..nv).filter(|&v| shapes[v].is_none()).collect();
    if flagged.len() as f64 > MAX_FLAGGED_FRACTION * nv as f64 {
        return Err(Error::TooManyFlagged {
            flagged: flagged.len(),
            total: nv,
        });
    }

    let filled = (0..nv)
        .map(|v| match shapes[v] {
            Some(s) => s,
            None => neighbor_average(mesh, frames, &shapes, v),
        })
        .collect();
    Ok((filled, flagged))
}

fn fit_quadric(
    mesh: &Mesh,
    frames: &[VertexFrame],
    v: usize,
    ring: &[usize],
) -> Option<Matrix2<f64>> {
    let frame = &frames[v];
    let p = mesh.vertices()[v];
    let local: Vec<_> = ring
        .iter()
        .map(|&w| frame.local(&(mesh.vertices()[w] - p)))
        .collect();
    // scale to unit mean distance for conditioning
    let scale = local.iter().map(|q| q.xy().norm()).sum::<f64>() / local.len() as f64;
    if !(scale > 0.0) {
        return None;
    }
    // cubic terms absorb the odd-order bias of long, anisotropic 2-rings
    let cols = if local.len() >= CUBIC_MIN_POINTS {
        9
    } else {
        5
    };
    let mut a = DMatrix::zeros(local.len(), cols);
    let mut rhs = DVector::zeros(local.len());
    for (row, q) in local.iter().enumerate() {
        let (x, y, z) = (q.x / scale, q.y / scale, q.z / scale);
        a[(row, 0)] = 0.5 * x * x;
        a[(row, 1)] = x * y;
        a[(row, 2)] = 0.5 * y * y;
        a[(row, 3)] = x;
        a[(row, 4)] = y;
        if cols == 9 {
            a[(row, 5)] = x * x * x;
            a[(row, 6)] = x * x * y;
            a[(row, 7)] = x * y * y;
            a[(row, 8)] = y * y * y;
        }
        rhs[row] = z;
    }
    let sv = a.singular_values();
    if !(sv.min() > FIT_RCOND * sv.max()) {
        return None;
    }
    // Solve by Householder QR: the SVD back-substitution loses ~1e-6 on some
    // well-conditioned rings, which breaks rigid-motion invariance.
    let qr = a.qr();
    let coef = qr.r().solve_upper_triangular(&(qr.q().transpose() * rhs))?;
    let (ca, cb, cc) = (coef[0] / scale, coef[1] / scale, coef[2] / scale);
    // outward normal: a sphere bends away from it, so the height Hessian is negative
    Some(-Matrix2::new(ca, cb, cb, cc))
}

fn neighbor_average(
    mesh: &Mesh,
    frames: &[VertexFrame],
    shapes: &[Option<Matrix2<f64>>],
    v: usize,
) -> Matrix2<f64> {
    let target = Matrix3x2::from_columns(&frames[v].tangent);
    let mut sum = Matrix2::zeros();
    let mut count = 0usize;
    for &w in mesh.neighbors(v) {
        if let Some(s) = shapes[w] {
            // lift to an ambient tensor, then restrict to v's tangent plane
            let basis = Matrix3x2::from_columns(&frames[w].tangent);
            let ambient = basis * s * basis.transpose();
            sum += target.transpose() * ambient * target;
            count += 1;
        }
    }
    if count == 0 {
        Matrix2::zeros()
    } else {
        symmetrize(&(sum / count as f64))
    }
}

/// Angle-defect Gaussian curvature per unit barycentric area.
pub fn angle_defect_gauss(mesh: &Mesh) -> Vec<f64> {
    let defects = angle_defects(mesh);
    mesh.vertex_areas()
        .iter()
        .zip(defects)
        .map(|(&area, d)| d / area)
        .collect()
}

/// 2π minus the sum of incident corner angles, per vertex.
pub fn angle_defects(mesh: &Mesh) -> Vec<f64> {
    let mut angle_sum = vec![0.0; mesh.vertex_count()];
    for (f, face) in mesh.faces().iter().enumerate() {
        let [a, b, c] = mesh.face_points(f);
        angle_sum[face[0]] += corner_angle(&a, &b, &c);
        angle_sum[face[1]] += corner_angle(&b, &c, &a);
        angle_sum[face[2]] += corner_angle(&c, &a, &b);
    }
    angle_sum.into_iter().map(|s| 2.0 * PI - s).collect()
}
