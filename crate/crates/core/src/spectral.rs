//! Cotangent Laplace–Beltrami operator and its first nonzero eigenvalue.
//!
//! The generalized problem `K u = λ M u` (K cotangent stiffness, M diagonal
//! barycentric mass) is symmetrized through `y = M^{1/2} u`. The lowest
//! nonzero eigenpairs are found by block inverse iteration on the
//! complement of the constant mode: each step solves `A Z = Y` by conjugate
//! gradients, then applies Rayleigh–Ritz to the block.

use std::collections::BTreeMap;

use log::{debug, info, warn};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{corner_cot, Mesh};

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl CsrMatrix {
    fn from_entries(n: usize, entries: &BTreeMap<(usize, usize), f64>) -> Self {
        let mut row_ptr = vec![0; n + 1];
        let mut col = Vec::with_capacity(entries.len());
        let mut val = Vec::with_capacity(entries.len());
        for (&(i, j), &v) in entries {
            row_ptr[i + 1] += 1;
            col.push(j);
            val.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n,
            row_ptr,
            col,
            val,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col[range.clone()].binary_search(&j) {
            Ok(k) => self.val[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col[range.clone()]
            .iter()
            .copied()
            .zip(self.val[range].iter().copied())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }
}

/// Cotangent stiffness: `w_ij = −(cot α + cot β)/2` off the diagonal, rows summing to zero.
pub fn stiffness_matrix(mesh: &Mesh) -> CsrMatrix {
    let mut entries: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (f, face) in mesh.faces().iter().enumerate() {
        let p = mesh.face_points(f);
        for k in 0..3 {
            // edge (i, j) is opposite corner k
            let (i, j) = (face[(k + 1) % 3], face[(k + 2) % 3]);
            let w = -0.5 * corner_cot(&p[k], &p[(k + 1) % 3], &p[(k + 2) % 3]);
            *entries.entry((i, j)).or_insert(0.0) += w;
            *entries.entry((j, i)).or_insert(0.0) += w;
        }
    }
    let mut diag = vec![0.0; mesh.vertex_count()];
    for (&(i, _), &w) in &entries {
        diag[i] -= w;
    }
    for (i, d) in diag.into_iter().enumerate() {
        entries.insert((i, i), d);
    }
    CsrMatrix::from_entries(mesh.vertex_count(), &entries)
}

/// Diagonal of the lumped (barycentric) mass matrix.
pub fn mass_matrix(mesh: &Mesh) -> Vec<f64> {
    mesh.vertex_areas()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Block size of the subspace iteration (at least 2).
    pub block: usize,
    pub seed: u64,
    /// Ritz values within this relative distance of λ1 belong to its cluster.
    pub cluster_rel: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iter: 200,
            block: 6,
            seed: 0x5eed,
            cluster_rel: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralResult {
    pub lambda1: f64,
    /// Mass-normalized, mass-orthogonal to constants.
    #[serde(skip)]
    pub eigenvector: Vec<f64>,
    /// ‖K u − λ M u‖ in the M^{-1/2} norm, with uᵀ M u = 1.
    pub residual: f64,
    pub iterations: usize,
    /// Spread of the Ritz values forming λ1's cluster.
    pub cluster_width: f64,
    /// Lowest nonzero Ritz values of the final block.
    #[serde(skip)]
    pub ritz_values: Vec<f64>,
}

/// Smallest nonzero eigenvalue of the pencil (`stiffness`, diag(`mass`)).
pub fn first_eigenvalue(
    stiffness: &CsrMatrix,
    mass: &[f64],
    options: &SolverOptions,
) -> Result<SpectralResult> {
    let n = stiffness.dim();
    if options.tol <= 0.0 || n < 3 {
        return Err(Error::InvalidConfig(format!(
            "eigensolver needs tol > 0 and at least 3 vertices (tol {}, n {n})",
            options.tol
        )));
    }
    let inv_sqrt: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let op = SymmetrizedPencil {
        stiffness,
        inv_sqrt: &inv_sqrt,
    };
    // null vector of the symmetrized operator: M^{1/2}·1
    let total: f64 = mass.iter().sum();
    let null: Vec<f64> = mass.iter().map(|m| (m / total).sqrt()).collect();

    let block = options.block.clamp(2, n - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut basis: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..n).map(|_| rng.gen::<f64>() - 0.5).collect())
        .collect();
    orthonormalize(&mut basis, &null);

    let cg_tol = (options.tol * 1e-3).max(1e-14);
    let mut previous = f64::INFINITY;
    let mut last = (f64::NAN, f64::INFINITY);
    for iteration in 1..=options.max_iter {
        let mut next: Vec<Vec<f64>> = basis
            .iter()
            .map(|b| conjugate_gradient(&op, b, &null, cg_tol, 20 * n))
            .collect();
        orthonormalize(&mut next, &null);

        let (ritz, vectors) = rayleigh_ritz(&op, &next);
        basis = vectors;
        let lambda = ritz[0];
        let y = &basis[0];
        let ay = op.apply(y);
        let residual = ay
            .iter()
            .zip(y)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt();
        let change = ((lambda - previous) / lambda).abs();
        debug!("iteration {iteration}: lambda {lambda:.12e} residual {residual:.3e}");
        previous = lambda;
        last = (lambda, residual);

        if change < options.tol && residual < options.tol * lambda {
            let eigenvector: Vec<f64> = y.iter().zip(&inv_sqrt).map(|(a, s)| a * s).collect();
            // certificate: report the explicit generalized Rayleigh quotient
            let num = stiffness.quadratic_form(&eigenvector);
            let den: f64 = eigenvector.iter().zip(mass).map(|(u, m)| u * u * m).sum();
            let lambda1 = num / den;
            let cluster_width = ritz
                .iter()
                .filter(|&&r| r <= lambda1 * (1.0 + options.cluster_rel))
                .map(|r| r - lambda1)
                .fold(0.0, f64::max);
            if ritz.len() >= 3 && (ritz[2] - ritz[1]).abs() < options.tol * lambda1 {
                if cluster_width > 0.0 {
                    info!("degenerate eigenvalue cluster near {lambda1:.6} (expected for round spheres)");
                } else {
                    warn!("near-zero spectral gap between second and third eigenvalues");
                }
            }
            return Ok(SpectralResult {
                lambda1,
                eigenvector,
                residual,
                iterations: iteration,
                cluster_width,
                ritz_values: ritz,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: options.max_iter,
        lambda: last.0,
        residual: last.1,
    })
}

/// Convenience wrapper: assembles both matrices from `mesh`.
pub fn mesh_first_eigenvalue(mesh: &Mesh, options: &SolverOptions) -> Result<SpectralResult> {
    first_eigenvalue(&stiffness_matrix(mesh), &mass_matrix(mesh), options)
}

/// `M^{-1/2} K M^{-1/2}` applied matrix-free.
struct SymmetrizedPencil<'a> {
    stiffness: &'a CsrMatrix,
    inv_sqrt: &'a [f64],
}

impl SymmetrizedPencil<'_> {
    fn apply(&self, y: &[f64]) -> Vec<f64> {
        let scaled: Vec<f64> = y.iter().zip(self.inv_sqrt).map(|(a, s)| a * s).collect();
        self.stiffness
            .mul_vec(&scaled)
            .into_iter()
            .zip(self.inv_sqrt)
            .map(|(a, s)| a * s)
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn deflate(x: &mut [f64], null: &[f64]) {
    let c = dot(x, null);
    axpy(-c, null, x);
}

/// Solves `A x = b` on the orthogonal complement of `null`, where A is SPD.
fn conjugate_gradient(
    op: &SymmetrizedPencil,
    b: &[f64],
    null: &[f64],
    tol: f64,
    max_iter: usize,
) -> Vec<f64> {
    let mut rhs = b.to_vec();
    deflate(&mut rhs, null);
    let bnorm = dot(&rhs, &rhs).sqrt();
    let mut x = vec![0.0; rhs.len()];
    if bnorm == 0.0 {
        return x;
    }
    let mut r = rhs;
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for _ in 0..max_iter {
        let mut ap = op.apply(&p);
        deflate(&mut ap, null);
        let alpha = rr / dot(&p, &ap);
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= tol * bnorm {
            break;
        }
        let beta = rr_new / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_new;
    }
    deflate(&mut x, null);
    x
}

/// Modified Gram–Schmidt (two passes) against `null` and within the block.
fn orthonormalize(block: &mut [Vec<f64>], null: &[f64]) {
    for k in 0..block.len() {
        for _ in 0..2 {
            deflate(&mut block[k], null);
            for j in 0..k {
                let (done, rest) = block.split_at_mut(k);
                let c = dot(&rest[0], &done[j]);
                axpy(-c, &done[j], &mut rest[0]);
            }
        }
        let norm = dot(&block[k], &block[k]).sqrt();
        for x in &mut block[k] {
            *x /= norm;
        }
    }
}

/// Ritz values (ascending) and vectors of `op` on the span of an orthonormal block.
fn rayleigh_ritz(op: &SymmetrizedPencil, block: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let k = block.len();
    let images: Vec<Vec<f64>> = block.iter().map(|b| op.apply(b)).collect();
    let projected = DMatrix::from_fn(k, k, |i, j| {
        0.5 * (dot(&block[i], &images[j]) + dot(&block[j], &images[i]))
    });
    let eig = SymmetricEigen::new(projected);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let n = block[0].len();
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let coeffs = eig.eigenvectors.column(i);
            let mut v = vec![0.0; n];
            for (c, b) in coeffs.iter().zip(block) {
                axpy(*c, b, &mut v);
            }
            // deterministic sign: first significant entry positive
            if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
                if *first < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
            v
        })
        .collect();
    (values, vectors)
}

/// Dense generalized eigenvalues of (K, M), ascending. For tests on small meshes.
pub fn dense_generalized_eigenvalues(stiffness: &CsrMatrix, mass: &[f64]) -> Vec<f64> {
    let s: DVector<f64> = DVector::from_iterator(mass.len(), mass.iter().map(|m| 1.0 / m.sqrt()));
    let k = stiffness.to_dense();
    let a = DMatrix::from_fn(mass.len(), mass.len(), |i, j| s[i] * k[(i, j)] * s[j]);
    let mut values: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}
