//! Dense symmetric eigen helpers shared by the estimators.

use alloc::vec::Vec;

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Matrix, Vector};

const RITZ_TOL: f64 = 1e-12;
const MAX_SUBSPACE_ITERS: usize = 400;

/// Full eigendecomposition of a symmetric matrix, eigenvalues descending.
///
/// Ties keep the order returned by the underlying solver.
pub fn symmetric_eigen(m: &Matrix) -> (Vec<f64>, Matrix) {
    let n = m.nrows();
    let sym = SymmetricEigen::new(symmetrized(m));
    let order = descending_order(sym.eigenvalues.as_slice());
    let values = order.iter().map(|&i| sym.eigenvalues[i]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| sym.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Eigenvalues only, descending.
pub fn symmetric_eigenvalues(m: &Matrix) -> Vec<f64> {
    let vals = symmetrized(m).symmetric_eigenvalues();
    let mut out: Vec<f64> = vals.iter().copied().collect();
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

/// Leading `k` eigenpairs of a symmetric positive semidefinite matrix.
///
/// Large matrices with few requested pairs go through block subspace
/// iteration with Rayleigh-Ritz extraction; the iteration stops once every
/// wanted Ritz residual is below `1e-12 * lambda_1`. Small problems, or
/// iterations that fail to converge, use the full decomposition.
pub fn leading_eigen(m: &Matrix, k: usize) -> (Vec<f64>, Matrix) {
    let n = m.nrows();
    assert!(k <= n, "requested more eigenpairs than the dimension");
    let block = (2 * k).max(k + 8).min(n);
    if n < 96 || 4 * block > n {
        return truncated_full(m, k);
    }
    match subspace_iteration(m, k, block) {
        Some(pairs) => pairs,
        None => truncated_full(m, k),
    }
}

fn truncated_full(m: &Matrix, k: usize) -> (Vec<f64>, Matrix) {
    let (mut values, vectors) = symmetric_eigen(m);
    values.truncate(k);
    (values, vectors.columns(0, k).into_owned())
}

fn subspace_iteration(m: &Matrix, k: usize, block: usize) -> Option<(Vec<f64>, Matrix)> {
    let n = m.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(0x51ce_d5ee_d000_0001);
    let start = Matrix::from_fn(n, block, |_, _| rng.random::<f64>() - 0.5);
    let mut q = (m * start).qr().q();
    for _ in 0..MAX_SUBSPACE_ITERS {
        let z = m * &q;
        let small = q.transpose() * &z;
        let (theta, w) = symmetric_eigen(&small);
        let ritz = &q * &w;
        let image = &z * &w;
        let scale = theta[0].abs().max(f64::MIN_POSITIVE);
        let converged = (0..k).all(|j| {
            let resid = image.column(j) - ritz.column(j) * theta[j];
            resid.norm() <= RITZ_TOL * scale
        });
        if converged {
            let values = theta[..k].to_vec();
            return Some((values, ritz.columns(0, k).into_owned()));
        }
        q = image.qr().q();
    }
    None
}

/// Indices sorting `values` descending; ties resolved by the smaller index.
pub fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// `-1.0` when the entry of largest magnitude (first one on ties) is negative.
pub fn max_abs_sign<'a>(entries: impl IntoIterator<Item = &'a f64>) -> f64 {
    let mut best = 0.0_f64;
    let mut sign = 1.0;
    for &v in entries {
        if v.abs() > best {
            best = v.abs();
            sign = if v < 0.0 { -1.0 } else { 1.0 };
        }
    }
    sign
}

pub fn symmetrized(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Orthonormal basis for the column span, via thin QR.
pub fn orthonormal_columns(m: &Matrix) -> Matrix {
    m.clone().qr().q()
}

/// Inverse square root of a symmetric positive definite matrix, or `None`
/// when an eigenvalue is below `tol * lambda_max`.
pub fn inverse_sqrt_spd(m: &Matrix, tol: f64) -> Option<(Matrix, Matrix)> {
    let (values, vectors) = symmetric_eigen(m);
    let top = values.first().copied().unwrap_or(0.0);
    if top <= 0.0 || values.iter().any(|&v| v <= tol * top) {
        return None;
    }
    let n = m.nrows();
    let mut inv = Matrix::zeros(n, n);
    let mut sqrt = Matrix::zeros(n, n);
    for (j, &v) in values.iter().enumerate() {
        let col = vectors.column(j);
        let outer = col * col.transpose();
        inv += &outer / libm::sqrt(v);
        sqrt += outer * libm::sqrt(v);
    }
    Some((inv, sqrt))
}

/// Largest principal angle (radians) between the column spans of `a` and `b`.
pub fn largest_principal_angle(a: &Matrix, b: &Matrix) -> f64 {
    let qa = orthonormal_columns(a);
    let qb = orthonormal_columns(b);
    let cross = qa.transpose() * qb;
    let sv = cross.singular_values();
    let smallest = sv.iter().copied().fold(f64::INFINITY, f64::min);
    libm::acos(smallest.clamp(-1.0, 1.0))
}

pub fn dot(a: &Vector, b: &Vector) -> f64 {
    a.dot(b)
}
