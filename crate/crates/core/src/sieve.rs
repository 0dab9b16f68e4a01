//! Additive B-spline sieve on loading covariates and projected PCA.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::factor::{estimate_factors, DataPanel, FactorFit};
use crate::stats::quantile_sorted;
use crate::warning::Warning;
use crate::{Matrix, Vector};

/// Singular values below this fraction of the largest are treated as zero.
const PROJECTION_RANK_TOL: f64 = 1e-10;

/// Default spline degree (cubic).
pub const DEFAULT_DEGREE: usize = 3;

/// Default basis size per covariate: `max(degree + 1, ceil(p^{1/4}))`.
pub fn default_num_basis(p: usize, degree: usize) -> usize {
    let root = libm::ceil(libm::pow(p as f64, 0.25)) as usize;
    root.max(degree + 1)
}

/// Additive B-spline design `phi(Z)` on `p` entities with `d` covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct SieveBasis {
    covariates: Matrix,
    degree: usize,
    num_basis: usize,
    knots: Vec<Vec<f64>>,
    block_sizes: Vec<usize>,
    design: Matrix,
    warnings: Vec<Warning>,
}

impl SieveBasis {
    pub fn covariates(&self) -> &Matrix {
        &self.covariates
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Requested basis size `J` per covariate.
    pub fn num_basis(&self) -> usize {
        self.num_basis
    }

    /// Full (clamped) knot vector per covariate.
    pub fn knots(&self) -> &[Vec<f64>] {
        &self.knots
    }

    /// Columns actually used per covariate block; below `J` after knot
    /// collapsing or for a constant covariate.
    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    /// `p x sum(block_sizes)`, covariate-major blocks.
    pub fn design(&self) -> &Matrix {
        &self.design
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    pub fn num_entities(&self) -> usize {
        self.covariates.nrows()
    }
}

/// B-spline basis per covariate, knots at equally spaced sample quantiles.
pub fn build_sieve_basis(covariates: &Matrix, num_basis: usize, degree: usize) -> Result<SieveBasis> {
    let (p, d) = covariates.shape();
    if d == 0 {
        return Err(invalid("at least one covariate is required"));
    }
    if num_basis < degree + 1 {
        return Err(invalid(alloc::format!(
            "basis size {num_basis} must be at least degree + 1 = {}",
            degree + 1
        )));
    }
    if p <= num_basis * d {
        return Err(invalid(alloc::format!(
            "sieve with {} columns is not a strict smoother for {p} entities",
            num_basis * d
        )));
    }
    for c in 0..d {
        for r in 0..p {
            if !covariates[(r, c)].is_finite() {
                return Err(Error::NonFinite {
                    what: "covariates",
                    row: r,
                    col: c,
                });
            }
        }
    }

    let mut knots = Vec::with_capacity(d);
    let mut block_sizes = Vec::with_capacity(d);
    let mut blocks: Vec<Matrix> = Vec::with_capacity(d);
    let mut warnings = Vec::new();
    for c in 0..d {
        let column: Vec<f64> = covariates.column(c).iter().copied().collect();
        let mut sorted = column.clone();
        sorted.sort_by(f64::total_cmp);
        let (lo, hi) = (sorted[0], sorted[p - 1]);
        if lo == hi {
            warnings.push(Warning::DegenerateCovariate { covariate: c });
            knots.push(vec![lo]);
            block_sizes.push(1);
            blocks.push(Matrix::from_element(p, 1, 1.0));
            continue;
        }
        let interior_requested = num_basis - degree - 1;
        let mut interior: Vec<f64> = (1..=interior_requested)
            .map(|k| quantile_sorted(&sorted, k as f64 / (interior_requested + 1) as f64))
            .filter(|&v| v > lo && v < hi)
            .collect();
        interior.dedup();
        let effective = interior.len() + degree + 1;
        if effective < num_basis {
            warnings.push(Warning::KnotsCollapsed {
                covariate: c,
                requested: num_basis,
                effective,
            });
        }
        let mut full = vec![lo; degree + 1];
        full.extend_from_slice(&interior);
        full.extend(core::iter::repeat(hi).take(degree + 1));
        let block = Matrix::from_fn(p, effective, |_, _| 0.0);
        let mut block = block;
        for (r, &z) in column.iter().enumerate() {
            let (span, values) = basis_functions(&full, degree, z);
            for (k, v) in values.iter().enumerate() {
                block[(r, span - degree + k)] = *v;
            }
        }
        knots.push(full);
        block_sizes.push(effective);
        blocks.push(block);
    }
    let total: usize = block_sizes.iter().sum();
    let mut design = Matrix::zeros(p, total);
    let mut offset = 0;
    for block in &blocks {
        design.columns_mut(offset, block.ncols()).copy_from(block);
        offset += block.ncols();
    }
    Ok(SieveBasis {
        covariates: covariates.clone(),
        degree,
        num_basis,
        knots,
        block_sizes,
        design,
        warnings,
    })
}

/// Knot span containing `x` and the `degree + 1` nonzero basis values there
/// (Cox-de Boor recursion on a clamped knot vector).
fn basis_functions(knots: &[f64], degree: usize, x: f64) -> (usize, Vec<f64>) {
    let n_basis = knots.len() - degree - 1;
    let span = if x >= knots[n_basis] {
        n_basis - 1
    } else {
        let mut s = degree;
        while s + 1 < n_basis && knots[s + 1] <= x {
            s += 1;
        }
        s
    };
    let mut values = vec![0.0; degree + 1];
    let mut left = vec![0.0; degree + 1];
    let mut right = vec![0.0; degree + 1];
    values[0] = 1.0;
    for j in 1..=degree {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = if denom == 0.0 { 0.0 } else { values[r] / denom };
            values[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        values[j] = saved;
    }
    (span, values)
}

/// Orthogonal projector onto the column span of a sieve design, stored as an
/// orthonormal basis `Q` so that `P = Q Q'`.
#[derive(Debug, Clone, PartialEq)]
pub struct SieveProjector {
    basis: Option<Matrix>,
    dim: usize,
    warnings: Vec<Warning>,
}

impl SieveProjector {
    /// Projector onto the span of `basis.design()`, via a rank-revealing SVD.
    pub fn new(basis: &SieveBasis) -> Result<Self> {
        let design = basis.design();
        let cols = design.ncols();
        let svd = design.clone().svd(true, false);
        let u = svd.u.ok_or(Error::Singular("sieve design SVD"))?;
        let top = svd.singular_values.iter().copied().fold(0.0_f64, f64::max);
        if top == 0.0 {
            return Err(Error::Singular("sieve design is zero"));
        }
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > PROJECTION_RANK_TOL * top)
            .collect();
        let mut warnings = Vec::new();
        if keep.len() < cols {
            warnings.push(Warning::PseudoInverse {
                rank: keep.len(),
                columns: cols,
            });
        }
        let q = Matrix::from_fn(design.nrows(), keep.len(), |r, c| u[(r, keep[c])]);
        Ok(Self {
            basis: Some(q),
            dim: design.nrows(),
            warnings,
        })
    }

    /// The identity map on `dim` entities; projected PCA reduces to plain PCA.
    pub fn identity(dim: usize) -> Self {
        Self {
            basis: None,
            dim,
            warnings: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Rank of the projector.
    pub fn rank(&self) -> usize {
        self.basis.as_ref().map_or(self.dim, |q| q.ncols())
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    /// `P X` for a `p x n` matrix.
    pub fn apply(&self, x: &Matrix) -> Matrix {
        match &self.basis {
            Some(q) => q * q.tr_mul(x),
            None => x.clone(),
        }
    }

    pub fn apply_vector(&self, x: &Vector) -> Vector {
        match &self.basis {
            Some(q) => q * q.tr_mul(x),
            None => x.clone(),
        }
    }

    /// Dense `p x p` projection matrix.
    pub fn matrix(&self) -> Matrix {
        match &self.basis {
            Some(q) => q * q.transpose(),
            None => Matrix::identity(self.dim, self.dim),
        }
    }
}

/// `X_hat = P X` with `P` the projector onto the sieve space.
pub fn project_panel(panel: &DataPanel, basis: &SieveBasis) -> Result<DataPanel> {
    let projector = SieveProjector::new(basis)?;
    project_with(panel, &projector)
}

pub fn project_with(panel: &DataPanel, projector: &SieveProjector) -> Result<DataPanel> {
    if projector.dim() != panel.num_series() {
        return Err(Error::DimensionMismatch {
            context: "sieve entities vs panel series",
            expected: panel.num_series(),
            actual: projector.dim(),
        });
    }
    Ok(panel.with_predictors(projector.apply(panel.predictors())))
}

/// PCA on the projected panel; loadings are `X_hat F / T`.
pub fn projected_factors(panel: &DataPanel, basis: &SieveBasis, k: usize) -> Result<FactorFit> {
    let projector = SieveProjector::new(basis)?;
    projected_factors_with(panel, &projector, k)
}

pub fn projected_factors_with(
    panel: &DataPanel,
    projector: &SieveProjector,
    k: usize,
) -> Result<FactorFit> {
    let projected = project_with(panel, projector)?;
    estimate_factors(&projected, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    #[test]
    fn linear_hat_functions_partition_unity() {
        let z = Matrix::from_column_slice(3, 1, &[0.0, 0.5, 1.0]);
        let b = build_sieve_basis(&z, 2, 1).unwrap();
        let d = b.design();
        assert_eq!(d.shape(), (3, 2));
        let expect = [[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]];
        for r in 0..3 {
            for c in 0..2 {
                assert!((d[(r, c)] - expect[r][c]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn cubic_rows_sum_to_one_with_interior_knots() {
        let z = Matrix::from_fn(40, 1, |i, _| libm::sin(i as f64 * 1.3) * 2.0);
        let b = build_sieve_basis(&z, 7, 3).unwrap();
        assert_eq!(b.block_sizes(), &[7]);
        for r in 0..40 {
            let s: f64 = b.design().row(r).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(b.design().row(r).iter().all(|v| *v >= -1e-15));
        }
    }

    #[test]
    fn constant_covariate_falls_back_to_single_column() {
        let z = Matrix::from_fn(10, 2, |i, j| if j == 0 { 3.0 } else { i as f64 });
        let b = build_sieve_basis(&z, 2, 1).unwrap();
        assert_eq!(b.block_sizes(), &[1, 2]);
        assert_eq!(b.warnings(), &[Warning::DegenerateCovariate { covariate: 0 }]);
    }

    #[test]
    fn two_covariates_give_two_blocks() {
        let z = Matrix::from_fn(30, 2, |i, j| libm::cos((i * (j + 1)) as f64));
        let b = build_sieve_basis(&z, 4, 3).unwrap();
        assert_eq!(b.design().ncols(), 8);
        assert_eq!(b.block_sizes(), &[4, 4]);
        // first block depends only on the first covariate
        let zz = Matrix::from_fn(30, 1, |i, _| z[(i, 0)]);
        let single = build_sieve_basis(&zz, 4, 3).unwrap();
        assert_eq!(b.design().columns(0, 4), single.design().columns(0, 4));
    }

    #[test]
    fn tied_quantiles_collapse_knots() {
        // mostly zeros: interior quantile knots coincide with the minimum
        let z = Matrix::from_fn(20, 1, |i, _| if i < 17 { 0.0 } else { i as f64 });
        let b = build_sieve_basis(&z, 6, 3).unwrap();
        assert!(b.block_sizes()[0] < 6);
        assert!(matches!(b.warnings()[0], Warning::KnotsCollapsed { .. }));
    }

    #[test]
    fn guards() {
        let z = Matrix::from_fn(8, 1, |i, _| i as f64);
        assert!(build_sieve_basis(&z, 8, 3).is_err());
        assert!(build_sieve_basis(&z, 3, 3).is_err());
    }

    #[test]
    fn projector_is_symmetric_idempotent() {
        let z = Matrix::from_fn(25, 2, |i, j| libm::sin((i * 3 + j * 7) as f64));
        let b = build_sieve_basis(&z, 4, 3).unwrap();
        let p = SieveProjector::new(&b).unwrap().matrix();
        assert!(max_abs(&(&p * &p - &p)) < 1e-10);
        assert!(max_abs(&(&p - p.transpose())) < 1e-12);
    }
}
