//! Sliced inverse regression on estimated factors.
//!
//! Observations are the pairs `(f_t, y_{t+1})` for `t = 0..T-1`; the target
//! is sorted, cut into `H` slices, and the covariance of the slice means of the
//! factors gives the central-subspace estimate.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::factor::{loading_pseudoinverse, DataPanel, FactorFit};
use crate::linalg::{max_abs, max_abs_sign, symmetric_eigen};
use crate::stats::chi_square_quantile;
use crate::warning::Warning;
use crate::{Matrix, Vector};

/// Eigenvalue gap below which the leading directions are reported as not
/// identified.
pub const GAP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SliceAssignment {
    requested: usize,
    slice_size: usize,
    order: Vec<usize>,
    slice_of: Vec<usize>,
    num_slices: usize,
    warnings: Vec<Warning>,
}

impl SliceAssignment {
    /// Number of non-empty slices actually formed.
    pub fn num_slices(&self) -> usize {
        self.num_slices
    }

    pub fn requested_slices(&self) -> usize {
        self.requested
    }

    /// Observations per full slice, `ceil((T-1)/H)`.
    pub fn slice_size(&self) -> usize {
        self.slice_size
    }

    /// Time indices `t` of the pairs, sorted ascending by `y_{t+1}`.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Slice index of each ordered position.
    pub fn slice_of(&self) -> &[usize] {
        &self.slice_of
    }

    /// Number of `(f_t, y_{t+1})` pairs, `T - 1`.
    pub fn num_pairs(&self) -> usize {
        self.order.len()
    }

    /// Time indices belonging to slice `h`.
    pub fn slice(&self, h: usize) -> &[usize] {
        let start = h * self.slice_size;
        let end = ((h + 1) * self.slice_size).min(self.order.len());
        &self.order[start..end]
    }

    pub fn slice_sizes(&self) -> Vec<usize> {
        (0..self.num_slices).map(|h| self.slice(h).len()).collect()
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }
}

/// Sort the pairs by `y_{t+1}` (stable in `t`) and cut them into slices of
/// `c = ceil((T-1)/H)`; the last slice takes the remainder.
///
/// When `H - 1` full slices already exhaust the sample, fewer slices are
/// formed and a [`Warning::SlicesReduced`] is attached.
pub fn assign_slices(target: &[f64], num_slices: usize) -> Result<SliceAssignment> {
    if num_slices < 2 {
        return Err(invalid("at least 2 slices are required"));
    }
    let n = target.len().saturating_sub(1);
    if n < num_slices {
        return Err(invalid(alloc::format!(
            "{num_slices} slices need at least {num_slices} target pairs, got {n}"
        )));
    }
    let next = &target[1..];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| next[a].total_cmp(&next[b]).then(a.cmp(&b)));
    let c = n.div_ceil(num_slices);
    let effective = n.div_ceil(c);
    let slice_of = (0..n).map(|pos| pos / c).collect();
    let mut warnings = Vec::new();
    if effective < num_slices {
        warnings.push(Warning::SlicesReduced {
            requested: num_slices,
            effective,
        });
    }
    Ok(SliceAssignment {
        requested: num_slices,
        slice_size: c,
        order,
        slice_of,
        num_slices: effective,
        warnings,
    })
}

/// Which estimator produced a [`SlicedCovariance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceSource {
    /// Slice means of the estimated factors.
    FactorForm,
    /// Slice means of the predictors mapped through the loading pseudo-inverse.
    LoadingForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlicedCovariance {
    matrix: Matrix,
    slice_means: Vec<Vector>,
    source: CovarianceSource,
}

impl SlicedCovariance {
    /// `K x K`, symmetric PSD.
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn slice_means(&self) -> &[Vector] {
        &self.slice_means
    }

    pub fn source(&self) -> CovarianceSource {
        self.source
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        symmetric_eigen(&self.matrix).0
    }

    /// Build from explicit slice means (each of length `K`).
    pub fn from_slice_means(slice_means: Vec<Vector>, source: CovarianceSource) -> Result<Self> {
        let k = slice_means
            .first()
            .map(|m| m.len())
            .ok_or(Error::Invariant("no slices"))?;
        let mut matrix = Matrix::zeros(k, k);
        for m in &slice_means {
            if m.len() != k {
                return Err(Error::DimensionMismatch {
                    context: "slice mean length",
                    expected: k,
                    actual: m.len(),
                });
            }
            matrix.ger(1.0, m, m, 1.0);
        }
        matrix /= slice_means.len() as f64;
        Ok(Self {
            matrix,
            slice_means,
            source,
        })
    }
}

fn check_alignment(fit: &FactorFit, slices: &SliceAssignment) -> Result<()> {
    if fit.num_periods() != slices.num_pairs() + 1 {
        return Err(Error::DimensionMismatch {
            context: "factor periods vs slice pairs + 1",
            expected: slices.num_pairs() + 1,
            actual: fit.num_periods(),
        });
    }
    Ok(())
}

/// `H^{-1} sum_h m_h m_h'` with `m_h` the mean of `f_t` over slice `h`.
pub fn sliced_covariance_factors(
    fit: &FactorFit,
    slices: &SliceAssignment,
) -> Result<SlicedCovariance> {
    check_alignment(fit, slices)?;
    let f = fit.factors();
    let k = fit.num_factors();
    let means = (0..slices.num_slices())
        .map(|h| {
            let members = slices.slice(h);
            if members.is_empty() {
                return Err(Error::Invariant("empty slice"));
            }
            let mut m = Vector::zeros(k);
            for &t in members {
                m += f.row(t).transpose();
            }
            Ok(m / members.len() as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    SlicedCovariance::from_slice_means(means, CovarianceSource::FactorForm)
}

/// `Lambda (H^{-1} sum_h xbar_h xbar_h') Lambda'` with `Lambda = (B'B)^{-1}B'`
/// and `xbar_h` the mean predictor vector over slice `h`.
pub fn sliced_covariance_loadings(
    panel: &DataPanel,
    fit: &FactorFit,
    slices: &SliceAssignment,
) -> Result<SlicedCovariance> {
    check_alignment(fit, slices)?;
    if panel.num_periods() != fit.num_periods() || panel.num_series() != fit.loadings().nrows() {
        return Err(Error::DimensionMismatch {
            context: "panel vs factor fit",
            expected: fit.num_periods(),
            actual: panel.num_periods(),
        });
    }
    let lambda = loading_pseudoinverse(fit)?;
    let x = panel.predictors();
    let means = (0..slices.num_slices())
        .map(|h| {
            let members = slices.slice(h);
            if members.is_empty() {
                return Err(Error::Invariant("empty slice"));
            }
            let mut xbar = Vector::zeros(x.nrows());
            for &t in members {
                xbar += x.column(t);
            }
            xbar /= members.len() as f64;
            Ok(&lambda * xbar)
        })
        .collect::<Result<Vec<_>>>()?;
    SlicedCovariance::from_slice_means(means, CovarianceSource::LoadingForm)
}

/// Compare two sliced covariances; a [`Warning::FormsDisagree`] when their
/// largest entrywise difference exceeds `tol`.
pub fn compare_forms(a: &SlicedCovariance, b: &SlicedCovariance, tol: f64) -> Option<Warning> {
    let diff = max_abs(&(a.matrix() - b.matrix()));
    (diff > tol).then_some(Warning::FormsDisagree { max_abs_diff: diff })
}

/// Estimated SDR directions `psi_1..psi_L` and their predictor-space images.
#[derive(Debug, Clone, PartialEq)]
pub struct SdrBasis {
    directions: Matrix,
    eigenvalues: Vec<f64>,
    all_eigenvalues: Vec<f64>,
    predictor_directions: Matrix,
    warnings: Vec<Warning>,
}

impl SdrBasis {
    /// `K x L`, orthonormal columns.
    pub fn directions(&self) -> &Matrix {
        &self.directions
    }

    /// Eigenvalues of the retained directions.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// All `K` eigenvalues of the sliced covariance.
    pub fn all_eigenvalues(&self) -> &[f64] {
        &self.all_eigenvalues
    }

    /// `p x L`, column `j` is `Lambda' psi_j`.
    pub fn predictor_directions(&self) -> &Matrix {
        &self.predictor_directions
    }

    pub fn num_indices(&self) -> usize {
        self.directions.ncols()
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    /// Indices `psi_j' f` for every row of a `n x K` factor matrix.
    pub fn project(&self, factors: &Matrix) -> Matrix {
        factors * &self.directions
    }
}

/// Top-`L` eigenvectors of the sliced covariance, each signed so its
/// largest-magnitude coordinate is positive.
pub fn sdr_directions(
    cov: &SlicedCovariance,
    fit: &FactorFit,
    num_indices: usize,
) -> Result<SdrBasis> {
    let k = cov.dim();
    if k != fit.num_factors() {
        return Err(Error::DimensionMismatch {
            context: "sliced covariance vs factor count",
            expected: fit.num_factors(),
            actual: k,
        });
    }
    if num_indices == 0 || num_indices > k {
        return Err(invalid(alloc::format!(
            "number of indices {num_indices} must lie in 1..={k}"
        )));
    }
    if num_indices > cov.slice_means().len() {
        return Err(invalid(alloc::format!(
            "{num_indices} indices need at least as many slices, got {}",
            cov.slice_means().len()
        )));
    }
    let (values, vectors) = symmetric_eigen(cov.matrix());
    let mut warnings = Vec::new();
    if num_indices < k {
        let gap = values[num_indices - 1] - values[num_indices];
        if gap < GAP_TOL {
            warnings.push(Warning::DegenerateSubspace {
                index: num_indices,
                gap,
            });
        }
    }
    let mut directions = vectors.columns(0, num_indices).into_owned();
    for j in 0..num_indices {
        if values[j] <= 0.0 {
            warnings.push(Warning::NonPositiveEigenvalue {
                index: j + 1,
                value: values[j],
            });
        }
        if max_abs_sign(directions.column(j).iter()) < 0.0 {
            directions.column_mut(j).neg_mut();
        }
    }
    let lambda = loading_pseudoinverse(fit)?;
    let predictor_directions = lambda.tr_mul(&directions);
    Ok(SdrBasis {
        eigenvalues: values[..num_indices].to_vec(),
        all_eigenvalues: values,
        directions,
        predictor_directions,
        warnings,
    })
}

/// `(T-1) x L` matrix of predictive indices `psi_j' f_t`, `t = 0..T-1`.
pub fn predictive_indices(basis: &SdrBasis, fit: &FactorFit) -> Result<Matrix> {
    if basis.directions().nrows() != fit.num_factors() {
        return Err(Error::DimensionMismatch {
            context: "direction length vs factor count",
            expected: fit.num_factors(),
            actual: basis.directions().nrows(),
        });
    }
    let t = fit.num_periods();
    if t < 2 {
        return Err(invalid("predictive indices need at least 2 periods"));
    }
    Ok(basis.project(&fit.factors().rows(0, t - 1).into_owned()))
}

/// Outcome of the sequential test for the number of indices.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexCount {
    pub l: usize,
    /// `(L, statistic, critical value)` for every tested `L`.
    pub tests: Vec<(usize, f64, f64)>,
    pub warnings: Vec<Warning>,
}

/// Sequential chi-square test for `L`.
///
/// For `L = 0, 1, ...` the statistic `(T-1) (K-L) * mean(smallest K-L
/// eigenvalues)` is compared with the `1 - alpha` quantile of a chi-square with
/// `(K-L)(H-L-1)` degrees of freedom; the first `L` not rejected is returned,
/// capped at `H - 1`.
pub fn select_num_indices(
    cov: &SlicedCovariance,
    num_periods: usize,
    num_slices: usize,
    alpha: f64,
) -> Result<IndexCount> {
    let k = cov.dim();
    if k < 2 {
        return Err(invalid("index-count test needs at least 2 factors"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("significance level must lie in (0, 1)"));
    }
    if num_periods < 2 {
        return Err(invalid("index-count test needs at least 2 periods"));
    }
    let eig = cov.eigenvalues();
    let n = (num_periods - 1) as f64;
    let mut tests = Vec::new();
    let mut warnings = Vec::new();
    for l in 0..k {
        if num_slices <= l + 1 {
            warnings.push(Warning::IndexScanStopped { at: l });
            return Ok(IndexCount { l, tests, warnings });
        }
        let df = ((k - l) * (num_slices - l - 1)) as f64;
        let tail: f64 = eig[l..].iter().map(|v| v.max(0.0)).sum();
        let stat = n * tail;
        let crit = chi_square_quantile(1.0 - alpha, df);
        tests.push((l, stat, crit));
        if stat <= crit {
            return Ok(IndexCount { l, tests, warnings });
        }
    }
    Ok(IndexCount {
        l: k.min(num_slices - 1),
        tests,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn even_and_ragged_splits() {
        let y: Vec<f64> = (0..7).map(|v| v as f64).collect();
        let s = assign_slices(&y, 2).unwrap();
        assert_eq!((s.slice_size(), s.slice_sizes()), (3, vec![3, 3]));
        let y: Vec<f64> = (0..8).map(|v| v as f64).collect();
        let s = assign_slices(&y, 3).unwrap();
        assert_eq!((s.slice_size(), s.slice_sizes()), (3, vec![3, 3, 1]));
        assert!(s.warnings().is_empty());
    }

    #[test]
    fn ties_fall_back_to_time_order() {
        let s = assign_slices(&[5.0; 7], 3).unwrap();
        assert_eq!(s.order(), &[0, 1, 2, 3, 4, 5]);
        assert_eq!(s.slice_of(), &[0, 0, 1, 1, 2, 2]);
    }

    #[test]
    fn sorting_uses_the_next_period_target() {
        let s = assign_slices(&[100.0, 3.0, 1.0, 2.0], 2).unwrap();
        // pairs t=0,1,2 carry y_1=3, y_2=1, y_3=2
        assert_eq!(s.order(), &[1, 2, 0]);
    }

    #[test]
    fn too_many_slices_is_an_error() {
        assert!(assign_slices(&[1.0, 2.0, 3.0], 3).is_err());
        assert!(assign_slices(&[1.0, 2.0, 3.0], 1).is_err());
    }

    #[test]
    fn exhausted_sample_reduces_slice_count() {
        let y: Vec<f64> = (0..10).map(|v| v as f64).collect();
        let s = assign_slices(&y, 4).unwrap();
        assert_eq!(s.num_slices(), 3);
        assert_eq!(s.slice_sizes(), vec![3, 3, 3]);
        assert_eq!(
            s.warnings(),
            &[Warning::SlicesReduced {
                requested: 4,
                effective: 3
            }]
        );
    }

    #[test]
    fn factor_form_hand_value() {
        // K = 1: slice means 2 and -2 -> (4 + 4) / 2
        let f = Matrix::from_column_slice(5, 1, &[2.0, 2.0, -2.0, -2.0, 0.0]);
        let fit = FactorFit::from_parts(f, Matrix::from_element(3, 1, 1.0)).unwrap();
        let y = [0.0, 10.0, 11.0, -1.0, -2.0];
        let s = assign_slices(&y, 2).unwrap();
        let cov = sliced_covariance_factors(&fit, &s).unwrap();
        assert_eq!(cov.matrix()[(0, 0)], 4.0);
        assert_eq!(cov.source(), CovarianceSource::FactorForm);
    }

    #[test]
    fn constant_factors_give_outer_product() {
        let v = [1.5, -0.5];
        let f = Matrix::from_fn(9, 2, |_, j| v[j]);
        let fit = FactorFit::from_parts(f, Matrix::identity(2, 2)).unwrap();
        let y: Vec<f64> = (0..9).map(|t| ((t * 7) % 5) as f64).collect();
        let cov = sliced_covariance_factors(&fit, &assign_slices(&y, 3).unwrap()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((cov.matrix()[(i, j)] - v[i] * v[j]).abs() < 1e-15);
            }
        }
    }

    fn cov_from(m: Matrix) -> SlicedCovariance {
        // slice means whose outer-product average equals the PSD matrix `m`
        let (vals, vecs) = symmetric_eigen(&m);
        let h = vals.len();
        let means = (0..h)
            .map(|j| vecs.column(j) * libm::sqrt(vals[j].max(0.0) * h as f64))
            .collect();
        SlicedCovariance::from_slice_means(means, CovarianceSource::FactorForm).unwrap()
    }

    fn identity_fit(k: usize) -> FactorFit {
        FactorFit::from_parts(Matrix::from_element(4, k, 1.0), Matrix::identity(k, k)).unwrap()
    }

    #[test]
    fn diagonal_covariance_gives_coordinate_direction() {
        let cov = cov_from(Matrix::from_diagonal(&Vector::from_vec(vec![3.0, 1.0, 0.0])));
        let sdr = sdr_directions(&cov, &identity_fit(3), 1).unwrap();
        assert!((sdr.eigenvalues()[0] - 3.0).abs() < 1e-12);
        assert!((sdr.directions()[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(sdr.warnings().is_empty());
    }

    #[test]
    fn tied_eigenvalues_warn_but_return() {
        let cov = cov_from(Matrix::identity(2, 2));
        let a = sdr_directions(&cov, &identity_fit(2), 1).unwrap();
        let b = sdr_directions(&cov, &identity_fit(2), 1).unwrap();
        assert!(matches!(a.warnings()[0], Warning::DegenerateSubspace { index: 1, .. }));
        assert_eq!(a, b);
    }

    #[test]
    fn index_test_accepts_exact_zeros() {
        let cov = cov_from(Matrix::from_diagonal(&Vector::from_vec(vec![5.0, 0.0, 0.0, 0.0])));
        let c = select_num_indices(&cov, 10_000, 10, 0.05).unwrap();
        assert_eq!(c.l, 1);
    }

    #[test]
    fn index_test_stops_when_out_of_slices() {
        let cov = cov_from(Matrix::from_diagonal(&Vector::from_vec(vec![5.0, 4.0, 3.0])));
        let c = select_num_indices(&cov, 10_000, 2, 0.05).unwrap();
        assert_eq!(c.l, 1);
        assert_eq!(c.warnings, vec![Warning::IndexScanStopped { at: 1 }]);
    }
}
