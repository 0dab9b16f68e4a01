//! Panel preprocessing and least-squares PCA factor extraction.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::{leading_eigen, max_abs_sign, symmetric_eigenvalues};
use crate::warning::Warning;
use crate::{Matrix, Vector};

/// Relative threshold below which an eigenvalue of `X'X` counts as zero.
pub const RANK_TOL: f64 = 1e-12;

/// A `p x T` predictor panel (row `i` = series, column `t` = period) with an
/// aligned length-`T` target.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPanel {
    predictors: Matrix,
    target: Vector,
    centered: bool,
}

impl DataPanel {
    pub fn new(predictors: Matrix, target: Vector) -> Result<Self> {
        if predictors.ncols() != target.len() {
            return Err(Error::DimensionMismatch {
                context: "target length vs panel periods",
                expected: predictors.ncols(),
                actual: target.len(),
            });
        }
        if predictors.nrows() == 0 {
            return Err(invalid("panel has no predictor series"));
        }
        check_finite(&predictors, "predictors")?;
        if let Some(t) = target.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "target",
                row: t,
                col: 0,
            });
        }
        Ok(Self {
            predictors,
            target,
            centered: false,
        })
    }

    pub fn predictors(&self) -> &Matrix {
        &self.predictors
    }

    pub fn target(&self) -> &Vector {
        &self.target
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// Number of predictor series `p`.
    pub fn num_series(&self) -> usize {
        self.predictors.nrows()
    }

    /// Number of periods `T`.
    pub fn num_periods(&self) -> usize {
        self.predictors.ncols()
    }

    /// Periods `0..len` of the panel; the centered flag is reset.
    pub fn window(&self, len: usize) -> DataPanel {
        DataPanel {
            predictors: self.predictors.columns(0, len).into_owned(),
            target: self.target.rows(0, len).into_owned(),
            centered: false,
        }
    }

    /// Per-series sample means.
    pub fn row_means(&self) -> Vector {
        self.predictors.column_mean()
    }

    pub(crate) fn with_predictors(&self, predictors: Matrix) -> DataPanel {
        DataPanel {
            predictors,
            target: self.target.clone(),
            centered: self.centered,
        }
    }

    pub fn into_parts(self) -> (Matrix, Vector) {
        (self.predictors, self.target)
    }
}

fn check_finite(m: &Matrix, what: &'static str) -> Result<()> {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if !m[(r, c)].is_finite() {
                return Err(Error::NonFinite {
                    what,
                    row: r,
                    col: c,
                });
            }
        }
    }
    Ok(())
}

/// Demean every predictor row. The target is left untouched.
pub fn center_panel(panel: &DataPanel) -> Result<DataPanel> {
    if panel.num_periods() < 2 {
        return Err(invalid("centering needs at least 2 periods"));
    }
    check_finite(&panel.predictors, "predictors")?;
    let means = panel.row_means();
    let mut x = panel.predictors.clone();
    for (i, mean) in means.iter().enumerate() {
        let first = x[(i, 0)];
        if x.row(i).iter().all(|v| *v == first) {
            // constant series: exact zeros rather than rounding residue
            x.row_mut(i).fill(0.0);
        } else if *mean != 0.0 {
            x.row_mut(i).add_scalar_mut(-mean);
        }
    }
    Ok(DataPanel {
        predictors: x,
        target: panel.target.clone(),
        centered: true,
    })
}

/// Estimated factors and loadings from the constrained least-squares problem
/// `min ||X - B F'||` subject to `F'F / T = I` and `B'B` diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorFit {
    factors: Matrix,
    loadings: Matrix,
    eigenvalues: Vec<f64>,
}

impl FactorFit {
    /// Wrap externally supplied factors (`T x K`) and loadings (`p x K`).
    ///
    /// Eigenvalues are set to the diagonal of `B'B`. Nothing ties the pair to a
    /// panel, so the equivalences that hold for [`estimate_factors`] output are
    /// not guaranteed here.
    pub fn from_parts(factors: Matrix, loadings: Matrix) -> Result<Self> {
        if factors.ncols() != loadings.ncols() {
            return Err(Error::DimensionMismatch {
                context: "factor count of loadings",
                expected: factors.ncols(),
                actual: loadings.ncols(),
            });
        }
        check_finite(&factors, "factors")?;
        check_finite(&loadings, "loadings")?;
        let eigenvalues = (0..loadings.ncols())
            .map(|j| loadings.column(j).norm_squared())
            .collect();
        Ok(Self {
            factors,
            loadings,
            eigenvalues,
        })
    }

    /// `T x K`, row `t` is the estimated factor at period `t`.
    pub fn factors(&self) -> &Matrix {
        &self.factors
    }

    /// `p x K`.
    pub fn loadings(&self) -> &Matrix {
        &self.loadings
    }

    /// Top-`K` eigenvalues of `X'X / T`, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn num_factors(&self) -> usize {
        self.factors.ncols()
    }

    pub fn num_periods(&self) -> usize {
        self.factors.nrows()
    }
}

/// Least-squares PCA: `F / sqrt(T)` holds the top-`K` eigenvectors of `X'X`
/// and `B = X F / T`.
///
/// The smaller of `X'X` and `XX'` is decomposed. Each factor column is
/// signed so that the largest-magnitude entry of its loading column is
/// positive.
pub fn estimate_factors(panel: &DataPanel, k: usize) -> Result<FactorFit> {
    let x = panel.predictors();
    let (p, t) = x.shape();
    if k == 0 || k > p.min(t) {
        return Err(invalid(alloc::format!(
            "number of factors {k} must lie in 1..={}",
            p.min(t)
        )));
    }
    let tf = t as f64;
    let (mu, unit) = if t <= p {
        let gram = x.tr_mul(x);
        leading_eigen(&gram, k)
    } else {
        let gram = x * x.transpose();
        let (mu, w) = leading_eigen(&gram, k);
        check_rank(&mu, k)?;
        let mut u = x.tr_mul(&w);
        for (j, m) in mu.iter().enumerate() {
            u.column_mut(j).scale_mut(1.0 / libm::sqrt(*m));
        }
        (mu, u)
    };
    check_rank(&mu, k)?;

    let mut factors = unit * libm::sqrt(tf);
    let mut loadings = x * &factors / tf;
    for j in 0..k {
        if max_abs_sign(loadings.column(j).iter()) < 0.0 {
            factors.column_mut(j).neg_mut();
            loadings.column_mut(j).neg_mut();
        }
    }
    let eigenvalues = mu.iter().map(|m| m / tf).collect();
    Ok(FactorFit {
        factors,
        loadings,
        eigenvalues,
    })
}

fn check_rank(mu: &[f64], k: usize) -> Result<()> {
    let top = mu.first().copied().unwrap_or(0.0);
    let rank = if top > 0.0 {
        mu.iter().take_while(|&&m| m > RANK_TOL * top).count()
    } else {
        0
    };
    if rank < k {
        return Err(Error::RankDeficient { requested: k, rank });
    }
    Ok(())
}

/// `(B'B)^{-1} B'`, the `K x p` left inverse of the loadings.
///
/// For a least-squares PCA fit it maps every predictor column back onto its
/// factor: `Lambda X = F'`.
pub fn loading_pseudoinverse(fit: &FactorFit) -> Result<Matrix> {
    let b = fit.loadings();
    let gram = b.tr_mul(b);
    let scale = gram.diagonal().amax();
    if scale <= 0.0 {
        return Err(Error::Singular("B'B (zero loadings)"));
    }
    let chol = gram
        .clone()
        .cholesky()
        .ok_or(Error::Singular("B'B (factor degeneracy)"))?;
    let min_pivot = chol.l().diagonal().iter().fold(f64::INFINITY, |a, v| a.min(*v));
    if min_pivot * min_pivot <= RANK_TOL * scale {
        return Err(Error::Singular("B'B (factor degeneracy)"));
    }
    Ok(chol.solve(&b.transpose()))
}

/// Result of the eigenvalue-ratio rule.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorCount {
    pub k: usize,
    /// `lambda_i / lambda_{i+1}` for `i = 1..=kmax`; `None` when excluded,
    /// `+inf` at a rank boundary.
    pub ratios: Vec<Option<f64>>,
    pub warnings: Vec<Warning>,
}

/// Default search bound `min(20, min(p, T) / 2)`, at least 1.
pub fn default_kmax(p: usize, t: usize) -> usize {
    (p.min(t) / 2).min(20).max(1)
}

/// Eigenvalue-ratio choice of the number of factors on a centered panel.
pub fn select_num_factors(panel: &DataPanel, kmax: usize) -> Result<FactorCount> {
    let x = panel.predictors();
    let (p, t) = x.shape();
    if p.min(t) < 2 || kmax == 0 || kmax > p.min(t) - 1 {
        return Err(invalid(alloc::format!(
            "kmax {kmax} must lie in 1..={}",
            p.min(t).saturating_sub(1)
        )));
    }
    let gram = if t <= p { x.tr_mul(x) } else { x * x.transpose() };
    let eigs = symmetric_eigenvalues(&gram);
    Ok(eigenvalue_ratio_rule(&eigs, kmax))
}

/// `argmax_{1<=i<=kmax} lambda_i / lambda_{i+1}` over descending eigenvalues,
/// smallest `i` on ties.
///
/// A denominator below `1e-12 * lambda_1` marks the numerical rank: the ratio
/// is treated as infinite when the numerator is still nonzero and excluded
/// otherwise, and a [`Warning::RankBoundary`] is attached.
pub fn eigenvalue_ratio_rule(eigenvalues: &[f64], kmax: usize) -> FactorCount {
    let top = eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let floor = RANK_TOL * top;
    let mut ratios = Vec::with_capacity(kmax);
    let mut warnings = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for i in 0..kmax.min(eigenvalues.len().saturating_sub(1)) {
        let (num, den) = (eigenvalues[i], eigenvalues[i + 1]);
        let ratio = if den <= floor || top == 0.0 {
            if num > floor && top > 0.0 {
                if !warnings.contains(&Warning::RankBoundary { index: i + 1 }) {
                    warnings.push(Warning::RankBoundary { index: i + 1 });
                }
                Some(f64::INFINITY)
            } else {
                None
            }
        } else {
            Some(num / den)
        };
        ratios.push(ratio);
        if let Some(r) = ratio {
            if best.map_or(true, |(_, b)| r > b) {
                best = Some((i + 1, r));
            }
        }
    }
    FactorCount {
        k: best.map_or(1, |(k, _)| k),
        ratios,
        warnings,
    }
}
