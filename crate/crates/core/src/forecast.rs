//! Linear and local linear forecasters on factors or predictive indices.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::factor::FactorFit;
use crate::stats::{mean, sample_sd};
use crate::{Matrix, Vector};

pub use crate::pipeline::out_of_sample_r2;

/// Relative size below which a QR pivot marks a collinear column.
const COLLINEAR_TOL: f64 = 1e-10;
/// Kernel mass below which the local fit falls back to the global one.
const MIN_KERNEL_MASS: f64 = 1e-8;

/// Anything that maps a row of base regressors to a forecast.
pub trait Forecaster {
    fn predict(&self, regressors: &[f64]) -> f64;
}

/// Which regressors a linear forecast was fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegressorSpec {
    /// All estimated factors (PCR).
    AllFactors,
    /// The first estimated factor only (PC1).
    FirstPc,
    /// The first `L` predictive indices (SF with a linear link).
    Indices(usize),
    /// Two indices plus their product (SFi).
    IndicesWithInteraction,
    /// All factors plus the product of the first two (PCRi).
    FactorsWithInteraction,
}

impl RegressorSpec {
    /// Whether the product of the first two base columns is appended.
    pub fn has_interaction(self) -> bool {
        matches!(
            self,
            RegressorSpec::IndicesWithInteraction | RegressorSpec::FactorsWithInteraction
        )
    }

    fn check_base(self, cols: usize) -> Result<()> {
        let ok = match self {
            RegressorSpec::AllFactors => cols >= 1,
            RegressorSpec::FirstPc => cols == 1,
            RegressorSpec::Indices(l) => cols == l && l >= 1,
            RegressorSpec::IndicesWithInteraction => cols == 2,
            RegressorSpec::FactorsWithInteraction => cols >= 2,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(alloc::format!(
                "{cols} regressor columns do not match spec {self:?}"
            )))
        }
    }

    /// Append the interaction column when the spec has one.
    pub fn expand(self, base: &Matrix) -> Matrix {
        if !self.has_interaction() {
            return base.clone();
        }
        let n = base.nrows();
        let q = base.ncols();
        let mut out = base.clone().insert_column(q, 0.0);
        for i in 0..n {
            out[(i, q)] = base[(i, 0)] * base[(i, 1)];
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearForecast {
    coefficients: Vector,
    intercept: f64,
    spec: RegressorSpec,
}

impl LinearForecast {
    /// One coefficient per expanded regressor.
    pub fn coefficients(&self) -> &Vector {
        &self.coefficients
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn spec(&self) -> RegressorSpec {
        self.spec
    }
}

impl Forecaster for LinearForecast {
    fn predict(&self, regressors: &[f64]) -> f64 {
        let base: f64 = regressors
            .iter()
            .zip(self.coefficients.iter())
            .map(|(x, b)| x * b)
            .sum();
        let extra = if self.spec.has_interaction() {
            self.coefficients[regressors.len()] * regressors[0] * regressors[1]
        } else {
            0.0
        };
        self.intercept + base + extra
    }
}

/// Direct PCR direction `(T-1)^{-1} sum_t y_{t+1} f_t` with intercept
/// `mean(y_1..y_{T-1})`.
pub fn pcr_coefficients(fit: &FactorFit, target: &Vector) -> Result<LinearForecast> {
    let t = fit.num_periods();
    if target.len() != t {
        return Err(Error::DimensionMismatch {
            context: "target length vs factor periods",
            expected: t,
            actual: target.len(),
        });
    }
    if t < 2 {
        return Err(invalid("PCR needs at least 2 periods"));
    }
    let f = fit.factors();
    let mut phi = Vector::zeros(fit.num_factors());
    for s in 0..t - 1 {
        phi += f.row(s).transpose() * target[s + 1];
    }
    phi /= (t - 1) as f64;
    let intercept = target.rows(1, t - 1).mean();
    Ok(LinearForecast {
        coefficients: phi,
        intercept,
        spec: RegressorSpec::AllFactors,
    })
}

/// Ordinary least squares with intercept on the (expanded) regressors.
///
/// Solved by Householder QR; a pivot below `1e-10` of its column norm is
/// reported as [`Error::Collinear`] naming the expanded column.
pub fn fit_linear_forecast(
    regressors: &Matrix,
    target: &Vector,
    spec: RegressorSpec,
) -> Result<LinearForecast> {
    spec.check_base(regressors.ncols())?;
    if regressors.nrows() != target.len() {
        return Err(Error::DimensionMismatch {
            context: "regressor rows vs target length",
            expected: regressors.nrows(),
            actual: target.len(),
        });
    }
    let x = spec.expand(regressors);
    let (n, m) = x.shape();
    if n <= m + 1 {
        return Err(invalid(alloc::format!(
            "{n} observations cannot identify {} coefficients",
            m + 1
        )));
    }
    let design = x.clone().insert_column(0, 1.0);
    let (beta, _) = least_squares(&design, target)?;
    Ok(LinearForecast {
        intercept: beta[0],
        coefficients: beta.rows(1, m).into_owned(),
        spec,
    })
}

/// QR least squares; returns the coefficients and the fitted values.
fn least_squares(design: &Matrix, target: &Vector) -> Result<(Vector, Vector)> {
    let m = design.ncols();
    let qr = design.clone().qr();
    let r = qr.r();
    for j in 0..m {
        let norm = design.column(j).norm();
        if norm == 0.0 || r[(j, j)].abs() <= COLLINEAR_TOL * norm {
            return Err(Error::Collinear {
                column: j.saturating_sub(1),
            });
        }
    }
    let q = qr.q();
    let qty = q.tr_mul(target);
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or(Error::Singular("least squares R factor"))?;
    let fitted = design * &beta;
    Ok((beta, fitted))
}

/// `1 - SSR/SST` with SST about the mean of `actual`.
pub fn r_squared(actual: &[f64], fitted: &[f64]) -> Result<f64> {
    if actual.len() != fitted.len() {
        return Err(Error::DimensionMismatch {
            context: "fitted vs actual length",
            expected: actual.len(),
            actual: fitted.len(),
        });
    }
    let m = mean(actual);
    let sst: f64 = actual.iter().map(|y| (y - m) * (y - m)).sum();
    if sst == 0.0 || actual.is_empty() {
        return Err(Error::ZeroVariance("target (R-squared denominator)"));
    }
    let ssr: f64 = actual
        .iter()
        .zip(fitted)
        .map(|(y, f)| (y - f) * (y - f))
        .sum();
    Ok(1.0 - ssr / sst)
}

/// In-sample R² of a fitted model on its training rows.
pub fn in_sample_r2(model: &dyn Forecaster, regressors: &Matrix, target: &Vector) -> Result<f64> {
    if regressors.nrows() != target.len() {
        return Err(Error::DimensionMismatch {
            context: "regressor rows vs target length",
            expected: regressors.nrows(),
            actual: target.len(),
        });
    }
    let fitted: Vec<f64> = (0..regressors.nrows())
        .map(|i| {
            let row: Vec<f64> = regressors.row(i).iter().copied().collect();
            model.predict(&row)
        })
        .collect();
    r_squared(target.as_slice(), &fitted)
}

/// Out-of-sample R²: squared forecast error relative to the squared error of
/// the test-sample mean. Negative when the forecasts lose to that mean.
pub fn oos_r2(actual: &[f64], forecasts: &[f64]) -> Result<f64> {
    r_squared(actual, forecasts)
}

/// Evaluation of one forecasting method on one panel.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// In-sample R² of the pipeline fitted on the whole panel.
    pub r2_in: f64,
    pub r2_oos: f64,
    /// Out-of-sample forecasts of `y_s`, `s = split_index..T`.
    pub forecasts: Vec<f64>,
    pub actuals: Vec<f64>,
    pub split_index: usize,
    /// Steps whose pipeline failed and were replaced by the training mean.
    pub failures: usize,
}

/// Bandwidth choice for the local linear smoother.
#[derive(Debug, Clone, PartialEq)]
pub enum Bandwidth {
    /// `multiplier * 1.06 * sd_j * n^{-1/(4+L)}` per index.
    RuleOfThumb { multiplier: f64 },
    Fixed(Vec<f64>),
}

impl Default for Bandwidth {
    fn default() -> Self {
        Bandwidth::RuleOfThumb { multiplier: 1.0 }
    }
}

/// Multivariate local linear regression with a Gaussian product kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSmoother {
    indices: Matrix,
    targets: Vector,
    bandwidths: Vec<f64>,
    global: Option<Vector>,
}

impl KernelSmoother {
    pub fn training_indices(&self) -> &Matrix {
        &self.indices
    }

    pub fn training_targets(&self) -> &Vector {
        &self.targets
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }
}

pub fn rule_of_thumb_bandwidth(sd: f64, n: usize, dims: usize) -> f64 {
    1.06 * sd * libm::pow(n as f64, -1.0 / (4 + dims) as f64)
}

/// Store training data and bandwidths for local linear prediction.
pub fn local_linear_fit(
    indices: &Matrix,
    target: &Vector,
    bandwidth: &Bandwidth,
) -> Result<KernelSmoother> {
    let (n, dims) = indices.shape();
    if !(1..=2).contains(&dims) {
        return Err(invalid(alloc::format!(
            "local linear smoother supports 1 or 2 indices, got {dims}"
        )));
    }
    if target.len() != n {
        return Err(Error::DimensionMismatch {
            context: "index rows vs target length",
            expected: n,
            actual: target.len(),
        });
    }
    if n < 10 || n < dims + 2 {
        return Err(invalid(alloc::format!(
            "local linear smoother needs at least 10 observations, got {n}"
        )));
    }
    let bandwidths = match bandwidth {
        Bandwidth::Fixed(h) => {
            if h.len() != dims || h.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(invalid("bandwidths must be positive, one per index"));
            }
            h.clone()
        }
        Bandwidth::RuleOfThumb { multiplier } => {
            if !(multiplier.is_finite() && *multiplier > 0.0) {
                return Err(invalid("bandwidth multiplier must be positive"));
            }
            (0..dims)
                .map(|j| {
                    let col: Vec<f64> = indices.column(j).iter().copied().collect();
                    let sd = sample_sd(&col);
                    if sd <= 0.0 {
                        return Err(Error::ZeroVariance("predictive index"));
                    }
                    Ok(multiplier * rule_of_thumb_bandwidth(sd, n, dims))
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    for j in 0..dims {
        let col = indices.column(j);
        if col.iter().all(|v| *v == col[0]) {
            return Err(Error::ZeroVariance("predictive index"));
        }
    }
    let design = indices.clone().insert_column(0, 1.0);
    let global = least_squares(&design, target).ok().map(|(b, _)| b);
    Ok(KernelSmoother {
        indices: indices.clone(),
        targets: target.clone(),
        bandwidths,
        global,
    })
}

/// A local linear prediction and whether it used the global fallback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalPrediction {
    pub value: f64,
    pub global_fallback: bool,
}

/// Intercept of the kernel-weighted least-squares plane centred at `point`.
pub fn local_linear_predict(smoother: &KernelSmoother, point: &[f64]) -> Result<LocalPrediction> {
    let dims = smoother.bandwidths.len();
    if point.len() != dims {
        return Err(Error::DimensionMismatch {
            context: "query point length",
            expected: dims,
            actual: point.len(),
        });
    }
    if point.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "query point",
            row: 0,
            col: 0,
        });
    }
    let m = dims + 1;
    let mut gram = Matrix::zeros(m, m);
    let mut rhs = Vector::zeros(m);
    let mut mass = 0.0;
    let mut z = Vector::zeros(m);
    z[0] = 1.0;
    for i in 0..smoother.indices.nrows() {
        let mut expo = 0.0;
        for j in 0..dims {
            let d = smoother.indices[(i, j)] - point[j];
            z[j + 1] = d;
            let u = d / smoother.bandwidths[j];
            expo += u * u;
        }
        let w = libm::exp(-0.5 * expo);
        if w == 0.0 {
            continue;
        }
        mass += w;
        gram.ger(w, &z, &z, 1.0);
        rhs.axpy(w * smoother.targets[i], &z, 1.0);
    }
    if mass >= MIN_KERNEL_MASS {
        if let Some(chol) = gram.clone().cholesky() {
            let diag_max = gram.diagonal().amax();
            let pivot_min = chol.l().diagonal().iter().fold(f64::INFINITY, |a, v| a.min(*v));
            if pivot_min * pivot_min > 1e-12 * diag_max {
                let beta = chol.solve(&rhs);
                return Ok(LocalPrediction {
                    value: beta[0],
                    global_fallback: false,
                });
            }
        }
    }
    let value = match &smoother.global {
        Some(beta) => beta[0] + (0..dims).map(|j| beta[j + 1] * point[j]).sum::<f64>(),
        None => smoother.targets.mean(),
    };
    Ok(LocalPrediction {
        value,
        global_fallback: true,
    })
}

impl Forecaster for KernelSmoother {
    fn predict(&self, regressors: &[f64]) -> f64 {
        local_linear_predict(self, regressors)
            .map(|p| p.value)
            .unwrap_or(f64::NAN)
    }
}
