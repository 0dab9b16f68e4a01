//! End-to-end sufficient forecasting and the recursive out-of-sample scheme.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::factor::{
    center_panel, default_kmax, estimate_factors, loading_pseudoinverse, select_num_factors,
    DataPanel, FactorCount, FactorFit,
};
use crate::forecast::{
    fit_linear_forecast, local_linear_fit, oos_r2, r_squared, Bandwidth, EvalReport, Forecaster,
    KernelSmoother, LinearForecast, RegressorSpec,
};
use crate::sieve::{project_with, SieveProjector};
use crate::sir::{
    assign_slices, sdr_directions, select_num_indices, sliced_covariance_factors, SdrBasis,
    SliceAssignment, SlicedCovariance,
};
use crate::warning::Warning;
use crate::{Matrix, Vector};

/// Forecasting method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// OLS on all estimated factors.
    Pcr,
    /// OLS on the first estimated factor.
    Pc1,
    /// OLS on the first predictive index.
    Sf1,
    /// Local linear regression on the first two predictive indices.
    Sf2,
    /// OLS on two predictive indices and their product.
    Sfi,
    /// OLS on all factors plus the product of the first two.
    Pcri,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Pcr,
        Method::Pc1,
        Method::Sf1,
        Method::Sf2,
        Method::Sfi,
        Method::Pcri,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pcr => "pcr",
            Method::Pc1 => "pc1",
            Method::Sf1 => "sf1",
            Method::Sf2 => "sf2",
            Method::Sfi => "sfi",
            Method::Pcri => "pcri",
        }
    }

    /// Number of predictive indices the method regresses on.
    pub fn indices_needed(self) -> usize {
        match self {
            Method::Sf1 => 1,
            Method::Sf2 | Method::Sfi => 2,
            _ => 0,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid(alloc::format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NumFactors {
    Fixed(usize),
    /// Eigenvalue-ratio rule; `None` uses the default `kmax`.
    Auto { kmax: Option<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NumIndices {
    Fixed(usize),
    /// Sequential chi-square test at level `alpha`.
    Auto { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub num_factors: NumFactors,
    pub num_slices: usize,
    pub num_indices: NumIndices,
    pub method: Method,
    pub bandwidth: Bandwidth,
    /// Share of the sample before the first out-of-sample forecast.
    pub train_fraction: f64,
    /// Refit the whole pipeline every this many out-of-sample steps.
    pub refit_every: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            num_factors: NumFactors::Auto { kmax: None },
            num_slices: 10,
            num_indices: NumIndices::Auto { alpha: 0.05 },
            method: Method::Sf1,
            bandwidth: Bandwidth::default(),
            train_fraction: 0.5,
            refit_every: 1,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(invalid("train fraction must lie in (0, 1)"));
        }
        if self.num_slices < 2 {
            return Err(invalid("at least 2 slices are required"));
        }
        if self.refit_every == 0 {
            return Err(invalid("refit interval must be at least 1"));
        }
        if let NumFactors::Fixed(0) = self.num_factors {
            return Err(invalid("number of factors must be positive"));
        }
        if let NumIndices::Fixed(l) = self.num_indices {
            if l == 0 {
                return Err(invalid("number of indices must be positive"));
            }
            if l < self.method.indices_needed() {
                return Err(invalid(alloc::format!(
                    "method {} needs at least {} indices, got {l}",
                    self.method,
                    self.method.indices_needed()
                )));
            }
        }
        if let NumIndices::Auto { alpha } = self.num_indices {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(invalid("significance level must lie in (0, 1)"));
            }
        }
        Ok(())
    }
}

/// Where the factors come from.
#[derive(Debug, Clone, Copy)]
pub enum FactorSource<'a> {
    /// Least-squares PCA on the centered panel.
    Pca,
    /// PCA on the sieve-projected centered panel.
    Projected(&'a SieveProjector),
    /// Factors (`T x K`) and loadings (`p x K`) supplied by the caller.
    Known {
        factors: &'a Matrix,
        loadings: &'a Matrix,
    },
}

/// Factor extraction on one estimation window.
#[derive(Debug, Clone)]
pub struct FactorStage {
    means: Vector,
    fit: FactorFit,
    /// `K x p` map from a centered predictor vector to its factor.
    map: Option<Matrix>,
    /// Known factors and their mean over the window.
    known: Option<(Matrix, Vector)>,
    count: Option<FactorCount>,
    warnings: Vec<Warning>,
}

impl FactorStage {
    pub fn fit(&self) -> &FactorFit {
        &self.fit
    }

    pub fn means(&self) -> &Vector {
        &self.means
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    /// Eigenvalue-ratio selection, when `K` was chosen automatically.
    pub fn factor_count(&self) -> Option<&FactorCount> {
        self.count.as_ref()
    }

    /// Factor for period `t` of `panel`, using this window's loadings.
    pub fn factor_at(&self, panel: &DataPanel, t: usize) -> Vector {
        match (&self.known, &self.map) {
            (Some((f, mean)), _) => f.row(t).transpose() - mean,
            (None, Some(map)) => map * (panel.predictors().column(t) - &self.means),
            (None, None) => unreachable!("factor stage without a map"),
        }
    }
}

pub fn factor_stage(
    window: &DataPanel,
    source: FactorSource<'_>,
    num_factors: NumFactors,
) -> Result<FactorStage> {
    let n = window.num_periods();
    let mut warnings = Vec::new();
    if let FactorSource::Known { factors, loadings } = source {
        let k = factors.ncols();
        if factors.nrows() < n || loadings.nrows() != window.num_series() {
            return Err(Error::DimensionMismatch {
                context: "known factors vs panel",
                expected: n,
                actual: factors.nrows(),
            });
        }
        let mut f = factors.rows(0, n).into_owned();
        let mean = f.row_mean().transpose();
        for mut row in f.row_iter_mut() {
            row -= mean.transpose();
        }
        let fit = FactorFit::from_parts(f, loadings.columns(0, k).into_owned())?;
        return Ok(FactorStage {
            means: window.row_means(),
            fit,
            map: None,
            known: Some((factors.clone(), mean)),
            count: None,
            warnings,
        });
    }
    let centered = center_panel(window)?;
    let means = window.row_means();
    let (work, projector) = match source {
        FactorSource::Projected(p) => (project_with(&centered, p)?, Some(p)),
        _ => (centered, None),
    };
    let mut count = None;
    let k = match num_factors {
        NumFactors::Fixed(k) => k,
        NumFactors::Auto { kmax } => {
            let p = work.num_series();
            let kmax = kmax.unwrap_or_else(|| default_kmax(p, n));
            let kmax = kmax.min(p.min(n).saturating_sub(1)).max(1);
            let selected = select_num_factors(&work, kmax)?;
            warnings.extend(selected.warnings.iter().cloned());
            let k = selected.k;
            count = Some(selected);
            k
        }
    };
    let fit = estimate_factors(&work, k)?;
    let lambda = loading_pseudoinverse(&fit)?;
    let map = match projector {
        Some(p) => p.apply(&lambda.transpose()).transpose(),
        None => lambda,
    };
    Ok(FactorStage {
        means,
        fit,
        map: Some(map),
        known: None,
        count,
        warnings,
    })
}

/// Slicing, sliced covariance and SDR directions on one window.
#[derive(Debug, Clone)]
pub struct SdrStage {
    pub slices: SliceAssignment,
    pub covariance: SlicedCovariance,
    pub basis: SdrBasis,
    /// Number of indices chosen by the configuration (fixed or tested).
    pub selected: usize,
}

pub fn sdr_stage(
    fit: &FactorFit,
    target: &Vector,
    config: &PipelineConfig,
    needed: usize,
) -> Result<SdrStage> {
    let slices = assign_slices(target.as_slice(), config.num_slices)?;
    let covariance = sliced_covariance_factors(fit, &slices)?;
    let k = fit.num_factors();
    let selected = match config.num_indices {
        NumIndices::Fixed(l) => l,
        NumIndices::Auto { alpha } if k >= 2 => {
            select_num_indices(&covariance, target.len(), slices.num_slices(), alpha)?.l
        }
        NumIndices::Auto { .. } => 1,
    };
    let l = selected.max(needed).max(1);
    if l > k {
        return Err(invalid(alloc::format!(
            "{l} predictive indices requested from {k} factors"
        )));
    }
    let basis = sdr_directions(&covariance, fit, l)?;
    Ok(SdrStage {
        slices,
        covariance,
        basis,
        selected,
    })
}

/// A fitted forecasting model on base regressors.
#[derive(Debug, Clone)]
pub enum Model {
    Linear(LinearForecast),
    Local(KernelSmoother),
}

impl Forecaster for Model {
    fn predict(&self, regressors: &[f64]) -> f64 {
        match self {
            Model::Linear(m) => m.predict(regressors),
            Model::Local(m) => m.predict(regressors),
        }
    }
}

/// Base regressors of `method` for each row of `factors`.
pub fn method_regressors(method: Method, factors: &Matrix, sdr: Option<&SdrBasis>) -> Result<Matrix> {
    match method {
        Method::Pcr | Method::Pcri => Ok(factors.clone()),
        Method::Pc1 => Ok(factors.columns(0, 1).into_owned()),
        Method::Sf1 | Method::Sf2 | Method::Sfi => {
            let sdr = sdr.ok_or(Error::Invariant("SF method without SDR directions"))?;
            let l = method.indices_needed();
            Ok(sdr.project(factors).columns(0, l).into_owned())
        }
    }
}

fn fit_model(method: Method, regs: &Matrix, target: &Vector, bandwidth: &Bandwidth) -> Result<Model> {
    let spec = match method {
        Method::Pcr => RegressorSpec::AllFactors,
        Method::Pc1 => RegressorSpec::FirstPc,
        Method::Sf1 => RegressorSpec::Indices(1),
        Method::Sfi => RegressorSpec::IndicesWithInteraction,
        Method::Pcri => RegressorSpec::FactorsWithInteraction,
        Method::Sf2 => return Ok(Model::Local(local_linear_fit(regs, target, bandwidth)?)),
    };
    Ok(Model::Linear(fit_linear_forecast(regs, target, spec)?))
}

/// Every stage of the pipeline fitted on one window.
#[derive(Debug, Clone)]
pub struct FittedPipeline {
    pub stage: FactorStage,
    pub sdr: Option<SdrStage>,
    pub models: Vec<(Method, Model)>,
    /// In-sample R² per method on the window's `(f_t, y_{t+1})` pairs.
    pub in_sample_r2: Vec<f64>,
}

impl FittedPipeline {
    /// Forecast with the `idx`-th method from a factor vector.
    pub fn forecast(&self, idx: usize, factor: &Vector) -> Result<f64> {
        let (method, model) = &self.models[idx];
        let row = Matrix::from_row_slice(1, factor.len(), factor.as_slice());
        let regs = method_regressors(*method, &row, self.sdr.as_ref().map(|s| &s.basis))?;
        let values: Vec<f64> = regs.iter().copied().collect();
        Ok(model.predict(&values))
    }
}

pub fn fit_pipeline(
    window: &DataPanel,
    source: FactorSource<'_>,
    config: &PipelineConfig,
    methods: &[Method],
) -> Result<FittedPipeline> {
    let n = window.num_periods();
    if n < 3 {
        return Err(invalid("pipeline needs at least 3 periods"));
    }
    let stage = factor_stage(window, source, config.num_factors)?;
    let needed = methods.iter().map(|m| m.indices_needed()).max().unwrap_or(0);
    let sdr = if needed > 0 {
        Some(sdr_stage(stage.fit(), window.target(), config, needed)?)
    } else {
        None
    };
    let train = stage.fit().factors().rows(0, n - 1).into_owned();
    let response = window.target().rows(1, n - 1).into_owned();
    let mut models = Vec::with_capacity(methods.len());
    let mut in_sample_r2 = Vec::with_capacity(methods.len());
    for &method in methods {
        let regs = method_regressors(method, &train, sdr.as_ref().map(|s| &s.basis))?;
        let model = fit_model(method, &regs, &response, &config.bandwidth)?;
        let fitted: Vec<f64> = (0..regs.nrows())
            .map(|i| {
                let row: Vec<f64> = regs.row(i).iter().copied().collect();
                model.predict(&row)
            })
            .collect();
        in_sample_r2.push(r_squared(response.as_slice(), &fitted)?);
        models.push((method, model));
    }
    Ok(FittedPipeline {
        stage,
        sdr,
        models,
        in_sample_r2,
    })
}

/// Recursive forecasts of `y_s` for `s = split..T`, each from the pipeline
/// estimated on periods `0..s` (refitted every `refit_every` steps; between
/// refits the latest loadings map `x_{s-1}` to its factor).
///
/// Returns the forecasts per method and the number of failed steps, which
/// are filled with the training-window mean of the target.
pub fn recursive_forecasts(
    panel: &DataPanel,
    source: FactorSource<'_>,
    config: &PipelineConfig,
    methods: &[Method],
    split: usize,
) -> Result<Vec<(Vec<f64>, usize)>> {
    let t_total = panel.num_periods();
    if split < 3 || split >= t_total {
        return Err(invalid(alloc::format!(
            "split {split} must lie in 3..{t_total}"
        )));
    }
    let mut out: Vec<(Vec<f64>, usize)> = methods
        .iter()
        .map(|_| (Vec::with_capacity(t_total - split), 0))
        .collect();
    let mut current: Option<FittedPipeline> = None;
    for s in split..t_total {
        if (s - split) % config.refit_every == 0 || current.is_none() {
            current = fit_pipeline(&panel.window(s), source, config, methods).ok();
        }
        let fallback = panel.target().rows(0, s).mean();
        let factor = current.as_ref().map(|c| c.stage.factor_at(panel, s - 1));
        for (idx, (forecasts, failures)) in out.iter_mut().enumerate() {
            let value = match (&current, &factor) {
                (Some(fitted), Some(f)) => fitted.forecast(idx, f).ok().filter(|v| v.is_finite()),
                _ => None,
            };
            match value {
                Some(v) => forecasts.push(v),
                None => {
                    forecasts.push(fallback);
                    *failures += 1;
                }
            }
        }
    }
    Ok(out)
}

/// First out-of-sample period for a panel of `num_periods`.
pub fn split_index(num_periods: usize, train_fraction: f64) -> usize {
    libm::floor(num_periods as f64 * train_fraction) as usize
}

/// In-sample and recursive out-of-sample evaluation of several methods that
/// share the factor and SDR stages.
pub fn evaluate_methods(
    panel: &DataPanel,
    source: FactorSource<'_>,
    config: &PipelineConfig,
    methods: &[Method],
) -> Result<Vec<EvalReport>> {
    config.validate()?;
    let t = panel.num_periods();
    if t < 20 {
        return Err(invalid(alloc::format!(
            "out-of-sample evaluation needs at least 20 periods, got {t}"
        )));
    }
    let full = fit_pipeline(panel, source, config, methods)?;
    let split = split_index(t, config.train_fraction);
    let recursive = recursive_forecasts(panel, source, config, methods, split)?;
    let actuals: Vec<f64> = panel.target().rows(split, t - split).iter().copied().collect();
    recursive
        .into_iter()
        .zip(full.in_sample_r2)
        .map(|((forecasts, failures), r2_in)| {
            Ok(EvalReport {
                r2_in,
                r2_oos: oos_r2(&actuals, &forecasts)?,
                forecasts,
                actuals: actuals.clone(),
                split_index: split,
                failures,
            })
        })
        .collect()
}

/// Recursive out-of-sample R² of `config.method` with plain PCA factors.
pub fn out_of_sample_r2(config: &PipelineConfig, panel: &DataPanel) -> Result<EvalReport> {
    let mut reports = evaluate_methods(panel, FactorSource::Pca, config, &[config.method])?;
    Ok(reports.remove(0))
}
