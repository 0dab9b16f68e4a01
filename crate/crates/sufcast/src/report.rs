//! TOML reports.
//!
//! Every report starts with `schema` and embeds the `[config]` it was run
//! with. Field layout per kind:
//!
//! `sufcast.forecast.v1`
//! - `[data]` input, target, series, periods, projected
//! - `[factors]` k, auto, eigenvalues, ratios (`nan` excluded, `inf` rank boundary)
//! - `[slices]` requested, effective, size
//! - `[indices]` l, selected, auto, `[[indices.tests]]` l, statistic, critical
//! - `[sdr]` eigenvalues of the sliced covariance, psi (`L` rows of length
//!   `K`), xi (`L` rows of length `p`)
//! - `[result]` method, r2_in, r2_oos, split_index, failures
//! - `[forecasts]` period, actual, forecast (equal lengths)
//! - `warnings`
//!
//! `sufcast.simulate.v1`
//! - `[design]` dgp, p, t, k, reps, failures, sigma_y, ar_factor
//! - `[[columns]]` name, median, sd, count
//!
//! `sufcast.factors.v1`
//! - `[data]`, `[factors]` as above, `warnings`
//!
//! Tables are also written as CSV next to the report.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::AppError;

pub const FORECAST_SCHEMA: &str = "sufcast.forecast.v1";
pub const SIMULATE_SCHEMA: &str = "sufcast.simulate.v1";
pub const FACTORS_SCHEMA: &str = "sufcast.factors.v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSummary {
    pub input: String,
    pub target: String,
    pub series: usize,
    pub periods: usize,
    pub projected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSummary {
    pub k: usize,
    pub auto: bool,
    /// Leading eigenvalues of the (projected) panel Gram, divided by `T`.
    pub eigenvalues: Vec<f64>,
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceSummary {
    pub requested: usize,
    pub effective: usize,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexTest {
    pub l: usize,
    pub statistic: f64,
    pub critical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexSummary {
    /// Indices used by the directions below.
    pub l: usize,
    /// Count chosen by the configuration (fixed value or test result).
    pub selected: usize,
    pub auto: bool,
    #[serde(default)]
    pub tests: Vec<IndexTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdrSummary {
    pub eigenvalues: Vec<f64>,
    pub psi: Vec<Vec<f64>>,
    pub xi: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultSummary {
    pub method: String,
    pub r2_in: f64,
    pub r2_oos: f64,
    pub split_index: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastTable {
    pub period: Vec<usize>,
    pub actual: Vec<f64>,
    pub forecast: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastReport {
    pub schema: String,
    pub warnings: Vec<String>,
    pub config: RunConfig,
    pub data: DataSummary,
    pub factors: FactorSummary,
    pub slices: SliceSummary,
    pub indices: IndexSummary,
    pub sdr: SdrSummary,
    pub result: ResultSummary,
    pub forecasts: ForecastTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSummary {
    pub dgp: String,
    pub p: usize,
    pub t: usize,
    pub k: usize,
    pub reps: usize,
    pub failures: usize,
    pub sigma_y: f64,
    pub ar_factor: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnRow {
    pub name: String,
    pub median: f64,
    pub sd: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateReport {
    pub schema: String,
    pub config: RunConfig,
    pub design: DesignSummary,
    pub columns: Vec<ColumnRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorsReport {
    pub schema: String,
    pub warnings: Vec<String>,
    pub config: RunConfig,
    pub data: DataSummary,
    pub factors: FactorSummary,
}

pub fn to_toml<T: Serialize>(report: &T) -> Result<String, AppError> {
    toml::to_string(report).map_err(|e| AppError::Report(e.to_string()))
}

fn check(cond: bool, msg: &str) -> Result<(), AppError> {
    if cond {
        Ok(())
    } else {
        Err(AppError::Report(msg.to_string()))
    }
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, AppError> {
    toml::from_str(text).map_err(|e| AppError::Report(e.to_string()))
}

fn check_factors(f: &FactorSummary) -> Result<(), AppError> {
    check(f.k >= 1, "factor count must be positive")?;
    check(
        f.eigenvalues.windows(2).all(|w| w[0] >= w[1]),
        "eigenvalues must be descending",
    )
}

pub fn validate_forecast_report(text: &str) -> Result<ForecastReport, AppError> {
    let r: ForecastReport = parse(text)?;
    check(r.schema == FORECAST_SCHEMA, "unexpected schema")?;
    check(r.config.subcommand == "forecast", "config is not a forecast run")?;
    check_factors(&r.factors)?;
    let k = r.factors.k;
    check(r.indices.l <= k, "more indices than factors")?;
    check(r.sdr.psi.len() == r.indices.l, "psi must have L rows")?;
    check(r.sdr.xi.len() == r.indices.l, "xi must have L rows")?;
    check(r.sdr.psi.iter().all(|v| v.len() == k), "psi rows must have K entries")?;
    check(
        r.sdr.xi.iter().all(|v| v.len() == r.data.series),
        "xi rows must have p entries",
    )?;
    check(r.sdr.eigenvalues.len() == k || r.indices.l == 0, "sliced covariance is K x K")?;
    check(
        r.slices.effective <= r.slices.requested && r.slices.effective >= 2,
        "slice counts are inconsistent",
    )?;
    check(r.result.r2_in <= 1.0 + 1e-12, "in-sample R² exceeds 1")?;
    check(r.result.r2_oos <= 1.0 + 1e-12, "out-of-sample R² exceeds 1")?;
    let n = r.forecasts.period.len();
    check(
        r.forecasts.actual.len() == n && r.forecasts.forecast.len() == n,
        "forecast columns differ in length",
    )?;
    check(
        n + r.result.split_index == r.data.periods,
        "forecasts must cover split..T",
    )?;
    Ok(r)
}

pub fn validate_simulate_report(text: &str) -> Result<SimulateReport, AppError> {
    let r: SimulateReport = parse(text)?;
    check(r.schema == SIMULATE_SCHEMA, "unexpected schema")?;
    check(r.design.reps >= 1, "at least one replication")?;
    check(r.design.failures <= r.design.reps, "more failures than replications")?;
    check(r.design.ar_factor.len() == r.design.k, "one AR coefficient per factor")?;
    check(
        r.columns.iter().all(|c| c.count + r.design.failures <= r.design.reps),
        "column counts exceed replications",
    )?;
    Ok(r)
}

pub fn validate_factors_report(text: &str) -> Result<FactorsReport, AppError> {
    let r: FactorsReport = parse(text)?;
    check(r.schema == FACTORS_SCHEMA, "unexpected schema")?;
    check_factors(&r.factors)?;
    Ok(r)
}
