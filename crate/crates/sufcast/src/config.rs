//! Command-line arguments and the run configuration echoed into reports.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sufcast_core::forecast::Bandwidth;
use sufcast_core::pipeline::{Method, NumFactors, NumIndices, PipelineConfig};
use sufcast_core::simlab::Dgp;

use crate::error::AppError;

/// A count given on the command line as a number or `auto`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Count {
    Auto,
    Fixed(usize),
}

impl FromStr for Count {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Count::Auto);
        }
        s.parse()
            .map(Count::Fixed)
            .map_err(|_| format!("expected a positive count or 'auto', got '{s}'"))
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Count::Auto => f.write_str("auto"),
            Count::Fixed(n) => write!(f, "{n}"),
        }
    }
}

impl From<Count> for String {
    fn from(c: Count) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for Count {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

#[derive(Debug, Parser)]
#[command(name = "sufcast", version, about = "Sufficient forecasting with factor models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a simulation study and write its summary table.
    Simulate(SimulateArgs),
    /// Fit the forecasting pipeline on a CSV panel and evaluate it.
    Forecast(DataArgs),
    /// Estimate factors from a CSV panel.
    Factors(DataArgs),
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Number of factors, or `auto` for the eigenvalue-ratio rule.
    #[arg(long, default_value = "auto")]
    pub factors: Count,
    /// Number of slices of the target.
    #[arg(long, default_value_t = 10)]
    pub slices: usize,
    /// Number of predictive indices, or `auto` for the sequential test.
    #[arg(long, default_value = "auto")]
    pub indices: Count,
    /// pcr, pc1, sf1, sf2 or sfi.
    #[arg(long, default_value = "sf1")]
    pub method: String,
    /// Multiplier of the rule-of-thumb bandwidth (sf2).
    #[arg(long = "bandwidth-mult", default_value_t = 1.0)]
    pub bandwidth_mult: f64,
    /// Share of the sample used before the first out-of-sample forecast.
    #[arg(long = "train-frac", default_value_t = 0.5)]
    pub train_frac: f64,
    /// Refit the pipeline every this many out-of-sample periods.
    #[arg(long = "refit-every", default_value_t = 1)]
    pub refit_every: usize,
    /// Level of the index-count test.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report path; tables are written next to it as CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV panel, one row per period.
    #[arg(long)]
    pub input: PathBuf,
    /// Name of the target column.
    #[arg(long)]
    pub target: String,
    /// Loading covariates (one row per series); switches to projected PCA.
    #[arg(long)]
    pub covariates: Option<PathBuf>,
    /// Minimum number of periods accepted from the CSV.
    #[arg(long = "min-periods", default_value_t = 20)]
    pub min_periods: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// linear_41, interaction_42, semiparametric_43 or null_independent.
    #[arg(long, default_value = "linear_41")]
    pub dgp: String,
    #[arg(long, default_value_t = 100)]
    pub p: usize,
    #[arg(long, default_value_t = 100)]
    pub t: usize,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Write replication 0's panel to this CSV.
    #[arg(long = "emit-panel")]
    pub emit_panel: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Everything a run depends on, as written into its report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: String,
    pub num_factors: Count,
    pub num_slices: usize,
    pub num_indices: Count,
    pub method: String,
    pub bandwidth_multiplier: f64,
    pub train_fraction: f64,
    pub refit_every: usize,
    pub alpha: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariates: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_periods: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dgp: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    pub output: String,
}

impl RunConfig {
    fn from_common(subcommand: &str, c: &CommonArgs) -> Self {
        Self {
            subcommand: subcommand.into(),
            num_factors: c.factors,
            num_slices: c.slices,
            num_indices: c.indices,
            method: c.method.to_ascii_lowercase(),
            bandwidth_multiplier: c.bandwidth_mult,
            train_fraction: c.train_frac,
            refit_every: c.refit_every,
            alpha: c.alpha,
            seed: c.seed,
            reps: None,
            input: None,
            target: None,
            covariates: None,
            min_periods: None,
            dgp: None,
            p: None,
            t: None,
            output: c.out.display().to_string(),
        }
    }

    pub fn from_data(subcommand: &str, a: &DataArgs) -> Self {
        Self {
            input: Some(a.input.display().to_string()),
            target: Some(a.target.clone()),
            covariates: a.covariates.as_ref().map(|p| p.display().to_string()),
            min_periods: Some(a.min_periods),
            ..Self::from_common(subcommand, &a.common)
        }
    }

    pub fn from_simulate(a: &SimulateArgs) -> Self {
        Self {
            reps: Some(a.reps),
            dgp: Some(a.dgp.to_ascii_lowercase()),
            p: Some(a.p),
            t: Some(a.t),
            ..Self::from_common("simulate", &a.common)
        }
    }

    pub fn method(&self) -> Result<Method, AppError> {
        let m: Method = self
            .method
            .parse()
            .map_err(|_| AppError::Config(format!("unknown method '{}'", self.method)))?;
        if m == Method::Pcri && self.subcommand != "simulate" {
            return Err(AppError::Config("pcri is only available to simulate".into()));
        }
        Ok(m)
    }

    pub fn dgp(&self) -> Result<Dgp, AppError> {
        let name = self.dgp.as_deref().unwrap_or("linear_41");
        name.parse()
            .map_err(|_| AppError::Config(format!("unknown design '{name}'")))
    }

    /// Pipeline configuration; rejects inconsistent settings.
    pub fn pipeline(&self) -> Result<PipelineConfig, AppError> {
        let method = self.method()?;
        if !(self.bandwidth_multiplier.is_finite() && self.bandwidth_multiplier > 0.0) {
            return Err(AppError::Config("bandwidth multiplier must be positive".into()));
        }
        let config = PipelineConfig {
            num_factors: match self.num_factors {
                Count::Auto => NumFactors::Auto { kmax: None },
                Count::Fixed(k) => NumFactors::Fixed(k),
            },
            num_slices: self.num_slices,
            num_indices: match self.num_indices {
                Count::Auto => NumIndices::Auto { alpha: self.alpha },
                Count::Fixed(l) => NumIndices::Fixed(l),
            },
            method,
            bandwidth: Bandwidth::RuleOfThumb {
                multiplier: self.bandwidth_multiplier,
            },
            train_fraction: self.train_fraction,
            refit_every: self.refit_every,
        };
        config.validate().map_err(|e| AppError::Config(e.to_string()))?;
        Ok(config)
    }
}
