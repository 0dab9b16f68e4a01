//! Subcommand drivers.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sufcast_core::pipeline::{
    evaluate_methods, factor_stage, fit_pipeline, sdr_stage, FactorSource, FactorStage, Method,
    PipelineConfig,
};
use sufcast_core::sieve::{build_sieve_basis, default_num_basis, SieveProjector, DEFAULT_DEGREE};
use sufcast_core::simlab::{self, RepMetrics, SimConfig, StudySpec, SummaryTable};
use sufcast_core::sir::select_num_indices;
use sufcast_core::Result as CoreResult;

use crate::config::{Count, RunConfig};
use crate::csv_io::{load_covariates, load_csv, write_panel_csv, LoadOptions, LoadedPanel};
use crate::error::{stage, AppError};
use crate::report::*;

/// Path of a CSV table written next to `out`, e.g. `run.toml` ->
/// `run.forecasts.csv`.
pub fn table_path(out: &Path, table: &str) -> PathBuf {
    out.with_extension(format!("{table}.csv"))
}

fn write_file(path: &Path, text: &str) -> Result<(), AppError> {
    fs::write(path, text).map_err(|source| AppError::Write {
        path: path.display().to_string(),
        source,
    })
}

fn load(cfg: &RunConfig) -> Result<LoadedPanel, AppError> {
    let input = cfg.input.as_deref().ok_or_else(|| AppError::Config("missing input".into()))?;
    let target = cfg.target.clone().ok_or_else(|| AppError::Config("missing target".into()))?;
    let options = LoadOptions {
        min_periods: cfg.min_periods.unwrap_or(20),
        ..LoadOptions::new(target)
    };
    Ok(load_csv(input, &options)?)
}

fn projector(cfg: &RunConfig, loaded: &LoadedPanel) -> Result<Option<SieveProjector>, AppError> {
    let Some(path) = &cfg.covariates else {
        return Ok(None);
    };
    let cov = load_covariates(path, &loaded.series)?;
    let p = loaded.panel.num_series();
    let basis = build_sieve_basis(&cov, default_num_basis(p, DEFAULT_DEGREE), DEFAULT_DEGREE)
        .map_err(stage("sieve"))?;
    Ok(Some(SieveProjector::new(&basis).map_err(stage("sieve"))?))
}

fn data_summary(cfg: &RunConfig, loaded: &LoadedPanel) -> DataSummary {
    DataSummary {
        input: cfg.input.clone().unwrap_or_default(),
        target: loaded.target_name.clone(),
        series: loaded.panel.num_series(),
        periods: loaded.panel.num_periods(),
        projected: cfg.covariates.is_some(),
    }
}

fn factor_summary(cfg: &RunConfig, stage: &FactorStage) -> FactorSummary {
    FactorSummary {
        k: stage.fit().num_factors(),
        auto: cfg.num_factors == Count::Auto,
        eigenvalues: stage.fit().eigenvalues().to_vec(),
        ratios: stage
            .factor_count()
            .map(|c| c.ratios.iter().map(|r| r.unwrap_or(f64::NAN)).collect())
            .unwrap_or_default(),
    }
}

fn rows(m: &sufcast_core::Matrix) -> Vec<Vec<f64>> {
    m.column_iter().map(|c| c.iter().copied().collect()).collect()
}

pub fn run_forecast(cfg: &RunConfig) -> Result<ForecastReport, AppError> {
    let pipeline = cfg.pipeline()?;
    let method = pipeline.method;
    let loaded = load(cfg)?;
    let panel = &loaded.panel;
    let projector = projector(cfg, &loaded)?;
    let source = match &projector {
        Some(p) => FactorSource::Projected(p),
        None => FactorSource::Pca,
    };
    let mut warnings = Vec::new();

    let stage_fit = factor_stage(panel, source, pipeline.num_factors).map_err(stage("factors"))?;
    warnings.extend(stage_fit.warnings().iter().map(|w| w.to_string()));
    let fit = stage_fit.fit();
    let k = fit.num_factors();

    let needed = method.indices_needed().max(1);
    let sdr = match sdr_stage(fit, panel.target(), &pipeline, needed) {
        Ok(s) => s,
        Err(e) if method.indices_needed() == 0 => {
            warnings.push(format!("directions not estimated: {e}"));
            return finish_without_sdr(cfg, &pipeline, &loaded, source, &stage_fit, warnings);
        }
        Err(e) => return Err(stage("sdr")(e)),
    };
    warnings.extend(sdr.slices.warnings().iter().map(|w| w.to_string()));
    warnings.extend(sdr.basis.warnings().iter().map(|w| w.to_string()));
    let tests = if k >= 2 {
        match select_num_indices(
            &sdr.covariance,
            panel.num_periods(),
            sdr.slices.num_slices(),
            cfg.alpha,
        ) {
            Ok(count) => {
                warnings.extend(count.warnings.iter().map(|w| w.to_string()));
                count
                    .tests
                    .iter()
                    .map(|&(l, statistic, critical)| IndexTest { l, statistic, critical })
                    .collect()
            }
            Err(e) => {
                warnings.push(format!("index test skipped: {e}"));
                Vec::new()
            }
        }
    } else {
        Vec::new()
    };

    fit_pipeline(panel, source, &pipeline, &[method]).map_err(stage("model"))?;
    let eval = evaluate_methods(panel, source, &pipeline, &[method])
        .map_err(stage("evaluation"))?
        .remove(0);
    if eval.failures > 0 {
        warnings.push(format!(
            "{} out-of-sample steps fell back to the training mean",
            eval.failures
        ));
    }

    Ok(ForecastReport {
        schema: FORECAST_SCHEMA.into(),
        warnings,
        config: cfg.clone(),
        data: data_summary(cfg, &loaded),
        factors: factor_summary(cfg, &stage_fit),
        slices: SliceSummary {
            requested: sdr.slices.requested_slices(),
            effective: sdr.slices.num_slices(),
            size: sdr.slices.slice_size(),
        },
        indices: IndexSummary {
            l: sdr.basis.num_indices(),
            selected: sdr.selected,
            auto: cfg.num_indices == Count::Auto,
            tests,
        },
        sdr: SdrSummary {
            eigenvalues: sdr.basis.all_eigenvalues().to_vec(),
            psi: rows(sdr.basis.directions()),
            xi: rows(sdr.basis.predictor_directions()),
        },
        result: result_summary(method, &eval),
        forecasts: ForecastTable {
            period: (eval.split_index..panel.num_periods()).collect(),
            actual: eval.actuals.clone(),
            forecast: eval.forecasts.clone(),
        },
    })
}

fn result_summary(method: Method, eval: &sufcast_core::EvalReport) -> ResultSummary {
    ResultSummary {
        method: method.to_string(),
        r2_in: eval.r2_in,
        r2_oos: eval.r2_oos,
        split_index: eval.split_index,
        failures: eval.failures,
    }
}

fn finish_without_sdr(
    cfg: &RunConfig,
    pipeline: &PipelineConfig,
    loaded: &LoadedPanel,
    source: FactorSource<'_>,
    stage_fit: &FactorStage,
    warnings: Vec<String>,
) -> Result<ForecastReport, AppError> {
    let panel = &loaded.panel;
    let eval = evaluate_methods(panel, source, pipeline, &[pipeline.method])
        .map_err(stage("evaluation"))?
        .remove(0);
    Ok(ForecastReport {
        schema: FORECAST_SCHEMA.into(),
        warnings,
        config: cfg.clone(),
        data: data_summary(cfg, loaded),
        factors: factor_summary(cfg, stage_fit),
        slices: SliceSummary {
            requested: pipeline.num_slices,
            effective: pipeline.num_slices,
            size: 0,
        },
        indices: IndexSummary {
            l: 0,
            selected: 0,
            auto: cfg.num_indices == Count::Auto,
            tests: Vec::new(),
        },
        sdr: SdrSummary {
            eigenvalues: Vec::new(),
            psi: Vec::new(),
            xi: Vec::new(),
        },
        result: result_summary(pipeline.method, &eval),
        forecasts: ForecastTable {
            period: (eval.split_index..panel.num_periods()).collect(),
            actual: eval.actuals.clone(),
            forecast: eval.forecasts.clone(),
        },
    })
}

pub fn run_factors(cfg: &RunConfig) -> Result<(FactorsReport, String), AppError> {
    let pipeline = cfg.pipeline()?;
    let loaded = load(cfg)?;
    let projector = projector(cfg, &loaded)?;
    let source = match &projector {
        Some(p) => FactorSource::Projected(p),
        None => FactorSource::Pca,
    };
    let stage_fit =
        factor_stage(&loaded.panel, source, pipeline.num_factors).map_err(stage("factors"))?;
    let f = stage_fit.fit().factors();
    let mut table = String::from("period");
    for j in 0..f.ncols() {
        table.push_str(&format!(",f{}", j + 1));
    }
    table.push('\n');
    for s in 0..f.nrows() {
        let label = loaded
            .time_labels
            .as_ref()
            .map(|l| l[s].clone())
            .unwrap_or_else(|| s.to_string());
        table.push_str(&label);
        for j in 0..f.ncols() {
            table.push_str(&format!(",{}", f[(s, j)]));
        }
        table.push('\n');
    }
    let report = FactorsReport {
        schema: FACTORS_SCHEMA.into(),
        warnings: stage_fit.warnings().iter().map(|w| w.to_string()).collect(),
        config: cfg.clone(),
        data: data_summary(cfg, &loaded),
        factors: factor_summary(cfg, &stage_fit),
    };
    Ok((report, table))
}

/// Replications in parallel; the result equals the sequential
/// [`simlab::run_replications`].
pub fn parallel_replications(config: &SimConfig, study: &StudySpec) -> CoreResult<SummaryTable> {
    config.validate()?;
    if config.reps == 0 {
        return Err(sufcast_core::Error::InvalidArgument(
            "at least one replication is required".into(),
        ));
    }
    let results: Vec<CoreResult<RepMetrics>> = (0..config.reps)
        .into_par_iter()
        .map(|rep| simlab::replicate(config, study, rep))
        .collect();
    Ok(simlab::summarize(config, &results))
}

pub fn simulation_config(cfg: &RunConfig) -> Result<(SimConfig, StudySpec), AppError> {
    let dgp = cfg.dgp()?;
    let (p, t) = (cfg.p.unwrap_or(100), cfg.t.unwrap_or(100));
    let mut sim = SimConfig::new(dgp, p, t, cfg.seed);
    sim.reps = cfg.reps.unwrap_or(1);
    sim.validate().map_err(|e| AppError::Config(e.to_string()))?;
    if sim.reps == 0 {
        return Err(AppError::Config("at least one replication is required".into()));
    }
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) || cfg.refit_every == 0 {
        return Err(AppError::Config(
            "train fraction must lie in (0, 1) and refit interval be positive".into(),
        ));
    }
    let study = StudySpec {
        num_slices: cfg.num_slices,
        refit_every: cfg.refit_every,
        train_fraction: cfg.train_fraction,
        bandwidth_multiplier: cfg.bandwidth_multiplier,
        alpha: cfg.alpha,
    };
    Ok((sim, study))
}

pub fn run_simulate(cfg: &RunConfig) -> Result<SimulateReport, AppError> {
    let (sim, study) = simulation_config(cfg)?;
    let table = parallel_replications(&sim, &study).map_err(stage("simulation"))?;
    Ok(SimulateReport {
        schema: SIMULATE_SCHEMA.into(),
        config: cfg.clone(),
        design: DesignSummary {
            dgp: sim.dgp.to_string(),
            p: sim.p,
            t: sim.t,
            k: sim.k,
            reps: table.reps,
            failures: table.failures,
            sigma_y: sim.sigma_y,
            ar_factor: sim.ar_factor.clone(),
        },
        columns: table
            .columns
            .iter()
            .map(|c| ColumnRow {
                name: c.name.clone(),
                median: c.median,
                sd: c.sd,
                count: c.count,
            })
            .collect(),
    })
}

/// Replication 0 of the configured design as a loadable panel.
pub fn simulated_panel(cfg: &RunConfig) -> Result<LoadedPanel, AppError> {
    let (sim, _) = simulation_config(cfg)?;
    let draw = simlab::generate(&sim, 0).map_err(stage("simulation"))?;
    Ok(LoadedPanel {
        series: (1..=sim.p).map(|i| format!("x{i}")).collect(),
        target_name: "y".into(),
        time_labels: Some((1..=sim.t).map(|s| s.to_string()).collect()),
        panel: draw.panel,
    })
}

/// Run a subcommand and write its report and tables.
pub fn execute(cfg: &RunConfig, emit_panel: Option<&Path>) -> Result<(), AppError> {
    let out = PathBuf::from(&cfg.output);
    match cfg.subcommand.as_str() {
        "forecast" => {
            let report = run_forecast(cfg)?;
            let mut csv = String::from("period,actual,forecast\n");
            for i in 0..report.forecasts.period.len() {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    report.forecasts.period[i], report.forecasts.actual[i], report.forecasts.forecast[i]
                ));
            }
            write_file(&out, &to_toml(&report)?)?;
            write_file(&table_path(&out, "forecasts"), &csv)?;
        }
        "factors" => {
            let (report, table) = run_factors(cfg)?;
            write_file(&out, &to_toml(&report)?)?;
            write_file(&table_path(&out, "factors"), &table)?;
        }
        "simulate" => {
            if let Some(path) = emit_panel {
                write_panel_csv(path, &simulated_panel(cfg)?)?;
            }
            let report = run_simulate(cfg)?;
            let mut csv = String::from("name,median,sd,count\n");
            for c in &report.columns {
                csv.push_str(&format!("{},{},{},{}\n", c.name, c.median, c.sd, c.count));
            }
            write_file(&out, &to_toml(&report)?)?;
            write_file(&table_path(&out, "summary"), &csv)?;
        }
        other => return Err(AppError::Config(format!("unknown subcommand '{other}'"))),
    }
    Ok(())
}
