//! Simulation designs, the identification rotation and the replication
//! driver.
//!
//! Every design draws factors and idiosyncratic terms as stationary AR(1)
//! processes. AR coefficients are drawn once from the master seed and frozen
//! across replications; replication `r` uses its own ChaCha stream.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::factor::{center_panel, estimate_factors, DataPanel};
use crate::forecast::pcr_coefficients;
use crate::linalg::{
    inverse_sqrt_spd, largest_principal_angle, max_abs_sign, orthonormal_columns, symmetric_eigen,
};
use crate::pipeline::{evaluate_methods, fit_pipeline, FactorSource, Method, NumFactors, NumIndices, PipelineConfig};
use crate::sieve::{build_sieve_basis, default_num_basis, SieveProjector, DEFAULT_DEGREE};
use crate::sir::{assign_slices, select_num_indices, sliced_covariance_factors};
use crate::stats::{median, sample_sd};
use crate::{Matrix, Vector};

/// Simulation design.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dgp {
    /// `y_{t+1} = phi'f_t + sigma_y eps`, `K = 5`.
    Linear41,
    /// `y_{t+1} = f_1 (f_2 + f_3 + 1) + eps`, `K = 7`.
    Interaction42,
    /// Loadings `g_k(z_i)` of one observed covariate, `K = 3`, interaction target.
    Semiparametric43,
    /// Target independent of the factors, `K = 5`.
    NullIndependent,
}

impl Dgp {
    pub const ALL: [Dgp; 4] = [
        Dgp::Linear41,
        Dgp::Interaction42,
        Dgp::Semiparametric43,
        Dgp::NullIndependent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dgp::Linear41 => "linear_41",
            Dgp::Interaction42 => "interaction_42",
            Dgp::Semiparametric43 => "semiparametric_43",
            Dgp::NullIndependent => "null_independent",
        }
    }

    pub fn default_num_factors(self) -> usize {
        match self {
            Dgp::Linear41 | Dgp::NullIndependent => 5,
            Dgp::Interaction42 => 7,
            Dgp::Semiparametric43 => 3,
        }
    }
}

impl fmt::Display for Dgp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dgp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Dgp::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid(alloc::format!("unknown design '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub p: usize,
    pub t: usize,
    pub k: usize,
    pub dgp: Dgp,
    /// AR(1) coefficient of each factor.
    pub ar_factor: Vec<f64>,
    /// AR(1) coefficient of each idiosyncratic series.
    pub ar_idio: Vec<f64>,
    /// Scale of the target noise.
    pub sigma_y: f64,
    /// True index directions in the original factor coordinates.
    pub phi: Vec<Vector>,
    /// Standard deviation of the loading residual in the semiparametric design.
    pub loading_noise: f64,
    pub seed: u64,
    pub reps: usize,
}

impl SimConfig {
    /// Design defaults with AR coefficients drawn from `U[0.2, 0.8]`.
    pub fn new(dgp: Dgp, p: usize, t: usize, seed: u64) -> Self {
        let k = dgp.default_num_factors();
        let mut rng = stream_rng(seed, 0);
        let ar_factor: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..0.8)).collect();
        let ar_idio: Vec<f64> = (0..p).map(|_| rng.random_range(0.2..0.8)).collect();
        let phi = match dgp {
            Dgp::Linear41 => vec![Vector::from_vec(vec![0.8, 0.5, 0.3, 0.0, 0.0])],
            Dgp::Interaction42 | Dgp::Semiparametric43 => {
                let mut phi1 = Vector::zeros(k);
                phi1[0] = 1.0;
                let mut phi2 = Vector::zeros(k);
                phi2[1] = core::f64::consts::FRAC_1_SQRT_2;
                phi2[2] = core::f64::consts::FRAC_1_SQRT_2;
                vec![phi1, phi2]
            }
            Dgp::NullIndependent => Vec::new(),
        };
        let sigma_y = match dgp {
            Dgp::Linear41 => libm::sqrt(signal_variance(&phi[0], &ar_factor)),
            _ => 1.0,
        };
        Self {
            p,
            t,
            k,
            dgp,
            ar_factor,
            ar_idio,
            sigma_y,
            phi,
            loading_noise: 0.0,
            seed,
            reps: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.t < 3 || self.k == 0 {
            return Err(invalid("simulation needs p >= 1, T >= 3 and K >= 1"));
        }
        if self.ar_factor.len() != self.k || self.ar_idio.len() != self.p {
            return Err(invalid("AR coefficient vectors do not match K and p"));
        }
        if self
            .ar_factor
            .iter()
            .chain(&self.ar_idio)
            .any(|a| !(a.abs() < 1.0))
        {
            return Err(invalid("AR coefficients must lie in (-1, 1)"));
        }
        if !(self.sigma_y >= 0.0) || !(self.loading_noise >= 0.0) {
            return Err(invalid("noise scales must be non-negative"));
        }
        if matches!(self.dgp, Dgp::Interaction42 | Dgp::Semiparametric43) && self.k < 3 {
            return Err(invalid("interaction designs need at least 3 factors"));
        }
        if self.phi.iter().any(|v| v.len() != self.k) {
            return Err(invalid("direction length must equal K"));
        }
        Ok(())
    }
}

/// `Var(phi'f_t)` for independent stationary AR(1) factors with unit
/// innovations.
pub fn signal_variance(phi: &Vector, ar: &[f64]) -> f64 {
    phi.iter()
        .zip(ar)
        .map(|(c, a)| c * c * ar1_variance(*a))
        .sum()
}

/// Stationary variance `1 / (1 - a^2)` of an AR(1) with unit innovations.
pub fn ar1_variance(a: f64) -> f64 {
    1.0 / (1.0 - a * a)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// RNG of replication `rep` under master `seed`.
pub fn replication_rng(seed: u64, rep: usize) -> ChaCha20Rng {
    stream_rng(seed, rep as u64 + 1)
}

fn normal(rng: &mut ChaCha20Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// `n` periods of a stationary AR(1), started from its stationary law.
pub fn ar1_path(rng: &mut ChaCha20Rng, a: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut prev = normal(rng) * libm::sqrt(ar1_variance(a));
    out.push(prev);
    for _ in 1..n {
        prev = a * prev + normal(rng);
        out.push(prev);
    }
    out
}

/// Ground truth of one simulated panel.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueModel {
    /// `p x K`.
    pub loadings: Matrix,
    /// `T x K`, row `t` is `f_t`.
    pub factors: Matrix,
    /// `K x K` rotation `H` with `F H'` and `B H^{-1}` identified.
    pub rotation: Matrix,
    /// `K x L` orthonormal basis of the central subspace in rotated
    /// coordinates.
    pub central_basis: Matrix,
}

impl TrueModel {
    /// `F H'` (normalized factors) and `B H^{-1}` (diagonal-Gram loadings).
    pub fn rotated(&self) -> Result<(Matrix, Matrix)> {
        let inv = self
            .rotation
            .clone()
            .try_inverse()
            .ok_or(Error::Singular("rotation H"))?;
        Ok((&self.factors * self.rotation.transpose(), &self.loadings * inv))
    }
}

/// One simulated data set.
#[derive(Debug, Clone)]
pub struct SimDraw {
    pub panel: DataPanel,
    pub truth: TrueModel,
    /// `p x 1` loading covariate (semiparametric design only).
    pub covariates: Option<Matrix>,
}

/// Loading functions `(z, z^2 - 1, z^3 - 2z)` of the semiparametric design.
pub fn semiparametric_loadings(z: f64) -> [f64; 3] {
    [z, z * z - 1.0, z * z * z - 2.0 * z]
}

/// Draw replication `rep` of `config`.
pub fn generate(config: &SimConfig, rep: usize) -> Result<SimDraw> {
    config.validate()?;
    let (p, t, k) = (config.p, config.t, config.k);
    let mut rng = replication_rng(config.seed, rep);

    let mut covariates = None;
    let loadings = match config.dgp {
        Dgp::Semiparametric43 => {
            let z: Vec<f64> = (0..p).map(|_| normal(&mut rng)).collect();
            let mut b = Matrix::zeros(p, k);
            for (i, zi) in z.iter().enumerate() {
                let g = semiparametric_loadings(*zi);
                for j in 0..k {
                    let base = if j < 3 { g[j] } else { 0.0 };
                    b[(i, j)] = base;
                }
            }
            if config.loading_noise > 0.0 {
                for v in b.iter_mut() {
                    *v += config.loading_noise * normal(&mut rng);
                }
            }
            covariates = Some(Matrix::from_vec(p, 1, z));
            b
        }
        _ => Matrix::from_fn(p, k, |_, _| normal(&mut rng)),
    };

    // factors f_{-1}, f_0, ..., f_{T-1}
    let mut factors_ext = Matrix::zeros(t + 1, k);
    for j in 0..k {
        let path = ar1_path(&mut rng, config.ar_factor[j], t + 1);
        factors_ext.column_mut(j).copy_from_slice(&path);
    }
    let factors = factors_ext.rows(1, t).into_owned();
    let mut x = &loadings * factors.transpose();
    for i in 0..p {
        let path = ar1_path(&mut rng, config.ar_idio[i], t);
        for (s, u) in path.iter().enumerate() {
            x[(i, s)] += u;
        }
    }
    let target = Vector::from_fn(t, |s, _| {
        let f = factors_ext.row(s);
        link(config, f.iter().copied()) + config.sigma_y * normal(&mut rng)
    });

    let rotation = canonical_rotation(&factors, &loadings)?;
    let central_basis = central_basis(&rotation, &config.phi)?;
    Ok(SimDraw {
        panel: DataPanel::new(x, target)?,
        truth: TrueModel {
            loadings,
            factors,
            rotation,
            central_basis,
        },
        covariates,
    })
}

fn link(config: &SimConfig, f: impl Iterator<Item = f64>) -> f64 {
    let f: Vec<f64> = f.collect();
    match config.dgp {
        Dgp::Linear41 => config.phi[0].iter().zip(&f).map(|(a, b)| a * b).sum(),
        Dgp::Interaction42 | Dgp::Semiparametric43 => f[0] * (f[1] + f[2] + 1.0),
        Dgp::NullIndependent => 0.0,
    }
}

fn check_dgp(config: &SimConfig, want: Dgp) -> Result<()> {
    if config.dgp != want {
        return Err(invalid(alloc::format!(
            "config is for {}, not {want}",
            config.dgp
        )));
    }
    Ok(())
}

pub fn gen_linear_41(config: &SimConfig, rep: usize) -> Result<SimDraw> {
    check_dgp(config, Dgp::Linear41)?;
    generate(config, rep)
}

pub fn gen_interaction_42(config: &SimConfig, rep: usize) -> Result<SimDraw> {
    check_dgp(config, Dgp::Interaction42)?;
    generate(config, rep)
}

pub fn gen_semiparametric_43(config: &SimConfig, rep: usize) -> Result<SimDraw> {
    check_dgp(config, Dgp::Semiparametric43)?;
    generate(config, rep)
}

/// `H` with `(1/T)(F H')'(F H') = I` and `(H^{-1})' B'B H^{-1}` diagonal.
///
/// `F` is whitened by `S^{-1/2}`, `S = F'F/T`, and then rotated onto the
/// eigenvectors `E` of `S^{1/2} B'B S^{1/2}` (descending), so `H = E' S^{-1/2}`.
/// Each column of `B H^{-1}` is signed with its largest-magnitude entry
/// positive, matching the factor-extraction convention.
pub fn canonical_rotation(factors: &Matrix, loadings: &Matrix) -> Result<Matrix> {
    let t = factors.nrows() as f64;
    if factors.ncols() != loadings.ncols() {
        return Err(Error::DimensionMismatch {
            context: "factor count of loadings",
            expected: factors.ncols(),
            actual: loadings.ncols(),
        });
    }
    let s = factors.tr_mul(factors) / t;
    let (inv_sqrt, sqrt) = inverse_sqrt_spd(&s, 1e-12).ok_or(Error::Singular("F'F"))?;
    let bs = loadings * &sqrt;
    let m = bs.tr_mul(&bs);
    let (_, mut e) = symmetric_eigen(&m);
    let rotated = &bs * &e;
    for j in 0..e.ncols() {
        if max_abs_sign(rotated.column(j).iter()) < 0.0 {
            e.column_mut(j).neg_mut();
        }
    }
    Ok(e.transpose() * inv_sqrt)
}

/// Rotation `H` with `F_hat ~ F H'`: the least-squares regression of the
/// estimated factors on the demeaned true ones.
pub fn aligned_rotation(factors: &Matrix, estimated: &Matrix) -> Result<Matrix> {
    if factors.nrows() != estimated.nrows() {
        return Err(Error::DimensionMismatch {
            context: "periods of estimated factors",
            expected: factors.nrows(),
            actual: estimated.nrows(),
        });
    }
    let centered = demean_columns(factors);
    let gram = centered.tr_mul(&centered);
    let chol = gram.cholesky().ok_or(Error::Singular("F'F"))?;
    Ok(chol.solve(&centered.tr_mul(estimated)).transpose())
}

/// Subtract each column's mean.
pub fn demean_columns(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    out
}

/// Orthonormal basis of `span{(H^{-1})' phi_j}`, the central subspace in the
/// coordinates of `H f_t`.
pub fn central_basis(rotation: &Matrix, phi: &[Vector]) -> Result<Matrix> {
    let k = rotation.nrows();
    if phi.is_empty() {
        return Ok(Matrix::zeros(k, 0));
    }
    let inv = rotation
        .clone()
        .try_inverse()
        .ok_or(Error::Singular("rotation H"))?;
    let mut dirs = Matrix::zeros(k, phi.len());
    for (j, v) in phi.iter().enumerate() {
        dirs.set_column(j, &inv.tr_mul(v));
    }
    Ok(orthonormal_columns(&dirs))
}

/// Squared multiple correlation `max_{phi in span, |phi|=1} (u'phi)^2` of the
/// unit vector `u` along `estimate`: the squared norm of its projection onto
/// the orthonormal `basis`.
pub fn subspace_r2(estimate: &Vector, basis: &Matrix) -> Result<f64> {
    let norm = estimate.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(invalid("subspace R-squared of a zero estimate"));
    }
    if basis.nrows() != estimate.len() {
        return Err(Error::DimensionMismatch {
            context: "subspace basis rows",
            expected: estimate.len(),
            actual: basis.nrows(),
        });
    }
    let proj = basis.tr_mul(&(estimate / norm));
    Ok(proj.norm_squared().min(1.0))
}

/// Settings shared by all replications of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudySpec {
    pub num_slices: usize,
    pub refit_every: usize,
    pub train_fraction: f64,
    pub bandwidth_multiplier: f64,
    /// Level of the index-count test recorded for every design.
    pub alpha: f64,
}

impl Default for StudySpec {
    fn default() -> Self {
        Self {
            num_slices: 10,
            refit_every: 1,
            train_fraction: 0.5,
            bandwidth_multiplier: 1.0,
            alpha: 0.05,
        }
    }
}

/// Named metrics of one replication.
pub type RepMetrics = Vec<(String, f64)>;

fn study_config(config: &SimConfig, study: &StudySpec, indices: usize) -> PipelineConfig {
    PipelineConfig {
        num_factors: NumFactors::Fixed(config.k),
        num_slices: study.num_slices,
        num_indices: NumIndices::Fixed(indices),
        method: Method::Sf1,
        bandwidth: crate::forecast::Bandwidth::RuleOfThumb {
            multiplier: study.bandwidth_multiplier,
        },
        train_fraction: study.train_fraction,
        refit_every: study.refit_every,
    }
}

/// Methods compared for each design, in table order.
pub fn study_methods(dgp: Dgp) -> &'static [Method] {
    match dgp {
        Dgp::Linear41 | Dgp::NullIndependent => &[Method::Sf1, Method::Pcr, Method::Pc1],
        Dgp::Interaction42 => &[Method::Sfi, Method::Pcr, Method::Pcri],
        Dgp::Semiparametric43 => &[Method::Sfi],
    }
}

fn push(metrics: &mut RepMetrics, name: impl Into<String>, value: f64) {
    metrics.push((name.into(), value));
}

/// Simulate replication `rep` and compute the metrics of its design.
///
/// - `linear_41`, `null_independent`: in- and out-of-sample R² of SF(1),
///   PCR and PC1, plus `R²(phi)` of the first direction and of the PCR
///   direction (linear design) or the tested index count (null design).
/// - `interaction_42`: R² of SFi, PCR, PCRi; `R²(phi_1)`, `R²(phi_2)`,
///   `R²(phi_pcr)`; `|corr(y_{t+1}, f_it)|` per factor; the ratio of the
///   third to the second eigenvalue of the sliced covariance.
/// - `semiparametric_43`: out-of-sample R² of SFi with PCA, projected-PCA and
///   known factors.
pub fn replicate(config: &SimConfig, study: &StudySpec, rep: usize) -> Result<RepMetrics> {
    let draw = generate(config, rep)?;
    let mut metrics = RepMetrics::new();
    match config.dgp {
        Dgp::Linear41 | Dgp::NullIndependent | Dgp::Interaction42 => {
            let indices = if config.dgp == Dgp::Interaction42 { 2 } else { 1 };
            let pipeline = study_config(config, study, indices);
            let methods = study_methods(config.dgp);
            let reports = evaluate_methods(&draw.panel, FactorSource::Pca, &pipeline, methods)?;
            for (m, r) in methods.iter().zip(&reports) {
                push(&mut metrics, alloc::format!("r2_in_{m}"), r.r2_in);
            }
            for (m, r) in methods.iter().zip(&reports) {
                push(&mut metrics, alloc::format!("r2_oos_{m}"), r.r2_oos);
            }
            let full = fit_pipeline(&draw.panel, FactorSource::Pca, &pipeline, methods)?;
            let fit = full.stage.fit();
            let sdr = full.sdr.as_ref().ok_or(Error::Invariant("missing SDR stage"))?;
            let aligned = aligned_rotation(&draw.truth.factors, fit.factors())?;
            let central = &central_basis(&aligned, &config.phi)?;
            match config.dgp {
                Dgp::NullIndependent => {
                    let count = select_num_indices(
                        &sdr.covariance,
                        draw.panel.num_periods(),
                        sdr.slices.num_slices(),
                        study.alpha,
                    )?;
                    push(&mut metrics, "l_hat", count.l as f64);
                }
                _ => {
                    let pcr = pcr_coefficients(fit, draw.panel.target())?;
                    for j in 0..indices {
                        let psi = sdr.basis.directions().column(j).into_owned();
                        push(
                            &mut metrics,
                            alloc::format!("r2_phi{}", j + 1),
                            subspace_r2(&psi, central)?,
                        );
                    }
                    push(&mut metrics, "r2_phi_pcr", subspace_r2(pcr.coefficients(), central)?);
                }
            }
            if config.dgp == Dgp::Interaction42 {
                let t = draw.panel.num_periods();
                let y_next: Vec<f64> = draw.panel.target().rows(1, t - 1).iter().copied().collect();
                for j in 0..fit.num_factors() {
                    let f: Vec<f64> = fit.factors().column(j).rows(0, t - 1).iter().copied().collect();
                    push(
                        &mut metrics,
                        alloc::format!("corr_f{}", j + 1),
                        correlation(&y_next, &f).abs(),
                    );
                }
                let eig = sdr.basis.all_eigenvalues();
                push(&mut metrics, "eig_ratio_32", eig[2] / eig[1]);
            }
        }
        Dgp::Semiparametric43 => {
            let pipeline = study_config(config, study, 2);
            let methods = study_methods(config.dgp);
            let covariates = draw.covariates.as_ref().ok_or(Error::Invariant("missing covariates"))?;
            let basis = build_sieve_basis(
                covariates,
                default_num_basis(config.p, DEFAULT_DEGREE),
                DEFAULT_DEGREE,
            )?;
            let projector = SieveProjector::new(&basis)?;
            let (known_f, known_b) = draw.truth.rotated()?;
            let sources = [
                ("sf", FactorSource::Pca),
                ("sf_projpca", FactorSource::Projected(&projector)),
                (
                    "sf_knownf",
                    FactorSource::Known {
                        factors: &known_f,
                        loadings: &known_b,
                    },
                ),
            ];
            for (name, source) in sources {
                let r = evaluate_methods(&draw.panel, source, &pipeline, methods)?;
                push(&mut metrics, alloc::format!("r2_oos_{name}"), r[0].r2_oos);
            }
        }
    }
    Ok(metrics)
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / libm::sqrt(saa * sbb)
}

/// Median and standard deviation of one metric across replications.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSummary {
    pub name: String,
    pub median: f64,
    pub sd: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub dgp: Dgp,
    pub p: usize,
    pub t: usize,
    pub reps: usize,
    /// Replications that failed and were excluded.
    pub failures: usize,
    pub columns: Vec<ColumnSummary>,
}

impl SummaryTable {
    pub fn column(&self, name: &str) -> Option<&ColumnSummary> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn median(&self, name: &str) -> Option<f64> {
        self.column(name).map(|c| c.median)
    }
}

/// Aggregate per-replication results, in replication order.
pub fn summarize(config: &SimConfig, results: &[Result<RepMetrics>]) -> SummaryTable {
    let mut names: Vec<String> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    let mut failures = 0;
    for result in results {
        match result {
            Ok(metrics) => {
                for (name, v) in metrics {
                    let idx = match names.iter().position(|n| n == name) {
                        Some(i) => i,
                        None => {
                            names.push(name.clone());
                            values.push(Vec::new());
                            names.len() - 1
                        }
                    };
                    values[idx].push(*v);
                }
            }
            Err(_) => failures += 1,
        }
    }
    let columns = names
        .into_iter()
        .zip(values)
        .map(|(name, v)| ColumnSummary {
            median: median(&v),
            sd: sample_sd(&v),
            count: v.len(),
            name,
        })
        .collect();
    SummaryTable {
        dgp: config.dgp,
        p: config.p,
        t: config.t,
        reps: results.len(),
        failures,
        columns,
    }
}

/// Run `config.reps` replications sequentially and summarize them.
pub fn run_replications(config: &SimConfig, study: &StudySpec) -> Result<SummaryTable> {
    config.validate()?;
    if config.reps == 0 {
        return Err(invalid("at least one replication is required"));
    }
    let results: Vec<Result<RepMetrics>> = (0..config.reps)
        .map(|rep| replicate(config, study, rep))
        .collect();
    Ok(summarize(config, &results))
}

/// Sliced covariance of the true factors `f_t` (original coordinates) from
/// `draws` simulated periods, sliced on `y_{t+1}` with `num_slices` slices.
pub fn oracle_sliced_covariance(
    config: &SimConfig,
    draws: usize,
    num_slices: usize,
    stream: u64,
) -> Result<Matrix> {
    config.validate()?;
    let k = config.k;
    let mut rng = stream_rng(config.seed, u64::MAX - stream);
    let mut f = Matrix::zeros(draws + 1, k);
    for j in 0..k {
        let path = ar1_path(&mut rng, config.ar_factor[j], draws + 1);
        f.column_mut(j).copy_from_slice(&path);
    }
    let mut y = vec![0.0; draws + 1];
    for s in 1..=draws {
        y[s] = link(config, f.row(s - 1).iter().copied()) + config.sigma_y * normal(&mut rng);
    }
    let fit = crate::factor::FactorFit::from_parts(f, Matrix::identity(k, k))?;
    let slices = assign_slices(&y, num_slices)?;
    Ok(sliced_covariance_factors(&fit, &slices)?.matrix().clone())
}

/// Frobenius distance between the estimated sliced covariance of replication
/// `rep` and the oracle rotated into the estimate's coordinates, `H M H'`
/// with `H` from [`aligned_rotation`].
pub fn sliced_covariance_error(
    config: &SimConfig,
    rep: usize,
    num_slices: usize,
    oracle: &Matrix,
) -> Result<f64> {
    let draw = generate(config, rep)?;
    let centered = center_panel(&draw.panel)?;
    let fit = estimate_factors(&centered, config.k)?;
    let slices = assign_slices(centered.target().as_slice(), num_slices)?;
    let est = sliced_covariance_factors(&fit, &slices)?;
    let h = aligned_rotation(&draw.truth.factors, fit.factors())?;
    let target = &h * oracle * h.transpose();
    Ok((est.matrix() - target).norm())
}

/// Largest principal angle between the estimated and the true factor spans.
pub fn factor_span_angle(config: &SimConfig, rep: usize) -> Result<f64> {
    let draw = generate(config, rep)?;
    let centered = center_panel(&draw.panel)?;
    let fit = estimate_factors(&centered, config.k)?;
    Ok(largest_principal_angle(
        fit.factors(),
        &demean_columns(&draw.truth.factors),
    ))
}

impl fmt::Display for SummaryTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} p={} T={} reps={} failures={}",
            self.dgp, self.p, self.t, self.reps, self.failures
        )?;
        for c in &self.columns {
            writeln!(f, "  {:<16} median {:>9.4}  sd {:>8.4}", c.name, c.median, c.sd)?;
        }
        Ok(())
    }
}
