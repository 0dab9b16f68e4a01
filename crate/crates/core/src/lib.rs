//! Sufficient forecasting with high-dimensional factor models.
//!
//! The crate is `no_std` (with `alloc`) and holds the numerical pipeline:
//!
//! - [`factor`]: panel centering, least-squares PCA factor extraction, the
//!   loading pseudo-inverse and the eigenvalue-ratio choice of `K`.
//! - [`sieve`]: additive B-spline sieve on loading covariates and projected PCA.
//! - [`sir`]: target slicing, sliced covariance of the factors (both the
//!   factor form and the loading form), SDR directions and predictive indices.
//! - [`forecast`]: linear forecasters (PCR, PC1, SF(1), SFi), the local linear
//!   smoother used by SF(2), and R² metrics.
//! - [`pipeline`]: end-to-end fitting and the recursive out-of-sample evaluator.
//! - [`simlab`]: simulation designs, the identification rotation, subspace
//!   metrics and the replication driver.
//!
//! IO, reports and the command line live in the companion `sufcast` crate.

#![no_std]

extern crate alloc;

pub mod error;
pub mod factor;
pub mod forecast;
pub mod linalg;
pub mod pipeline;
pub mod sieve;
pub mod simlab;
pub mod sir;
pub mod stats;
pub mod warning;

pub use error::{Error, Result};
pub use factor::{
    center_panel, estimate_factors, loading_pseudoinverse, select_num_factors, DataPanel,
    FactorCount, FactorFit,
};
pub use forecast::{
    fit_linear_forecast, in_sample_r2, local_linear_fit, local_linear_predict, out_of_sample_r2,
    pcr_coefficients, Bandwidth, EvalReport, Forecaster, KernelSmoother, LinearForecast,
    RegressorSpec,
};
pub use pipeline::{Method, NumFactors, NumIndices, PipelineConfig};
pub use sieve::{build_sieve_basis, project_panel, projected_factors, SieveBasis, SieveProjector};
pub use sir::{
    assign_slices, predictive_indices, sdr_directions, select_num_indices,
    sliced_covariance_factors, sliced_covariance_loadings, CovarianceSource, SdrBasis,
    SliceAssignment, SlicedCovariance,
};
pub use warning::Warning;

/// Dense column-major matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense column vector.
pub type Vector = nalgebra::DVector<f64>;
