use sufcast_core::forecast::{fit_linear_forecast, in_sample_r2, RegressorSpec};
use sufcast_core::simlab::*;
use sufcast_core::*;

#[test]
fn zero_ar_gives_iid_series() {
    let mut cfg = SimConfig::new(Dgp::Linear41, 20, 50, 1);
    cfg.ar_factor = vec![0.0; 5];
    cfg.ar_idio = vec![0.0; 20];
    let mut rng = replication_rng(3, 0);
    let path = ar1_path(&mut rng, 0.0, 50_000);
    let lag1: f64 = path.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / 50_000.0;
    assert!(lag1.abs() < 0.02);
    assert!(generate(&cfg, 0).is_ok());
}

#[test]
fn half_ar_variance_is_four_thirds() {
    let mut rng = replication_rng(5, 2);
    let path = ar1_path(&mut rng, 0.5, 100_000);
    let var = stats::sample_sd(&path).powi(2);
    assert!((var - 4.0 / 3.0).abs() < 2e-2);
    assert!((ar1_variance(0.5) - 4.0 / 3.0).abs() < 1e-15);
}

#[test]
fn noiseless_linear_target_is_fully_predictable() {
    let mut cfg = SimConfig::new(Dgp::Linear41, 10, 80, 4);
    cfg.sigma_y = 0.0;
    let d = generate(&cfg, 0).unwrap();
    let t = 80;
    let f = d.truth.factors.rows(0, t - 1).into_owned();
    let y = d.panel.target().rows(1, t - 1).into_owned();
    let lf = fit_linear_forecast(&f, &y, RegressorSpec::AllFactors).unwrap();
    assert!((in_sample_r2(&lf, &f, &y).unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn calibrated_noise_matches_signal_variance() {
    let cfg = SimConfig::new(Dgp::Linear41, 10, 10, 9);
    let signal = signal_variance(&cfg.phi[0], &cfg.ar_factor);
    assert!((cfg.sigma_y * cfg.sigma_y - signal).abs() < 1e-12);
}

#[test]
fn interaction_link_vanishes_on_its_zero_set() {
    let mut cfg = SimConfig::new(Dgp::Interaction42, 10, 30, 2);
    cfg.sigma_y = 0.0;
    let d = generate(&cfg, 0).unwrap();
    let f = &d.truth.factors;
    for s in 1..30 {
        let v = f[(s - 1, 0)] * (f[(s - 1, 1)] + f[(s - 1, 2)] + 1.0);
        assert!((d.panel.target()[s] - v).abs() < 1e-12);
    }
}

#[test]
fn semiparametric_loading_values() {
    assert_eq!(semiparametric_loadings(0.0), [0.0, -1.0, 0.0]);
    assert_eq!(semiparametric_loadings(1.0), [1.0, 0.0, -1.0]);
}

#[test]
fn hermite_loadings_are_orthogonal() {
    let cfg = SimConfig::new(Dgp::Semiparametric43, 100_000, 3, 8);
    let d = generate(&cfg, 0).unwrap();
    let b = &d.truth.loadings;
    let n = b.nrows() as f64;
    let mean_g2 = b.column(1).sum() / n;
    let cross = b.column(0).dot(&b.column(1)) / n;
    assert!(mean_g2.abs() < 2e-2);
    assert!(cross.abs() < 2e-2);
    assert_eq!(d.covariates.unwrap().nrows(), 100_000);
}

#[test]
fn rotation_of_normalized_model_is_identity() {
    let t = 100;
    let raw = oracle_lcg(t, 3);
    let h0 = canonical_rotation(&raw, &oracle_lcg(40, 3)).unwrap();
    let f = &raw * h0.transpose();
    let b = oracle_lcg(40, 3) * h0.clone().try_inverse().unwrap();
    let h = canonical_rotation(&f, &b).unwrap();
    assert!((h.abs() - Matrix::identity(3, 3)).abs().max() < 1e-8);
}

fn oracle_lcg(rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |i, j| ((i * 31 + j * 17 + i * j) % 23) as f64 / 23.0 - 0.5 + if i == j { 1.0 } else { 0.0 })
}

#[test]
fn singular_factors_are_rejected() {
    let f = Matrix::from_fn(20, 2, |i, _| i as f64);
    let b = Matrix::from_element(5, 2, 1.0);
    assert!(canonical_rotation(&f, &b).is_err());
}

#[test]
fn subspace_r2_examples() {
    let basis = Matrix::from_fn(3, 2, |i, j| if i == j { 1.0 } else { 0.0 });
    let e = |i: usize| Vector::from_fn(3, |r, _| if r == i { 1.0 } else { 0.0 });
    assert!((subspace_r2(&e(0), &basis).unwrap() - 1.0).abs() < 1e-15);
    assert!(subspace_r2(&e(2), &basis).unwrap().abs() < 1e-15);
    let mixed = (e(0) + e(2)) / 2f64.sqrt();
    assert!((subspace_r2(&mixed, &basis).unwrap() - 0.5).abs() < 1e-12);
    assert!(subspace_r2(&Vector::zeros(3), &basis).is_err());
}

#[test]
fn single_replication_median_is_the_value() {
    let mut cfg = SimConfig::new(Dgp::Linear41, 20, 40, 3);
    cfg.reps = 1;
    let study = StudySpec::default();
    let table = run_replications(&cfg, &study).unwrap();
    let single = replicate(&cfg, &study, 0).unwrap();
    for (name, v) in single {
        assert_eq!(table.median(&name), Some(v));
    }
}

#[test]
fn replication_tables_are_deterministic() {
    let mut cfg = SimConfig::new(Dgp::Interaction42, 20, 40, 3);
    cfg.reps = 3;
    let study = StudySpec::default();
    let a = run_replications(&cfg, &study).unwrap();
    let b = run_replications(&cfg, &study).unwrap();
    assert_eq!(a, b);
    for name in ["r2_oos_sfi", "r2_oos_pcr", "r2_oos_pcri", "r2_phi1", "r2_phi2", "r2_phi_pcr"] {
        assert!(a.column(name).is_some(), "missing {name}");
    }
}

#[test]
fn wrong_design_is_rejected() {
    let cfg = SimConfig::new(Dgp::Linear41, 10, 20, 1);
    assert!(gen_interaction_42(&cfg, 0).is_err());
    assert!(gen_linear_41(&cfg, 0).is_ok());
    assert!(gen_semiparametric_43(&cfg, 0).is_err());
}
