mod oracle;

use oracle::*;
use sufcast_core::forecast::{local_linear_fit, local_linear_predict, Bandwidth, RegressorSpec};
use sufcast_core::linalg::{leading_eigen, symmetric_eigen};
use sufcast_core::simlab::canonical_rotation;
use sufcast_core::stats::{chi_square_cdf, chi_square_quantile};
use sufcast_core::*;

fn max_diff(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).abs().max()
}

fn random_symmetric(n: usize, seed: u64) -> Matrix {
    let a = lcg_matrix(n, n, seed);
    &a * a.transpose() + Matrix::from_diagonal(&Vector::from_fn(n, |i, _| i as f64 * 0.37))
}

#[test]
fn eigen_matches_jacobi_for_small_matrices() {
    for k in 1..=6 {
        for seed in 0..20 {
            let m = random_symmetric(k, seed * 31 + k as u64);
            let (vals, vecs) = symmetric_eigen(&m);
            let (ovals, ovecs) = jacobi_eigen(&m);
            for (a, b) in vals.iter().zip(&ovals) {
                assert!((a - b).abs() < 1e-8, "k={k} {a} vs {b}");
            }
            assert!(max_diff(&vecs, &align_signs(&vecs, &ovecs)) < 1e-8);
        }
    }
}

#[test]
fn subspace_iteration_matches_jacobi() {
    let b = lcg_matrix(150, 5, 3) * 4.0;
    let m = &b * b.transpose() + random_symmetric(150, 9) * 0.01;
    let (vals, vecs) = leading_eigen(&m, 5);
    let (ovals, ovecs) = jacobi_eigen(&m);
    for j in 0..5 {
        assert!((vals[j] - ovals[j]).abs() < 1e-8 * ovals[0]);
    }
    let top = ovecs.columns(0, 5).into_owned();
    assert!(max_diff(&vecs, &align_signs(&vecs, &top)) < 1e-8);
}

#[test]
fn factors_match_power_iteration() {
    for (p, t) in [(40, 25), (20, 60)] {
        let b = lcg_matrix(p, 3, 11) * 3.0;
        let f = lcg_matrix(t, 3, 12);
        let x = &b * f.transpose() + lcg_matrix(p, t, 13) * 0.3;
        let panel = center_panel(&DataPanel::new(x, Vector::zeros(t)).unwrap()).unwrap();
        let fit = estimate_factors(&panel, 3).unwrap();
        let xtx = panel.predictors().transpose() * panel.predictors();
        let (_, u) = power_iteration(&xtx, 3, 20_000);
        let scaled = fit.factors() / (t as f64).sqrt();
        assert!(max_diff(&scaled, &align_signs(&scaled, &u)) < 1e-6, "p={p} t={t}");
    }
}

#[test]
fn pseudoinverse_matches_explicit_inverse() {
    let panel = DataPanel::new(lcg_matrix(30, 40, 5), Vector::zeros(40)).unwrap();
    let fit = estimate_factors(&center_panel(&panel).unwrap(), 4).unwrap();
    let b = fit.loadings();
    let explicit = inverse(&(b.transpose() * b)) * b.transpose();
    assert!(max_diff(&loading_pseudoinverse(&fit).unwrap(), &explicit) < 1e-8);
}

#[test]
fn ols_matches_normal_equations() {
    for seed in 0..10 {
        let x = lcg_matrix(60, 4, seed);
        let y = Vector::from_fn(60, |i, _| (i as f64 * 0.31).sin() + x[(i, 0)]);
        let lf = fit_linear_forecast(&x, &y, RegressorSpec::AllFactors).unwrap();
        let beta = normal_equations(&x, &y);
        assert!((lf.intercept() - beta[0]).abs() < 1e-8);
        for j in 0..4 {
            assert!((lf.coefficients()[j] - beta[j + 1]).abs() < 1e-8);
        }
    }
}

#[test]
fn interaction_ols_matches_normal_equations() {
    let x = lcg_matrix(80, 2, 99);
    let y = Vector::from_fn(80, |i, _| x[(i, 0)] * x[(i, 1)] + 0.1 * (i as f64).cos());
    let lf = fit_linear_forecast(&x, &y, RegressorSpec::IndicesWithInteraction).unwrap();
    let expanded = RegressorSpec::IndicesWithInteraction.expand(&x);
    let beta = normal_equations(&expanded, &y);
    assert!((lf.intercept() - beta[0]).abs() < 1e-8);
    for j in 0..3 {
        assert!((lf.coefficients()[j] - beta[j + 1]).abs() < 1e-8);
    }
}

#[test]
fn local_linear_matches_weighted_least_squares() {
    for dims in 1..=2 {
        let idx = lcg_matrix(70, dims, 21 + dims as u64) * 2.0;
        let y = Vector::from_fn(70, |i, _| (idx[(i, 0)] * 1.7).sin() + 0.2 * i as f64 / 70.0);
        for bw in [Bandwidth::default(), Bandwidth::Fixed(vec![0.4; dims])] {
            let sm = local_linear_fit(&idx, &y, &bw).unwrap();
            for q in 0..5 {
                let point: Vec<f64> = (0..dims).map(|j| -0.8 + 0.4 * q as f64 + 0.1 * j as f64).collect();
                let got = local_linear_predict(&sm, &point).unwrap();
                assert!(!got.global_fallback);
                let want = local_linear_oracle(&idx, &y, sm.bandwidths(), &point);
                assert!((got.value - want).abs() < 1e-8, "{} vs {want}", got.value);
            }
        }
    }
}

#[test]
fn canonical_rotation_matches_generalized_eigen() {
    let t = 200;
    let f = lcg_matrix(t, 3, 41) + Matrix::from_fn(t, 3, |i, j| if j == 1 { 0.3 * ((i % 5) as f64) } else { 0.0 });
    let b = lcg_matrix(50, 3, 42) * 2.0;
    let h = canonical_rotation(&f, &b).unwrap();
    let s_inv = inverse(&(f.transpose() * &f / t as f64));
    let (_, m) = generalized_eigen(&(b.transpose() * &b), &s_inv);
    let h_inv = inverse(&h);
    assert!(max_diff(&h_inv, &align_signs(&h_inv, &m)) < 1e-8);
}

#[test]
fn chi_square_matches_statrs() {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    for df in [1.0, 2.0, 3.0, 7.5, 20.0, 54.0] {
        let d = ChiSquared::new(df).unwrap();
        for x in [0.1, 0.9, 2.5, 10.0, 40.0] {
            assert!((chi_square_cdf(x, df) - d.cdf(x)).abs() < 1e-10);
        }
        for q in [0.05, 0.5, 0.95, 0.99] {
            assert!((chi_square_quantile(q, df) - d.inverse_cdf(q)).abs() < 1e-6);
        }
    }
}
