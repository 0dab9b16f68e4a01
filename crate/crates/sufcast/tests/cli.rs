use std::fs;
use std::path::Path;
use std::process::Command;

use sufcast::report::{validate_factors_report, validate_forecast_report, validate_simulate_report};

fn sufcast(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sufcast"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn simulate_panel(dir: &Path, dgp: &str) {
    let out = sufcast(
        dir,
        &[
            "simulate", "--dgp", dgp, "--p", "10", "--t", "40", "--reps", "2", "--seed", "1",
            "--out", "sim.toml", "--emit-panel", "panel.csv",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn tiny_simulation_validates() {
    let dir = tempfile::tempdir().unwrap();
    simulate_panel(dir.path(), "interaction_42");
    let text = fs::read_to_string(dir.path().join("sim.toml")).unwrap();
    let report = validate_simulate_report(&text).unwrap();
    for name in ["r2_oos_sfi", "r2_oos_pcr", "r2_oos_pcri"] {
        assert!(report.columns.iter().any(|c| c.name == name), "missing {name}");
    }
    assert!(dir.path().join("sim.summary.csv").exists());
}

#[test]
fn forecast_reports_are_valid_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    simulate_panel(dir.path(), "linear_41");
    for method in ["pcr", "pc1", "sf1", "sf2", "sfi"] {
        let args = |out: &'static str| {
            vec!["forecast", "--input", "panel.csv", "--target", "y", "--method", method, "--factors", "3", "--slices", "5", "--out", out]
        };
        for out in ["a.toml", "b.toml"] {
            let o = sufcast(dir.path(), &args(out));
            assert!(o.status.success(), "{method}: {}", String::from_utf8_lossy(&o.stderr));
        }
        let a = fs::read_to_string(dir.path().join("a.toml")).unwrap();
        let b = fs::read_to_string(dir.path().join("b.toml")).unwrap();
        assert_eq!(a.replace("a.toml", ""), b.replace("b.toml", ""));
        let report = validate_forecast_report(&a).unwrap();
        assert!(report.result.r2_oos <= 1.0);
        assert_eq!(report.result.method, method);
    }
}

#[test]
fn factors_subcommand_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    simulate_panel(dir.path(), "linear_41");
    let o = sufcast(dir.path(), &["factors", "--input", "panel.csv", "--target", "y", "--factors", "2", "--out", "f.toml"]);
    assert!(o.status.success());
    let report = validate_factors_report(&fs::read_to_string(dir.path().join("f.toml")).unwrap()).unwrap();
    assert_eq!(report.factors.k, 2);
    let table = fs::read_to_string(dir.path().join("f.factors.csv")).unwrap();
    assert_eq!(table.lines().count(), 41);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    simulate_panel(dir.path(), "linear_41");
    let bad_config = sufcast(dir.path(), &["forecast", "--input", "panel.csv", "--target", "y", "--method", "sf2", "--indices", "1", "--out", "x.toml"]);
    assert_eq!(bad_config.status.code(), Some(2));
    let bad_method = sufcast(dir.path(), &["forecast", "--input", "panel.csv", "--target", "y", "--method", "magic", "--out", "x.toml"]);
    assert_eq!(bad_method.status.code(), Some(2));
    fs::write(dir.path().join("holes.csv"), "y,a\n1,2\n,3\n").unwrap();
    let bad_data = sufcast(dir.path(), &["forecast", "--input", "holes.csv", "--target", "y", "--out", "x.toml"]);
    assert_eq!(bad_data.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad_data.stderr).contains("rows 2"));
    let missing = sufcast(dir.path(), &["forecast", "--input", "nope.csv", "--target", "y", "--out", "x.toml"]);
    assert_eq!(missing.status.code(), Some(3));
    // a constant panel has no factor structure
    let mut text = String::from("y,a,b,c\n");
    for s in 0..30 {
        text.push_str(&format!("{},1,1,1\n", s % 3));
    }
    fs::write(dir.path().join("flat.csv"), text).unwrap();
    let numerical = sufcast(dir.path(), &["forecast", "--input", "flat.csv", "--target", "y", "--factors", "1", "--out", "x.toml"]);
    assert_eq!(numerical.status.code(), Some(4), "{}", String::from_utf8_lossy(&numerical.stderr));
    assert!(String::from_utf8_lossy(&numerical.stderr).contains("factors stage"));
}

#[test]
fn projected_forecast_with_covariates() {
    let dir = tempfile::tempdir().unwrap();
    let o = sufcast(
        dir.path(),
        &["simulate", "--dgp", "semiparametric_43", "--p", "30", "--t", "60", "--reps", "1", "--out", "s.toml", "--emit-panel", "panel.csv"],
    );
    assert!(o.status.success());
    let mut cov = String::from("series,z\n");
    for i in 1..=30 {
        cov.push_str(&format!("x{i},{}\n", (i as f64 * 0.37).sin()));
    }
    fs::write(dir.path().join("cov.csv"), cov).unwrap();
    let o = sufcast(
        dir.path(),
        &["forecast", "--input", "panel.csv", "--target", "y", "--covariates", "cov.csv", "--factors", "3", "--method", "sfi", "--out", "p.toml"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = validate_forecast_report(&fs::read_to_string(dir.path().join("p.toml")).unwrap()).unwrap();
    assert!(report.data.projected);
}

#[test]
fn schema_violations_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    simulate_panel(dir.path(), "linear_41");
    let o = sufcast(dir.path(), &["forecast", "--input", "panel.csv", "--target", "y", "--factors", "3", "--out", "r.toml"]);
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("r.toml")).unwrap();
    assert!(validate_forecast_report(&text.replace("sufcast.forecast.v1", "other")).is_err());
    assert!(validate_forecast_report(&format!("extra = 1\n{text}")).is_err());
}
