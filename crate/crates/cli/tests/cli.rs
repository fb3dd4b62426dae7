//! End-to-end tests of the `mpalloc` binary: manifest handling, flag
//! overrides, output files, and error reporting.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use mpalloc::horizon_riskless::RisklessMarket;
use mpalloc::strategies::{gamma_to_alpha, policy_weights};
use mpalloc::{report, StrategyKind, Var1Model};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mpalloc"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stdout_ok(cmd: &mut Command) -> String {
    let out = run(cmd);
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 stdout")
}

fn stderr_err(cmd: &mut Command) -> String {
    let out = run(cmd);
    assert!(
        !out.status.success(),
        "expected failure, got success\nstdout: {}",
        String::from_utf8_lossy(&out.stdout)
    );
    String::from_utf8(out.stderr).expect("utf-8 stderr")
}

/// Monthly stock/bond model with one persistent return predictor, written as
/// the inline-model JSON fragment of a manifest.
fn inline_model() -> Value {
    json!({
        "inline": {
            "names": ["stock", "bond", "yield_spread"],
            "intercept": [0.0059, 0.0007, -0.0028],
            "transition": [
                [0.0, 0.0, 0.0060],
                [0.0, 0.0, 0.0035],
                [0.0, 0.0, 0.9597]
            ],
            "innovation_cov": [
                [0.0018, 0.0002, -0.0005],
                [0.0002, 0.0006, 0.0007],
                [-0.0005, 0.0007, 0.0802]
            ],
            "asset_coords": [0, 1]
        }
    })
}

/// The same model as a library value, for cross-checking printed numbers.
fn inline_model_value() -> Var1Model {
    Var1Model::new(
        DVector::from_row_slice(&[0.0059, 0.0007, -0.0028]),
        DMatrix::from_row_slice(
            3,
            3,
            &[
                0.0, 0.0, 0.0060, //
                0.0, 0.0, 0.0035, //
                0.0, 0.0, 0.9597,
            ],
        ),
        DMatrix::from_row_slice(
            3,
            3,
            &[
                0.0018, 0.0002, -0.0005, //
                0.0002, 0.0006, 0.0007, //
                -0.0005, 0.0007, 0.0802,
            ],
        ),
        vec![0, 1],
    )
    .expect("model is valid")
}

fn write_config(dir: &Path, mut config: Value) -> PathBuf {
    let out_dir = dir.join("out");
    let defaults = json!({
        "model": inline_model(),
        "gammas": [10.0],
        "horizons": [4],
        "repetitions": 64,
        "master_seed": 7,
        "riskless_rate": 0.003,
        "strategies": ["local-approx", "tangency", "gmv", "riskless-only"],
        "training_paths": 1000,
        "output_dir": out_dir,
    });
    let merged = match (&mut config, defaults) {
        (Value::Object(overrides), Value::Object(mut base)) => {
            base.append(overrides);
            Value::Object(base)
        }
        _ => unreachable!("config fixtures are objects"),
    };
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_vec_pretty(&merged).unwrap()).unwrap();
    path
}

/// Parses `strategy,asset,weight` output into (strategy, asset) -> weight.
fn parse_weights(stdout: &str) -> HashMap<(String, String), f64> {
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("strategy,asset,weight"));
    lines
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 3, "unexpected row {line:?}");
            (
                (fields[0].to_string(), fields[1].to_string()),
                fields[2].parse::<f64>().expect("numeric weight"),
            )
        })
        .collect()
}

#[test]
fn fit_recovers_noiseless_dynamics_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let nu = DVector::from_row_slice(&[0.1, -0.05]);
    // A slowly decaying spiral keeps the regression rows well spread out, so
    // the noiseless fit is well conditioned over the whole sample.
    let phi = DMatrix::from_row_slice(2, 2, &[0.9, 0.5, -0.4, 0.8]);
    let mut y = DVector::from_row_slice(&[1.0, 0.0]);
    let mut csv = String::from("a,b\n");
    for _ in 0..=40 {
        csv.push_str(&format!("{},{}\n", y[0], y[1]));
        y = &nu + &phi * &y;
    }
    let input = dir.path().join("series.csv");
    std::fs::write(&input, csv).unwrap();
    let output = dir.path().join("model.json");

    let stdout = stdout_ok(
        bin()
            .arg("fit")
            .arg("--input")
            .arg(&input)
            .arg("--output")
            .arg(&output)
            .args(["--asset-coords", "0"]),
    );
    assert!(stdout.contains("model.json"));

    let parsed: Value = serde_json::from_str(&std::fs::read_to_string(&output).unwrap()).unwrap();
    assert_eq!(parsed["names"], json!(["a", "b"]));
    assert_eq!(parsed["asset_coords"], json!([0]));
    assert_eq!(parsed["observation_rows"], json!(40));
    for i in 0..2 {
        let err = (parsed["intercept"][i].as_f64().unwrap() - nu[i]).abs();
        assert!(err < 1e-10, "intercept {i} off by {err}");
        for j in 0..2 {
            let err = (parsed["transition"][i][j].as_f64().unwrap() - phi[(i, j)]).abs();
            assert!(err < 1e-10, "transition ({i},{j}) off by {err}");
            let cov = parsed["innovation_cov"][i][j].as_f64().unwrap().abs();
            assert!(cov < 1e-12, "noiseless data left covariance {cov}");
        }
        // Standard errors collapse with the residuals.
        assert!(parsed["intercept_se"][i].as_f64().unwrap() < 1e-10);
    }
}

#[test]
fn fit_reports_the_offending_csv_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("series.csv");
    std::fs::write(&input, "a,b\n0.1,0.2\n0.3,oops\n0.5,0.6\n").unwrap();
    let stderr = stderr_err(
        bin()
            .arg("fit")
            .arg("--input")
            .arg(&input)
            .arg("--output")
            .arg(dir.path().join("model.json")),
    );
    assert!(stderr.contains("line 3"), "stderr was: {stderr}");
    assert!(stderr.contains("oops"), "stderr was: {stderr}");
}

#[test]
fn compare_with_one_repetition_reports_zero_dispersion() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), json!({ "repetitions": 1 }));
    stdout_ok(bin().arg("compare").arg("--config").arg(&config));

    let table = std::fs::read_to_string(dir.path().join("out/comparison.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next(),
        Some("horizon,gamma,strategy,median_utility,mad_utility,exceedance_vs_riskless_only")
    );
    let mut rows = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 6);
        assert_eq!(fields[0], "4");
        assert_eq!(fields[1], "10");
        let mad: f64 = fields[4].parse().unwrap();
        assert_eq!(mad, 0.0, "single repetition has no dispersion: {line}");
        let median: f64 = fields[3].parse().unwrap();
        assert!(median.is_finite());
        rows += 1;
    }
    assert_eq!(rows, 4, "one row per strategy");
    assert!(dir.path().join("out/comparison.md").exists());
    assert!(dir.path().join("out/T4_g10_report.json").exists());
}

#[test]
fn weights_are_gamma_invariant_for_tangency_and_match_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        json!({ "strategies": ["local-approx", "tangency", "gmv"], "gammas": [5.0] }),
    );
    let low = parse_weights(&stdout_ok(
        bin().arg("weights").arg("--config").arg(&config),
    ));
    let high = parse_weights(&stdout_ok(
        bin()
            .arg("weights")
            .arg("--config")
            .arg(&config)
            .args(["--gamma", "20"]),
    ));

    for asset in ["stock", "bond", "riskless"] {
        let key = ("tangency".to_string(), asset.to_string());
        assert_eq!(
            low[&key].to_bits(),
            high[&key].to_bits(),
            "tangency weight for {asset} moved with gamma"
        );
    }
    // The minimum-variance rule ignores gamma too; the local rule must not.
    for asset in ["stock", "bond"] {
        let key = ("gmv".to_string(), asset.to_string());
        assert_eq!(low[&key].to_bits(), high[&key].to_bits());
        let key = ("local-approx".to_string(), asset.to_string());
        assert_ne!(low[&key].to_bits(), high[&key].to_bits());
    }

    // Printed rows reproduce direct library calls bit for bit.
    let model = inline_model_value();
    let market = RisklessMarket::constant(0.003, 4).unwrap();
    let state = model.stationary_mean().unwrap();
    for (kind, gamma, table) in [
        (StrategyKind::LocalApprox, 5.0, &low),
        (StrategyKind::Tangency, 5.0, &low),
        (StrategyKind::LocalApprox, 20.0, &high),
    ] {
        let expected = policy_weights(
            kind,
            &model,
            &market,
            gamma_to_alpha(gamma).unwrap(),
            1.0,
            4,
            &state,
            None,
        )
        .unwrap();
        for (i, asset) in ["stock", "bond"].iter().enumerate() {
            let key = (kind.to_string(), asset.to_string());
            assert_eq!(
                table[&key].to_bits(),
                expected[i].to_bits(),
                "{kind} weight for {asset} differs from the library"
            );
        }
        let key = (kind.to_string(), "riskless".to_string());
        assert_eq!(table[&key].to_bits(), expected.riskless_share().to_bits());
    }
}

#[test]
fn simulate_applies_flag_overrides_and_writes_all_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), json!({}));
    let out = dir.path().join("elsewhere");
    let stdout = stdout_ok(
        bin()
            .arg("simulate")
            .arg("--config")
            .arg(&config)
            .args(["--reps", "32", "--seed", "9"])
            .arg("--out")
            .arg(&out),
    );

    let report = report::read_report_json(&out.join("T4_g10_report.json")).unwrap();
    assert_eq!(report.repetitions, 32);
    assert_eq!(report.master_seed, 9);
    assert_eq!(report.gamma, 10.0);
    assert_eq!(report.horizon, 4);
    assert_eq!(report.riskless_rates, vec![0.003; 4]);
    for kind in ["local-approx", "tangency", "gmv", "riskless-only"] {
        for suffix in ["samples", "ecdf"] {
            let file = out.join(format!("T4_g10_{kind}_{suffix}.csv"));
            assert!(file.exists(), "missing {}", file.display());
            assert!(stdout.contains(&format!("wrote {}", file.display())));
        }
    }
}

#[test]
fn riskless_rate_can_be_calibrated_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        json!({ "repetitions": 8, "strategies": ["riskless-only"] }),
    );
    stdout_ok(
        bin()
            .arg("simulate")
            .arg("--config")
            .arg(&config)
            .args(["--rf", "calibrate:0.5837,5,6"]),
    );
    let report = report::read_report_json(&dir.path().join("out/T4_g10_report.json")).unwrap();
    // Root of (0.5837 utility at unit wealth, six periods, gamma 5).
    let rate = report.riskless_rates[0];
    assert!(
        (rate - 3.68367e-4).abs() < 1e-8,
        "calibrated rate was {rate}"
    );
}

#[test]
fn ecdf_subcommand_matches_the_library_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("samples.csv");
    std::fs::write(&input, "repetition,utility\n0,2\n1,1\n2,2\n3,4\n").unwrap();
    let output = dir.path().join("curve.csv");
    stdout_ok(
        bin()
            .arg("ecdf")
            .arg("--input")
            .arg(&input)
            .arg("--output")
            .arg(&output),
    );
    assert_eq!(
        std::fs::read_to_string(&output).unwrap(),
        "value,cum_prob\n1,0.25\n2,0.75\n4,1\n"
    );

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "repetition,utility\n0,xyz\n").unwrap();
    let stderr = stderr_err(
        bin()
            .arg("ecdf")
            .arg("--input")
            .arg(&bad)
            .arg("--output")
            .arg(dir.path().join("unused.csv")),
    );
    assert!(stderr.contains("line 2"), "stderr was: {stderr}");
}

#[test]
fn manifest_validation_failures_are_reported() {
    let dir = tempfile::tempdir().unwrap();

    let empty_gammas = write_config(dir.path(), json!({ "gammas": [] }));
    let stderr = stderr_err(bin().arg("compare").arg("--config").arg(&empty_gammas));
    assert!(stderr.contains("gammas"), "stderr was: {stderr}");

    let two_gammas = write_config(dir.path(), json!({ "gammas": [5.0, 10.0] }));
    let stderr = stderr_err(bin().arg("weights").arg("--config").arg(&two_gammas));
    assert!(stderr.contains("--gamma"), "stderr was: {stderr}");

    let unknown = write_config(dir.path(), json!({ "strategies": ["momentum"] }));
    let stderr = stderr_err(bin().arg("compare").arg("--config").arg(&unknown));
    assert!(stderr.contains("momentum"), "stderr was: {stderr}");

    let typo = write_config(dir.path(), json!({ "repetitons": 10 }));
    let stderr = stderr_err(bin().arg("compare").arg("--config").arg(&typo));
    assert!(stderr.contains("repetitons"), "stderr was: {stderr}");
}
