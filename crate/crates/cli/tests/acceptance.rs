//! End-to-end determinism check of the comparison command.
//!
//! Prints one `[PASS]`/`[FAIL]` line and exits non-zero on failure, matching
//! the per-criterion output of the library's acceptance suite.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

const BUDGET: Duration = Duration::from_secs(120);
const REPETITIONS: u32 = 1000;
const MASTER_SEED: u32 = 4242;

fn main() {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(criterion_determinism)).unwrap_or_else(|panic| {
        let msg = panic
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| panic.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panicked".to_string());
        Err(format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    let summary = "comparison runs are byte-identical across reruns and thread counts";
    match outcome {
        Ok(detail) if elapsed <= BUDGET => {
            println!(
                "[PASS] criterion 7: {summary} ({detail}; {:.2}s of {:.0}s budget)",
                elapsed.as_secs_f64(),
                BUDGET.as_secs_f64()
            );
        }
        Ok(detail) => {
            println!(
                "[FAIL] criterion 7: {summary} (exceeded {:.0}s budget: took {:.2}s; {detail})",
                BUDGET.as_secs_f64(),
                elapsed.as_secs_f64()
            );
            std::process::exit(1);
        }
        Err(reason) => {
            println!("[FAIL] criterion 7: {summary} ({reason})");
            std::process::exit(1);
        }
    }
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let config = serde_json::json!({
        "model": {
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
        },
        "gammas": [10.0],
        "horizons": [6],
        "repetitions": REPETITIONS,
        "master_seed": MASTER_SEED,
        "riskless_rate": 0.0003,
        "strategies": ["local-approx", "tangency", "gmv", "riskless-only", "predictor-linear"],
        "training_paths": 1000,
    });
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_vec_pretty(&config).expect("serialise config"))
        .expect("write config");
    path
}

/// Runs `compare` into `out`, optionally pinning the worker thread count.
fn run_compare(config: &Path, out: &Path, seed: u32, threads: Option<&str>) -> Result<(), String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mpalloc"));
    cmd.arg("compare")
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--seed", &seed.to_string()]);
    match threads {
        Some(n) => {
            cmd.env("RAYON_NUM_THREADS", n);
        }
        None => {
            cmd.env_remove("RAYON_NUM_THREADS");
        }
    }
    let output = cmd.output().map_err(|e| format!("cannot run binary: {e}"))?;
    if !output.status.success() {
        return Err(format!(
            "compare failed ({}): {}",
            output.status,
            String::from_utf8_lossy(&output.stderr)
        ));
    }
    Ok(())
}

/// File name -> raw bytes for every regular file in `dir`.
fn snapshot(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut files = BTreeMap::new();
    let entries = std::fs::read_dir(dir).map_err(|e| format!("cannot list {dir:?}: {e}"))?;
    for entry in entries {
        let entry = entry.map_err(|e| format!("cannot list {dir:?}: {e}"))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let bytes =
            std::fs::read(entry.path()).map_err(|e| format!("cannot read {name}: {e}"))?;
        files.insert(name, bytes);
    }
    if files.is_empty() {
        return Err(format!("no output files in {dir:?}"));
    }
    Ok(files)
}

fn criterion_determinism() -> Result<String, String> {
    let workspace = tempfile::tempdir().map_err(|e| format!("cannot create tempdir: {e}"))?;
    let config = write_config(workspace.path());

    let runs = [
        ("baseline", None),
        ("rerun", None),
        ("one-thread", Some("1")),
        ("four-threads", Some("4")),
    ];
    let mut snapshots = Vec::new();
    for (label, threads) in runs {
        let out = workspace.path().join(label);
        run_compare(&config, &out, MASTER_SEED, threads)?;
        snapshots.push((label, snapshot(&out)?));
    }

    let (_, reference) = &snapshots[0];
    let names: Vec<&String> = reference.keys().collect();
    for (label, files) in &snapshots[1..] {
        if files.keys().collect::<Vec<_>>() != names {
            return Err(format!(
                "{label} produced a different file set: {:?} vs {:?}",
                files.keys().collect::<Vec<_>>(),
                names
            ));
        }
        for (name, bytes) in files {
            if bytes != &reference[name] {
                return Err(format!("{label}: file {name} differs from the baseline run"));
            }
        }
    }

    // Different seed must actually change the simulated samples, otherwise
    // the byte comparison above would be vacuous.
    let reseeded = workspace.path().join("reseeded");
    run_compare(&config, &reseeded, MASTER_SEED + 1, None)?;
    let changed = snapshot(&reseeded)?
        .iter()
        .any(|(name, bytes)| name.ends_with("_samples.csv") && bytes != &reference[name]);
    if !changed {
        return Err("changing the master seed left every samples file unchanged".to_string());
    }

    Ok(format!(
        "{} files x {} runs at {REPETITIONS} repetitions, plus a reseeded control",
        reference.len(),
        runs.len()
    ))
}
