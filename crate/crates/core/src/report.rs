//! Writing experiment results to disk.
//!
//! A finished experiment produces one JSON report (the setup echo and the
//! per-strategy summaries), one samples file per strategy (the terminal
//! utility of every repetition), and one empirical-distribution file per
//! strategy. Floating-point values are written in the shortest form that
//! parses back to the identical bits, so files round-trip exactly.
//!
//! Every write is atomic: content lands in a `.tmp` sibling first and is
//! renamed into place, so a crashed run never leaves a partial file behind.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::stats;
use crate::strategies::SimulationReport;

/// Writes `content` to `path` via a temporary sibling and an atomic rename,
/// so a failed run never leaves a partially written file behind.
pub fn write_atomic(path: &Path, content: &[u8]) -> Result<()> {
    let mut tmp_name = path.as_os_str().to_owned();
    tmp_name.push(".tmp");
    let tmp = PathBuf::from(tmp_name);
    fs::write(&tmp, content)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// File-name stem identifying one experiment: horizon and risk parameter.
pub fn file_stem(report: &SimulationReport) -> String {
    format!("T{}_g{}", report.horizon, report.gamma)
}

/// Writes the JSON report (without the per-repetition samples) and returns
/// its path.
pub fn write_report_json(dir: &Path, report: &SimulationReport) -> Result<PathBuf> {
    let path = dir.join(format!("{}_report.json", file_stem(report)));
    let mut content = serde_json::to_vec_pretty(report)?;
    content.push(b'\n');
    write_atomic(&path, &content)?;
    Ok(path)
}

/// Reads a JSON report written by [`write_report_json`]. The per-repetition
/// samples are not part of the file and come back empty.
pub fn read_report_json(path: &Path) -> Result<SimulationReport> {
    let content = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&content)?)
}

fn csv_rows(header: [&str; 2], rows: impl Iterator<Item = (String, String)>) -> Vec<u8> {
    let mut out = format!("{},{}\n", header[0], header[1]);
    for (a, b) in rows {
        out.push_str(&a);
        out.push(',');
        out.push_str(&b);
        out.push('\n');
    }
    out.into_bytes()
}

/// Writes one `repetition,utility` file per strategy and returns the paths
/// in strategy order.
pub fn write_samples_csv(dir: &Path, report: &SimulationReport) -> Result<Vec<PathBuf>> {
    let stem = file_stem(report);
    let mut paths = Vec::with_capacity(report.strategies.len());
    for outcome in &report.strategies {
        let path = dir.join(format!("{stem}_{}_samples.csv", outcome.kind));
        let content = csv_rows(
            ["repetition", "utility"],
            outcome
                .samples
                .iter()
                .enumerate()
                .map(|(i, u)| (i.to_string(), format!("{u}"))),
        );
        write_atomic(&path, &content)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Reads the utility column of a samples file written by
/// [`write_samples_csv`].
pub fn read_samples_csv(path: &Path) -> Result<Vec<f64>> {
    let content = fs::read_to_string(path)?;
    let mut lines = content.lines().enumerate();
    match lines.next() {
        Some((_, "repetition,utility")) => {}
        Some((_, header)) => {
            return Err(Error::Csv {
                line: 1,
                message: format!("expected header \"repetition,utility\", found {header:?}"),
            })
        }
        None => {
            return Err(Error::EmptyInput {
                context: "samples file",
            })
        }
    }
    let mut samples = Vec::new();
    for (i, line) in lines {
        let line_no = (i + 1) as u64;
        let (_, value) = line.split_once(',').ok_or_else(|| Error::Csv {
            line: line_no,
            message: "expected two comma-separated fields".to_string(),
        })?;
        let parsed: f64 = value.parse().map_err(|_| Error::Csv {
            line: line_no,
            message: format!("cannot parse utility value {value:?}"),
        })?;
        if !parsed.is_finite() {
            return Err(Error::Csv {
                line: line_no,
                message: format!("utility value {value:?} is not finite"),
            });
        }
        samples.push(parsed);
    }
    if samples.is_empty() {
        return Err(Error::EmptyInput {
            context: "samples file",
        });
    }
    Ok(samples)
}

/// Writes one `value,cum_prob` empirical-distribution file per strategy and
/// returns the paths in strategy order.
pub fn write_ecdf_csv(dir: &Path, report: &SimulationReport) -> Result<Vec<PathBuf>> {
    let stem = file_stem(report);
    let mut paths = Vec::with_capacity(report.strategies.len());
    for outcome in &report.strategies {
        let path = dir.join(format!("{stem}_{}_ecdf.csv", outcome.kind));
        write_ecdf_file(&path, &outcome.samples)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Writes the empirical distribution of one sample as a `value,cum_prob`
/// file.
pub fn write_ecdf_file(path: &Path, samples: &[f64]) -> Result<()> {
    let points = stats::ecdf_points(samples)?;
    let content = csv_rows(
        ["value", "cum_prob"],
        points
            .into_iter()
            .map(|(v, p)| (format!("{v}"), format!("{p}"))),
    );
    write_atomic(path, &content)
}

/// Writes the JSON report plus all per-strategy samples and distribution
/// files into `dir` (created if missing); returns every path written.
pub fn write_all(dir: &Path, report: &SimulationReport) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = vec![write_report_json(dir, report)?];
    paths.extend(write_samples_csv(dir, report)?);
    paths.extend(write_ecdf_csv(dir, report)?);
    Ok(paths)
}
