//! Implementations of the subcommands. Each one returns `Ok(())` on success
//! and an error with human-readable context otherwise; `main` maps that to
//! the process exit status.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::DVector;
use serde::Serialize;

use mpalloc::horizon_riskless::RisklessMarket;
use mpalloc::moments::{fit_var1, read_series_csv, Var1ModelSpec};
use mpalloc::report;
use mpalloc::strategies::{
    gamma_to_alpha, monte_carlo_experiment, policy_weights, train_linear_policy, LinearPolicy,
};
use mpalloc::{SimulationReport, StrategyKind};

use crate::config::{ExperimentConfig, Overrides, ResolvedExperiment};

/// Fitted-model file: the model parameters (paste-able as an inline model in
/// a manifest) plus least-squares standard errors and the sample size.
#[derive(Serialize)]
struct FitOutput {
    #[serde(flatten)]
    model: Var1ModelSpec,
    /// Number of regression rows (observations minus one).
    observation_rows: usize,
    /// Standard errors of the intercept estimates, one per equation.
    intercept_se: Vec<f64>,
    /// Standard errors of the transition estimates, row major.
    transition_se: Vec<Vec<f64>>,
}

/// `fit`: least-squares fit of the state autoregression to a CSV of
/// observations, written as JSON with full double precision.
pub fn fit(input: &Path, output: &Path, asset_coords: Option<Vec<usize>>) -> Result<()> {
    let (names, rows) = read_series_csv(input)
        .with_context(|| format!("cannot read series {}", input.display()))?;
    let fit = fit_var1(&rows).with_context(|| format!("cannot fit model to {}", input.display()))?;
    let dim = fit.model.state_dim();
    let coords = asset_coords.unwrap_or_else(|| (0..dim).collect());
    let model = fit
        .with_asset_coords(coords)
        .context("invalid asset coordinates")?;
    let out = FitOutput {
        model: Var1ModelSpec::from_model(&model, Some(names)),
        observation_rows: fit.rows,
        intercept_se: fit.intercept_se.iter().copied().collect(),
        transition_se: (0..dim)
            .map(|i| (0..dim).map(|j| fit.phi_se[(i, j)]).collect())
            .collect(),
    };
    let mut content = serde_json::to_vec_pretty(&out)?;
    content.push(b'\n');
    report::write_atomic(output, &content).context("cannot write model file")?;
    println!(
        "fitted {dim}-dimensional model on {} regression rows -> {}",
        fit.rows,
        output.display()
    );
    Ok(())
}

fn load_resolved(config: &Path, overrides: &Overrides) -> Result<ResolvedExperiment> {
    let mut cfg = ExperimentConfig::load(config)?;
    cfg.apply(overrides)?;
    cfg.resolve()
}

/// Trains the predictor-linear policy when the strategy list needs it.
fn maybe_train_policy(
    resolved: &ResolvedExperiment,
    gamma: f64,
    horizon: usize,
) -> Result<Option<LinearPolicy>> {
    if !resolved.strategies.contains(&StrategyKind::PredictorLinear) {
        return Ok(None);
    }
    let setup = resolved.setup(gamma, horizon)?;
    let alpha = gamma_to_alpha(gamma)?;
    let y0 = match &resolved.initial_state {
        Some(state) => state.clone(),
        None => resolved.model.stationary_mean()?,
    };
    Ok(Some(train_linear_policy(&setup, alpha, &y0)?))
}

/// `weights`: per-strategy risky weights and the implied riskless share at
/// one decision date, as `strategy,asset,weight` rows on standard output.
pub fn weights(
    config: &Path,
    overrides: &Overrides,
    wealth: f64,
    period: usize,
    state: Option<Vec<f64>>,
) -> Result<()> {
    let resolved = load_resolved(config, overrides)?;
    let (gamma, horizon) = resolved.single_cell()?;
    if period >= horizon {
        bail!("period {period} is out of range: the horizon has decision dates 0..{horizon}");
    }
    let periods_remaining = horizon - period;
    let state = match state {
        Some(values) => {
            if values.len() != resolved.model.state_dim() {
                bail!(
                    "--state has {} coordinates, the model state has {}",
                    values.len(),
                    resolved.model.state_dim()
                );
            }
            DVector::from_vec(values)
        }
        None => resolved.model.stationary_mean()?,
    };
    let alpha = gamma_to_alpha(gamma)?;
    let market = RisklessMarket::constant(resolved.riskless_rate, horizon)
        .context("invalid riskless market")?;
    let policy = maybe_train_policy(&resolved, gamma, horizon)?;

    println!("strategy,asset,weight");
    for &kind in &resolved.strategies {
        let w = policy_weights(
            kind,
            &resolved.model,
            &market,
            alpha,
            wealth,
            periods_remaining,
            &state,
            policy.as_ref(),
        )
        .with_context(|| format!("strategy {kind} failed"))?;
        for i in 0..w.len() {
            println!("{kind},{},{}", resolved.asset_name(i), w[i]);
        }
        println!("{kind},riskless,{}", w.riskless_share());
    }
    Ok(())
}

/// `simulate`: one Monte-Carlo experiment cell; writes the JSON report plus
/// per-strategy sample and distribution CSVs.
pub fn simulate(config: &Path, overrides: &Overrides) -> Result<()> {
    let resolved = load_resolved(config, overrides)?;
    let (gamma, horizon) = resolved.single_cell()?;
    let report = run_cell(&resolved, gamma, horizon)?;
    let paths = report::write_all(&resolved.output_dir, &report)
        .context("cannot write report files")?;
    for path in paths {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_cell(resolved: &ResolvedExperiment, gamma: f64, horizon: usize) -> Result<SimulationReport> {
    let setup = resolved.setup(gamma, horizon)?;
    monte_carlo_experiment(&setup)
        .with_context(|| format!("experiment cell gamma={gamma}, horizon={horizon} failed"))
}

/// `compare`: the full horizon-by-gamma grid. Every cell gets its own report
/// files; the medians are additionally collected into a markdown table (one
/// block per horizon, one column per gamma) and a long-format CSV.
pub fn compare(config: &Path, overrides: &Overrides) -> Result<()> {
    let resolved = load_resolved(config, overrides)?;
    let mut reports: Vec<(usize, f64, SimulationReport)> = Vec::new();
    let mut written = Vec::new();
    for &horizon in &resolved.horizons {
        for &gamma in &resolved.gammas {
            let report = run_cell(&resolved, gamma, horizon)?;
            written.extend(
                report::write_all(&resolved.output_dir, &report)
                    .context("cannot write report files")?,
            );
            reports.push((horizon, gamma, report));
        }
    }

    let table_md = resolved.output_dir.join("comparison.md");
    report::write_atomic(&table_md, markdown_table(&resolved, &reports).as_bytes())
        .context("cannot write comparison.md")?;
    written.push(table_md);

    let table_csv = resolved.output_dir.join("comparison.csv");
    report::write_atomic(&table_csv, csv_table(&resolved, &reports).as_bytes())
        .context("cannot write comparison.csv")?;
    written.push(table_csv);

    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn markdown_table(
    resolved: &ResolvedExperiment,
    reports: &[(usize, f64, SimulationReport)],
) -> String {
    let mut out = String::new();
    out.push_str("# Strategy comparison\n\n");
    let _ = writeln!(out, "- model: {}", resolved.model_id);
    let _ = writeln!(out, "- repetitions per cell: {}", resolved.repetitions);
    let _ = writeln!(out, "- master seed: {}", resolved.master_seed);
    let _ = writeln!(out, "- riskless rate per period: {}", resolved.riskless_rate);
    let _ = writeln!(out, "- initial wealth: {}", resolved.initial_wealth);
    out.push_str(
        "\nEach cell shows the median terminal utility with the median absolute deviation \
         in parentheses.\n",
    );
    for &horizon in &resolved.horizons {
        let _ = write!(out, "\n## Horizon {horizon}\n\n| strategy |");
        for &gamma in &resolved.gammas {
            let _ = write!(out, " gamma={gamma} |");
        }
        out.push_str("\n| --- |");
        for _ in &resolved.gammas {
            out.push_str(" ---: |");
        }
        out.push('\n');
        for &kind in &resolved.strategies {
            let _ = write!(out, "| {kind} |");
            for &gamma in &resolved.gammas {
                let cell = reports
                    .iter()
                    .find(|(h, g, _)| *h == horizon && *g == gamma)
                    .and_then(|(_, _, r)| r.outcome(kind))
                    .expect("every grid cell was simulated");
                let _ = write!(out, " {:.4} ({:.4}) |", cell.median_utility, cell.mad_utility);
            }
            out.push('\n');
        }
    }
    out
}

fn csv_table(resolved: &ResolvedExperiment, reports: &[(usize, f64, SimulationReport)]) -> String {
    let mut out =
        String::from("horizon,gamma,strategy,median_utility,mad_utility,exceedance_vs_riskless_only\n");
    for (horizon, gamma, report) in reports {
        for &kind in &resolved.strategies {
            let outcome = report.outcome(kind).expect("every grid cell was simulated");
            let _ = writeln!(
                out,
                "{horizon},{gamma},{kind},{},{},{}",
                outcome.median_utility, outcome.mad_utility, outcome.exceedance_vs_riskless_only
            );
        }
    }
    out
}

/// `ecdf`: empirical distribution function of a per-repetition samples CSV,
/// written as a `value,cum_prob` CSV.
pub fn ecdf(input: &Path, output: &Path) -> Result<()> {
    let samples = report::read_samples_csv(input)
        .with_context(|| format!("cannot read samples {}", input.display()))?;
    report::write_ecdf_file(output, &samples).context("cannot write distribution file")?;
    println!("wrote {} ({} samples)", output.display(), samples.len());
    Ok(())
}
