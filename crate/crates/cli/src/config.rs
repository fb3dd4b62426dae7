//! Experiment manifest: the JSON schema, command-line overrides, and the
//! resolution step that turns a manifest into ready-to-run experiment setups.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use mpalloc::horizon_riskless::RisklessMarket;
use mpalloc::moments::{fit_var1, read_series_csv, Var1ModelSpec};
use mpalloc::strategies::calibrate_riskless_rate;
use mpalloc::{ExperimentSetup, StrategyKind, Var1Model};

/// Where the return model comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    /// Model parameters written out in the manifest itself.
    Inline(Var1ModelSpec),
    /// Fit the model to a CSV of state observations when the manifest is
    /// loaded (one header row of series names, one row per time step).
    FitCsv {
        path: PathBuf,
        /// Tradable coordinates of the fitted state; defaults to all of them.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        asset_coords: Option<Vec<usize>>,
    },
}

/// Constant per-period riskless rate, either a literal number or the rule
/// `"calibrate:<target utility>,<gamma>,<horizon>"`, which solves for the
/// rate whose deterministic riskless-only terminal utility (from unit
/// wealth) equals the target.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RateSpec {
    Fixed(f64),
    Rule(String),
}

impl RateSpec {
    /// Parses the flag form: a number, or `calibrate:<utility>,<gamma>,<T>`.
    pub fn parse(text: &str) -> Result<Self> {
        if let Ok(value) = text.parse::<f64>() {
            return Ok(RateSpec::Fixed(value));
        }
        if text.starts_with("calibrate:") {
            return Ok(RateSpec::Rule(text.to_string()));
        }
        bail!(
            "invalid riskless rate {text:?}: expected a number or \
             calibrate:<target utility>,<gamma>,<horizon>"
        );
    }

    /// Resolves the spec to a concrete per-period rate.
    pub fn resolve(&self) -> Result<f64> {
        match self {
            RateSpec::Fixed(value) => {
                if !value.is_finite() || *value <= -1.0 {
                    bail!("riskless rate {value} must be finite and above -1");
                }
                Ok(*value)
            }
            RateSpec::Rule(rule) => {
                let args = rule.strip_prefix("calibrate:").with_context(|| {
                    format!("invalid riskless rate rule {rule:?}: expected calibrate:...")
                })?;
                let parts: Vec<&str> = args.split(',').map(str::trim).collect();
                if parts.len() != 3 {
                    bail!(
                        "invalid calibration rule {rule:?}: expected \
                         calibrate:<target utility>,<gamma>,<horizon>"
                    );
                }
                let target: f64 = parts[0]
                    .parse()
                    .with_context(|| format!("invalid calibration target {:?}", parts[0]))?;
                let gamma: f64 = parts[1]
                    .parse()
                    .with_context(|| format!("invalid calibration gamma {:?}", parts[1]))?;
                let horizon: usize = parts[2]
                    .parse()
                    .with_context(|| format!("invalid calibration horizon {:?}", parts[2]))?;
                calibrate_riskless_rate(target, gamma, horizon)
                    .context("riskless-rate calibration failed")
            }
        }
    }
}

fn default_initial_wealth() -> f64 {
    1.0
}

fn default_training_paths() -> usize {
    10_000
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// One experiment manifest. Unknown fields are rejected so that typos in a
/// manifest fail loudly instead of silently falling back to defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Return model: inline parameters or a CSV to fit.
    pub model: ModelSource,
    /// Risk-aversion levels (relative risk aversion at unit wealth), one
    /// table column each.
    pub gammas: Vec<f64>,
    /// Investment horizons in periods, one table block each.
    pub horizons: Vec<usize>,
    /// Simulated paths per (gamma, horizon) cell.
    pub repetitions: usize,
    /// Seed of the deterministic random-stream family.
    pub master_seed: u64,
    /// Per-period riskless rate, or a calibration rule (see [`RateSpec`]).
    pub riskless_rate: RateSpec,
    /// Strategies to evaluate on the common simulated paths.
    pub strategies: Vec<StrategyKind>,
    /// Wealth at the first decision date.
    #[serde(default = "default_initial_wealth")]
    pub initial_wealth: f64,
    /// State at the first decision date; defaults to the model's stationary
    /// mean.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<Vec<f64>>,
    /// Simulated paths used to train the predictor-linear policy.
    #[serde(default = "default_training_paths")]
    pub training_paths: usize,
    /// Directory for report, sample, distribution, and table files.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Identifier copied into the reports; defaults to a name derived from
    /// the model source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
}

/// Command-line overrides applied on top of a manifest; every flag is
/// optional and replaces the corresponding manifest value.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Replace the master seed.
    #[arg(long = "seed", value_name = "N")]
    pub seed: Option<u64>,
    /// Replace the repetition count per cell.
    #[arg(long = "reps", value_name = "N")]
    pub reps: Option<usize>,
    /// Replace the risk-aversion list (comma separated).
    #[arg(long = "gamma", value_name = "LIST", value_delimiter = ',')]
    pub gamma: Option<Vec<f64>>,
    /// Replace the horizon list (comma separated).
    #[arg(long = "horizon", value_name = "LIST", value_delimiter = ',')]
    pub horizon: Option<Vec<usize>>,
    /// Replace the riskless rate: a number or calibrate:<utility>,<gamma>,<T>.
    #[arg(long = "rf", value_name = "RATE")]
    pub rf: Option<String>,
    /// Replace the output directory.
    #[arg(long = "out", value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Replace the strategy list (comma separated).
    #[arg(long = "strategies", value_name = "LIST", value_delimiter = ',')]
    pub strategies: Option<Vec<StrategyKind>>,
}

impl ExperimentConfig {
    /// Reads and parses a manifest file.
    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        serde_json::from_str(&content)
            .with_context(|| format!("cannot parse config {}", path.display()))
    }

    /// Applies command-line overrides in place.
    pub fn apply(&mut self, overrides: &Overrides) -> Result<()> {
        if let Some(seed) = overrides.seed {
            self.master_seed = seed;
        }
        if let Some(reps) = overrides.reps {
            self.repetitions = reps;
        }
        if let Some(gamma) = &overrides.gamma {
            self.gammas = gamma.clone();
        }
        if let Some(horizon) = &overrides.horizon {
            self.horizons = horizon.clone();
        }
        if let Some(rf) = &overrides.rf {
            self.riskless_rate = RateSpec::parse(rf)?;
        }
        if let Some(out) = &overrides.out {
            self.output_dir = out.clone();
        }
        if let Some(strategies) = &overrides.strategies {
            self.strategies = strategies.clone();
        }
        Ok(())
    }

    /// Checks the manifest invariants that do not need the model.
    pub fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() {
            bail!("config: gammas must not be empty");
        }
        if self.horizons.is_empty() {
            bail!("config: horizons must not be empty");
        }
        if self.strategies.is_empty() {
            bail!("config: strategies must not be empty");
        }
        if self.repetitions == 0 {
            bail!("config: repetitions must be at least 1");
        }
        for (i, kind) in self.strategies.iter().enumerate() {
            if self.strategies[..i].contains(kind) {
                bail!("config: strategy {kind} is listed twice");
            }
        }
        for &horizon in &self.horizons {
            if horizon == 0 {
                bail!("config: horizons must be at least 1");
            }
        }
        Ok(())
    }

    /// Builds the model, resolves the riskless rate, and returns a runnable
    /// description of the experiment grid.
    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        self.validate()?;
        let (model, names, derived_id) = match &self.model {
            ModelSource::Inline(spec) => {
                let model = spec.build().context("invalid inline model")?;
                (model, spec.names.clone(), "inline-var1".to_string())
            }
            ModelSource::FitCsv { path, asset_coords } => {
                let (names, rows) = read_series_csv(path)
                    .with_context(|| format!("cannot read series {}", path.display()))?;
                let fit = fit_var1(&rows)
                    .with_context(|| format!("cannot fit model to {}", path.display()))?;
                let coords = asset_coords
                    .clone()
                    .unwrap_or_else(|| (0..fit.model.state_dim()).collect());
                let model = fit
                    .with_asset_coords(coords)
                    .context("invalid asset coordinates for fitted model")?;
                let id = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "fitted-var1".to_string());
                (model, Some(names), id)
            }
        };
        let initial_state = match &self.initial_state {
            Some(values) => {
                if values.len() != model.state_dim() {
                    bail!(
                        "config: initial_state has {} coordinates, the model state has {}",
                        values.len(),
                        model.state_dim()
                    );
                }
                Some(DVector::from_vec(values.clone()))
            }
            None => None,
        };
        Ok(ResolvedExperiment {
            riskless_rate: self.riskless_rate.resolve()?,
            model_id: self.model_id.clone().unwrap_or(derived_id),
            model,
            names,
            gammas: self.gammas.clone(),
            horizons: self.horizons.clone(),
            repetitions: self.repetitions,
            master_seed: self.master_seed,
            strategies: self.strategies.clone(),
            initial_wealth: self.initial_wealth,
            initial_state,
            training_paths: self.training_paths,
            output_dir: self.output_dir.clone(),
        })
    }
}

/// A manifest after model construction and rate resolution: everything needed
/// to run any cell of the experiment grid.
pub struct ResolvedExperiment {
    pub model: Var1Model,
    /// Series names parallel to the state coordinates, when known.
    pub names: Option<Vec<String>>,
    pub model_id: String,
    pub riskless_rate: f64,
    pub gammas: Vec<f64>,
    pub horizons: Vec<usize>,
    pub repetitions: usize,
    pub master_seed: u64,
    pub strategies: Vec<StrategyKind>,
    pub initial_wealth: f64,
    pub initial_state: Option<DVector<f64>>,
    pub training_paths: usize,
    pub output_dir: PathBuf,
}

impl ResolvedExperiment {
    /// Experiment setup for one grid cell.
    pub fn setup(&self, gamma: f64, horizon: usize) -> Result<ExperimentSetup> {
        Ok(ExperimentSetup {
            model: self.model.clone(),
            market: RisklessMarket::constant(self.riskless_rate, horizon)
                .context("invalid riskless market")?,
            strategies: self.strategies.clone(),
            gamma,
            repetitions: self.repetitions,
            master_seed: self.master_seed,
            initial_wealth: self.initial_wealth,
            initial_state: self.initial_state.clone(),
            training_paths: self.training_paths,
            model_id: self.model_id.clone(),
        })
    }

    /// The unique `(gamma, horizon)` cell, for commands that operate on a
    /// single experiment; errors when the grid is ambiguous.
    pub fn single_cell(&self) -> Result<(f64, usize)> {
        if self.gammas.len() != 1 || self.horizons.len() != 1 {
            bail!(
                "this command needs exactly one gamma and one horizon; the config lists {} \
                 gamma(s) and {} horizon(s) — narrow them with --gamma and --horizon",
                self.gammas.len(),
                self.horizons.len()
            );
        }
        Ok((self.gammas[0], self.horizons[0]))
    }

    /// Display name of asset `i` (an index into the model's tradable block).
    pub fn asset_name(&self, i: usize) -> String {
        let coord = self.model.asset_coords()[i];
        match &self.names {
            Some(names) if coord < names.len() => names[coord].clone(),
            _ => format!("asset{coord}"),
        }
    }
}
