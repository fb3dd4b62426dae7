//! Rebalancing strategies, wealth accounting, and Monte-Carlo strategy
//! comparison.
//!
//! A strategy maps the current state, wealth, and remaining horizon to risky
//! weights at every decision date; the remainder of wealth sits in the
//! riskless asset. [`monte_carlo_experiment`] simulates many state paths
//! under a first-order vector-autoregressive model, applies each requested
//! strategy to the same paths (common random numbers), and summarises the
//! terminal-utility samples by median, median absolute deviation, and the
//! frequency of beating the deterministic riskless-only outcome.
//!
//! Replication `i` draws its noise from an independent, deterministically
//! seeded random stream, so results are byte-identical across thread counts
//! and repeated runs with the same master seed.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontier::{self, WeightVector};
use crate::horizon_riskless::{self, RisklessMarket};
use crate::horizon_risky;
use crate::linalg;
use crate::moments::{standard_normal_noise, StatePath, Var1Model};
use crate::stats;

/// Tolerance on `1' w = 1` for markets without a riskless asset.
pub const BUDGET_TOL: f64 = 1e-8;

/// Minimum number of simulated paths accepted when training the linear
/// predictor policy.
pub const MIN_TRAINING_PATHS: usize = 1000;

/// Rebalancing rules available to the Monte-Carlo comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    /// Closed-form rule from the current one-step conditional moments and
    /// the future riskless rates; exact under serial independence and a
    /// local approximation otherwise.
    LocalApprox,
    /// Fully invested tangency portfolio of the conditional moments; the
    /// same portfolio at every wealth level, risk parameter, and horizon.
    Tangency,
    /// Fully invested global minimum-variance portfolio of the conditional
    /// covariance.
    #[serde(rename = "gmv")]
    GlobalMinVariance,
    /// Everything in the riskless asset; terminal wealth is deterministic.
    RisklessOnly,
    /// Risky weights linear in the predictor coordinates, trained up front
    /// on simulated paths by maximising a linearised terminal-wealth
    /// objective.
    PredictorLinear,
    /// Fully invested closed form treating the conditional-mean forecasts
    /// along the zero-innovation path as if serially independent; ignores
    /// the riskless asset.
    RiskyClosedForm,
    /// The same forecasts pushed through the exact backward recursion for
    /// markets without a riskless asset.
    RiskyRecursive,
}

impl StrategyKind {
    /// Stable machine-readable name (also the serialisation form).
    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::LocalApprox => "local-approx",
            StrategyKind::Tangency => "tangency",
            StrategyKind::GlobalMinVariance => "gmv",
            StrategyKind::RisklessOnly => "riskless-only",
            StrategyKind::PredictorLinear => "predictor-linear",
            StrategyKind::RiskyClosedForm => "risky-closed-form",
            StrategyKind::RiskyRecursive => "risky-recursive",
        }
    }

    /// Every available strategy, in display order.
    pub fn all() -> [StrategyKind; 7] {
        [
            StrategyKind::LocalApprox,
            StrategyKind::Tangency,
            StrategyKind::GlobalMinVariance,
            StrategyKind::RisklessOnly,
            StrategyKind::PredictorLinear,
            StrategyKind::RiskyClosedForm,
            StrategyKind::RiskyRecursive,
        ]
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::all()
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument {
                context: "strategy name",
                message: format!(
                    "unknown strategy {s:?}; expected one of {}",
                    StrategyKind::all().map(|k| k.name()).join(", ")
                ),
            })
    }
}

/// Maps relative risk aversion at unit wealth to the curvature parameter of
/// the quadratic objective `W - (alpha/2) W^2`: `alpha = gamma / (1 + gamma)`.
pub fn gamma_to_alpha(gamma: f64) -> Result<f64> {
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::NonPositive {
            name: "gamma",
            value: gamma,
        });
    }
    Ok(gamma / (1.0 + gamma))
}

/// Quadratic utility of terminal wealth, `W - (alpha/2) W^2`.
pub fn quadratic_utility(wealth: f64, alpha: f64) -> f64 {
    wealth - 0.5 * alpha * wealth * wealth
}

/// One-period wealth update in a market without a riskless asset:
/// `W * (1 + w' X)`. The weights must satisfy the budget constraint
/// `1' w = 1` up to [`BUDGET_TOL`].
pub fn wealth_step_risky(
    wealth: f64,
    weights: &WeightVector,
    returns: &DVector<f64>,
) -> Result<f64> {
    if weights.len() != returns.len() {
        return Err(Error::Dimension {
            context: "wealth update",
            expected: weights.len(),
            actual: returns.len(),
        });
    }
    let sum = weights.sum();
    if (sum - 1.0).abs() > BUDGET_TOL {
        return Err(Error::BudgetViolation { sum });
    }
    Ok(wealth * (1.0 + weights.as_vector().dot(returns)))
}

/// One-period wealth update with a riskless asset earning the simple rate
/// `r_f`: `W * (1 + r_f + w' (X - r_f 1))`. The riskless position is the
/// budget remainder `1 - 1' w` and may be negative (borrowing).
pub fn wealth_step_riskless(
    wealth: f64,
    weights: &WeightVector,
    returns: &DVector<f64>,
    r_f: f64,
) -> Result<f64> {
    if weights.len() != returns.len() {
        return Err(Error::Dimension {
            context: "wealth update",
            expected: weights.len(),
            actual: returns.len(),
        });
    }
    let excess = returns.add_scalar(-r_f);
    Ok(wealth * (1.0 + r_f + weights.as_vector().dot(&excess)))
}

/// Deterministic terminal utility of staying fully riskless over the whole
/// horizon.
pub fn riskless_only_utility(market: &RisklessMarket, alpha: f64, initial_wealth: f64) -> f64 {
    quadratic_utility(initial_wealth * market.gross_product(), alpha)
}

/// Risky weights that are linear in the predictor coordinates of the state:
/// `w = theta * z` with `z = (1, predictors...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPolicy {
    theta: DMatrix<f64>,
}

impl LinearPolicy {
    /// Coefficient matrix, one row per asset and one column per predictor
    /// entry (the first column multiplies the constant).
    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    /// Weights for a predictor vector.
    pub fn weights(&self, z: &DVector<f64>) -> Result<WeightVector> {
        if z.len() != self.theta.ncols() {
            return Err(Error::Dimension {
                context: "predictor vector",
                expected: self.theta.ncols(),
                actual: z.len(),
            });
        }
        Ok(WeightVector::new(&self.theta * z))
    }
}

/// Predictor vector of a state: a leading one followed by the state
/// coordinates that are not asset returns.
pub fn predictor_vector(model: &Var1Model, y: &DVector<f64>) -> Result<DVector<f64>> {
    if y.len() != model.state_dim() {
        return Err(Error::Dimension {
            context: "state vector",
            expected: model.state_dim(),
            actual: y.len(),
        });
    }
    let coords = model.predictor_coords();
    let mut z = DVector::zeros(coords.len() + 1);
    z[0] = 1.0;
    for (i, &c) in coords.iter().enumerate() {
        z[i + 1] = y[c];
    }
    Ok(z)
}

/// Trains the linear predictor policy on simulated paths.
///
/// Terminal wealth is linearised as
/// `W_T ~ W_0 * P * (1 + v' g)`, where `P` is the product of the gross
/// riskless rates, `v` stacks the columns of `theta`, and
/// `g = sum_t kron(z_t, X_{t+1} - r_{f,t} 1) / (1 + r_{f,t})` accumulates
/// the discounted predictor-weighted excess returns along one path. The
/// quadratic objective then has the exact sample optimiser
/// `v = (1 / (alpha W_0 P) - 1) * E[g g']^-1 E[g]` under the empirical
/// moments of the training paths; for a single period the linearisation is
/// exact, so the fit is the exact sample optimum.
pub fn fit_linear_policy(
    model: &Var1Model,
    market: &RisklessMarket,
    alpha: f64,
    initial_wealth: f64,
    paths: &[StatePath],
) -> Result<LinearPolicy> {
    check_positive("alpha", alpha)?;
    check_positive("initial wealth", initial_wealth)?;
    if paths.len() < MIN_TRAINING_PATHS {
        return Err(Error::TooFewObservations {
            context: "linear-policy training paths",
            needed: MIN_TRAINING_PATHS,
            got: paths.len(),
        });
    }
    let horizon = market.horizon();
    let k = model.asset_dim();
    let pdim = model.predictor_coords().len() + 1;
    let dim = k * pdim;
    let mut g_mean = DVector::zeros(dim);
    let mut gg_mean = DMatrix::zeros(dim, dim);
    for path in paths {
        if path.horizon() != horizon {
            return Err(Error::Dimension {
                context: "training path horizon",
                expected: horizon,
                actual: path.horizon(),
            });
        }
        let mut g = DVector::zeros(dim);
        for t in 0..horizon {
            let z = predictor_vector(model, path.state(t))?;
            let x = path.returns(t);
            if x.len() != k {
                return Err(Error::Dimension {
                    context: "training path returns",
                    expected: k,
                    actual: x.len(),
                });
            }
            let excess = x.add_scalar(-market.rate(t));
            g += linalg::kron_vec(&z, &excess) / market.gross(t);
        }
        g_mean += &g;
        gg_mean += &g * g.transpose();
    }
    let n = paths.len() as f64;
    g_mean /= n;
    gg_mean /= n;
    let target = 1.0 / (alpha * initial_wealth * market.gross_product()) - 1.0;
    let v = linalg::solve_spd(
        &linalg::symmetrize(&gg_mean),
        &g_mean,
        "policy second moment",
    )? * target;
    Ok(LinearPolicy {
        theta: DMatrix::from_column_slice(k, pdim, v.as_slice()),
    })
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::NonPositive { name, value });
    }
    Ok(())
}

/// Risky weights a strategy chooses at one decision date.
///
/// `periods_remaining` counts the current period, so `1` denotes the final
/// decision; the decision date is `market.horizon() - periods_remaining`.
/// `policy` must carry the trained linear policy when `kind` is
/// [`StrategyKind::PredictorLinear`] and is ignored otherwise.
#[allow(clippy::too_many_arguments)]
pub fn policy_weights(
    kind: StrategyKind,
    model: &Var1Model,
    market: &RisklessMarket,
    alpha: f64,
    wealth: f64,
    periods_remaining: usize,
    state: &DVector<f64>,
    policy: Option<&LinearPolicy>,
) -> Result<WeightVector> {
    let horizon = market.horizon();
    if periods_remaining == 0 || periods_remaining > horizon {
        return Err(Error::InvalidArgument {
            context: "strategy weights",
            message: format!(
                "periods_remaining must lie in 1..={horizon} (got {periods_remaining})"
            ),
        });
    }
    let p = horizon - periods_remaining;
    match kind {
        StrategyKind::LocalApprox => {
            let forecast = model.conditional_moments(state)?;
            horizon_riskless::local_approx_weights(
                &forecast,
                market,
                alpha,
                wealth,
                periods_remaining,
            )
        }
        StrategyKind::Tangency => {
            let forecast = model.conditional_moments(state)?;
            horizon_riskless::tangency_multiperiod(&forecast, market.rate(p))
        }
        StrategyKind::GlobalMinVariance => {
            let forecast = model.conditional_moments(state)?;
            frontier::gmv_weights(forecast.sigma())
        }
        StrategyKind::RisklessOnly => Ok(WeightVector::new(DVector::zeros(model.asset_dim()))),
        StrategyKind::PredictorLinear => {
            let policy = policy.ok_or(Error::InvalidArgument {
                context: "strategy weights",
                message: "the predictor-linear strategy needs a trained policy".to_string(),
            })?;
            policy.weights(&predictor_vector(model, state)?)
        }
        StrategyKind::RiskyClosedForm => {
            let forecasts = model.mean_path_forecasts(state, periods_remaining)?;
            horizon_risky::closed_form_weights(&forecasts, alpha, wealth, periods_remaining)
        }
        StrategyKind::RiskyRecursive => {
            let forecasts = model.mean_path_forecasts(state, periods_remaining)?;
            let states = horizon_risky::recursion_iid(&forecasts)?;
            horizon_risky::recursion_weights(&states[0], alpha, wealth)
        }
    }
}

/// Applies one strategy along one simulated path and returns terminal
/// wealth.
///
/// Every strategy trades in the market with the riskless asset; the fully
/// invested rules keep a zero riskless position, so their wealth dynamics
/// coincide with the purely risky market. If wealth is non-positive at a
/// decision date the account freezes in the riskless asset for the rest of
/// the horizon, since the rebalancing rules presume positive wealth.
pub fn run_path(
    kind: StrategyKind,
    model: &Var1Model,
    market: &RisklessMarket,
    alpha: f64,
    initial_wealth: f64,
    path: &StatePath,
    policy: Option<&LinearPolicy>,
) -> Result<f64> {
    check_positive("alpha", alpha)?;
    check_positive("initial wealth", initial_wealth)?;
    let horizon = market.horizon();
    if path.horizon() != horizon {
        return Err(Error::Dimension {
            context: "simulated path horizon",
            expected: horizon,
            actual: path.horizon(),
        });
    }
    let mut wealth = initial_wealth;
    for p in 0..horizon {
        let weights = if wealth > 0.0 {
            policy_weights(
                kind,
                model,
                market,
                alpha,
                wealth,
                horizon - p,
                path.state(p),
                policy,
            )?
        } else {
            WeightVector::new(DVector::zeros(model.asset_dim()))
        };
        wealth = wealth_step_riskless(wealth, &weights, path.returns(p), market.rate(p))?;
    }
    Ok(wealth)
}

/// Full description of one Monte-Carlo strategy comparison.
#[derive(Debug, Clone)]
pub struct ExperimentSetup {
    /// State dynamics and asset selection.
    pub model: Var1Model,
    /// Riskless rates; the market horizon is the investment horizon.
    pub market: RisklessMarket,
    /// Strategies to evaluate on the common simulated paths (no duplicates).
    pub strategies: Vec<StrategyKind>,
    /// Relative risk aversion at unit wealth.
    pub gamma: f64,
    /// Number of simulated paths.
    pub repetitions: usize,
    /// Seed of the deterministic random-stream family.
    pub master_seed: u64,
    /// Wealth at the first decision date.
    pub initial_wealth: f64,
    /// State at the first decision date; defaults to the stationary mean.
    pub initial_state: Option<DVector<f64>>,
    /// Simulated paths used to train the linear predictor policy (only read
    /// when that strategy is requested).
    pub training_paths: usize,
    /// Free-form identifier copied into the report.
    pub model_id: String,
}

/// Summary of one strategy's terminal-utility sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutcome {
    /// Which strategy.
    pub kind: StrategyKind,
    /// Sample median of terminal utility.
    pub median_utility: f64,
    /// Median absolute deviation of terminal utility.
    pub mad_utility: f64,
    /// Fraction of paths on which the strategy's terminal utility strictly
    /// exceeds the deterministic riskless-only utility.
    pub exceedance_vs_riskless_only: f64,
    /// Per-path terminal utilities, in repetition order. Not serialised with
    /// the report; written separately as sample files.
    #[serde(skip)]
    pub samples: Vec<f64>,
}

/// Results of a Monte-Carlo strategy comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    /// Identifier copied from the setup.
    pub model_id: String,
    /// Seed of the random-stream family that generated the paths.
    pub master_seed: u64,
    /// Number of simulated paths.
    pub repetitions: usize,
    /// Relative risk aversion at unit wealth.
    pub gamma: f64,
    /// Number of decision periods.
    pub horizon: usize,
    /// Wealth at the first decision date.
    pub initial_wealth: f64,
    /// Per-period riskless rates.
    pub riskless_rates: Vec<f64>,
    /// Deterministic terminal utility of the riskless-only strategy, the
    /// reference level for the exceedance frequencies.
    pub riskless_only_utility: f64,
    /// One summary per requested strategy, in request order.
    pub strategies: Vec<StrategyOutcome>,
}

impl SimulationReport {
    /// Outcome of one strategy, if present.
    pub fn outcome(&self, kind: StrategyKind) -> Option<&StrategyOutcome> {
        self.strategies.iter().find(|o| o.kind == kind)
    }
}

/// Runs the Monte-Carlo comparison described by `setup`.
///
/// Replication `i` draws from stream `i` of a counter-based generator seeded
/// with the master seed, and the linear-policy training paths use a reserved
/// stream, so each strategy's utility sample is invariant to which other
/// strategies are requested, to the number of threads, and to repetition
/// count extensions (existing paths keep their draws).
pub fn monte_carlo_experiment(setup: &ExperimentSetup) -> Result<SimulationReport> {
    let alpha = gamma_to_alpha(setup.gamma)?;
    check_positive("initial wealth", setup.initial_wealth)?;
    if setup.repetitions == 0 {
        return Err(Error::EmptyInput {
            context: "experiment repetitions",
        });
    }
    if setup.strategies.is_empty() {
        return Err(Error::EmptyInput {
            context: "experiment strategies",
        });
    }
    for (i, kind) in setup.strategies.iter().enumerate() {
        if setup.strategies[..i].contains(kind) {
            return Err(Error::InvalidArgument {
                context: "experiment strategies",
                message: format!("strategy {kind} is listed twice"),
            });
        }
    }
    let horizon = setup.market.horizon();
    let y0 = match &setup.initial_state {
        Some(y) => {
            if y.len() != setup.model.state_dim() {
                return Err(Error::Dimension {
                    context: "initial state",
                    expected: setup.model.state_dim(),
                    actual: y.len(),
                });
            }
            y.clone()
        }
        None => setup.model.stationary_mean()?,
    };
    let policy = if setup.strategies.contains(&StrategyKind::PredictorLinear) {
        Some(train_linear_policy(setup, alpha, &y0)?)
    } else {
        None
    };

    let reference_utility = riskless_only_utility(&setup.market, alpha, setup.initial_wealth);

    let per_path: Vec<Vec<f64>> = (0..setup.repetitions)
        .into_par_iter()
        .map(|rep| -> Result<Vec<f64>> {
            let mut rng = ChaCha8Rng::seed_from_u64(setup.master_seed);
            rng.set_stream(rep as u64);
            let noise = standard_normal_noise(&mut rng, horizon, setup.model.state_dim());
            let path = setup.model.simulate_path(&y0, horizon, &noise)?;
            setup
                .strategies
                .iter()
                .map(|&kind| {
                    run_path(
                        kind,
                        &setup.model,
                        &setup.market,
                        alpha,
                        setup.initial_wealth,
                        &path,
                        policy.as_ref(),
                    )
                    .map(|w| quadratic_utility(w, alpha))
                    .map_err(|e| Error::Strategy {
                        repetition: rep,
                        source: Box::new(e),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let strategies = setup
        .strategies
        .iter()
        .enumerate()
        .map(|(j, &kind)| {
            let samples: Vec<f64> = per_path.iter().map(|row| row[j]).collect();
            let median_utility = stats::median(&samples).expect("repetitions is positive");
            let mad_utility =
                stats::median_absolute_deviation(&samples).expect("repetitions is positive");
            let exceed = samples.iter().filter(|&&u| u > reference_utility).count();
            StrategyOutcome {
                kind,
                median_utility,
                mad_utility,
                exceedance_vs_riskless_only: exceed as f64 / samples.len() as f64,
                samples,
            }
        })
        .collect();

    Ok(SimulationReport {
        model_id: setup.model_id.clone(),
        master_seed: setup.master_seed,
        repetitions: setup.repetitions,
        gamma: setup.gamma,
        horizon,
        initial_wealth: setup.initial_wealth,
        riskless_rates: setup.market.rates().to_vec(),
        riskless_only_utility: reference_utility,
        strategies,
    })
}

/// Simulates the training paths on the reserved random stream and fits the
/// linear predictor policy.
///
/// The reserved stream keeps the trained coefficients independent of the
/// evaluation paths, so every strategy sees the same simulated market whether
/// or not the predictor-linear strategy is requested. `setup.strategies` is
/// ignored here; only the model, market, seed, training-path count, and
/// initial conditions matter.
pub fn train_linear_policy(
    setup: &ExperimentSetup,
    alpha: f64,
    y0: &DVector<f64>,
) -> Result<LinearPolicy> {
    let horizon = setup.market.horizon();
    let mut rng = ChaCha8Rng::seed_from_u64(setup.master_seed);
    rng.set_stream(u64::MAX);
    let mut paths = Vec::with_capacity(setup.training_paths);
    for _ in 0..setup.training_paths {
        let noise = standard_normal_noise(&mut rng, horizon, setup.model.state_dim());
        paths.push(setup.model.simulate_path(y0, horizon, &noise)?);
    }
    fit_linear_policy(
        &setup.model,
        &setup.market,
        alpha,
        setup.initial_wealth,
        &paths,
    )
}

/// Solves for the constant riskless rate whose deterministic riskless-only
/// terminal utility equals `target_utility`, for unit initial wealth.
///
/// The objective `u((1 + r)^horizon)` is increasing in `r` while terminal
/// wealth stays below the satiation level `1/alpha`, so the root on that
/// branch is unique; it is found by bisection to within `1e-12`. Targets
/// outside `(0, 1/(2 alpha)]` are rejected because no rate attains them
/// below satiation.
pub fn calibrate_riskless_rate(target_utility: f64, gamma: f64, horizon: usize) -> Result<f64> {
    let alpha = gamma_to_alpha(gamma)?;
    if horizon == 0 {
        return Err(Error::EmptyInput {
            context: "calibration horizon",
        });
    }
    let max_utility = 0.5 / alpha;
    if !(target_utility > 0.0 && target_utility <= max_utility) {
        return Err(Error::Calibration {
            message: format!(
                "target utility {target_utility} is outside (0, {max_utility}], the attainable \
                 range below satiation"
            ),
        });
    }
    let exponent = horizon as i32;
    let utility_at = |r: f64| quadratic_utility((1.0 + r).powi(exponent), alpha);
    let mut lo = -0.99;
    let mut hi = (1.0 / alpha).powf(1.0 / horizon as f64) - 1.0;
    if utility_at(lo) > target_utility {
        return Err(Error::Calibration {
            message: format!("target utility {target_utility} is below the bisection bracket"),
        });
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if utility_at(mid) < target_utility {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
