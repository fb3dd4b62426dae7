//! Multi-period optimal weights when every asset is risky.
//!
//! The investor rebalances at decisions `p = 0, ..., T-1` and maximises the
//! expected quadratic utility `E[W_T - (alpha/2) W_T^2]` of terminal wealth,
//! with wealth compounding as `W_{p+1} = W_p * w_p' (1 + X_{p+1})`.
//!
//! The optimal rule at each decision is an affine combination of a
//! fully-invested base portfolio and a self-financing speculative portfolio,
//! with coefficients produced by a backward recursion over per-period states
//! ([`RiskyRecursionState`]). Three routes to those states are provided:
//!
//! * [`recursion_iid`] — exact closed-form backward pass when returns are
//!   serially independent (per-period moments may still differ);
//! * [`recursion_mc`] — nested Monte-Carlo estimation of the conditional
//!   expectations for serially dependent models, whose cost grows
//!   exponentially with the horizon;
//! * [`closed_form_weights`] — a further reduction under independence that
//!   skips the state sequence entirely and prices the speculative demand
//!   through a product of scalar adjustment factors.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::frontier::{self, WeightVector};
use crate::linalg;
use crate::moments::{standard_normal_noise, MomentForecast, Var1Model};

/// Smallest admissible inner sample count for the nested Monte-Carlo
/// recursion.
pub const MIN_INNER_SAMPLES: usize = 100;

/// Default horizon cap for the nested Monte-Carlo recursion; the cost grows
/// like `inner_samples^(horizon - 1)`.
pub const DEFAULT_MAX_NESTED_HORIZON: usize = 6;

/// Backward-recursion state attached to one decision period.
///
/// For the decision at period `p`, `a` plays the role of a second-moment
/// matrix of next-period gross returns (exactly that at the final decision,
/// and a continuation-weighted expectation earlier), and `mu_star` the
/// matching mean-like vector. `q_tilde`, `r` and `v` are the derived
/// quantities reused by the next-earlier step:
///
/// * `q_tilde = a^-1 - a^-1 1 1' a^-1 / (1' a^-1 1)`,
/// * `r = 1' a^-1 mu_star / (1' a^-1 1)`,
/// * `v = 1 / (1' a^-1 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskyRecursionState {
    /// Second-moment-like matrix for the period (symmetric positive
    /// definite).
    pub a: DMatrix<f64>,
    /// Mean-like vector for the period.
    pub mu_star: DVector<f64>,
    /// Hedge matrix of `a`; annihilates the ones vector.
    pub q_tilde: DMatrix<f64>,
    /// Normalised projection of `mu_star` (continuation return level).
    pub r: f64,
    /// Reciprocal concentration of `a` (continuation variance level).
    pub v: f64,
}

impl RiskyRecursionState {
    /// Builds a state (and its derived quantities) from the `a` matrix and
    /// `mu_star` vector.
    pub fn from_parts(a: DMatrix<f64>, mu_star: DVector<f64>) -> Result<Self> {
        linalg::check_dim(&a, mu_star.len(), "recursion state matrix")?;
        let chol = linalg::spd_cholesky(&a, "recursion state matrix")?;
        let ones = linalg::ones(mu_star.len());
        let a_inv_one = chol.solve(&ones);
        let concentration = a_inv_one.sum(); // 1' a^-1 1 > 0 for SPD a
        let v = 1.0 / concentration;
        let r = a_inv_one.dot(&mu_star) * v;
        let a_inv = chol.inverse();
        let q_tilde = &a_inv - &a_inv_one * a_inv_one.transpose() * v;
        Ok(Self {
            a,
            mu_star,
            q_tilde,
            r,
            v,
        })
    }

    /// Number of assets.
    pub fn dim(&self) -> usize {
        self.mu_star.len()
    }

    /// Fully-invested base portfolio `a^-1 1 / (1' a^-1 1)`.
    pub fn base_portfolio(&self) -> Result<DVector<f64>> {
        let ones = linalg::ones(self.dim());
        let u = linalg::solve_spd(&self.a, &ones, "recursion state matrix")?;
        Ok(&u / u.sum())
    }
}

/// Exact backward pass for serially independent returns.
///
/// `forecasts[p]` holds the moments of the returns realised over decision
/// period `p`; the returned vector holds the state used at decision `p` in
/// the same position. The terminal state uses the gross second moment of the
/// final period directly; each earlier state scales the period's gross
/// second moment by the next state's `v` and its gross mean by the next
/// state's `r`.
pub fn recursion_iid(forecasts: &[MomentForecast]) -> Result<Vec<RiskyRecursionState>> {
    if forecasts.is_empty() {
        return Err(Error::EmptyInput {
            context: "independent-returns recursion",
        });
    }
    let horizon = forecasts.len();
    let mut backwards = Vec::with_capacity(horizon);
    let terminal = forecasts[horizon - 1].clone();
    backwards.push(RiskyRecursionState::from_parts(
        terminal.gross_second_moment(),
        terminal.gross_mean(),
    )?);
    for p in (0..horizon - 1).rev() {
        let next = backwards.last().expect("state pushed above");
        let f = &forecasts[p];
        let a = f.gross_second_moment() * next.v;
        let mu_star = f.gross_mean() * next.r;
        backwards.push(RiskyRecursionState::from_parts(a, mu_star)?);
    }
    backwards.reverse();
    Ok(backwards)
}

/// Recursion state for the next decision given conditioning state `y_cond`
/// with `remaining` periods to go, estimated by nested Monte Carlo.
///
/// With one period remaining the state is the exact conditional gross second
/// moment and gross mean. With more, the continuation levels `(v, r)` are
/// recomputed per inner draw from the recursion one step ahead, so the cost
/// is `inner_samples^(remaining - 1)` terminal evaluations. The averaged
/// matrix is symmetrised before factorisation. Deterministic given the state
/// of `rng`.
pub fn nested_state<R: Rng + ?Sized>(
    model: &Var1Model,
    y_cond: &DVector<f64>,
    remaining: usize,
    inner_samples: usize,
    rng: &mut R,
) -> Result<RiskyRecursionState> {
    if remaining == 0 {
        return Err(Error::InvalidArgument {
            context: "nested Monte-Carlo state",
            message: "at least one period must remain".to_string(),
        });
    }
    let forecast = model.conditional_moments(y_cond)?;
    if remaining == 1 {
        return RiskyRecursionState::from_parts(
            forecast.gross_second_moment(),
            forecast.gross_mean(),
        );
    }
    let k = model.asset_dim();
    let mut acc_a = DMatrix::zeros(k, k);
    let mut acc_mu = DVector::zeros(k);
    for _ in 0..inner_samples {
        let draw = standard_normal_noise(rng, 1, model.state_dim());
        let y_next = model.step(y_cond, &draw[0])?;
        let continuation = nested_state(model, &y_next, remaining - 1, inner_samples, rng)?;
        let gross = model.select_assets(&y_next).add_scalar(1.0);
        acc_a += &gross * gross.transpose() * continuation.v;
        acc_mu += gross * continuation.r;
    }
    let scale = 1.0 / inner_samples as f64;
    let a = linalg::symmetrize(&(acc_a * scale));
    RiskyRecursionState::from_parts(a, acc_mu * scale)
}

/// Nested Monte-Carlo backward states for a serially dependent model, with
/// the default horizon cap of [`DEFAULT_MAX_NESTED_HORIZON`].
pub fn recursion_mc<R: Rng + ?Sized>(
    model: &Var1Model,
    y_now: &DVector<f64>,
    horizon: usize,
    inner_samples: usize,
    rng: &mut R,
) -> Result<Vec<RiskyRecursionState>> {
    recursion_mc_with_limit(
        model,
        y_now,
        horizon,
        inner_samples,
        DEFAULT_MAX_NESTED_HORIZON,
        rng,
    )
}

/// Nested Monte-Carlo backward states with an explicit horizon cap.
///
/// The state for the current decision conditions on `y_now` and is the
/// honest nested estimate. States for later decisions depend on information
/// that has not been realised yet; they are evaluated along the
/// zero-innovation mean path of the state process, which is exact when the
/// transition matrix vanishes (serial independence).
pub fn recursion_mc_with_limit<R: Rng + ?Sized>(
    model: &Var1Model,
    y_now: &DVector<f64>,
    horizon: usize,
    inner_samples: usize,
    max_horizon: usize,
    rng: &mut R,
) -> Result<Vec<RiskyRecursionState>> {
    if horizon == 0 {
        return Err(Error::InvalidArgument {
            context: "nested Monte-Carlo recursion",
            message: "horizon must be at least 1".to_string(),
        });
    }
    if horizon > max_horizon {
        return Err(Error::HorizonTooDeep {
            horizon,
            max: max_horizon,
        });
    }
    if inner_samples < MIN_INNER_SAMPLES {
        return Err(Error::InvalidArgument {
            context: "nested Monte-Carlo recursion",
            message: format!(
                "inner_samples must be at least {MIN_INNER_SAMPLES} (got {inner_samples})"
            ),
        });
    }
    let mut states = Vec::with_capacity(horizon);
    let mut y_hat = y_now.clone();
    for p in 0..horizon {
        states.push(nested_state(
            model,
            &y_hat,
            horizon - p,
            inner_samples,
            rng,
        )?);
        y_hat = model.step_mean(&y_hat)?;
    }
    Ok(states)
}

fn check_alpha_wealth(alpha: f64, wealth: f64) -> Result<()> {
    if alpha <= 0.0 {
        return Err(Error::NonPositive {
            name: "alpha",
            value: alpha,
        });
    }
    if wealth <= 0.0 {
        return Err(Error::NonPositive {
            name: "wealth",
            value: wealth,
        });
    }
    Ok(())
}

/// Optimal fully-invested weights at the decision whose backward state is
/// `state`, for risk parameter `alpha` and current wealth:
/// `base + (1 / (alpha * wealth)) * q_tilde * mu_star`.
///
/// The weights sum to one because `q_tilde` annihilates the ones vector.
pub fn recursion_weights(
    state: &RiskyRecursionState,
    alpha: f64,
    wealth: f64,
) -> Result<WeightVector> {
    check_alpha_wealth(alpha, wealth)?;
    let base = state.base_portfolio()?;
    let speculative = &state.q_tilde * &state.mu_star;
    Ok(WeightVector::new(
        base + speculative / (alpha * wealth),
    ))
}

/// Scalar adjustment factor of one period under independence:
/// `(1 + r_gmv) / ((1 + r_gmv)^2 + (1 + s) v_gmv)`.
///
/// Equal to `1' (sigma + m m')^-1 m` for the gross mean `m = 1 + mu`.
fn period_adjustment(forecast: &MomentForecast) -> Result<f64> {
    let stats = frontier::frontier_stats(forecast.mu(), forecast.sigma())?;
    let gross = 1.0 + stats.r_gmv;
    Ok(gross / (gross * gross + (1.0 + stats.s) * stats.v_gmv))
}

/// Speculative slope of the closed-form independent-returns rule, together
/// with the frontier statistics of the decision period.
fn closed_form_slope(
    forecasts: &[MomentForecast],
    alpha: f64,
    wealth: f64,
    periods_remaining: usize,
) -> Result<(f64, usize)> {
    check_alpha_wealth(alpha, wealth)?;
    let horizon = forecasts.len();
    if periods_remaining == 0 || periods_remaining > horizon {
        return Err(Error::InvalidArgument {
            context: "independent-returns weights",
            message: format!(
                "periods_remaining must lie in 1..={horizon} (got {periods_remaining})"
            ),
        });
    }
    let current = horizon - periods_remaining;
    // Product of the adjustment factors of all periods after the next one;
    // empty product (final decision) is 1.
    let mut product = 1.0;
    for f in &forecasts[current + 1..] {
        product *= period_adjustment(f)?;
    }
    let stats = frontier::frontier_stats(forecasts[current].mu(), forecasts[current].sigma())?;
    let slope = (product / (alpha * wealth) - 1.0 - stats.r_gmv) / (1.0 + stats.s);
    Ok((slope, current))
}

/// Closed-form optimal fully-invested weights under serial independence:
/// `gmv + slope * Q * mu`, where the slope folds the whole continuation into
/// a product of per-period scalar adjustments.
///
/// `periods_remaining = horizon - decision` counts the current period, so
/// `1` denotes the final decision.
pub fn closed_form_weights(
    forecasts: &[MomentForecast],
    alpha: f64,
    wealth: f64,
    periods_remaining: usize,
) -> Result<WeightVector> {
    let (slope, current) = closed_form_slope(forecasts, alpha, wealth, periods_remaining)?;
    let f = &forecasts[current];
    let gmv = frontier::gmv_weights(f.sigma())?;
    let q = frontier::q_matrix(f.sigma())?;
    Ok(WeightVector::new(
        gmv.into_vector() + q * f.mu() * slope,
    ))
}

/// Expected-return target of the equivalent constrained minimum-variance
/// program: the closed-form weights of [`closed_form_weights`] solve
/// `min w' sigma w` subject to full investment and `mu' w` equal to this
/// target.
pub fn markowitz_target(
    forecasts: &[MomentForecast],
    alpha: f64,
    wealth: f64,
    periods_remaining: usize,
) -> Result<f64> {
    let (slope, current) = closed_form_slope(forecasts, alpha, wealth, periods_remaining)?;
    let f = &forecasts[current];
    let stats = frontier::frontier_stats(f.mu(), f.sigma())?;
    Ok(stats.r_gmv + slope * stats.s)
}
