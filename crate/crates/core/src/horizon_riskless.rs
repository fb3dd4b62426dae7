//! Multi-period optimal weights in the presence of a riskless asset.
//!
//! Wealth compounds as `W_{p+1} = W_p (R_{f,p} + w_p' (X_{p+1} - r_{f,p} 1))`
//! where `R_{f,p} = 1 + r_{f,p}` is the gross riskless rate of decision
//! period `p` and `w_p` the risky weights (the remainder sits in the riskless
//! asset). Maximising expected quadratic utility of terminal wealth gives a
//! purely speculative rule: a scalar bracket — driven by risk aversion,
//! current wealth, and the future riskless rates — times a solve of a
//! second-moment-like matrix against a mean-like excess-return vector.
//!
//! Provided routes:
//!
//! * [`recursion_iid`] — exact backward states under serial independence;
//! * [`recursion_weights`] — weights from a backward state;
//! * [`covariance_weights`] — the equivalent covariance-form closed form;
//! * [`local_approx_weights`] — the local approximation that uses only the current
//!   one-step conditional moments, applicable to serially dependent models
//!   (exact under independence);
//! * [`eta_recursion`] / [`approx_diagnostics`] — the scalar contraction
//!   sequence and moment summaries that describe the quality of that
//!   approximation;
//! * [`tangency_multiperiod`] — the fully-invested tangency rule, which is
//!   the same portfolio at every horizon, wealth level, and risk parameter.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::frontier::WeightVector;
use crate::linalg;
use crate::moments::MomentForecast;

/// Per-period riskless rates over an investment horizon.
///
/// `rate(p)` is the simple riskless return earned over decision period `p`
/// (0-based), i.e. between decisions `p` and `p + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RisklessMarket {
    rates: Vec<f64>,
}

impl RisklessMarket {
    /// Validates per-period rates; every gross rate `1 + r` must be strictly
    /// positive.
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::EmptyInput {
                context: "riskless market",
            });
        }
        for &r in &rates {
            if !(1.0 + r).is_finite() || 1.0 + r <= 0.0 {
                return Err(Error::InvalidArgument {
                    context: "riskless market",
                    message: format!("gross rate 1 + {r} must be positive and finite"),
                });
            }
        }
        Ok(Self { rates })
    }

    /// A constant rate over `horizon` periods.
    pub fn constant(r_f: f64, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::EmptyInput {
                context: "riskless market",
            });
        }
        Self::new(vec![r_f; horizon])
    }

    /// Number of periods covered.
    pub fn horizon(&self) -> usize {
        self.rates.len()
    }

    /// Simple rate of decision period `p`.
    pub fn rate(&self, p: usize) -> f64 {
        self.rates[p]
    }

    /// Gross rate `1 + r` of decision period `p`.
    pub fn gross(&self, p: usize) -> f64 {
        1.0 + self.rates[p]
    }

    /// Product of the gross rates of all periods strictly after `p`
    /// (empty product = 1 at the final decision).
    pub fn gross_product_after(&self, p: usize) -> f64 {
        self.rates[p + 1..].iter().map(|r| 1.0 + r).product()
    }

    /// Product of all gross rates (deterministic growth of a fully riskless
    /// account over the horizon).
    pub fn gross_product(&self) -> f64 {
        self.rates.iter().map(|r| 1.0 + r).product()
    }

    /// All per-period rates.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }
}

/// Backward-recursion state for one decision period in the riskless-asset
/// problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RisklessRecursionState {
    /// Second-moment-like matrix of excess returns (symmetric positive
    /// definite).
    pub a_breve: nalgebra::DMatrix<f64>,
    /// Mean-like excess-return vector.
    pub mu_breve_star: DVector<f64>,
    /// Squared generalised prediction gain
    /// `mu_breve_star' a_breve^-1 mu_breve_star`, in `[0, 1)`.
    pub s_tilde: f64,
    /// Expected contraction factor carried to the previous period,
    /// `1 - s_tilde`, in `(0, 1]`.
    pub eta_mean: f64,
}

impl RisklessRecursionState {
    /// Builds a state from its matrix and vector parts.
    pub fn from_parts(a_breve: nalgebra::DMatrix<f64>, mu_breve_star: DVector<f64>) -> Result<Self> {
        linalg::check_dim(&a_breve, mu_breve_star.len(), "riskless recursion state")?;
        let solved = linalg::solve_spd(&a_breve, &mu_breve_star, "riskless recursion state")?;
        let s_tilde = mu_breve_star.dot(&solved);
        Ok(Self {
            a_breve,
            mu_breve_star,
            s_tilde,
            eta_mean: 1.0 - s_tilde,
        })
    }

    /// Number of risky assets.
    pub fn dim(&self) -> usize {
        self.mu_breve_star.len()
    }
}

/// Exact backward states under serial independence.
///
/// `forecasts[p]` holds the conditional moments of the returns realised over
/// decision period `p`, and the market supplies the matching riskless rates;
/// the returned vector holds the state used at decision `p` in the same
/// position. The terminal state is the excess second moment and excess mean
/// of the final period; each earlier state scales its period's excess
/// moments by the next state's contraction factor `1 - s_tilde`.
pub fn recursion_iid(
    forecasts: &[MomentForecast],
    market: &RisklessMarket,
) -> Result<Vec<RisklessRecursionState>> {
    if forecasts.is_empty() {
        return Err(Error::EmptyInput {
            context: "riskless recursion",
        });
    }
    let horizon = forecasts.len();
    if market.horizon() != horizon {
        return Err(Error::Dimension {
            context: "riskless market horizon",
            expected: horizon,
            actual: market.horizon(),
        });
    }
    let mut backwards = Vec::with_capacity(horizon);
    let f_terminal = &forecasts[horizon - 1];
    let r_terminal = market.rate(horizon - 1);
    backwards.push(RisklessRecursionState::from_parts(
        f_terminal.excess_second_moment(r_terminal),
        f_terminal.excess_mean(r_terminal),
    )?);
    for p in (0..horizon - 1).rev() {
        let next = backwards.last().expect("state pushed above");
        let factor = 1.0 - next.s_tilde;
        if factor <= 0.0 {
            return Err(Error::InvalidArgument {
                context: "riskless recursion",
                message: "contraction factor is not positive".to_string(),
            });
        }
        let f = &forecasts[p];
        let r = market.rate(p);
        backwards.push(RisklessRecursionState::from_parts(
            f.excess_second_moment(r) * factor,
            f.excess_mean(r) * factor,
        )?);
    }
    backwards.reverse();
    Ok(backwards)
}

/// Backward sequence of expected contraction factors from the per-period
/// squared prediction gains `s_breve[p] = mu_excess' sigma^-1 mu_excess`.
///
/// The final entry is fixed at one; each earlier entry discounts its
/// period's gain by how much of it the later periods have already consumed:
/// `eta[p] = (1 + (1 - eta[p+1]) s_breve[p]) / (1 + s_breve[p])`. All
/// entries lie in `(0, 1]` for non-negative gains.
pub fn eta_recursion(s_breve: &[f64]) -> Result<Vec<f64>> {
    if s_breve.is_empty() {
        return Err(Error::EmptyInput {
            context: "contraction recursion",
        });
    }
    for &s in s_breve {
        if s < 0.0 || !s.is_finite() {
            return Err(Error::InvalidArgument {
                context: "contraction recursion",
                message: format!("squared prediction gain {s} must be non-negative"),
            });
        }
    }
    let horizon = s_breve.len();
    let mut eta = vec![1.0; horizon];
    for p in (0..horizon - 1).rev() {
        eta[p] = (1.0 + (1.0 - eta[p + 1]) * s_breve[p]) / (1.0 + s_breve[p]);
    }
    Ok(eta)
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

/// Decision period implied by a horizon and the count of periods remaining.
fn decision_period(horizon: usize, periods_remaining: usize) -> Result<usize> {
    if periods_remaining == 0 || periods_remaining > horizon {
        return Err(Error::InvalidArgument {
            context: "riskless-asset weights",
            message: format!(
                "periods_remaining must lie in 1..={horizon} (got {periods_remaining})"
            ),
        });
    }
    Ok(horizon - periods_remaining)
}

/// Scalar bracket multiplying the speculative solve:
/// `(1 / (alpha * wealth)) / prod_future_gross - current_gross`, where the
/// product runs over the gross riskless rates of all periods after the
/// current one.
pub fn speculative_bracket(
    market: &RisklessMarket,
    alpha: f64,
    wealth: f64,
    periods_remaining: usize,
) -> Result<f64> {
    check_alpha_wealth(alpha, wealth)?;
    let p = decision_period(market.horizon(), periods_remaining)?;
    Ok(1.0 / (alpha * wealth * market.gross_product_after(p)) - market.gross(p))
}

/// Optimal risky weights from a backward state:
/// `bracket * a_breve^-1 mu_breve_star`.
pub fn recursion_weights(
    state: &RisklessRecursionState,
    market: &RisklessMarket,
    alpha: f64,
    wealth: f64,
    periods_remaining: usize,
) -> Result<WeightVector> {
    let bracket = speculative_bracket(market, alpha, wealth, periods_remaining)?;
    let solved = linalg::solve_spd(
        &state.a_breve,
        &state.mu_breve_star,
        "riskless recursion state",
    )?;
    Ok(WeightVector::new(solved * bracket))
}

/// Covariance-form closed form under serial independence:
/// `(bracket / (1 + mu_excess' sigma^-1 mu_excess)) * sigma^-1 mu_excess`
/// for the current period's moments. Equivalent to [`recursion_weights`] on
/// the states of [`recursion_iid`].
pub fn covariance_weights(
    forecasts: &[MomentForecast],
    market: &RisklessMarket,
    alpha: f64,
    wealth: f64,
    periods_remaining: usize,
) -> Result<WeightVector> {
    if forecasts.len() != market.horizon() {
        return Err(Error::Dimension {
            context: "riskless market horizon",
            expected: forecasts.len(),
            actual: market.horizon(),
        });
    }
    let bracket = speculative_bracket(market, alpha, wealth, periods_remaining)?;
    let p = decision_period(market.horizon(), periods_remaining)?;
    let f = &forecasts[p];
    let excess = f.excess_mean(market.rate(p));
    let solved = linalg::solve_spd(f.sigma(), &excess, "riskless-asset covariance")?;
    let slope = bracket / (1.0 + excess.dot(&solved));
    Ok(WeightVector::new(solved * slope))
}

/// Local approximation of the multi-period rule: the same bracket as the
/// exact solution applied to the *current* one-step conditional moments,
/// `bracket * (sigma + mu_excess mu_excess')^-1 mu_excess`.
///
/// Needs no distributional knowledge beyond the next period, so it applies
/// to serially dependent models; under serial independence it coincides with
/// the exact rule because the deeper structure enters only as a scalar
/// factor that cancels in the solve.
pub fn local_approx_weights(
    forecast: &MomentForecast,
    market: &RisklessMarket,
    alpha: f64,
    wealth: f64,
    periods_remaining: usize,
) -> Result<WeightVector> {
    let bracket = speculative_bracket(market, alpha, wealth, periods_remaining)?;
    let p = decision_period(market.horizon(), periods_remaining)?;
    let r = market.rate(p);
    let excess = forecast.excess_mean(r);
    let second = forecast.excess_second_moment(r);
    let solved = linalg::solve_spd(&second, &excess, "local-approximation second moment")?;
    Ok(WeightVector::new(solved * bracket))
}

/// Moment summaries describing how far a serially dependent model is from
/// the independence regime in which the local approximation is exact: the
/// per-asset root mean squared one-step prediction errors (square roots of
/// the conditional variances) and the largest off-diagonal covariance
/// magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxDiagnostics {
    /// Square roots of the conditional variances, one per asset.
    pub mse_bound: DVector<f64>,
    /// Largest absolute off-diagonal conditional covariance (0 for one
    /// asset).
    pub sigma_mag: f64,
}

/// Diagnostics of the local approximation for one period's conditional
/// moments.
pub fn approx_diagnostics(forecast: &MomentForecast) -> ApproxDiagnostics {
    let sigma = forecast.sigma();
    let k = forecast.dim();
    let mse_bound = DVector::from_fn(k, |i, _| sigma[(i, i)].max(0.0).sqrt());
    let mut sigma_mag: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                sigma_mag = sigma_mag.max(sigma[(i, j)].abs());
            }
        }
    }
    ApproxDiagnostics { mse_bound, sigma_mag }
}

/// Fully-invested multi-period tangency portfolio,
/// `(sigma + e e')^-1 e / (1' (sigma + e e')^-1 e)` with `e = mu - r_f 1`.
///
/// Independent of the risk parameter, wealth, and the number of periods
/// remaining; coincides with the single-period tangency portfolio
/// ([`crate::frontier::tangency_weights`]) because the rank-one update only
/// rescales the solve.
pub fn tangency_multiperiod(forecast: &MomentForecast, r_f: f64) -> Result<WeightVector> {
    let excess = forecast.excess_mean(r_f);
    let second = forecast.excess_second_moment(r_f);
    let u = linalg::solve_spd(&second, &excess, "tangency second moment")?;
    let denom = u.sum();
    if denom.abs() < 1e-12 {
        return Err(Error::TangencyUndefined);
    }
    Ok(WeightVector::new(u / denom))
}
