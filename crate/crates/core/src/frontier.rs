//! Single-period mean-variance building blocks.
//!
//! Every multi-period rule in this crate decomposes into the objects defined
//! here: the global minimum-variance (GMV) portfolio, the hedge matrix `Q`
//! that spans the efficient frontier around it, the frontier statistics
//! `(r_gmv, v_gmv, s)`, the tangency portfolio, and the slope reductions that
//! translate between a second-moment parameterisation (`sigma + m m'` for a
//! mean-like vector `m`) and the plain covariance parameterisation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Summary statistics of the efficient frontier: the expected return and
/// variance of the GMV portfolio and the slope parameter `s = mu' Q mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontierStats {
    /// Expected return of the global minimum-variance portfolio.
    pub r_gmv: f64,
    /// Variance of the global minimum-variance portfolio.
    pub v_gmv: f64,
    /// Frontier slope `mu' Q mu` (non-negative).
    pub s: f64,
}

/// Portfolio weights over the risky assets.
///
/// Fully-invested portfolios sum to one; when a riskless asset exists the
/// remainder `1 - sum` is the riskless position.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(DVector<f64>);

impl WeightVector {
    /// Wraps a weight vector without constraints.
    pub fn new(w: DVector<f64>) -> Self {
        Self(w)
    }

    /// Number of risky assets.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// True when there are no assets.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sum of the risky weights.
    pub fn sum(&self) -> f64 {
        self.0.sum()
    }

    /// Weight of the riskless position implied by the risky weights.
    pub fn riskless_share(&self) -> f64 {
        1.0 - self.sum()
    }

    /// Underlying vector.
    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    /// Consumes the wrapper.
    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for WeightVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Global minimum-variance portfolio `sigma^-1 1 / (1' sigma^-1 1)`.
pub fn gmv_weights(sigma: &DMatrix<f64>) -> Result<WeightVector> {
    let ones = linalg::ones(sigma.nrows());
    let u = linalg::solve_spd(sigma, &ones, "GMV covariance")?;
    let denom = u.sum();
    Ok(WeightVector(u / denom))
}

/// Hedge matrix `Q = sigma^-1 - sigma^-1 1 1' sigma^-1 / (1' sigma^-1 1)`.
///
/// `Q` annihilates the ones vector and reproduces itself through
/// `Q sigma Q = Q`; it is materialised explicitly because the allocation
/// formulas use it as a matrix in its own right.
pub fn q_matrix(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = linalg::spd_cholesky(sigma, "hedge-matrix covariance")?;
    let inv = chol.inverse();
    let u = &inv * linalg::ones(sigma.nrows());
    let denom = u.sum();
    Ok(inv - &u * u.transpose() / denom)
}

/// Frontier statistics of a `(mu, sigma)` pair.
pub fn frontier_stats(mu: &DVector<f64>, sigma: &DMatrix<f64>) -> Result<FrontierStats> {
    linalg::check_dim(sigma, mu.len(), "frontier covariance")?;
    let chol = linalg::spd_cholesky(sigma, "frontier covariance")?;
    let ones = linalg::ones(mu.len());
    let u = chol.solve(&ones);
    let sigma_inv_mu = chol.solve(mu);
    let c = u.sum(); // 1' sigma^-1 1 > 0
    let r_gmv = u.dot(mu) / c;
    let v_gmv = 1.0 / c;
    // s = mu' Q mu = mu' sigma^-1 mu - (1' sigma^-1 mu)^2 / (1' sigma^-1 1).
    let b = mu.dot(&sigma_inv_mu);
    let a = u.dot(mu);
    let s = b - a * a / c;
    Ok(FrontierStats { r_gmv, v_gmv, s })
}

/// Fully-invested single-period optimum for quadratic utility with risk
/// parameter `alpha` at unit wealth: `gmv + (1/alpha) Q mu`.
pub fn markowitz_weights(
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
    alpha: f64,
) -> Result<WeightVector> {
    if alpha <= 0.0 {
        return Err(Error::NonPositive {
            name: "alpha",
            value: alpha,
        });
    }
    linalg::check_dim(sigma, mu.len(), "Markowitz covariance")?;
    let gmv = gmv_weights(sigma)?;
    let q = q_matrix(sigma)?;
    Ok(WeightVector(gmv.into_vector() + (q * mu) / alpha))
}

/// Tangency portfolio `sigma^-1 (mu - r_f 1)`, normalised to full investment.
///
/// Undefined when `1' sigma^-1 (mu - r_f 1)` vanishes (the excess-return
/// direction carries no net exposure).
pub fn tangency_weights(
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
    r_f: f64,
) -> Result<WeightVector> {
    linalg::check_dim(sigma, mu.len(), "tangency covariance")?;
    let excess = mu.add_scalar(-r_f);
    let u = linalg::solve_spd(sigma, &excess, "tangency covariance")?;
    let denom = u.sum();
    if denom.abs() < 1e-12 {
        return Err(Error::TangencyUndefined);
    }
    Ok(WeightVector(u / denom))
}

/// Converts the speculative slope of a fully-invested rule stated against the
/// second-moment matrix `sigma + (1 + mu)(1 + mu)'` into the equivalent slope
/// against `sigma`:
/// `alpha_inv = (alpha_tilde_inv - 1 - r_gmv) / (1 + s)`.
pub fn reduce_risky(
    alpha_tilde_inv: f64,
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
) -> Result<f64> {
    let stats = frontier_stats(mu, sigma)?;
    Ok((alpha_tilde_inv - 1.0 - stats.r_gmv) / (1.0 + stats.s))
}

/// Converts the slope of an unconstrained rule stated against
/// `sigma + mu_excess mu_excess'` into the equivalent slope against `sigma`:
/// `gamma_inv = gamma_tilde_inv / (1 + mu_excess' sigma^-1 mu_excess)`.
pub fn reduce_riskless(
    gamma_tilde_inv: f64,
    mu_excess: &DVector<f64>,
    sigma: &DMatrix<f64>,
) -> Result<f64> {
    linalg::check_dim(sigma, mu_excess.len(), "slope-reduction covariance")?;
    let u = linalg::solve_spd(sigma, mu_excess, "slope-reduction covariance")?;
    Ok(gamma_tilde_inv / (1.0 + mu_excess.dot(&u)))
}
