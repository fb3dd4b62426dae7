//! Conditional return moments.
//!
//! The allocation rules in this crate consume one-step-ahead conditional
//! means and covariances of asset returns. This module provides their
//! sources:
//!
//! * [`MomentForecast`] — a validated (mean, covariance) pair for one period;
//! * [`Var1Model`] — a first-order vector autoregression over a state vector
//!   whose leading coordinates (or any chosen subset) are the tradable asset
//!   returns, with conditional-moment evaluation, stationary statistics, and
//!   path simulation;
//! * [`fit_var1`] — least-squares estimation of such a model from a series;
//! * [`read_series_csv`] — CSV ingestion for observed series.
//!
//! The fitted series is treated as the return series itself; any
//! transformation (for example from log to simple returns) is the caller's
//! responsibility and must happen before the data reaches this module.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// One-step-ahead conditional mean and covariance of the asset returns.
///
/// The covariance must be symmetric positive definite; construction fails
/// otherwise. No regularisation is applied on the caller's behalf.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentForecast {
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
}

impl MomentForecast {
    /// Validates and wraps a conditional mean and covariance.
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        linalg::check_dim(&sigma, mu.len(), "moment forecast covariance")?;
        linalg::spd_cholesky(&sigma, "moment forecast covariance")?;
        Ok(Self { mu, sigma })
    }

    /// Number of assets.
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Conditional mean of simple returns.
    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    /// Conditional covariance of simple returns.
    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Conditional mean of gross returns, `1 + mu`.
    pub fn gross_mean(&self) -> DVector<f64> {
        self.mu.add_scalar(1.0)
    }

    /// Conditional mean of returns in excess of a riskless rate, `mu - r_f`.
    pub fn excess_mean(&self, r_f: f64) -> DVector<f64> {
        self.mu.add_scalar(-r_f)
    }

    /// Second moment of gross returns, `sigma + (1 + mu)(1 + mu)'`.
    pub fn gross_second_moment(&self) -> DMatrix<f64> {
        let g = self.gross_mean();
        &self.sigma + &g * g.transpose()
    }

    /// Second moment of excess returns, `sigma + (mu - r_f)(mu - r_f)'`.
    pub fn excess_second_moment(&self, r_f: f64) -> DMatrix<f64> {
        let e = self.excess_mean(r_f);
        &self.sigma + &e * e.transpose()
    }
}

/// A first-order vector autoregression `Y_t = nu + phi Y_{t-1} + eps_t` with
/// `eps_t ~ N(0, sigma_eps)`, together with the selection of which state
/// coordinates are tradable asset returns.
///
/// The innovation covariance may be singular (some coordinates may be exact
/// functions of others), but the covariance of the *selected asset block*
/// must be positive definite whenever conditional moments are requested.
#[derive(Debug, Clone, PartialEq)]
pub struct Var1Model {
    nu: DVector<f64>,
    phi: DMatrix<f64>,
    sigma_eps: DMatrix<f64>,
    asset_coords: Vec<usize>,
    innovation_factor: DMatrix<f64>,
}

impl Var1Model {
    /// Validates the parameters and builds a model.
    ///
    /// `asset_coords` lists the state coordinates that are tradable returns;
    /// the entries must be distinct and in range. `sigma_eps` must be
    /// symmetric positive semidefinite.
    pub fn new(
        nu: DVector<f64>,
        phi: DMatrix<f64>,
        sigma_eps: DMatrix<f64>,
        asset_coords: Vec<usize>,
    ) -> Result<Self> {
        let m = nu.len();
        linalg::check_dim(&phi, m, "state transition matrix")?;
        linalg::check_dim(&sigma_eps, m, "innovation covariance")?;
        let innovation_factor = linalg::psd_factor(&sigma_eps, "innovation covariance")?;
        if asset_coords.is_empty() {
            return Err(Error::EmptyInput {
                context: "asset coordinate list",
            });
        }
        let mut seen = vec![false; m];
        for &c in &asset_coords {
            if c >= m {
                return Err(Error::Dimension {
                    context: "asset coordinate",
                    expected: m,
                    actual: c,
                });
            }
            if seen[c] {
                return Err(Error::InvalidArgument {
                    context: "asset coordinate list",
                    message: format!("coordinate {c} is selected twice"),
                });
            }
            seen[c] = true;
        }
        Ok(Self {
            nu,
            phi,
            sigma_eps,
            asset_coords,
            innovation_factor,
        })
    }

    /// Dimension of the state vector.
    pub fn state_dim(&self) -> usize {
        self.nu.len()
    }

    /// Number of tradable assets.
    pub fn asset_dim(&self) -> usize {
        self.asset_coords.len()
    }

    /// State coordinates that are tradable asset returns.
    pub fn asset_coords(&self) -> &[usize] {
        &self.asset_coords
    }

    /// State coordinates that are *not* tradable returns (predictors).
    pub fn predictor_coords(&self) -> Vec<usize> {
        (0..self.state_dim())
            .filter(|c| !self.asset_coords.contains(c))
            .collect()
    }

    /// Intercept of the state dynamics.
    pub fn nu(&self) -> &DVector<f64> {
        &self.nu
    }

    /// Transition matrix of the state dynamics.
    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    /// Innovation covariance of the state dynamics.
    pub fn sigma_eps(&self) -> &DMatrix<f64> {
        &self.sigma_eps
    }

    /// Extracts the asset block of a state vector.
    pub fn select_assets(&self, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.asset_coords.len(),
            self.asset_coords.iter().map(|&c| y[c]),
        )
    }

    /// Conditional mean of the next state, `nu + phi y`.
    pub fn step_mean(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        if y.len() != self.state_dim() {
            return Err(Error::Dimension {
                context: "state vector",
                expected: self.state_dim(),
                actual: y.len(),
            });
        }
        Ok(&self.nu + &self.phi * y)
    }

    /// One-step-ahead conditional moments of the asset returns given the
    /// current state.
    ///
    /// Fails if the asset block of the innovation covariance is not positive
    /// definite.
    pub fn conditional_moments(&self, y: &DVector<f64>) -> Result<MomentForecast> {
        let mean = self.step_mean(y)?;
        let mu = self.select_assets(&mean);
        let k = self.asset_dim();
        let mut sigma = DMatrix::zeros(k, k);
        for (i, &ci) in self.asset_coords.iter().enumerate() {
            for (j, &cj) in self.asset_coords.iter().enumerate() {
                sigma[(i, j)] = self.sigma_eps[(ci, cj)];
            }
        }
        MomentForecast::new(mu, sigma)
    }

    /// One simulated step from `y`, driven by a standard-normal draw.
    pub fn step(&self, y: &DVector<f64>, noise: &DVector<f64>) -> Result<DVector<f64>> {
        if noise.len() != self.state_dim() {
            return Err(Error::Dimension {
                context: "noise draw",
                expected: self.state_dim(),
                actual: noise.len(),
            });
        }
        Ok(self.step_mean(y)? + &self.innovation_factor * noise)
    }

    /// Conditional forecasts along the zero-innovation state path: the first
    /// entry conditions on `y`, later entries on the iterated conditional
    /// means. Exact for serially independent models; a deterministic proxy
    /// for the unknown future conditioning information otherwise.
    pub fn mean_path_forecasts(
        &self,
        y: &DVector<f64>,
        periods: usize,
    ) -> Result<Vec<MomentForecast>> {
        let mut forecasts = Vec::with_capacity(periods);
        let mut state = y.clone();
        for _ in 0..periods {
            forecasts.push(self.conditional_moments(&state)?);
            state = self.step_mean(&state)?;
        }
        Ok(forecasts)
    }

    /// Unconditional (stationary) mean of the state, `(I - phi)^-1 nu`.
    ///
    /// Fails when the dynamics have a unit root.
    pub fn stationary_mean(&self) -> Result<DVector<f64>> {
        let m = self.state_dim();
        let system = DMatrix::identity(m, m) - &self.phi;
        system
            .lu()
            .solve(&self.nu)
            .ok_or_else(|| Error::InvalidArgument {
                context: "stationary mean",
                message: "state dynamics have a unit root".to_string(),
            })
    }

    /// Simulates `horizon` steps of the state starting from `y0`, driving the
    /// innovations with the supplied standard-normal draws (one state-dimension
    /// vector per step).
    ///
    /// The innovation covariance factor tolerates exact singularity, so
    /// deterministic coordinates propagate without noise.
    pub fn simulate_path(
        &self,
        y0: &DVector<f64>,
        horizon: usize,
        noise: &[DVector<f64>],
    ) -> Result<StatePath> {
        if y0.len() != self.state_dim() {
            return Err(Error::Dimension {
                context: "initial state",
                expected: self.state_dim(),
                actual: y0.len(),
            });
        }
        if noise.len() != horizon {
            return Err(Error::Dimension {
                context: "noise sequence",
                expected: horizon,
                actual: noise.len(),
            });
        }
        let mut states = Vec::with_capacity(horizon + 1);
        let mut returns = Vec::with_capacity(horizon);
        states.push(y0.clone());
        for (t, draw) in noise.iter().enumerate() {
            if draw.len() != self.state_dim() {
                return Err(Error::Dimension {
                    context: "noise draw",
                    expected: self.state_dim(),
                    actual: draw.len(),
                });
            }
            let prev = &states[t];
            let next = &self.nu + &self.phi * prev + &self.innovation_factor * draw;
            returns.push(self.select_assets(&next));
            states.push(next);
        }
        Ok(StatePath { states, returns })
    }
}

/// A simulated (or observed) trajectory of the state process: the initial
/// state plus one state and one asset-return vector per period.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePath {
    states: Vec<DVector<f64>>,
    returns: Vec<DVector<f64>>,
}

impl StatePath {
    /// Builds a path from explicit states and returns; `states` must hold one
    /// more entry than `returns`.
    pub fn new(states: Vec<DVector<f64>>, returns: Vec<DVector<f64>>) -> Result<Self> {
        if states.len() != returns.len() + 1 {
            return Err(Error::Dimension {
                context: "state path",
                expected: returns.len() + 1,
                actual: states.len(),
            });
        }
        Ok(Self { states, returns })
    }

    /// Number of periods covered.
    pub fn horizon(&self) -> usize {
        self.returns.len()
    }

    /// State observed at the start of period `t` (0-based); `state(0)` is the
    /// initial state.
    pub fn state(&self, t: usize) -> &DVector<f64> {
        &self.states[t]
    }

    /// Asset returns realised over period `t` (0-based), i.e. between
    /// `state(t)` and `state(t + 1)`.
    pub fn returns(&self, t: usize) -> &DVector<f64> {
        &self.returns[t]
    }

    /// All per-period return vectors.
    pub fn all_returns(&self) -> &[DVector<f64>] {
        &self.returns
    }

    /// All states, starting with the initial one.
    pub fn all_states(&self) -> &[DVector<f64>] {
        &self.states
    }
}

/// Least-squares VAR(1) fit: the estimated model plus coefficient standard
/// errors.
#[derive(Debug, Clone)]
pub struct Var1Fit {
    /// Estimated model with every coordinate marked as an asset; use
    /// [`Var1Fit::with_asset_coords`] to restrict the tradable block.
    pub model: Var1Model,
    /// Standard errors of the intercept estimates, one per equation.
    pub intercept_se: DVector<f64>,
    /// Standard errors of the transition-matrix estimates, same layout as
    /// `phi`.
    pub phi_se: DMatrix<f64>,
    /// Number of regression rows used.
    pub rows: usize,
}

impl Var1Fit {
    /// Rebuilds the fitted model with a restricted set of tradable
    /// coordinates (remaining coordinates act as predictors).
    pub fn with_asset_coords(&self, asset_coords: Vec<usize>) -> Result<Var1Model> {
        Var1Model::new(
            self.model.nu().clone(),
            self.model.phi().clone(),
            self.model.sigma_eps().clone(),
            asset_coords,
        )
    }
}

/// Fits a VAR(1) by equation-wise least squares on regressors `(1, Y_{t-1})`.
///
/// Requires at least `state_dim + 2` observations. The innovation covariance
/// is the sample covariance of the residuals with denominator `rows - 1`,
/// where `rows = observations - 1` is the number of regression rows.
/// Coefficient standard errors use the same residual covariance.
pub fn fit_var1(series: &[DVector<f64>]) -> Result<Var1Fit> {
    let n = series.len();
    if n == 0 {
        return Err(Error::EmptyInput {
            context: "VAR(1) fit",
        });
    }
    let m = series[0].len();
    if m == 0 {
        return Err(Error::EmptyInput {
            context: "VAR(1) fit series coordinates",
        });
    }
    for (t, y) in series.iter().enumerate() {
        if y.len() != m {
            return Err(Error::Dimension {
                context: "VAR(1) fit series entry",
                expected: m,
                actual: series[t].len(),
            });
        }
    }
    if n < m + 2 {
        return Err(Error::TooFewObservations {
            context: "VAR(1) fit",
            needed: m + 2,
            got: n,
        });
    }

    let rows = n - 1;
    let p = m + 1; // intercept plus lagged state
    let mut z = DMatrix::zeros(rows, p);
    let mut y = DMatrix::zeros(rows, m);
    for t in 0..rows {
        z[(t, 0)] = 1.0;
        for j in 0..m {
            z[(t, 1 + j)] = series[t][j];
            y[(t, j)] = series[t + 1][j];
        }
    }

    // Normal equations; a failed Cholesky of the Gram matrix signals linearly
    // dependent regressors (e.g. a constant coordinate).
    let gram = z.transpose() * &z;
    let chol = linalg::spd_cholesky(&linalg::symmetrize(&gram), "least-squares Gram matrix")
        .map_err(|_| Error::RankDeficient)?;
    let cross = z.transpose() * &y;
    let beta = chol.solve(&cross); // p x m, column j = coefficients of equation j

    let residuals = &y - &z * &beta;
    let sigma_eps =
        linalg::symmetrize(&(residuals.transpose() * &residuals / (rows as f64 - 1.0)));

    let gram_inv = chol.inverse();
    let mut nu = DVector::zeros(m);
    let mut phi = DMatrix::zeros(m, m);
    let mut intercept_se = DVector::zeros(m);
    let mut phi_se = DMatrix::zeros(m, m);
    for j in 0..m {
        nu[j] = beta[(0, j)];
        intercept_se[j] = (sigma_eps[(j, j)] * gram_inv[(0, 0)]).max(0.0).sqrt();
        for l in 0..m {
            phi[(j, l)] = beta[(1 + l, j)];
            phi_se[(j, l)] = (sigma_eps[(j, j)] * gram_inv[(1 + l, 1 + l)])
                .max(0.0)
                .sqrt();
        }
    }

    let model = Var1Model::new(nu, phi, sigma_eps, (0..m).collect())?;
    Ok(Var1Fit {
        model,
        intercept_se,
        phi_se,
        rows,
    })
}

/// A constant sequence of per-period forecasts for serially independent,
/// identically distributed returns.
pub fn iid_forecaster(
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    horizon: usize,
) -> Result<Vec<MomentForecast>> {
    if horizon == 0 {
        return Err(Error::InvalidArgument {
            context: "iid forecaster",
            message: "horizon must be at least 1".to_string(),
        });
    }
    let forecast = MomentForecast::new(mu, sigma)?;
    Ok(vec![forecast; horizon])
}

/// Draws `horizon` standard-normal vectors of the given dimension.
pub fn standard_normal_noise<R: Rng + ?Sized>(
    rng: &mut R,
    horizon: usize,
    dim: usize,
) -> Vec<DVector<f64>> {
    (0..horizon)
        .map(|_| DVector::from_fn(dim, |_, _| rng.sample(StandardNormal)))
        .collect()
}

/// Reads a numeric multi-series CSV: one header row of series names, then one
/// row per time step. Every field must parse as a finite number; missing or
/// malformed fields are reported with their 1-based line number (the header
/// is line 1).
pub fn read_series_csv(path: &std::path::Path) -> Result<(Vec<String>, Vec<DVector<f64>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(csv_error)?;
    let names: Vec<String> = reader
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if names.is_empty() {
        return Err(Error::Csv {
            line: 1,
            message: "header row is empty".to_string(),
        });
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or(rows.len() as u64 + 2);
        let mut values = Vec::with_capacity(names.len());
        for (idx, field) in record.iter().enumerate() {
            let trimmed = field.trim();
            if trimmed.is_empty() {
                return Err(Error::Csv {
                    line,
                    message: format!("missing value in column '{}'", names[idx]),
                });
            }
            let value: f64 = trimmed.parse().map_err(|_| Error::Csv {
                line,
                message: format!("cannot parse '{}' in column '{}'", trimmed, names[idx]),
            })?;
            if !value.is_finite() {
                return Err(Error::Csv {
                    line,
                    message: format!("non-finite value in column '{}'", names[idx]),
                });
            }
            values.push(value);
        }
        rows.push(DVector::from_vec(values));
    }
    Ok((names, rows))
}

fn csv_error(err: csv::Error) -> Error {
    let line = match err.position() {
        Some(pos) => pos.line(),
        None => 0,
    };
    Error::Csv {
        line,
        message: err.to_string(),
    }
}

/// Serialisable description of a [`Var1Model`]; the on-disk JSON schema used
/// by the command-line tools.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Var1ModelSpec {
    /// Optional series names, parallel to the state coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
    /// Intercept `nu`.
    pub intercept: Vec<f64>,
    /// Transition matrix `phi`, row major.
    pub transition: Vec<Vec<f64>>,
    /// Innovation covariance, row major.
    pub innovation_cov: Vec<Vec<f64>>,
    /// Tradable coordinates; defaults to all coordinates when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asset_coords: Option<Vec<usize>>,
}

impl Var1ModelSpec {
    /// Builds the validated model described by this spec.
    pub fn build(&self) -> Result<Var1Model> {
        let m = self.intercept.len();
        let row_major = |rows: &Vec<Vec<f64>>, context: &'static str| -> Result<DMatrix<f64>> {
            if rows.len() != m {
                return Err(Error::Dimension {
                    context,
                    expected: m,
                    actual: rows.len(),
                });
            }
            let mut out = DMatrix::zeros(m, m);
            for (i, row) in rows.iter().enumerate() {
                if row.len() != m {
                    return Err(Error::Dimension {
                        context,
                        expected: m,
                        actual: row.len(),
                    });
                }
                for (j, &v) in row.iter().enumerate() {
                    out[(i, j)] = v;
                }
            }
            Ok(out)
        };
        let phi = row_major(&self.transition, "state transition matrix")?;
        let sigma = row_major(&self.innovation_cov, "innovation covariance")?;
        let coords = self
            .asset_coords
            .clone()
            .unwrap_or_else(|| (0..m).collect());
        Var1Model::new(DVector::from_vec(self.intercept.clone()), phi, sigma, coords)
    }

    /// Describes an existing model (inverse of [`Var1ModelSpec::build`]).
    pub fn from_model(model: &Var1Model, names: Option<Vec<String>>) -> Self {
        let m = model.state_dim();
        let to_rows = |mat: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m)
                .map(|i| (0..m).map(|j| mat[(i, j)]).collect())
                .collect()
        };
        Self {
            names,
            intercept: model.nu().iter().copied().collect(),
            transition: to_rows(model.phi()),
            innovation_cov: to_rows(model.sigma_eps()),
            asset_coords: Some(model.asset_coords().to_vec()),
        }
    }
}
