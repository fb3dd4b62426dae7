//! Multi-period portfolio allocation under quadratic terminal-wealth utility.
//!
//! The library is organised around the closed-form backward recursions for an
//! investor who rebalances at discrete dates and maximises
//! `E[W_T - (alpha/2) W_T^2]`:
//!
//! * [`moments`] — conditional return moments: VAR(1) state models, model
//!   fitting, path simulation, and CSV ingestion.
//! * [`frontier`] — single-period mean-variance building blocks (global
//!   minimum-variance portfolio, efficient-frontier statistics, tangency and
//!   Markowitz portfolios) plus the slope reductions that map second-moment
//!   parameterisations onto covariance parameterisations.
//! * [`horizon_risky`] — multi-period optimal weights when every asset is
//!   risky, both the exact backward recursion and its independent-returns
//!   closed form.
//! * [`horizon_riskless`] — multi-period optimal weights in the presence of a
//!   riskless asset, the independent-returns closed form, the local
//!   approximation that only needs one-step-ahead moments, and the
//!   multi-period tangency portfolio.
//! * [`strategies`] — rebalancing policies built from the above, wealth
//!   accounting, Monte-Carlo strategy comparison, and summary statistics.
//! * [`report`] — serialisation of experiment results (JSON reports, sample
//!   and distribution-function CSV files) with atomic file writes.

pub mod error;
pub mod frontier;
pub mod horizon_riskless;
pub mod horizon_risky;
pub mod linalg;
pub mod moments;
pub mod report;
pub mod stats;
pub mod strategies;

#[cfg(test)]
pub(crate) mod test_util;

pub use error::{Error, Result};
pub use frontier::{FrontierStats, WeightVector};
pub use moments::{MomentForecast, StatePath, Var1Fit, Var1Model};
pub use strategies::{ExperimentSetup, SimulationReport, StrategyKind, StrategyOutcome};
