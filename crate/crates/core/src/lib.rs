//! Pricing engine for variable annuities carrying a guaranteed minimum
//! withdrawal benefit combined with a death benefit (GMWDB).
//!
//! The optimal-withdrawal problem is solved by backward induction over the
//! withdrawal dates. Between dates the expectation over the lognormal wealth
//! transition is taken with Gauss-Hermite quadrature applied to natural cubic
//! splines of the value function; at each date the jump condition is
//! maximised over an auxiliary guarantee-account grid.
//!
//! Modules, bottom up:
//!
//! - [`mortality`]: life tables and per-period death probabilities.
//! - [`market`]: piecewise-constant rates, volatilities and the fee.
//! - [`contract`]: contract terms, cashflows and payoffs.
//! - [`quadrature`]: Gauss-Hermite rules and natural cubic splines.
//! - [`solver`]: the backward-induction engine and the perfect-forecast
//!   upper estimator.
//! - [`montecarlo`]: forward simulation for static strategies and the
//!   simple-strategy lower bound.
//! - [`fees`]: fair-fee calibration and instalment fees.

// Input checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contract;
pub mod error;
pub mod fees;
pub mod market;
pub mod montecarlo;
pub mod mortality;
pub mod quadrature;
pub mod solver;

pub use contract::{AccountState, ContractSpec, DeathBenefit};
pub use error::{Error, Result};
pub use fees::{FeeSolveResult, FeeStatus, InstallmentResult};
pub use market::MarketTermStructure;
pub use montecarlo::{McEstimate, SimConfig};
pub use mortality::{DeathSchedule, LifeTable, Sex};
pub use quadrature::{CubicSpline, GaussHermiteRule};
pub use solver::{GridConfig, GridSpec, Mode, PricingResult, WSpacing};

/// One basis point.
pub const BP: f64 = 1e-4;
