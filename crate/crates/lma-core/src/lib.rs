//! Simulation and kinetic-rate inference for stochastic quasi-reaction systems.
//!
//! A quasi-reaction system is a set of transformation rules over `p` species,
//! each firing at a rate proportional to a combinatorial function of the
//! current counts. This crate provides:
//!
//! - exact stochastic simulation (Gillespie direct method) and dataset
//!   construction ([`gillespie`]);
//! - a closed-form forward predictor for the conditional mean, obtained by
//!   linearising the hazard around the last observation so the mean ODE
//!   becomes linear and solvable with a matrix exponential ([`forecast`]);
//! - nonlinear least-squares estimation of the kinetic rates with a
//!   box-constrained limited-memory quasi-Newton solver, initialised by a
//!   local linear (Euler) estimator ([`infer`]);
//! - analytic parameter sensitivities and Fisher-information standard
//!   errors ([`uncertainty`]);
//! - stepwise BIC search over candidate reaction libraries ([`model_select`]);
//! - evaluation metrics for simulation studies ([`metrics`]);
//! - built-in benchmark systems ([`fixtures`]) and file formats ([`io`]).

pub mod error;
pub mod fixtures;
pub mod forecast;
pub mod gillespie;
pub mod infer;
pub mod io;
pub mod matfun;
pub mod metrics;
pub mod model_select;
pub mod special;
pub mod system;
pub mod uncertainty;

pub use error::{Error, Result};
pub use system::{LmaOperator, RateVector, ReactionSystem, StateVector};
