//! Decay rates for extremes of multidimensional Gaussian processes.
//!
//! Given a centered `R^n`-valued Gaussian process `X(t)` on a domain `T`,
//! a drift `d(t)` and thresholds `q > 0`, the probability that all
//! coordinates simultaneously exceed their thresholds somewhere on the
//! domain,
//!
//! ```text
//! P(u) = P(exists t in T: X_i(t) - d_i(t) > q_i u for all i),
//! ```
//!
//! decays like `log P(u) ~ -M(u; T)` where the rate is a quadrant-constrained
//! quadratic program scanned over the domain:
//!
//! ```text
//! M(u, t) = inf_{v >= u q} <v + d(t), Sigma_t^{-1} (v + d(t))>,
//! M(u; T) = (1/2) inf_{t in T} M(u, t).
//! ```
//!
//! The crate computes these rates on finite grids, checks the model
//! assumptions they require, exposes the saddle-point duality certifying the
//! inner optimum, evaluates closed forms (two-dimensional case, regularly
//! varying variance scaling), and validates the asymptotics empirically with
//! crude and mean-shift Monte Carlo.
//!
//! Module map:
//!
//! * [`linalg`] — small dense SPD kernel (Cholesky, solves, inverses, the
//!   partial-correlation matrix `K_t`).
//! * [`qp`] — the quadrant program, its dual weight problem and KKT
//!   certificates.
//! * [`models`] — covariance/drift model constructors and domain grids.
//! * [`assumptions`] — machine checks of the residual-correlation bound and
//!   threshold positivity.
//! * [`decay`] — per-point and domain rates, closed forms, regularly varying
//!   scaling.
//! * [`montecarlo`] — joint path simulation and rare-event estimators.
//! * [`config`] — the JSON description of models, drifts and grids shared
//!   with the command-line front end.

pub mod assumptions;
pub mod config;
pub mod decay;
pub mod error;
pub mod linalg;
pub mod models;
pub mod montecarlo;
pub mod optim;
pub mod qp;

pub use error::{Error, Result};
