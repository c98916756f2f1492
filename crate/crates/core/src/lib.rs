//! Distributed kernel bandits with uniform exploration and shared randomness.
//!
//! `N` agents explore a trimmed active region uniformly at random. A central
//! server holds every agent's coin, so it can replay all query locations
//! without any message exchange. Rewards reach the server only as
//! projections onto a small Nyström inducing set, and the aggregated sparse
//! posterior mean drives an elimination step that shrinks the region for the
//! next epoch.
//!
//! The crate is organised bottom-up:
//!
//! - [`kernels`]: kernel functions, Gram matrices and information gain.
//! - [`gp`]: exact and Nyström-sparse Gaussian-process posteriors.
//! - [`domain`]: finite discretisations of the search space and active regions.
//! - [`benchfns`]: benchmark objectives and the noisy environment.
//! - [`protocol`]: agent and server state machines, inducing sets, projection,
//!   aggregation, epoch schedule and communication accounting.
//! - [`baselines`]: independent GP-UCB agents with no communication.
//! - [`experiment`]: configuration, Monte Carlo orchestration and CSV output.
//!
//! Data-parallel loops (grid sweeps, per-agent work, Monte Carlo replications)
//! go through [`exec::Execution`]; with the `parallel` feature disabled every
//! loop runs sequentially and results are bitwise identical either way.

// `!(x > 0.0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod benchfns;
pub mod domain;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod gp;
pub mod kernels;
mod linalg;
pub mod protocol;
pub mod rng;

pub use error::{Error, Result};
