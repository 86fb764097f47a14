//! Ising models on directed Erdős–Rényi random graphs.
//!
//! The crate bundles the closed-form quantities of the dilute Curie-Weiss
//! model (mean-field fixed points, CLT variances, rate functions, exact
//! disorder moments) together with exact enumeration, a Glauber sampler and
//! the replica experiments that probe the model's limit theorems at desk
//! scale.
//!
//! Module map:
//!
//! - [`meanfield`]: fixed points of `z = tanh(β(z + h))`, variances, rate function.
//! - [`expansion`]: `F(p, z) = log(1 - p + p e^z)` and its exact linearizations.
//! - [`graph`]: directed Erdős–Rényi edge indicators with counter-based seeding.
//! - [`gibbs`]: Hamiltonian, Gray-code partition functions, magnetization measures.
//! - [`disorder`]: annealed moments of the tilted weights and overlap counts.
//! - [`mcmc`]: heat-bath Glauber dynamics on a fixed graph.
//! - [`stats`]: Gaussian CDF, KS distance and the experiment harness.
//! - [`cli`]: the `dilute-ising` command-line front end.

#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod disorder;
pub mod error;
pub mod expansion;
pub mod gibbs;
pub mod graph;
pub mod mcmc;
pub mod meanfield;
pub mod numeric;
pub mod stats;

pub use error::{Error, Result};
