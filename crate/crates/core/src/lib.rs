//! Margin-based generalization bounds for combined classifiers.
//!
//! The crate computes empirical margin distributions of voting classifiers
//! and networks, Monte Carlo and exact Rademacher/Gaussian complexities,
//! margin bounds on generalization error, γ-margins, Lévy distances between
//! margin distributions, and ℓ₁-penalized network selection. The
//! [`testbed`] module supplies a one-dimensional problem on which exact
//! generalization errors and margin laws are available as ground truth.

pub mod boosting;
pub mod bounds;
pub mod complexity;
pub mod data;
pub mod error;
pub mod gamma;
pub mod levy;
pub mod network;
pub mod rng;
mod sweep;
pub mod testbed;

pub use error::{Error, Result};
