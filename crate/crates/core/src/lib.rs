//! Significance of multivariate interactions among the inputs of a
//! black-box set function.
//!
//! A [`game::Game`] assigns a value to every subset of players. For a target
//! set `A` of players, the crate measures how much the players of `A` gain or
//! lose by acting together, summarized by `T([A]) = B_max([A]) − B_min([A])`,
//! the spread between the best and worst ways of splitting `A` into
//! coalitions.
//!
//! - [`exact`] enumerates subsets and partitions; exponential cost, exact.
//! - [`estimator`] learns Bernoulli merge probabilities over contiguous
//!   partitions from sampled marginal contributions; polynomial cost.
//! - [`synthetic`] builds expression models with known ground-truth coalitions.
//! - [`evaluation`] runs the accuracy, error and stability protocols.

pub mod cli;
pub mod error;
pub mod estimator;
pub mod evaluation;
pub mod exact;
pub mod game;
pub mod player_set;
pub mod rng;
pub mod synthetic;

pub use error::{Error, Result};
pub use exact::{ExactLimits, Partition, Semantics};
pub use game::{DynGame, Game};
pub use player_set::PlayerSet;
