//! Enumeration-based oracles: exact Shapley values, pairwise and
//! multivariate interactions, elementary components, and extremal partition
//! values.
//!
//! Everything here tabulates the game once (`2^n` evaluations) and then works
//! on the table.

mod interaction;
mod partition;
mod salience;
mod shapley;
mod significance;

use serde::{Deserialize, Serialize};

pub use interaction::{coalition_interaction, elementary_components, pairwise_interaction, Components};
pub use partition::{all_partitions, contiguous_partitions, Partition};
pub use salience::{context_salience, pair_delta, SalienceMap};
pub use shapley::{shapley_exact, shapley_weights, ShapleyVector, Tabulated};
pub use significance::{exact_t, partition_value, ExactInteractionReport, Semantics};


/// Size caps for the exponential-cost computations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactLimits {
    /// Players in a game that gets tabulated.
    pub max_players: usize,
    /// `|A|` for elementary components (`2^|A|` interactions).
    pub max_component_target: usize,
    /// `|A|` when only contiguous partitions are enumerated (`2^(|A|-1)`).
    pub max_contiguous_target: usize,
    /// `|A|` when all set partitions are enumerated (Bell numbers).
    pub max_general_target: usize,
}

impl ExactLimits {
    pub const DEFAULT: ExactLimits = ExactLimits {
        max_players: 20,
        max_component_target: 16,
        max_contiguous_target: 12,
        max_general_target: 10,
    };
}

impl Default for ExactLimits {
    fn default() -> Self {
        Self::DEFAULT
    }
}
