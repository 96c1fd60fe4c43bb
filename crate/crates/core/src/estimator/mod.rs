//! Polynomial-cost estimation of `T([A])` over contiguous partitions.
//!
//! Partitions of the ordered target are drawn from independent Bernoulli
//! merge probabilities `p`. The expected partition score is maximized and
//! minimized by stochastic gradient steps on `p`, and `T̂` is the gap between
//! the two re-estimated optima.

mod distribution;
mod objective;
mod optimize;
mod sampled;

use serde::{Deserialize, Serialize};

pub use distribution::{lambda_weights, sample_partition, BoundarySample, PartitionDistribution, EPSILON};
pub use objective::{estimate_l, grad_p, GradientEstimate, LEstimate};
pub use optimize::{
    estimate_evaluation_bound, estimate_t, instability, instability_of, optimize, optimize_evaluation_bound,
    repeat_seed, t_at_checkpoints, EstimateTrace, InteractionReport, OptimizeOutcome, EXACT_FALLBACK_MAX,
};
pub use sampled::{shapley_sampled, SampledShapley};

use crate::error::{Error, Result};
use crate::exact::Semantics;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Max,
    Min,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// `K1`: gradient steps.
    pub epochs: usize,
    /// `K2`: boundary vectors drawn per step.
    pub partition_samples: usize,
    /// `K3`: contexts drawn per boundary vector.
    pub subset_samples: usize,
    pub learning_rate: f64,
    pub direction: Direction,
    pub semantics: Semantics,
    pub seed: u64,
    /// Replace sampling by exact enumeration when the game is small enough.
    pub exact_fallback: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            epochs: 100,
            partition_samples: 8,
            subset_samples: 256,
            learning_rate: 0.1,
            direction: Direction::Max,
            semantics: Semantics::Exclusive,
            seed: 0,
            exact_fallback: false,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.partition_samples == 0 || self.subset_samples == 0 {
            return Err(Error::Config("epochs, partition samples and subset samples must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        EstimatorConfig { seed, ..self.clone() }
    }
}
