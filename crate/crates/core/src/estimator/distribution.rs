use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::Partition;
use crate::player_set::PlayerSet;
use crate::rng::Rng;

/// Lower and upper clamp for every merge probability.
pub const EPSILON: f64 = 1e-3;

/// Independent Bernoulli merge probabilities over the `m - 1` boundaries of
/// the target's ordered members. `p[i]` is the probability that members `i`
/// and `i + 1` share a coalition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionDistribution {
    p: Vec<f64>,
}

impl PartitionDistribution {
    /// Every boundary at 0.5, for a target of `m` players.
    pub fn uniform(m: usize) -> Self {
        PartitionDistribution {
            p: vec![0.5; m.saturating_sub(1)],
        }
    }

    /// Probabilities are clamped into `[EPSILON, 1 - EPSILON]`.
    pub fn from_probs(p: Vec<f64>) -> Result<Self> {
        if let Some(bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Domain(format!("merge probability {bad} outside [0, 1]")));
        }
        let mut d = PartitionDistribution { p };
        d.clamp();
        Ok(d)
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn boundaries(&self) -> usize {
        self.p.len()
    }

    pub(crate) fn clamp(&mut self) {
        for x in &mut self.p {
            *x = x.clamp(EPSILON, 1.0 - EPSILON);
        }
    }

    /// `p_i += step_i`, then clamp.
    pub(crate) fn apply(&mut self, step: &[f64]) {
        for (x, s) in self.p.iter_mut().zip(step) {
            *x += s;
        }
        self.clamp();
    }

    /// Merge where `p_i > 0.5`.
    pub fn harden(&self) -> BoundarySample {
        BoundarySample {
            g: self.p.iter().map(|&x| x > 0.5).collect(),
        }
    }
}

/// A boundary vector `g`; `g[i]` merges members `i` and `i + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundarySample {
    pub g: Vec<bool>,
}

impl BoundarySample {
    pub fn new(g: Vec<bool>) -> Self {
        BoundarySample { g }
    }

    /// Number of players in the target this sample splits.
    pub fn players(&self) -> usize {
        self.g.len() + 1
    }

    /// Coalitions as inclusive position ranges over the ordered target.
    pub fn blocks(&self) -> Vec<(usize, usize)> {
        let m = self.players();
        let mut out = Vec::new();
        let mut start = 0;
        for i in 0..m {
            if i + 1 == m || !self.g[i] {
                out.push((start, i));
                start = i + 1;
            }
        }
        out
    }

    pub fn partition(&self, target: PlayerSet) -> Result<Partition> {
        Partition::from_boundaries(target, &self.g)
    }
}

/// `λ_i(g) = 1 / |C_i|` for each position of the target.
pub fn lambda_weights(g: &BoundarySample) -> Vec<f64> {
    let mut w = vec![0.0; g.players()];
    for (s, e) in g.blocks() {
        let size = (e - s + 1) as f64;
        w[s..=e].iter_mut().for_each(|x| *x = 1.0 / size);
    }
    w
}

/// Independent draws `g_i ~ Bernoulli(p_i)`.
pub fn sample_partition(dist: &PartitionDistribution, rng: &mut Rng) -> BoundarySample {
    BoundarySample {
        g: dist.p.iter().map(|&p| rng.random::<f64>() < p).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;

    #[test]
    fn worked_example_blocks_and_lambdas() {
        let g = BoundarySample::new(vec![true, true, false, false, true]);
        assert_eq!(g.blocks(), vec![(0, 2), (3, 3), (4, 5)]);
        let w = lambda_weights(&g);
        let third = 1.0 / 3.0;
        assert_eq!(w, vec![third, third, third, 1.0, 0.5, 0.5]);
        let p = g.partition(PlayerSet::full(6)).unwrap();
        let blocks: Vec<Vec<usize>> = p.blocks().iter().map(|b| b.to_vec()).collect();
        assert_eq!(blocks, vec![vec![0, 1, 2], vec![3], vec![4, 5]]);
    }

    #[test]
    fn extreme_distributions_sample_extreme_partitions() {
        let mut rng = SeedTree::new(1).rng();
        let hi = PartitionDistribution::from_probs(vec![1.0; 5]).unwrap();
        let lo = PartitionDistribution::from_probs(vec![0.0; 5]).unwrap();
        assert!(hi.probs().iter().all(|&p| p == 1.0 - EPSILON));
        let trials = 2000;
        let grand = (0..trials)
            .filter(|_| sample_partition(&hi, &mut rng).g.iter().all(|&b| b))
            .count();
        let single = (0..trials)
            .filter(|_| sample_partition(&lo, &mut rng).g.iter().all(|&b| !b))
            .count();
        // (1 - ε)^5 ≈ 0.995; allow a few standard deviations.
        assert!(grand as f64 / trials as f64 > 0.985);
        assert!(single as f64 / trials as f64 > 0.985);
    }

    #[test]
    fn clamp_and_harden() {
        let mut d = PartitionDistribution::uniform(4);
        assert_eq!(d.boundaries(), 3);
        d.apply(&[10.0, -10.0, 0.0]);
        assert_eq!(d.probs(), &[1.0 - EPSILON, EPSILON, 0.5]);
        assert_eq!(d.harden().g, vec![true, false, false]);
        assert!(PartitionDistribution::from_probs(vec![1.5]).is_err());
        assert_eq!(PartitionDistribution::uniform(1).boundaries(), 0);
    }
}
