use serde::{Deserialize, Serialize};

use super::ExactLimits;
use crate::error::{Error, Result};
use crate::game::{Game, TableGame};
use crate::player_set::PlayerSet;

/// Per-player attribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapleyVector {
    pub phi: Vec<f64>,
}

impl ShapleyVector {
    pub fn n(&self) -> usize {
        self.phi.len()
    }

    pub fn total(&self) -> f64 {
        self.phi.iter().sum()
    }
}

/// `w[s] = s! (u - s - 1)! / u!` for `s` in `0..u`: the weight of a coalition
/// of size `s` that excludes the player, among `u` players.
pub fn shapley_weights(u: usize) -> Vec<f64> {
    // w[s] = 1 / (u * C(u-1, s)); binomials built multiplicatively.
    let mut w = Vec::with_capacity(u);
    let mut binom = 1.0f64;
    for s in 0..u {
        w.push(1.0 / (u as f64 * binom));
        binom = binom * (u - 1 - s) as f64 / (s + 1) as f64;
    }
    w
}

/// Exact Shapley values by full subset enumeration.
pub fn shapley_exact<G: Game + ?Sized>(game: &G, limits: &ExactLimits) -> Result<ShapleyVector> {
    let table = Tabulated::new(game, limits)?;
    let units: Vec<PlayerSet> = (0..game.n()).map(PlayerSet::singleton).collect();
    Ok(ShapleyVector {
        phi: table.unit_shapley(&units),
    })
}

/// A game evaluated once on every subset; all exact quantities are computed
/// from this table.
#[derive(Clone, Debug)]
pub struct Tabulated {
    n: usize,
    values: Vec<f64>,
}

impl Tabulated {
    pub fn new<G: Game + ?Sized>(game: &G, limits: &ExactLimits) -> Result<Self> {
        let n = game.n();
        if n > limits.max_players {
            return Err(Error::capacity("player count for exact enumeration", n, limits.max_players));
        }
        Ok(Tabulated {
            n,
            values: TableGame::tabulate(game)?.into_values(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn v(&self, s: PlayerSet) -> f64 {
        self.values[s.bits() as usize]
    }

    /// Shapley values of the game whose players are the given disjoint
    /// units (everything outside the units is absent).
    pub fn unit_shapley(&self, units: &[PlayerSet]) -> Vec<f64> {
        let u = units.len();
        if u == 0 {
            return Vec::new();
        }
        let vals = self.unit_values(units);
        let w = shapley_weights(u);
        let mut phi = vec![0.0; u];
        for (k, phi_k) in phi.iter_mut().enumerate() {
            let bit = 1usize << k;
            let mut acc = 0.0;
            for mask in 0..vals.len() {
                if mask & bit == 0 {
                    acc += w[mask.count_ones() as usize] * (vals[mask | bit] - vals[mask]);
                }
            }
            *phi_k = acc;
        }
        phi
    }

    /// `v` on every union of units, indexed by unit bit pattern.
    fn unit_values(&self, units: &[PlayerSet]) -> Vec<f64> {
        let len = 1usize << units.len();
        let mut unions = vec![PlayerSet::EMPTY; len];
        let mut vals = vec![0.0; len];
        for mask in 1..len {
            let low = mask.trailing_zeros() as usize;
            unions[mask] = unions[mask & (mask - 1)].union(units[low]);
            vals[mask] = self.v(unions[mask]);
        }
        vals
    }

    /// Shapley value of the single unit `target` in the game whose players
    /// are `target` plus each player of `others` individually.
    pub fn shapley_of_unit(&self, target: PlayerSet, others: PlayerSet) -> f64 {
        let w = shapley_weights(others.len() + 1);
        others
            .subsets()
            .map(|s| w[s.len()] * (self.v(s.union(target)) - self.v(s)))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Expr, ExpressionGame, ExpressionModel, FnGame};
    use approx::assert_abs_diff_eq;

    fn factorial(k: usize) -> f64 {
        (1..=k).map(|x| x as f64).product()
    }

    #[test]
    fn weights_match_factorial_formula() {
        for u in 1..=20 {
            let w = shapley_weights(u);
            for (s, ws) in w.iter().enumerate() {
                let exact = factorial(s) * factorial(u - s - 1) / factorial(u);
                assert!((ws - exact).abs() <= 1e-15 * exact.max(1e-300) * 10.0, "u={u} s={s}");
            }
        }
    }

    #[test]
    fn additive_game() {
        let g = ExpressionGame::new(ExpressionModel::binary(3, Expr::sum_of_vars(0..3)).unwrap()).unwrap();
        let phi = shapley_exact(&g, &ExactLimits::default()).unwrap();
        for p in phi.phi {
            assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn unanimity_on_pair() {
        // v(S) = 1 iff S ⊇ {0, 1}, n = 3.
        let g = FnGame::new(3, |s: PlayerSet| (s.contains(0) && s.contains(1)) as u8 as f64).unwrap();
        let phi = shapley_exact(&g, &ExactLimits::default()).unwrap().phi;
        assert_abs_diff_eq!(phi[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(phi[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(phi[2], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn single_unit_value_matches_full_vector() {
        let g = FnGame::new(5, |s: PlayerSet| {
            let b = s.bits() as f64;
            (b * 0.37).sin() + s.len() as f64
        })
        .unwrap();
        let t = Tabulated::new(&g, &ExactLimits::default()).unwrap();
        let units = [PlayerSet::from_bits(0b00110), PlayerSet::singleton(0), PlayerSet::singleton(4)];
        let all = t.unit_shapley(&units);
        let one = t.shapley_of_unit(units[0], PlayerSet::from_bits(0b10001));
        assert_abs_diff_eq!(all[0], one, epsilon = 1e-12);
    }

    #[test]
    fn capacity_error() {
        let g = FnGame::new(21, |s: PlayerSet| s.len() as f64).unwrap();
        assert!(matches!(
            shapley_exact(&g, &ExactLimits::default()),
            Err(Error::Capacity { .. })
        ));
    }
}
