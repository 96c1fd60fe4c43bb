use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::shapley::{shapley_exact, Tabulated};
use super::ExactLimits;
use crate::error::{Error, Result};
use crate::game::{contract, restrict, Game};
use crate::player_set::PlayerSet;

impl Tabulated {
    /// `φ(i | N∖A ∪ {i})` for each `i` in `a`, in increasing player order.
    pub fn solo_values(&self, a: PlayerSet) -> Vec<f64> {
        let outside = a.complement(self.n());
        a.iter()
            .map(|i| self.shapley_of_unit(PlayerSet::singleton(i), outside))
            .collect()
    }

    /// `φ([C] | N∖A ∪ {[C]})`: the coalition's value with the rest of `A` absent.
    pub fn exclusive_value(&self, a: PlayerSet, c: PlayerSet) -> f64 {
        self.shapley_of_unit(c, a.complement(self.n()))
    }

    /// `B([A]) = φ([A] | N∖A ∪ {[A]}) − Σ_{i∈A} φ(i | N∖A ∪ {i})`.
    pub fn coalition_interaction(&self, a: PlayerSet) -> f64 {
        self.exclusive_value(a, a) - self.solo_values(a).iter().sum::<f64>()
    }
}

fn check_target(a: PlayerSet, n: usize, min_len: usize) -> Result<()> {
    if !a.within(n) {
        return Err(Error::Domain(format!("target {a:?} outside the game's {n} players")));
    }
    if a.len() < min_len {
        return Err(Error::Domain(format!(
            "target {a:?} needs at least {min_len} players"
        )));
    }
    Ok(())
}

/// Interaction between two players, evaluated literally: each Shapley value
/// comes from [`shapley_exact`] on the restricted or contracted game.
pub fn pairwise_interaction<G: Game + ?Sized>(
    game: &G,
    i: usize,
    j: usize,
    limits: &ExactLimits,
) -> Result<f64> {
    let n = game.n();
    if i == j {
        return Err(Error::Domain(format!("pairwise interaction needs two players, got ({i}, {i})")));
    }
    if i >= n || j >= n {
        return Err(Error::Domain(format!("players ({i}, {j}) out of range for n={n}")));
    }
    let full = PlayerSet::full(n);
    let pair = PlayerSet::singleton(i).insert(j);

    // N' = N∖{i,j} ∪ {S_ij}; the merged player sits at min(i, j).
    let merged = contract(game, pair)?;
    let phi_pair = shapley_exact(&merged, limits)?.phi[i.min(j)];

    let solo = |keep: usize, drop: usize| -> Result<f64> {
        let alive = full.remove(drop);
        let g = restrict(game, alive)?;
        let idx = alive.iter().position(|p| p == keep).expect("kept player is alive");
        Ok(shapley_exact(&g, limits)?.phi[idx])
    };
    Ok(phi_pair - (solo(i, j)? + solo(j, i)?))
}

/// Multivariate interaction `B([A])`.
pub fn coalition_interaction<G: Game + ?Sized>(game: &G, a: PlayerSet, limits: &ExactLimits) -> Result<f64> {
    check_target(a, game.n(), 2)?;
    Ok(Tabulated::new(game, limits)?.coalition_interaction(a))
}

/// Elementary interaction components `I(A')` for every `A' ⊆ A` with `|A'| > 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Components {
    pub target: PlayerSet,
    /// Keyed by subset bit pattern over the original players.
    pub values: BTreeMap<u64, f64>,
}

impl Components {
    pub fn get(&self, subset: PlayerSet) -> Option<f64> {
        self.values.get(&subset.bits()).copied()
    }

    /// `Σ I(A')`; equals `B([A])`.
    pub fn sum(&self) -> f64 {
        self.values.values().sum()
    }

    /// `B⁺`: sum of the positive components.
    pub fn positive_sum(&self) -> f64 {
        self.values.values().filter(|v| **v > 0.0).sum()
    }

    /// `B⁻`: sum of the negative components.
    pub fn negative_sum(&self) -> f64 {
        self.values.values().filter(|v| **v < 0.0).sum()
    }

    /// `B' = Σ |I(A')| = B⁺ − B⁻`.
    pub fn absolute_sum(&self) -> f64 {
        self.positive_sum() - self.negative_sum()
    }
}

pub fn elementary_components<G: Game + ?Sized>(
    game: &G,
    a: PlayerSet,
    limits: &ExactLimits,
) -> Result<Components> {
    check_target(a, game.n(), 1)?;
    if a.len() > limits.max_component_target {
        return Err(Error::capacity("component target size", a.len(), limits.max_component_target));
    }
    let table = Tabulated::new(game, limits)?;
    Ok(components_from_table(&table, a))
}

pub(crate) fn components_from_table(table: &Tabulated, a: PlayerSet) -> Components {
    let members = a.to_vec();
    let m = members.len();
    let to_global = |local: usize| -> PlayerSet {
        PlayerSet::from_bits(local as u64)
            .iter()
            .map(|k| members[k])
            .collect()
    };

    // f(X) = B([X]) for |X| > 1, zero on singletons and ∅.
    let mut f = vec![0.0f64; 1 << m];
    for (local, fx) in f.iter_mut().enumerate() {
        if local.count_ones() > 1 {
            *fx = table.coalition_interaction(to_global(local));
        }
    }
    // Möbius inversion over the subset lattice.
    for bit in 0..m {
        let b = 1usize << bit;
        for local in 0..f.len() {
            if local & b != 0 {
                f[local] -= f[local ^ b];
            }
        }
    }
    let values = f
        .into_iter()
        .enumerate()
        .filter(|(local, _)| local.count_ones() > 1)
        .map(|(local, v)| (to_global(local).bits(), v))
        .collect();
    Components { target: a, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Expr, ExpressionGame, ExpressionModel, TableGame};
    use approx::assert_abs_diff_eq;

    fn expr_game(n: usize, e: Expr) -> ExpressionGame {
        ExpressionGame::new(ExpressionModel::binary(n, e).unwrap()).unwrap()
    }

    fn set(ix: &[usize]) -> PlayerSet {
        ix.iter().copied().collect()
    }

    const L: ExactLimits = ExactLimits::DEFAULT;

    #[test]
    fn pairwise_and_or_add() {
        let and = expr_game(2, Expr::product_of_vars([0, 1]));
        assert_abs_diff_eq!(pairwise_interaction(&and, 0, 1, &L).unwrap(), 1.0, epsilon = 1e-12);
        let or = expr_game(2, Expr::or([Expr::var(0), Expr::var(1)]));
        assert_abs_diff_eq!(pairwise_interaction(&or, 0, 1, &L).unwrap(), -1.0, epsilon = 1e-12);
        let add = expr_game(3, Expr::sum_of_vars(0..3));
        assert_abs_diff_eq!(pairwise_interaction(&add, 0, 1, &L).unwrap(), 0.0, epsilon = 1e-12);
        assert!(pairwise_interaction(&add, 1, 1, &L).is_err());
    }

    #[test]
    fn coalition_interaction_examples() {
        let and = expr_game(2, Expr::product_of_vars([0, 1]));
        assert_abs_diff_eq!(
            coalition_interaction(&and, set(&[0, 1]), &L).unwrap(),
            pairwise_interaction(&and, 0, 1, &L).unwrap(),
            epsilon = 1e-12
        );
        let triple = expr_game(3, Expr::product_of_vars(0..3));
        assert_abs_diff_eq!(coalition_interaction(&triple, PlayerSet::full(3), &L).unwrap(), 1.0, epsilon = 1e-12);
        let add = expr_game(4, Expr::sum_of_vars(0..4));
        for a in PlayerSet::full(4).subsets().filter(|s| s.len() >= 2) {
            assert_abs_diff_eq!(coalition_interaction(&add, a, &L).unwrap(), 0.0, epsilon = 1e-12);
        }
        assert!(coalition_interaction(&add, set(&[1]), &L).is_err());
    }

    #[test]
    fn components_of_two_products() {
        // x0*x1 + x2*x3, A = N.
        let g = expr_game(4, Expr::add([Expr::product_of_vars([0, 1]), Expr::product_of_vars([2, 3])]));
        let c = elementary_components(&g, PlayerSet::full(4), &L).unwrap();
        assert_eq!(c.values.len(), 11);
        for (&bits, &v) in &c.values {
            let expected = if bits == 0b0011 || bits == 0b1100 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(v, expected, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(c.absolute_sum(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn two_player_component_is_interaction() {
        let g = TableGame::from_table(vec![0.3, 1.0, -2.0, 4.5]).unwrap();
        let c = elementary_components(&g, PlayerSet::full(2), &L).unwrap();
        assert_abs_diff_eq!(
            c.get(PlayerSet::full(2)).unwrap(),
            coalition_interaction(&g, PlayerSet::full(2), &L).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn component_cap() {
        let limits = ExactLimits {
            max_component_target: 3,
            ..ExactLimits::DEFAULT
        };
        let g = expr_game(4, Expr::sum_of_vars(0..4));
        assert!(matches!(
            elementary_components(&g, PlayerSet::full(4), &limits),
            Err(Error::Capacity { .. })
        ));
    }
}
