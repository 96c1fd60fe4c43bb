use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Game;
use crate::player_set::PlayerSet;
use crate::rng::Rng;

/// Permutation-sampling Shapley estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledShapley {
    pub phi: Vec<f64>,
    /// Standard error of each entry; zero after a single permutation.
    pub std_err: Vec<f64>,
    pub permutations: usize,
    pub evaluations: u64,
}

/// Averages marginal contributions along uniformly random orderings of the players.
pub fn shapley_sampled<G: Game + ?Sized>(game: &G, permutations: usize, rng: &mut Rng) -> Result<SampledShapley> {
    if permutations == 0 {
        return Err(Error::Config("permutation count must be at least 1".into()));
    }
    let n = game.n();
    let mut order: Vec<usize> = (0..n).collect();
    let mut mean = vec![0.0; n];
    let mut m2 = vec![0.0; n];
    let mut evaluations = 0u64;
    for t in 1..=permutations {
        order.shuffle(rng);
        let mut s = PlayerSet::EMPTY;
        let mut prev = game.value(s);
        evaluations += 1;
        for &i in &order {
            s = s.insert(i);
            let cur = game.value(s);
            evaluations += 1;
            let x = cur - prev;
            prev = cur;
            // Welford update.
            let d = x - mean[i];
            mean[i] += d / t as f64;
            m2[i] += d * (x - mean[i]);
        }
    }
    let std_err = if permutations > 1 {
        let p = permutations as f64;
        m2.iter().map(|&q| (q / (p - 1.0) / p).sqrt()).collect()
    } else {
        vec![0.0; n]
    };
    Ok(SampledShapley {
        phi: mean,
        std_err,
        permutations,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{shapley_exact, ExactLimits};
    use crate::game::{Expr, ExpressionGame, ExpressionModel, TableGame};
    use crate::rng::SeedTree;
    use approx::assert_abs_diff_eq;

    #[test]
    fn additive_game_is_exact() {
        let g = ExpressionGame::new(ExpressionModel::binary(5, Expr::sum_of_vars(0..5)).unwrap()).unwrap();
        let s = shapley_sampled(&g, 3, &mut SeedTree::new(0).rng()).unwrap();
        for (phi, se) in s.phi.iter().zip(&s.std_err) {
            assert_abs_diff_eq!(*phi, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(*se, 0.0, epsilon = 1e-12);
        }
        assert_eq!(s.evaluations, 3 * 6);
    }

    #[test]
    fn single_player_and_efficiency() {
        let one = TableGame::from_table(vec![0.0, 2.5]).unwrap();
        assert_eq!(shapley_sampled(&one, 1, &mut SeedTree::new(0).rng()).unwrap().phi, vec![2.5]);

        let g = TableGame::from_table((0..16).map(|k| ((k * 7) % 5) as f64).collect()).unwrap();
        let s = shapley_sampled(&g, 1, &mut SeedTree::new(3).rng()).unwrap();
        assert_abs_diff_eq!(s.phi.iter().sum::<f64>(), g.value(PlayerSet::full(4)), epsilon = 1e-12);
        assert!(shapley_sampled(&g, 0, &mut SeedTree::new(3).rng()).is_err());
    }

    #[test]
    fn converges_towards_exact() {
        let e = Expr::add([Expr::product_of_vars([0, 1]), Expr::or([Expr::var(2), Expr::var(3)]), Expr::var(4)]);
        let g = ExpressionGame::new(ExpressionModel::binary(5, e).unwrap()).unwrap();
        let exact = shapley_exact(&g, &ExactLimits::DEFAULT).unwrap();
        let s = shapley_sampled(&g, 4000, &mut SeedTree::new(9).rng()).unwrap();
        for i in 0..5 {
            assert!((s.phi[i] - exact.phi[i]).abs() <= 4.0 * s.std_err[i] + 1e-12, "player {i}");
        }
    }
}
