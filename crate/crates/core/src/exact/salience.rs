use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{pairwise_interaction, ExactLimits};
use crate::error::{Error, Result};
use crate::game::Game;
use crate::player_set::PlayerSet;
use crate::rng::SeedTree;

/// Weighted map of the contexts that reinforce a pairwise interaction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SalienceMap {
    pub pair: (usize, usize),
    /// `B(S_ij)` on the full game.
    pub interaction: f64,
    /// `Σ_S |Δv(i,j,S)| · map(S)` over contexts with `Δv · B > 0`.
    /// When contexts are sampled, the sum is rescaled to the full context count.
    pub weights: Vec<f64>,
    pub contexts_examined: usize,
    pub contexts_kept: usize,
    pub enumerated: bool,
    /// Set when `B(S_ij) = 0`; no context can reinforce it.
    pub empty: bool,
}

/// `Δv(i,j,S) = v(S∪{i,j}) − v(S∪{i}) − v(S∪{j}) + v(S)`.
pub fn pair_delta<G: Game + ?Sized>(game: &G, i: usize, j: usize, s: PlayerSet) -> f64 {
    game.value(s.insert(i).insert(j)) - game.value(s.insert(i)) - game.value(s.insert(j)) + game.value(s)
}

pub fn context_salience<G: Game + ?Sized>(
    game: &G,
    i: usize,
    j: usize,
    budget: usize,
    seed: u64,
    limits: &ExactLimits,
) -> Result<SalienceMap> {
    if budget == 0 {
        return Err(Error::Config("context budget must be at least 1".into()));
    }
    let n = game.n();
    let interaction = pairwise_interaction(game, i, j, limits)?;
    let others = PlayerSet::full(n).remove(i).remove(j);
    let mut weights = vec![0.0; n];
    if interaction == 0.0 {
        return Ok(SalienceMap {
            pair: (i, j),
            interaction,
            weights,
            contexts_examined: 0,
            contexts_kept: 0,
            enumerated: false,
            empty: true,
        });
    }

    let total_contexts = 2f64.powi(others.len() as i32);
    let enumerated = total_contexts <= budget as f64;
    let contexts: Box<dyn Iterator<Item = PlayerSet>> = if enumerated {
        Box::new(others.subsets())
    } else {
        let mut rng = SeedTree::new(seed).named("salience").rng();
        Box::new((0..budget).map(move |_| PlayerSet::from_bits(rng.random::<u64>() & others.bits())))
    };

    let (mut examined, mut kept) = (0, 0);
    for s in contexts {
        examined += 1;
        let dv = pair_delta(game, i, j, s);
        if dv * interaction > 0.0 {
            kept += 1;
            for k in s {
                weights[k] += dv.abs();
            }
        }
    }
    if !enumerated {
        let scale = total_contexts / examined as f64;
        weights.iter_mut().for_each(|w| *w *= scale);
    }
    Ok(SalienceMap {
        pair: (i, j),
        interaction,
        weights,
        contexts_examined: examined,
        contexts_kept: kept,
        enumerated,
        empty: false,
    })
}
