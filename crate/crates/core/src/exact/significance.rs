use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::partition::{all_partitions, contiguous_partitions, Partition};
use super::shapley::Tabulated;
use super::ExactLimits;
use crate::error::{Error, Result};
use crate::game::Game;
use crate::player_set::PlayerSet;

/// How a coalition's Shapley value is contextualized inside a partition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Semantics {
    /// `φ(C | N∖A ∪ {[C]})`: the other coalitions of the partition are absent.
    Exclusive,
    /// `φ(C | N∖A ∪ Ω)`: every coalition of the partition plays as one unit.
    Unit,
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Semantics::Exclusive => "exclusive",
            Semantics::Unit => "unit",
        })
    }
}

impl FromStr for Semantics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exclusive" => Ok(Semantics::Exclusive),
            "unit" => Ok(Semantics::Unit),
            other => Err(Error::Config(format!("unknown semantics '{other}'"))),
        }
    }
}

/// Scores partitions of one target set against a tabulated game.
pub(crate) struct PartitionScorer<'t> {
    table: &'t Tabulated,
    target: PlayerSet,
    semantics: Semantics,
    exclusive_cache: HashMap<PlayerSet, f64>,
}

impl<'t> PartitionScorer<'t> {
    pub(crate) fn new(table: &'t Tabulated, target: PlayerSet, semantics: Semantics) -> Self {
        PartitionScorer {
            table,
            target,
            semantics,
            exclusive_cache: HashMap::new(),
        }
    }

    /// `Σ_{C∈Ω} φ(C | context)`.
    pub(crate) fn score(&mut self, omega: &Partition) -> f64 {
        match self.semantics {
            Semantics::Exclusive => omega
                .blocks()
                .iter()
                .map(|&c| {
                    *self
                        .exclusive_cache
                        .entry(c)
                        .or_insert_with(|| self.table.exclusive_value(self.target, c))
                })
                .sum(),
            Semantics::Unit => {
                let outside = self.target.complement(self.table.n());
                let units: Vec<PlayerSet> = omega
                    .blocks()
                    .iter()
                    .copied()
                    .chain(outside.iter().map(PlayerSet::singleton))
                    .collect();
                let phi = self.table.unit_shapley(&units);
                phi[..omega.len()].iter().sum()
            }
        }
    }
}

fn check_partition(game_n: usize, a: PlayerSet, omega: &Partition) -> Result<()> {
    if !a.within(game_n) || a.is_empty() {
        return Err(Error::Domain(format!("target {a:?} is not a non-empty subset of the players")));
    }
    if omega.target() != a {
        return Err(Error::Domain(format!(
            "partition covers {:?}, not the target {a:?}",
            omega.target()
        )));
    }
    Ok(())
}

/// `Σ_{C∈Ω} φ(C | context)` under the chosen semantics.
pub fn partition_value<G: Game + ?Sized>(
    game: &G,
    a: PlayerSet,
    omega: &Partition,
    semantics: Semantics,
    limits: &ExactLimits,
) -> Result<f64> {
    check_partition(game.n(), a, omega)?;
    let table = Tabulated::new(game, limits)?;
    Ok(PartitionScorer::new(&table, a, semantics).score(omega))
}

/// Exact extremal partition values over all admissible partitions of `A`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExactInteractionReport {
    pub target: PlayerSet,
    pub semantics: Semantics,
    pub contiguous_only: bool,
    /// Grand-coalition partition value minus all-singletons partition value.
    /// Under exclusive semantics this is `B([A])`.
    pub b: f64,
    pub b_max: f64,
    pub b_min: f64,
    pub t: f64,
    /// All-singletons partition value, the baseline subtracted from `b_max` and `b_min`.
    pub singleton_value: f64,
    pub omega_max: Partition,
    pub omega_min: Partition,
    pub partitions_evaluated: usize,
}

/// Enumerates admissible partitions and reports `B_max`, `B_min`, and `T = B_max − B_min`.
///
/// Ties (within `1e-12` relative) go to the partition with fewer blocks, then
/// to the lexicographically smallest boundary vector (or growth string when
/// non-contiguous partitions are admitted).
pub fn exact_t<G: Game + ?Sized>(
    game: &G,
    a: PlayerSet,
    semantics: Semantics,
    contiguous_only: bool,
    limits: &ExactLimits,
) -> Result<ExactInteractionReport> {
    if a.is_empty() || !a.within(game.n()) {
        return Err(Error::Domain(format!("target {a:?} is not a non-empty subset of the players")));
    }
    let cap = if contiguous_only {
        limits.max_contiguous_target
    } else {
        limits.max_general_target
    };
    if a.len() > cap {
        return Err(Error::capacity("target size for partition enumeration", a.len(), cap));
    }
    let table = Tabulated::new(game, limits)?;
    Ok(exact_t_from_table(&table, a, semantics, contiguous_only))
}

pub(crate) fn exact_t_from_table(
    table: &Tabulated,
    a: PlayerSet,
    semantics: Semantics,
    contiguous_only: bool,
) -> ExactInteractionReport {
    let mut scorer = PartitionScorer::new(table, a, semantics);
    let singleton_value = scorer.score(&Partition::singletons(a));
    let grand_value = scorer.score(&Partition::grand(a));

    let partitions: Box<dyn Iterator<Item = Partition>> = if contiguous_only {
        Box::new(contiguous_partitions(a))
    } else {
        Box::new(all_partitions(a))
    };
    let key = |p: &Partition| -> (usize, Vec<usize>) {
        let order = if contiguous_only {
            p.boundaries()
                .expect("contiguous")
                .into_iter()
                .map(usize::from)
                .collect()
        } else {
            p.growth_string()
        };
        (p.len(), order)
    };

    let mut best_max: Option<(f64, Partition)> = None;
    let mut best_min: Option<(f64, Partition)> = None;
    let mut count = 0;
    for p in partitions {
        count += 1;
        let v = scorer.score(&p);
        if prefer(v, &p, best_max.as_ref(), Ordering::Greater, &key) {
            best_max = Some((v, p.clone()));
        }
        if prefer(v, &p, best_min.as_ref(), Ordering::Less, &key) {
            best_min = Some((v, p));
        }
    }
    let (max_v, omega_max) = best_max.expect("at least one partition");
    let (min_v, omega_min) = best_min.expect("at least one partition");
    ExactInteractionReport {
        target: a,
        semantics,
        contiguous_only,
        b: grand_value - singleton_value,
        b_max: max_v - singleton_value,
        b_min: min_v - singleton_value,
        t: max_v - min_v,
        singleton_value,
        omega_max,
        omega_min,
        partitions_evaluated: count,
    }
}

fn prefer(
    v: f64,
    p: &Partition,
    best: Option<&(f64, Partition)>,
    want: Ordering,
    key: &impl Fn(&Partition) -> (usize, Vec<usize>),
) -> bool {
    let Some((bv, bp)) = best else {
        return true;
    };
    let tol = 1e-12 * bv.abs().max(1.0);
    if (v - bv).abs() <= tol {
        return key(p) < key(bp);
    }
    v.partial_cmp(bv) == Some(want)
}
