use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::player_set::PlayerSet;

/// A partition of a target set into coalitions.
///
/// Contiguity is measured along the target's members in increasing index
/// order: a contiguous block is a run of consecutive members of the target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    target: PlayerSet,
    blocks: Vec<PlayerSet>,
    contiguous: bool,
}

impl Partition {
    /// Validates that `blocks` are non-empty, disjoint, and cover `target`.
    /// Blocks are stored sorted by their lowest member.
    pub fn from_blocks(target: PlayerSet, mut blocks: Vec<PlayerSet>) -> Result<Self> {
        let mut seen = PlayerSet::EMPTY;
        for &b in &blocks {
            if b.is_empty() {
                return Err(Error::Domain("partition has an empty block".into()));
            }
            if !b.is_disjoint(seen) {
                return Err(Error::Domain(format!("block {b:?} overlaps another block")));
            }
            seen = seen.union(b);
        }
        if seen != target {
            return Err(Error::Domain(format!(
                "blocks cover {seen:?}, expected {target:?}"
            )));
        }
        blocks.sort_by_key(|b| PlayerSet::min(*b));
        let contiguous = blocks.iter().all(|&b| is_run_of(target, b));
        Ok(Partition {
            target,
            blocks,
            contiguous,
        })
    }

    /// Contiguous partition from boundary bits: `merge[i]` joins the `i`-th
    /// and `(i+1)`-th members of `target`.
    pub fn from_boundaries(target: PlayerSet, merge: &[bool]) -> Result<Self> {
        let members = target.to_vec();
        if members.is_empty() {
            return Err(Error::Domain("cannot partition an empty set".into()));
        }
        if merge.len() + 1 != members.len() {
            return Err(Error::Domain(format!(
                "{} boundary bits for a target of {} players",
                merge.len(),
                members.len()
            )));
        }
        let mut blocks = Vec::new();
        let mut cur = PlayerSet::singleton(members[0]);
        for (k, &join) in merge.iter().enumerate() {
            let next = members[k + 1];
            if join {
                cur = cur.insert(next);
            } else {
                blocks.push(cur);
                cur = PlayerSet::singleton(next);
            }
        }
        blocks.push(cur);
        Ok(Partition {
            target,
            blocks,
            contiguous: true,
        })
    }

    pub fn singletons(target: PlayerSet) -> Self {
        Partition {
            target,
            blocks: target.iter().map(PlayerSet::singleton).collect(),
            contiguous: true,
        }
    }

    pub fn grand(target: PlayerSet) -> Self {
        Partition {
            target,
            blocks: vec![target],
            contiguous: true,
        }
    }

    pub fn target(&self) -> PlayerSet {
        self.target
    }

    pub fn blocks(&self) -> &[PlayerSet] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn is_contiguous(&self) -> bool {
        self.contiguous
    }

    /// Boundary bits for contiguous partitions.
    pub fn boundaries(&self) -> Option<Vec<bool>> {
        if !self.contiguous {
            return None;
        }
        let members = self.target.to_vec();
        Some(
            members
                .windows(2)
                .map(|w| self.block_of(w[0]) == self.block_of(w[1]))
                .collect(),
        )
    }

    /// Index of the block containing `player`.
    pub fn block_of(&self, player: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(player))
    }

    /// Restricted growth string over the target's members: entry `k` is the
    /// block index of the `k`-th member, blocks numbered by first appearance.
    pub fn growth_string(&self) -> Vec<usize> {
        // Blocks are sorted by lowest member, which is first-appearance order.
        self.target
            .iter()
            .map(|p| self.block_of(p).expect("target member in some block"))
            .collect()
    }

    /// Whether two players share a block.
    pub fn together(&self, a: usize, b: usize) -> bool {
        matches!((self.block_of(a), self.block_of(b)), (Some(x), Some(y)) if x == y)
    }
}

fn is_run_of(target: PlayerSet, block: PlayerSet) -> bool {
    let (Some(lo), Some(hi)) = (PlayerSet::min(block), PlayerSet::max(block)) else {
        return true;
    };
    let span = target.intersection(PlayerSet::range(lo, hi + 1));
    span == block
}

/// All contiguous partitions of `target`, in boundary-vector counting order
/// (bit `i` of the counter is boundary `i`).
pub fn contiguous_partitions(target: PlayerSet) -> impl Iterator<Item = Partition> {
    let m = target.len();
    let boundaries = m.saturating_sub(1);
    (0..1u64 << boundaries).map(move |code| {
        let merge: Vec<bool> = (0..boundaries).map(|i| code >> i & 1 == 1).collect();
        Partition::from_boundaries(target, &merge).expect("valid boundary vector")
    })
}

/// All set partitions of `target`, enumerated as restricted growth strings
/// in lexicographic order.
pub fn all_partitions(target: PlayerSet) -> impl Iterator<Item = Partition> {
    let members = target.to_vec();
    let m = members.len();
    let mut rgs: Option<Vec<usize>> = (m > 0).then(|| vec![0; m]);
    std::iter::from_fn(move || {
        let cur = rgs.clone()?;
        rgs = next_growth_string(&cur);
        let nblocks = cur.iter().max().map_or(0, |&x| x + 1);
        let mut blocks = vec![PlayerSet::EMPTY; nblocks];
        for (k, &b) in cur.iter().enumerate() {
            blocks[b] = blocks[b].insert(members[k]);
        }
        Some(Partition::from_blocks(target, blocks).expect("growth string is a partition"))
    })
}

fn next_growth_string(cur: &[usize]) -> Option<Vec<usize>> {
    let m = cur.len();
    let mut next = cur.to_vec();
    // prefix maxima
    let mut pmax = vec![0usize; m];
    for k in 1..m {
        pmax[k] = pmax[k - 1].max(cur[k - 1]);
    }
    for k in (1..m).rev() {
        if next[k] <= pmax[k] {
            next[k] += 1;
            for x in next.iter_mut().skip(k + 1) {
                *x = 0;
            }
            return Some(next);
        }
    }
    None
}
