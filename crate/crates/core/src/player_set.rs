//! Fixed-width player subsets.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard upper bound on the number of players a game may have.
pub const MAX_PLAYERS: usize = 64;

/// A subset of the players `0..n`, stored as a single machine word.
///
/// The player count is not stored; callers carry `n` alongside and the
/// constructors that take `n` guarantee no bit is set at an index `>= n`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlayerSet(u64);

impl PlayerSet {
    pub const EMPTY: PlayerSet = PlayerSet(0);

    #[inline]
    pub const fn from_bits(bits: u64) -> Self {
        PlayerSet(bits)
    }

    /// Checked construction from raw bits for an `n`-player game.
    pub fn from_bits_checked(bits: u64, n: usize) -> Result<Self> {
        let s = PlayerSet(bits);
        if !s.within(n) {
            return Err(Error::Domain(format!(
                "player set {s:?} has players outside 0..{n}"
            )));
        }
        Ok(s)
    }

    /// All players `0..n`.
    #[inline]
    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_PLAYERS);
        if n >= 64 {
            PlayerSet(u64::MAX)
        } else {
            PlayerSet((1u64 << n) - 1)
        }
    }

    #[inline]
    pub fn singleton(i: usize) -> Self {
        debug_assert!(i < MAX_PLAYERS);
        PlayerSet(1u64 << i)
    }

    /// Consecutive players `start..end`.
    pub fn range(start: usize, end: usize) -> Self {
        debug_assert!(start <= end && end <= MAX_PLAYERS);
        Self::full(end).difference(Self::full(start))
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I, n: usize) -> Result<Self> {
        let mut bits = 0u64;
        for i in indices {
            if i >= n || i >= MAX_PLAYERS {
                return Err(Error::Domain(format!("player index {i} out of range for n={n}")));
            }
            bits |= 1u64 << i;
        }
        Ok(PlayerSet(bits))
    }

    #[inline]
    pub const fn bits(self) -> u64 {
        self.0
    }

    #[inline]
    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub const fn contains(self, i: usize) -> bool {
        i < 64 && self.0 >> i & 1 == 1
    }

    #[inline]
    pub const fn insert(self, i: usize) -> Self {
        PlayerSet(self.0 | 1u64 << i)
    }

    #[inline]
    pub const fn remove(self, i: usize) -> Self {
        PlayerSet(self.0 & !(1u64 << i))
    }

    #[inline]
    pub const fn union(self, other: Self) -> Self {
        PlayerSet(self.0 | other.0)
    }

    #[inline]
    pub const fn intersection(self, other: Self) -> Self {
        PlayerSet(self.0 & other.0)
    }

    #[inline]
    pub const fn difference(self, other: Self) -> Self {
        PlayerSet(self.0 & !other.0)
    }

    /// Complement within `0..n`.
    #[inline]
    pub fn complement(self, n: usize) -> Self {
        Self::full(n).difference(self)
    }

    #[inline]
    pub const fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    #[inline]
    pub const fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    /// True when no player at index `>= n` is present.
    #[inline]
    pub fn within(self, n: usize) -> bool {
        self.is_subset(Self::full(n))
    }

    pub fn min(self) -> Option<usize> {
        (!self.is_empty()).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn max(self) -> Option<usize> {
        (!self.is_empty()).then(|| 63 - self.0.leading_zeros() as usize)
    }

    /// True when the members form one run of consecutive indices.
    pub fn is_interval(self) -> bool {
        if self.is_empty() {
            return true;
        }
        let shifted = self.0 >> self.0.trailing_zeros();
        shifted & shifted.wrapping_add(1) == 0
    }

    /// Members in increasing order.
    pub fn iter(self) -> Players {
        Players(self.0)
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Every subset of `self`, starting from the empty set and ending at `self`.
    pub fn subsets(self) -> Subsets {
        Subsets {
            universe: self.0,
            next: Some(0),
        }
    }
}

impl fmt::Debug for PlayerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<usize> for PlayerSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        iter.into_iter().fold(PlayerSet::EMPTY, |s, i| s.insert(i))
    }
}

impl IntoIterator for PlayerSet {
    type Item = usize;
    type IntoIter = Players;

    fn into_iter(self) -> Players {
        self.iter()
    }
}

/// Iterator over the members of a [`PlayerSet`].
#[derive(Clone, Debug)]
pub struct Players(u64);

impl Iterator for Players {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let k = self.0.count_ones() as usize;
        (k, Some(k))
    }
}

impl ExactSizeIterator for Players {}

/// Subset enumeration in increasing bit-pattern order (Gosper-free submask walk).
#[derive(Clone, Debug)]
pub struct Subsets {
    universe: u64,
    next: Option<u64>,
}

impl Iterator for Subsets {
    type Item = PlayerSet;

    fn next(&mut self) -> Option<PlayerSet> {
        let cur = self.next?;
        self.next = if cur == self.universe {
            None
        } else {
            Some((cur.wrapping_sub(self.universe)) & self.universe)
        };
        Some(PlayerSet(cur))
    }
}
