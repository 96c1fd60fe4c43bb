use std::sync::atomic::{AtomicU64, Ordering};

use super::Game;
use crate::player_set::PlayerSet;

/// Games up to this size are memoized by default.
pub const DEFAULT_MEMO_MAX_PLAYERS: usize = 24;

/// Dense memo table over all `2^n` subsets.
///
/// Slots are filled lazily. Concurrent fills of the same slot write the same
/// bits, so readers never observe a torn or conflicting value.
pub struct Memoized<G> {
    inner: G,
    cache: Option<DenseCache>,
}

struct DenseCache {
    values: Vec<AtomicU64>,
    filled: Vec<AtomicU64>,
}

impl DenseCache {
    fn new(n: usize) -> Self {
        let len = 1usize << n;
        DenseCache {
            values: (0..len).map(|_| AtomicU64::new(0)).collect(),
            filled: (0..len.div_ceil(64)).map(|_| AtomicU64::new(0)).collect(),
        }
    }

    #[inline]
    fn get(&self, idx: usize) -> Option<f64> {
        let word = self.filled[idx / 64].load(Ordering::Acquire);
        (word >> (idx % 64) & 1 == 1).then(|| f64::from_bits(self.values[idx].load(Ordering::Relaxed)))
    }

    #[inline]
    fn put(&self, idx: usize, v: f64) {
        self.values[idx].store(v.to_bits(), Ordering::Relaxed);
        self.filled[idx / 64].fetch_or(1 << (idx % 64), Ordering::Release);
    }
}

impl<G: Game> Memoized<G> {
    /// Memoizes when `n <= DEFAULT_MEMO_MAX_PLAYERS`, otherwise passes through.
    pub fn new(inner: G) -> Self {
        let enabled = inner.n() <= DEFAULT_MEMO_MAX_PLAYERS;
        Self::with_policy(inner, enabled)
    }

    pub fn with_policy(inner: G, enabled: bool) -> Self {
        let cache = (enabled && inner.n() <= DEFAULT_MEMO_MAX_PLAYERS).then(|| DenseCache::new(inner.n()));
        Memoized { inner, cache }
    }

    pub fn is_enabled(&self) -> bool {
        self.cache.is_some()
    }

    pub fn inner(&self) -> &G {
        &self.inner
    }
}

impl<G: Game> Game for Memoized<G> {
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[inline]
    fn value(&self, s: PlayerSet) -> f64 {
        let Some(cache) = &self.cache else {
            return self.inner.value(s);
        };
        let idx = s.bits() as usize;
        if let Some(v) = cache.get(idx) {
            return v;
        }
        let v = self.inner.value(s);
        cache.put(idx, v);
        v
    }
}

/// Counts calls to [`Game::value`].
pub struct CountingGame<G> {
    inner: G,
    calls: AtomicU64,
}

impl<G: Game> CountingGame<G> {
    pub fn new(inner: G) -> Self {
        CountingGame {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }
}

impl<G: Game> Game for CountingGame<G> {
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn value(&self, s: PlayerSet) -> f64 {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.value(s)
    }
}
