use super::{check_players, Game};
use crate::error::{Error, Result};
use crate::player_set::PlayerSet;

/// A game whose players are disjoint groups ("units") of another game's
/// players. A unit is present or absent as a whole; players of the source
/// game that belong to no unit are permanently absent.
///
/// Both [`contract`] and [`restrict`] produce this shape, so they compose.
#[derive(Clone, Debug)]
pub struct UnitGame<G> {
    source: G,
    units: Vec<PlayerSet>,
}

impl<G: Game> UnitGame<G> {
    /// Units must be non-empty, pairwise disjoint and within the source's players.
    pub fn new(source: G, units: Vec<PlayerSet>) -> Result<Self> {
        check_players(units.len())?;
        let mut seen = PlayerSet::EMPTY;
        for &u in &units {
            if u.is_empty() {
                return Err(Error::Domain("empty unit".into()));
            }
            if !u.within(source.n()) {
                return Err(Error::Domain(format!(
                    "unit {u:?} outside the source's {} players",
                    source.n()
                )));
            }
            if !u.is_disjoint(seen) {
                return Err(Error::Domain(format!("unit {u:?} overlaps another unit")));
            }
            seen = seen.union(u);
        }
        Ok(UnitGame { source, units })
    }

    pub fn units(&self) -> &[PlayerSet] {
        &self.units
    }

    pub fn source(&self) -> &G {
        &self.source
    }

    /// Source-level coalition for a set of units.
    #[inline]
    pub fn expand(&self, s: PlayerSet) -> PlayerSet {
        s.iter()
            .fold(PlayerSet::EMPTY, |acc, k| acc.union(self.units[k]))
    }
}

impl<G: Game> Game for UnitGame<G> {
    fn n(&self) -> usize {
        self.units.len()
    }

    fn value(&self, s: PlayerSet) -> f64 {
        self.source.value(self.expand(s))
    }
}

/// Merges the players of `coalition` into one player `[C]`.
///
/// The surviving players keep their relative order and `[C]` takes the
/// position of the lowest index in `coalition`.
pub fn contract<G: Game>(game: G, coalition: PlayerSet) -> Result<UnitGame<G>> {
    if coalition.is_empty() {
        return Err(Error::Domain("cannot contract an empty coalition".into()));
    }
    if !coalition.within(game.n()) {
        return Err(Error::Domain(format!(
            "coalition {coalition:?} outside the game's {} players",
            game.n()
        )));
    }
    let lead = PlayerSet::min(coalition).expect("non-empty");
    let units = (0..game.n())
        .filter_map(|i| {
            if i == lead {
                Some(coalition)
            } else if coalition.contains(i) {
                None
            } else {
                Some(PlayerSet::singleton(i))
            }
        })
        .collect();
    UnitGame::new(game, units)
}

/// Keeps only the players in `alive`; everyone else is fixed at baseline.
/// Surviving players are renumbered `0..|alive|` in their original order.
pub fn restrict<G: Game>(game: G, alive: PlayerSet) -> Result<UnitGame<G>> {
    if alive.is_empty() {
        return Err(Error::Domain("restriction to an empty player set".into()));
    }
    if !alive.within(game.n()) {
        return Err(Error::Domain(format!(
            "alive set {alive:?} exceeds the game's {} players",
            game.n()
        )));
    }
    let units = alive.iter().map(PlayerSet::singleton).collect();
    UnitGame::new(game, units)
}

/// `factor * v`.
#[derive(Clone, Debug)]
pub struct Scaled<G> {
    inner: G,
    factor: f64,
}

impl<G: Game> Scaled<G> {
    pub fn new(inner: G, factor: f64) -> Self {
        Scaled { inner, factor }
    }

    pub fn negated(inner: G) -> Self {
        Self::new(inner, -1.0)
    }
}

impl<G: Game> Game for Scaled<G> {
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn value(&self, s: PlayerSet) -> f64 {
        if self.factor == -1.0 {
            -self.inner.value(s)
        } else {
            self.factor * self.inner.value(s)
        }
    }
}

/// A game backed by an arbitrary closure, normalized by its empty-set value.
pub struct FnGame<F> {
    n: usize,
    f: F,
    offset: f64,
}

impl<F> FnGame<F>
where
    F: Fn(PlayerSet) -> f64 + Send + Sync,
{
    pub fn new(n: usize, f: F) -> Result<Self> {
        check_players(n)?;
        let offset = f(PlayerSet::EMPTY);
        if !offset.is_finite() {
            return Err(Error::Domain("set function is not finite at the empty set".into()));
        }
        Ok(FnGame { n, f, offset })
    }
}

impl<F> Game for FnGame<F>
where
    F: Fn(PlayerSet) -> f64 + Send + Sync,
{
    fn n(&self) -> usize {
        self.n
    }

    fn value(&self, s: PlayerSet) -> f64 {
        if s.is_empty() {
            return 0.0;
        }
        (self.f)(s) - self.offset
    }
}
