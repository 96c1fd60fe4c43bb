//! Games: set functions `v: 2^N -> R` normalized so that `v(∅) = 0`.
//!
//! Every constructor in this module subtracts the raw value of the empty
//! coalition once, at construction time. Shapley values and interactions only
//! depend on differences of `v`, so the shift is invisible to them.

mod expression;
mod memo;
mod table;
mod transform;
mod vector;

pub mod model_file;

use std::sync::Arc;

pub use expression::{Expr, ExpressionGame, ExpressionModel};
pub use memo::{CountingGame, Memoized, DEFAULT_MEMO_MAX_PLAYERS};
pub use table::TableGame;
pub use transform::{contract, restrict, FnGame, Scaled, UnitGame};
pub use vector::{project_vector, ProjectedGame, VectorGame, VectorTable};

use crate::error::{Error, Result};
use crate::player_set::PlayerSet;

/// A cooperative game over players `0..n()`.
///
/// Implementations must be deterministic and must return exactly `0.0` for the
/// empty set.
pub trait Game: Send + Sync {
    fn n(&self) -> usize;

    /// `v(S)`; `s` must lie within `0..n()`.
    fn value(&self, s: PlayerSet) -> f64;

    /// Checked evaluation.
    fn eval(&self, s: PlayerSet) -> Result<f64> {
        if !s.within(self.n()) {
            return Err(Error::Domain(format!(
                "{s:?} is not a subset of the {} players",
                self.n()
            )));
        }
        Ok(self.value(s))
    }

    /// The grand coalition.
    fn players(&self) -> PlayerSet {
        PlayerSet::full(self.n())
    }
}

impl<G: Game + ?Sized> Game for &G {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn value(&self, s: PlayerSet) -> f64 {
        (**self).value(s)
    }
}

impl<G: Game + ?Sized> Game for Arc<G> {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn value(&self, s: PlayerSet) -> f64 {
        (**self).value(s)
    }
}

impl<G: Game + ?Sized> Game for Box<G> {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn value(&self, s: PlayerSet) -> f64 {
        (**self).value(s)
    }
}

/// Shared, type-erased game handle.
pub type DynGame = Arc<dyn Game>;

pub(crate) fn check_players(n: usize) -> Result<()> {
    if n > crate::player_set::MAX_PLAYERS {
        return Err(Error::capacity("player count", n, crate::player_set::MAX_PLAYERS));
    }
    Ok(())
}
