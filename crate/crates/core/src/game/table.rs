use super::Game;
use crate::error::{Error, Result};
use crate::player_set::PlayerSet;

/// Largest player count accepted for an explicit value table.
pub const MAX_TABLE_PLAYERS: usize = 30;

/// A game given by its full value table, indexed by subset bit pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct TableGame {
    n: usize,
    values: Vec<f64>,
}

impl TableGame {
    /// Builds a game with `v(S) = values[S] - values[∅]`.
    pub fn from_table(values: Vec<f64>) -> Result<Self> {
        let len = values.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::Format(format!(
                "table length must be a power of two, got {len}"
            )));
        }
        let n = len.trailing_zeros() as usize;
        if n > MAX_TABLE_PLAYERS {
            return Err(Error::capacity("table player count", n, MAX_TABLE_PLAYERS));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("table values must be finite".into()));
        }
        let offset = values[0];
        let values = values.into_iter().map(|v| v - offset).collect();
        Ok(TableGame { n, values })
    }

    /// Tabulates any game. Evaluates all `2^n` subsets.
    pub fn tabulate<G: Game + ?Sized>(game: &G) -> Result<Self> {
        let n = game.n();
        if n > MAX_TABLE_PLAYERS {
            return Err(Error::capacity("table player count", n, MAX_TABLE_PLAYERS));
        }
        let values = (0..1u64 << n)
            .map(|bits| game.value(PlayerSet::from_bits(bits)))
            .collect();
        Ok(TableGame { n, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl Game for TableGame {
    fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn value(&self, s: PlayerSet) -> f64 {
        self.values[s.bits() as usize]
    }
}
