use super::Game;
use crate::error::{Error, Result};
use crate::player_set::PlayerSet;

/// A set function with vector output of constant dimension, e.g. an
/// intermediate feature of a model evaluated on a masked input.
pub trait VectorGame: Send + Sync {
    fn n(&self) -> usize;
    fn dim(&self) -> usize;
    fn value_vec(&self, s: PlayerSet) -> Vec<f64>;
}

/// Explicit table of `2^n` feature vectors.
#[derive(Clone, Debug)]
pub struct VectorTable {
    n: usize,
    dim: usize,
    rows: Vec<Vec<f64>>,
}

impl VectorTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let len = rows.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::Format(format!(
                "vector table length must be a power of two, got {len}"
            )));
        }
        let n = len.trailing_zeros() as usize;
        if n > super::table::MAX_TABLE_PLAYERS {
            return Err(Error::capacity("table player count", n, super::table::MAX_TABLE_PLAYERS));
        }
        let dim = rows[0].len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Format("all feature vectors must have the same dimension".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Format("feature values must be finite".into()));
        }
        Ok(VectorTable { n, dim, rows })
    }
}

impl VectorGame for VectorTable {
    fn n(&self) -> usize {
        self.n
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn value_vec(&self, s: PlayerSet) -> Vec<f64> {
        self.rows[s.bits() as usize].clone()
    }
}

/// Scalar game `v(S) = <f_N, f_S> / |f_N|`, shifted so that `v(∅) = 0`.
pub struct ProjectedGame<V> {
    inner: V,
    direction: Vec<f64>,
    offset: f64,
}

impl<V: VectorGame> ProjectedGame<V> {
    /// Unit vector `f_N / |f_N|` the features are projected on.
    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    fn project(&self, f: &[f64]) -> f64 {
        self.direction.iter().zip(f).map(|(a, b)| a * b).sum()
    }
}

/// Projects a vector game onto its grand-coalition feature.
pub fn project_vector<V: VectorGame>(vg: V) -> Result<ProjectedGame<V>> {
    let f_full = vg.value_vec(PlayerSet::full(vg.n()));
    if f_full.len() != vg.dim() {
        return Err(Error::Format("feature dimension mismatch".into()));
    }
    let norm = f_full.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Degenerate(
            "grand-coalition feature has zero norm; projection undefined".into(),
        ));
    }
    let direction: Vec<f64> = f_full.iter().map(|x| x / norm).collect();
    let mut g = ProjectedGame {
        inner: vg,
        direction,
        offset: 0.0,
    };
    g.offset = g.project(&g.inner.value_vec(PlayerSet::EMPTY));
    Ok(g)
}

impl<V: VectorGame> Game for ProjectedGame<V> {
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn value(&self, s: PlayerSet) -> f64 {
        if s.is_empty() {
            return 0.0;
        }
        self.project(&self.inner.value_vec(s)) - self.offset
    }
}
