//! Python bindings for `coalition_core`.

use std::sync::Arc;

use pyo3::exceptions::{PyOSError, PyOverflowError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use coalition_core::estimator::{estimate_t, shapley_sampled, EstimatorConfig};
use coalition_core::exact::{
    coalition_interaction, elementary_components, exact_t, pairwise_interaction, shapley_exact, ExactLimits,
};
use coalition_core::game::model_file::ModelSpec;
use coalition_core::game::TableGame;
use coalition_core::rng::SeedTree;
use coalition_core::synthetic::{generate_dataset, Family, GeneratorConfig};
use coalition_core::{DynGame, Error, Game as _, Partition, PlayerSet, Semantics};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Capacity { .. } => PyOverflowError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn semantics(s: &str) -> PyResult<Semantics> {
    match s {
        "exclusive" => Ok(Semantics::Exclusive),
        "unit" => Ok(Semantics::Unit),
        _ => Err(PyValueError::new_err(format!("unknown semantics '{s}' (expected exclusive or unit)"))),
    }
}

fn blocks(p: &Partition) -> Vec<Vec<usize>> {
    p.blocks().iter().map(|b| b.to_vec()).collect()
}

/// A normalized cooperative game, `v(∅) = 0`.
#[pyclass(module = "coalition", frozen)]
struct Game {
    inner: DynGame,
}

impl Game {
    fn players(&self, players: Vec<usize>) -> PyResult<PlayerSet> {
        PlayerSet::from_indices(players, self.inner.n()).map_err(to_py)
    }
}

#[pymethods]
impl Game {
    /// Game from `2^n` values indexed by subset bit pattern.
    #[staticmethod]
    fn from_table(values: Vec<f64>) -> PyResult<Self> {
        Ok(Game {
            inner: Arc::new(TableGame::from_table(values).map_err(to_py)?),
        })
    }

    /// Game from a model document (expression, table or vector_table).
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        let spec = ModelSpec::from_json(&v).map_err(to_py)?;
        Ok(Game {
            inner: spec.build().map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let spec = ModelSpec::load(path).map_err(to_py)?;
        Ok(Game {
            inner: spec.build().map_err(to_py)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn value(&self, players: Vec<usize>) -> PyResult<f64> {
        Ok(self.inner.value(self.players(players)?))
    }

    fn shapley(&self) -> PyResult<Vec<f64>> {
        Ok(shapley_exact(&self.inner, &ExactLimits::DEFAULT).map_err(to_py)?.phi)
    }

    #[pyo3(signature = (permutations, seed=0))]
    fn shapley_sampled(&self, permutations: usize, seed: u64) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let s = shapley_sampled(&self.inner, permutations, &mut SeedTree::new(seed).rng()).map_err(to_py)?;
        Ok((s.phi, s.std_err))
    }

    fn pairwise_interaction(&self, i: usize, j: usize) -> PyResult<f64> {
        pairwise_interaction(&self.inner, i, j, &ExactLimits::DEFAULT).map_err(to_py)
    }

    fn coalition_interaction(&self, players: Vec<usize>) -> PyResult<f64> {
        coalition_interaction(&self.inner, self.players(players)?, &ExactLimits::DEFAULT).map_err(to_py)
    }

    /// Elementary interaction components keyed by sorted player tuples.
    fn components<'py>(&self, py: Python<'py>, players: Vec<usize>) -> PyResult<Bound<'py, PyDict>> {
        let c = elementary_components(&self.inner, self.players(players)?, &ExactLimits::DEFAULT).map_err(to_py)?;
        let out = PyDict::new(py);
        for (&bits, &v) in &c.values {
            out.set_item(pyo3::types::PyTuple::new(py, PlayerSet::from_bits(bits).to_vec())?, v)?;
        }
        Ok(out)
    }

    #[pyo3(signature = (players, semantics="exclusive", contiguous=false))]
    fn exact_t<'py>(
        &self,
        py: Python<'py>,
        players: Vec<usize>,
        semantics: &str,
        contiguous: bool,
    ) -> PyResult<Bound<'py, PyDict>> {
        let sem = self::semantics(semantics)?;
        let r = exact_t(&self.inner, self.players(players)?, sem, contiguous, &ExactLimits::DEFAULT).map_err(to_py)?;
        let out = PyDict::new(py);
        out.set_item("b", r.b)?;
        out.set_item("b_max", r.b_max)?;
        out.set_item("b_min", r.b_min)?;
        out.set_item("t", r.t)?;
        out.set_item("omega_max", blocks(&r.omega_max))?;
        out.set_item("omega_min", blocks(&r.omega_min))?;
        out.set_item("partitions_evaluated", r.partitions_evaluated)?;
        Ok(out)
    }

    #[pyo3(signature = (
        players, epochs=100, partition_samples=8, subset_samples=256, lr=0.1,
        semantics="exclusive", seed=0, exact_fallback=false
    ))]
    #[allow(clippy::too_many_arguments)]
    fn estimate_t<'py>(
        &self,
        py: Python<'py>,
        players: Vec<usize>,
        epochs: usize,
        partition_samples: usize,
        subset_samples: usize,
        lr: f64,
        semantics: &str,
        seed: u64,
        exact_fallback: bool,
    ) -> PyResult<Bound<'py, PyDict>> {
        let cfg = EstimatorConfig {
            epochs,
            partition_samples,
            subset_samples,
            learning_rate: lr,
            semantics: self::semantics(semantics)?,
            seed,
            exact_fallback,
            ..EstimatorConfig::default()
        };
        let a = self.players(players)?;
        let game = self.inner.clone();
        let r = py.detach(move || estimate_t(&game, a, &cfg)).map_err(to_py)?;
        let out = PyDict::new(py);
        out.set_item("t", r.t)?;
        out.set_item("b", r.b)?;
        out.set_item("b_max", r.b_max)?;
        out.set_item("b_min", r.b_min)?;
        out.set_item("omega_max", blocks(&r.omega_max))?;
        out.set_item("omega_min", blocks(&r.omega_min))?;
        out.set_item("p_max", r.p_max)?;
        out.set_item("p_min", r.p_min)?;
        out.set_item("evaluations", r.evaluations)?;
        out.set_item("exact", r.exact)?;
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!("Game(n={})", self.inner.n())
    }
}

/// Synthetic dataset as JSON lines.
#[pyfunction]
#[pyo3(signature = (family, count, seed=0))]
fn generate(family: &str, count: usize, seed: u64) -> PyResult<Vec<String>> {
    let family = Family::parse(family).map_err(to_py)?;
    let models = generate_dataset(family, count, seed, &GeneratorConfig::default()).map_err(to_py)?;
    Ok(models.iter().map(|m| m.to_json().to_string()).collect())
}

#[pymodule]
fn coalition(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Game>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    Ok(())
}
