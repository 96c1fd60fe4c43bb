//! JSON model files.
//!
//! ```json
//! { "n": 3, "type": "expression",
//!   "ast": {"op": "add", "args": [{"var": 0}, {"op": "mul", "args": [{"var": 1}, {"var": 2}]}]},
//!   "presence": [1, 1, 1], "baseline": [0, 0, 0] }
//! { "n": 2, "type": "table", "values": [0, 1, 1, 3] }
//! { "n": 1, "type": "vector_table", "values": [[0, 0], [3, 4]] }
//! ```
//! `presence` and `baseline` are optional and default to 1 and 0.

use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Map, Value};

use super::{project_vector, DynGame, Expr, ExpressionGame, ExpressionModel, Memoized, TableGame, VectorTable};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    Expression(ExpressionModel),
    Table { n: usize, values: Vec<f64> },
    VectorTable { n: usize, values: Vec<Vec<f64>> },
}

impl ModelSpec {
    pub fn n(&self) -> usize {
        match self {
            ModelSpec::Expression(m) => m.n,
            ModelSpec::Table { n, .. } | ModelSpec::VectorTable { n, .. } => *n,
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Format("model must be a JSON object".into()))?;
        let n = obj
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Format("model needs a non-negative integer 'n'".into()))?
            as usize;
        let kind = obj
            .get("type")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Format("model needs a string 'type'".into()))?;
        match kind {
            "expression" => {
                let ast = obj
                    .get("ast")
                    .ok_or_else(|| Error::Format("expression model needs 'ast'".into()))?;
                let expr = Expr::from_json(ast)?;
                let presence = real_list(obj, "presence")?.unwrap_or_else(|| vec![1.0; n]);
                let baseline = real_list(obj, "baseline")?.unwrap_or_else(|| vec![0.0; n]);
                Ok(ModelSpec::Expression(ExpressionModel::new(n, expr, presence, baseline)?))
            }
            "table" => {
                let values = real_list(obj, "values")?
                    .ok_or_else(|| Error::Format("table model needs 'values'".into()))?;
                check_len(n, values.len())?;
                Ok(ModelSpec::Table { n, values })
            }
            "vector_table" => {
                let rows = obj
                    .get("values")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Format("vector_table model needs 'values'".into()))?
                    .iter()
                    .map(|row| {
                        row.as_array()
                            .ok_or_else(|| Error::Format("vector_table rows must be arrays".into()))?
                            .iter()
                            .map(real)
                            .collect::<Result<Vec<f64>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                check_len(n, rows.len())?;
                Ok(ModelSpec::VectorTable { n, values: rows })
            }
            other => Err(Error::Format(format!("unknown model type '{other}'"))),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            ModelSpec::Expression(m) => json!({
                "n": m.n,
                "type": "expression",
                "ast": m.expr.to_json(),
                "presence": m.presence,
                "baseline": m.baseline,
            }),
            ModelSpec::Table { n, values } => json!({ "n": n, "type": "table", "values": values }),
            ModelSpec::VectorTable { n, values } => json!({ "n": n, "type": "vector_table", "values": values }),
        }
    }

    /// Builds the normalized game, memoized when small enough.
    pub fn build(&self) -> Result<DynGame> {
        Ok(match self {
            ModelSpec::Expression(m) => Arc::new(Memoized::new(ExpressionGame::new(m.clone())?)),
            ModelSpec::Table { values, .. } => Arc::new(TableGame::from_table(values.clone())?),
            ModelSpec::VectorTable { values, .. } => {
                Arc::new(Memoized::new(project_vector(VectorTable::new(values.clone())?)?))
            }
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&serde_json::from_str(&text)?)
    }
}

fn check_len(n: usize, len: usize) -> Result<()> {
    if n >= usize::BITS as usize || len != 1usize << n {
        return Err(Error::Format(format!("table for n={n} needs 2^n entries, got {len}")));
    }
    Ok(())
}

fn real(v: &Value) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::Format(format!("expected a number, got {v}")))
}

fn real_list(obj: &Map<String, Value>, key: &str) -> Result<Option<Vec<f64>>> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Array(a)) => a.iter().map(real).collect::<Result<_>>().map(Some),
        Some(other) => Err(Error::Format(format!("'{key}' must be an array, got {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::player_set::PlayerSet;

    #[test]
    fn parses_expression_with_defaults() {
        let v = json!({
            "n": 3, "type": "expression",
            "ast": {"op": "add", "args": [{"var": 0}, {"op": "mul", "args": [{"var": 1}, {"var": 2}]}]}
        });
        let spec = ModelSpec::from_json(&v).unwrap();
        let g = spec.build().unwrap();
        assert_eq!(g.value(PlayerSet::full(3)), 2.0);
        assert_eq!(ModelSpec::from_json(&spec.to_json()).unwrap(), spec);
    }

    #[test]
    fn parses_tables() {
        let t = ModelSpec::from_json(&json!({"n": 2, "type": "table", "values": [1, 1, 1, 3]})).unwrap();
        assert_eq!(t.build().unwrap().value(PlayerSet::full(2)), 2.0);
        let vt = ModelSpec::from_json(&json!({"n": 1, "type": "vector_table", "values": [[0, 0], [3, 4]]})).unwrap();
        assert_eq!(vt.build().unwrap().value(PlayerSet::full(1)), 5.0);
    }

    #[test]
    fn rejects_malformed_models() {
        let bad = [
            json!({"n": 2, "type": "table", "values": [1, 2, 3]}),
            json!({"n": 2, "type": "graph"}),
            json!({"type": "table", "values": [0, 1]}),
            json!({"n": 1, "type": "expression", "ast": {"op": "xor", "args": [{"var": 0}]}}),
            json!({"n": 1, "type": "expression", "ast": {"var": 3}}),
            json!({"n": 2, "type": "expression", "ast": {"var": 0}, "presence": [1]}),
        ];
        for b in bad {
            assert!(ModelSpec::from_json(&b).is_err(), "{b}");
        }
    }
}
