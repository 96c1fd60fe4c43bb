use std::fmt;

use serde_json::{json, Value};

use super::{check_players, Game};
use crate::error::{Error, Result};
use crate::player_set::PlayerSet;

/// Expression tree over variables `x_0..x_{n-1}`.
///
/// `And` and `Or` are `min` and `max`, which coincide with the Boolean
/// connectives on `{0, 1}`. `Pow` uses `0^0 = 1`.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Var(usize),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Pow(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(i: usize) -> Self {
        Expr::Var(i)
    }

    pub fn add(args: impl IntoIterator<Item = Expr>) -> Self {
        Expr::Add(args.into_iter().collect())
    }

    pub fn mul(args: impl IntoIterator<Item = Expr>) -> Self {
        Expr::Mul(args.into_iter().collect())
    }

    pub fn and(args: impl IntoIterator<Item = Expr>) -> Self {
        Expr::And(args.into_iter().collect())
    }

    pub fn or(args: impl IntoIterator<Item = Expr>) -> Self {
        Expr::Or(args.into_iter().collect())
    }

    pub fn pow(base: Expr, exponent: Expr) -> Self {
        Expr::Pow(Box::new(base), Box::new(exponent))
    }

    /// Sum of plain variables `x_i` for each `i` in `vars`.
    pub fn sum_of_vars(vars: impl IntoIterator<Item = usize>) -> Self {
        Expr::add(vars.into_iter().map(Expr::Var))
    }

    /// Product of plain variables.
    pub fn product_of_vars(vars: impl IntoIterator<Item = usize>) -> Self {
        Expr::mul(vars.into_iter().map(Expr::Var))
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Var(i) => x[*i],
            Expr::Add(args) => args.iter().map(|a| a.evaluate(x)).sum(),
            Expr::Mul(args) => args.iter().map(|a| a.evaluate(x)).product(),
            Expr::And(args) => args
                .iter()
                .map(|a| a.evaluate(x))
                .fold(f64::INFINITY, f64::min),
            Expr::Or(args) => args
                .iter()
                .map(|a| a.evaluate(x))
                .fold(f64::NEG_INFINITY, f64::max),
            Expr::Pow(b, e) => {
                let (b, e) = (b.evaluate(x), e.evaluate(x));
                if b == 0.0 && e == 0.0 {
                    1.0
                } else {
                    b.powf(e)
                }
            }
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Var(i) => Some(*i),
            Expr::Add(a) | Expr::Mul(a) | Expr::And(a) | Expr::Or(a) => {
                a.iter().filter_map(Expr::max_var).max()
            }
            Expr::Pow(b, e) => b.max_var().max(e.max_var()),
        }
    }

    fn check_arity(&self) -> Result<()> {
        match self {
            Expr::Var(_) => Ok(()),
            Expr::Add(a) | Expr::Mul(a) | Expr::And(a) | Expr::Or(a) => {
                if a.is_empty() {
                    return Err(Error::Format(format!("'{}' needs at least one argument", self.op_name())));
                }
                a.iter().try_for_each(Expr::check_arity)
            }
            Expr::Pow(b, e) => {
                b.check_arity()?;
                e.check_arity()
            }
        }
    }

    fn op_name(&self) -> &'static str {
        match self {
            Expr::Var(_) => "var",
            Expr::Add(_) => "add",
            Expr::Mul(_) => "mul",
            Expr::And(_) => "and",
            Expr::Or(_) => "or",
            Expr::Pow(..) => "pow",
        }
    }

    /// `{"op": ..., "args": [...]}` / `{"var": i}` encoding.
    pub fn to_json(&self) -> Value {
        match self {
            Expr::Var(i) => json!({ "var": i }),
            Expr::Add(a) | Expr::Mul(a) | Expr::And(a) | Expr::Or(a) => json!({
                "op": self.op_name(),
                "args": a.iter().map(Expr::to_json).collect::<Vec<_>>(),
            }),
            Expr::Pow(b, e) => json!({ "op": "pow", "args": [b.to_json(), e.to_json()] }),
        }
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Format(format!("expression node must be an object, got {value}")))?;
        if let Some(v) = obj.get("var") {
            if obj.len() != 1 {
                return Err(Error::Format("variable leaf must only contain 'var'".into()));
            }
            let i = v
                .as_u64()
                .ok_or_else(|| Error::Format(format!("'var' must be a non-negative integer, got {v}")))?;
            return Ok(Expr::Var(i as usize));
        }
        let op = obj
            .get("op")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Format(format!("node without 'op' or 'var': {value}")))?;
        let args = obj
            .get("args")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Format(format!("'{op}' node without 'args' array")))?
            .iter()
            .map(Expr::from_json)
            .collect::<Result<Vec<_>>>()?;
        let expr = match op {
            "add" => Expr::Add(args),
            "mul" => Expr::Mul(args),
            "and" => Expr::And(args),
            "or" => Expr::Or(args),
            "pow" => {
                let [b, e]: [Expr; 2] = args.try_into().map_err(|a: Vec<Expr>| {
                    Error::Format(format!("'pow' takes exactly 2 arguments, got {}", a.len()))
                })?;
                Expr::pow(b, e)
            }
            other => return Err(Error::Format(format!("unknown operator '{other}'"))),
        };
        expr.check_arity()?;
        Ok(expr)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, args: &[Expr], sep: &str| -> fmt::Result {
            write!(f, "(")?;
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    write!(f, "{sep}")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")
        };
        match self {
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Add(a) => join(f, a, " + "),
            Expr::Mul(a) => join(f, a, "*"),
            Expr::And(a) => join(f, a, " & "),
            Expr::Or(a) => join(f, a, " | "),
            Expr::Pow(b, e) => write!(f, "{b}^{e}"),
        }
    }
}

/// An expression together with the values each variable takes when its
/// player is present or absent.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpressionModel {
    pub n: usize,
    pub expr: Expr,
    pub presence: Vec<f64>,
    pub baseline: Vec<f64>,
}

impl ExpressionModel {
    /// Presence 1 and baseline 0 for every variable.
    pub fn binary(n: usize, expr: Expr) -> Result<Self> {
        Self::new(n, expr, vec![1.0; n], vec![0.0; n])
    }

    pub fn new(n: usize, expr: Expr, presence: Vec<f64>, baseline: Vec<f64>) -> Result<Self> {
        check_players(n)?;
        if presence.len() != n || baseline.len() != n {
            return Err(Error::Format(format!(
                "presence/baseline must have {n} entries, got {}/{}",
                presence.len(),
                baseline.len()
            )));
        }
        if let Some(m) = expr.max_var() {
            if m >= n {
                return Err(Error::Domain(format!("variable x{m} out of range for n={n}")));
            }
        }
        if presence.iter().chain(&baseline).any(|v| !v.is_finite()) {
            return Err(Error::Format("presence/baseline values must be finite".into()));
        }
        expr.check_arity()?;
        Ok(ExpressionModel {
            n,
            expr,
            presence,
            baseline,
        })
    }

    /// The model output before empty-set normalization.
    pub fn raw_value(&self, s: PlayerSet) -> f64 {
        let mut x = [0.0f64; 64];
        let x = &mut x[..self.n];
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = if s.contains(i) { self.presence[i] } else { self.baseline[i] };
        }
        self.expr.evaluate(x)
    }
}

/// [`ExpressionModel`] as a normalized game.
#[derive(Clone, Debug)]
pub struct ExpressionGame {
    model: ExpressionModel,
    offset: f64,
}

/// Exhaustive finiteness check is done up to this many players; larger
/// models are only checked at the empty and full assignments.
const EXHAUSTIVE_FINITE_CHECK: usize = 16;

impl ExpressionGame {
    pub fn new(model: ExpressionModel) -> Result<Self> {
        let offset = model.raw_value(PlayerSet::EMPTY);
        let probe: Box<dyn Iterator<Item = PlayerSet>> = if model.n <= EXHAUSTIVE_FINITE_CHECK {
            Box::new(PlayerSet::full(model.n).subsets())
        } else {
            Box::new([PlayerSet::EMPTY, PlayerSet::full(model.n)].into_iter())
        };
        for s in probe {
            if !model.raw_value(s).is_finite() {
                return Err(Error::Domain(format!("expression is not finite at {s:?}")));
            }
        }
        Ok(ExpressionGame { model, offset })
    }

    pub fn model(&self) -> &ExpressionModel {
        &self.model
    }

    /// Raw output at the all-baseline input, subtracted from every value.
    pub fn offset(&self) -> f64 {
        self.offset
    }
}

impl Game for ExpressionGame {
    fn n(&self) -> usize {
        self.model.n
    }

    fn value(&self, s: PlayerSet) -> f64 {
        if s.is_empty() {
            return 0.0;
        }
        self.model.raw_value(s) - self.offset
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ix: &[usize]) -> PlayerSet {
        ix.iter().copied().collect()
    }

    #[test]
    fn product_game() {
        let g = ExpressionGame::new(ExpressionModel::binary(2, Expr::product_of_vars([0, 1])).unwrap()).unwrap();
        assert_eq!(g.value(set(&[0, 1])), 1.0);
        assert_eq!(g.value(PlayerSet::EMPTY), 0.0);
        assert_eq!(g.value(set(&[0])), 0.0);
    }

    #[test]
    fn zero_pow_zero_offset() {
        // x0^x1 + x2: raw v(∅) = 0^0 + 0 = 1.
        let e = Expr::add([Expr::pow(Expr::var(0), Expr::var(1)), Expr::var(2)]);
        let g = ExpressionGame::new(ExpressionModel::binary(3, e).unwrap()).unwrap();
        assert_eq!(g.offset(), 1.0);
        assert_eq!(g.value(PlayerSet::EMPTY), 0.0);
        assert_eq!(g.value(PlayerSet::full(3)), 1.0);
        // 0^1 = 0, so the exponent alone drops the value below the baseline.
        assert_eq!(g.value(set(&[1])), -1.0);
    }

    #[test]
    fn and_or_on_binary_inputs() {
        let e = Expr::or([Expr::var(0), Expr::and([Expr::var(1), Expr::var(2)])]);
        let g = ExpressionGame::new(ExpressionModel::binary(3, e).unwrap()).unwrap();
        let expect = |s: PlayerSet| {
            let b = |i| s.contains(i);
            (b(0) || (b(1) && b(2))) as u8 as f64
        };
        for s in PlayerSet::full(3).subsets() {
            assert_eq!(g.value(s), expect(s), "{s:?}");
        }
    }

    #[test]
    fn rejects_out_of_range_variable() {
        assert!(ExpressionModel::binary(2, Expr::var(2)).is_err());
    }

    #[test]
    fn rejects_non_finite_model() {
        // 0^(-1) = inf when x0 is absent.
        let e = Expr::pow(Expr::var(0), Expr::var(1));
        let m = ExpressionModel::new(2, e, vec![1.0, -1.0], vec![0.0, 0.0]).unwrap();
        assert!(ExpressionGame::new(m).is_err());
    }

    #[test]
    fn json_round_trip_and_rejections() {
        let e = Expr::add([
            Expr::var(0),
            Expr::mul([Expr::var(1), Expr::var(2)]),
            Expr::pow(Expr::var(3), Expr::or([Expr::var(4), Expr::and([Expr::var(0)])])),
        ]);
        assert_eq!(Expr::from_json(&e.to_json()).unwrap(), e);

        let bad = [
            json!({"op": "sub", "args": [{"var": 0}]}),
            json!({"op": "pow", "args": [{"var": 0}]}),
            json!({"op": "add", "args": []}),
            json!({"var": -1}),
            json!({"var": 0, "extra": 1}),
            json!([1, 2]),
        ];
        for b in bad {
            assert!(Expr::from_json(&b).is_err(), "{b}");
        }
    }
}
