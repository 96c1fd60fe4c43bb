//! Synthetic models with known coalition structure.
//!
//! A model is a chain of terms over consecutive variables. Grouped terms
//! (products, conjunctions, powers) must end up in one coalition; junctions
//! between neighbouring terms are either irrelevant (addition) or must be
//! split (disjunction).

use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exact::Partition;
use crate::game::model_file::ModelSpec;
use crate::game::{Expr, ExpressionGame, ExpressionModel};
use crate::player_set::PlayerSet;
use crate::rng::{Rng, SeedTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Sums of variables and products.
    Addmul,
    /// Disjunctions of variables and conjunctions.
    Andor,
    /// Sums of variables and powers `x_i^{x_{i+1}}`.
    Exp,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Addmul, Family::Andor, Family::Exp];

    pub fn name(self) -> &'static str {
        match self {
            Family::Addmul => "addmul",
            Family::Andor => "andor",
            Family::Exp => "exp",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown family '{s}' (expected addmul, andor or exp)")))
    }

    fn group_kind(self) -> OpKind {
        match self {
            Family::Addmul => OpKind::Mul,
            Family::Andor => OpKind::And,
            Family::Exp => OpKind::Pow,
        }
    }

    fn junction_kind(self) -> OpKind {
        match self {
            Family::Andor => OpKind::Or,
            Family::Addmul | Family::Exp => OpKind::Add,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Mul,
    And,
    Or,
    Pow,
    Add,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constraint {
    /// All variables in one coalition.
    Merge,
    /// Variables in different coalitions.
    Split,
    Ignore,
}

impl OpKind {
    pub fn constraint(self) -> Constraint {
        match self {
            OpKind::Mul | OpKind::And | OpKind::Pow => Constraint::Merge,
            OpKind::Or => Constraint::Split,
            OpKind::Add => Constraint::Ignore,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Operation {
    pub kind: OpKind,
    pub vars: Vec<usize>,
}

impl Operation {
    pub fn players(&self) -> PlayerSet {
        self.vars.iter().copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticModel {
    pub family: Family,
    pub model: ExpressionModel,
    pub operations: Vec<Operation>,
    pub target: PlayerSet,
    pub seed: u64,
}

/// Shape of generated models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n_min: usize,
    pub n_max: usize,
    /// Number of grouped terms.
    pub ops_min: usize,
    pub ops_max: usize,
    /// Largest target size.
    pub max_target: usize,
    /// Probability that a product or conjunction has three variables.
    pub arity3_prob: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_min: 6,
            n_max: 10,
            ops_min: 2,
            ops_max: 4,
            max_target: 8,
            arity3_prob: 0.0,
        }
    }
}

impl GeneratorConfig {
    fn validate(&self) -> Result<()> {
        if self.n_min > self.n_max || self.n_max > 63 {
            return Err(Error::Config(format!("bad player range {}..={}", self.n_min, self.n_max)));
        }
        if self.ops_min == 0 || self.ops_min > self.ops_max || 2 * self.ops_min > self.n_max {
            return Err(Error::Config(format!(
                "bad operation range {}..={} for at most {} players",
                self.ops_min, self.ops_max, self.n_max
            )));
        }
        if self.max_target < 2 {
            return Err(Error::Config("max_target must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.arity3_prob) {
            return Err(Error::Config("arity3_prob must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

impl SyntheticModel {
    /// Builds a model from term sizes (1 = lone variable, ≥ 2 = grouped
    /// term) with the target covering terms `first..=last`.
    pub fn from_layout(family: Family, sizes: &[usize], first: usize, last: usize, seed: u64) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) || first > last || last >= sizes.len() {
            return Err(Error::Config(format!("bad layout {sizes:?} with terms {first}..={last}")));
        }
        if family == Family::Exp && sizes.iter().any(|&s| s > 2) {
            return Err(Error::Config("power terms have exactly two variables".into()));
        }
        let mut terms = Vec::new();
        let mut operations = Vec::new();
        let mut ranges = Vec::new();
        let mut next = 0;
        for (t, &size) in sizes.iter().enumerate() {
            let vars: Vec<usize> = (next..next + size).collect();
            next += size;
            if t > 0 {
                let (_, prev_end) = ranges[t - 1];
                operations.push(Operation {
                    kind: family.junction_kind(),
                    vars: vec![prev_end, vars[0]],
                });
            }
            ranges.push((vars[0], vars[size - 1]));
            if size == 1 {
                terms.push(Expr::var(vars[0]));
                continue;
            }
            terms.push(match family {
                Family::Addmul => Expr::product_of_vars(vars.iter().copied()),
                Family::Andor => Expr::and(vars.iter().map(|&v| Expr::var(v))),
                Family::Exp => Expr::pow(Expr::var(vars[0]), Expr::var(vars[1])),
            });
            operations.push(Operation {
                kind: family.group_kind(),
                vars,
            });
        }
        let expr = match family {
            Family::Andor => Expr::or(terms),
            Family::Addmul | Family::Exp => Expr::add(terms),
        };
        let model = ExpressionModel::binary(next, expr)?;
        let target = PlayerSet::range(ranges[first].0, ranges[last].1 + 1);
        Ok(SyntheticModel {
            family,
            model,
            operations,
            target,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.model.n
    }

    pub fn game(&self) -> Result<ExpressionGame> {
        ExpressionGame::new(self.model.clone())
    }

    /// Operations that are judged: not ignored and fully inside the target.
    pub fn labeled_operations(&self) -> impl Iterator<Item = (usize, &Operation)> {
        self.operations
            .iter()
            .enumerate()
            .filter(|(_, op)| op.kind.constraint() != Constraint::Ignore && op.players().is_subset(self.target))
    }

    /// Each grouped term inside the target as one coalition, every other
    /// variable alone.
    pub fn ground_truth(&self) -> Partition {
        let mut covered = PlayerSet::EMPTY;
        let mut blocks = Vec::new();
        for op in &self.operations {
            if op.kind.constraint() == Constraint::Merge && op.players().is_subset(self.target) {
                covered = covered.union(op.players());
                blocks.push(op.players());
            }
        }
        blocks.extend(self.target.difference(covered).iter().map(PlayerSet::singleton));
        Partition::from_blocks(self.target, blocks).expect("terms are disjoint")
    }

    pub fn to_json(&self) -> Value {
        json!({
            "family": self.family.name(),
            "seed": self.seed,
            "model": ModelSpec::Expression(self.model.clone()).to_json(),
            "operations": self.operations,
            "target": self.target.to_vec(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let field = |k: &str| v.get(k).ok_or_else(|| Error::Format(format!("manifest entry needs '{k}'")));
        let family = Family::parse(field("family")?.as_str().unwrap_or_default())
            .map_err(|e| Error::Format(e.to_string()))?;
        let seed = field("seed")?
            .as_u64()
            .ok_or_else(|| Error::Format("'seed' must be an unsigned integer".into()))?;
        let model = match ModelSpec::from_json(field("model")?)? {
            ModelSpec::Expression(m) => m,
            _ => return Err(Error::Format("synthetic entries hold expression models".into())),
        };
        let operations: Vec<Operation> = serde_json::from_value(field("operations")?.clone())?;
        let target_idx: Vec<usize> = serde_json::from_value(field("target")?.clone())?;
        let target = PlayerSet::from_indices(target_idx, model.n)?;
        if operations.iter().any(|op| !op.players().within(model.n) || op.vars.is_empty()) {
            return Err(Error::Format("operation variables out of range".into()));
        }
        Ok(SyntheticModel {
            family,
            model,
            operations,
            target,
            seed,
        })
    }
}

/// Per-operation verdict of a partition against the ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationCheck {
    pub operation: usize,
    pub kind: OpKind,
    pub correct: bool,
}

/// Judges every labeled operation inside the target.
pub fn ground_truth_check(model: &SyntheticModel, partition: &Partition) -> Result<Vec<OperationCheck>> {
    if partition.target() != model.target {
        return Err(Error::Domain(format!(
            "partition covers {:?}, model target is {:?}",
            partition.target(),
            model.target
        )));
    }
    Ok(model
        .labeled_operations()
        .map(|(i, op)| {
            let first = op.vars[0];
            let correct = match op.kind.constraint() {
                Constraint::Merge => op.vars.iter().all(|&v| partition.together(first, v)),
                Constraint::Split => op.vars[1..].iter().all(|&v| !partition.together(first, v)),
                Constraint::Ignore => unreachable!("filtered out"),
            };
            OperationCheck {
                operation: i,
                kind: op.kind,
                correct,
            }
        })
        .collect())
}

/// Fraction of correct checks; `None` when there are none.
pub fn correct_rate(checks: &[OperationCheck]) -> Option<f64> {
    (!checks.is_empty()).then(|| checks.iter().filter(|c| c.correct).count() as f64 / checks.len() as f64)
}

fn generate(family: Family, rng: &mut Rng, cfg: &GeneratorConfig, seed: u64) -> Result<SyntheticModel> {
    cfg.validate()?;
    for _ in 0..1000 {
        let n = rng.random_range(cfg.n_min..=cfg.n_max);
        let max_groups = cfg.ops_max.min(n / 2);
        if max_groups < cfg.ops_min {
            continue;
        }
        let groups = rng.random_range(cfg.ops_min..=max_groups);
        let mut sizes: Vec<usize> = (0..groups)
            .map(|_| {
                let three = family != Family::Exp && rng.random::<f64>() < cfg.arity3_prob;
                if three {
                    3
                } else {
                    2
                }
            })
            .collect();
        let used: usize = sizes.iter().sum();
        if used > n {
            continue;
        }
        sizes.extend(std::iter::repeat_n(1, n - used));
        sizes.shuffle(rng);

        let candidates = target_candidates(family, &sizes, cfg.max_target);
        if candidates.is_empty() {
            continue;
        }
        let proper: Vec<(usize, usize)> = candidates
            .iter()
            .copied()
            .filter(|&(a, b)| !(a == 0 && b + 1 == sizes.len()))
            .collect();
        let pool = if proper.is_empty() { &candidates } else { &proper };
        let (first, last) = pool[rng.random_range(0..pool.len())];
        return SyntheticModel::from_layout(family, &sizes, first, last, seed);
    }
    Err(Error::Config(format!("could not generate a {} model with {cfg:?}", family.name())))
}

/// Term ranges spanning 2..=max_target variables with at least two labeled operations.
fn target_candidates(family: Family, sizes: &[usize], max_target: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for first in 0..sizes.len() {
        let mut width = 0;
        let mut labeled = 0;
        for (last, &size) in sizes.iter().enumerate().skip(first) {
            width += size;
            if width > max_target {
                break;
            }
            if size > 1 {
                labeled += 1;
            }
            if last > first && family.junction_kind().constraint() != Constraint::Ignore {
                labeled += 1;
            }
            if width >= 2 && labeled >= 2 {
                out.push((first, last));
            }
        }
    }
    out
}

pub fn gen_addmul(rng: &mut Rng, cfg: &GeneratorConfig, seed: u64) -> Result<SyntheticModel> {
    generate(Family::Addmul, rng, cfg, seed)
}

pub fn gen_andor(rng: &mut Rng, cfg: &GeneratorConfig, seed: u64) -> Result<SyntheticModel> {
    generate(Family::Andor, rng, cfg, seed)
}

pub fn gen_exponential(rng: &mut Rng, cfg: &GeneratorConfig, seed: u64) -> Result<SyntheticModel> {
    generate(Family::Exp, rng, cfg, seed)
}

/// Seed of the `index`-th model of a family's dataset.
pub fn model_seed(family: Family, seed: u64, index: usize) -> u64 {
    SeedTree::new(seed).named(family.name()).child(index as u64).seed()
}

/// `count` models, the `i`-th drawn from its own stream.
pub fn generate_dataset(family: Family, count: usize, seed: u64, cfg: &GeneratorConfig) -> Result<Vec<SyntheticModel>> {
    (0..count)
        .map(|i| {
            let s = model_seed(family, seed, i);
            generate(family, &mut SeedTree::new(s).rng(), cfg, s)
        })
        .collect()
}

/// One JSON object per line.
pub fn write_manifest<W: Write>(models: &[SyntheticModel], mut out: W) -> Result<()> {
    for m in models {
        serde_json::to_writer(&mut out, &m.to_json())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_manifest<R: BufRead>(input: R) -> Result<Vec<SyntheticModel>> {
    let mut out = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("manifest line {}: {e}", lineno + 1)))?;
        out.push(SyntheticModel::from_json(&v).map_err(|e| Error::Format(format!("manifest line {}: {e}", lineno + 1)))?);
    }
    Ok(out)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<SyntheticModel>> {
    read_manifest(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{elementary_components, pairwise_interaction, ExactLimits};
    use crate::game::Game;

    fn set(ix: &[usize]) -> PlayerSet {
        ix.iter().copied().collect()
    }

    #[test]
    fn addmul_worked_example() {
        // x1 + x2*x3 + x4*x5 + x6 + x7 with A = {x2..x5}.
        let m = SyntheticModel::from_layout(Family::Addmul, &[1, 2, 2, 1, 1], 1, 2, 0).unwrap();
        assert_eq!(m.target, set(&[1, 2, 3, 4]));
        let pairs = Partition::from_blocks(m.target, vec![set(&[1, 2]), set(&[3, 4])]).unwrap();
        let grand = Partition::grand(m.target);
        for p in [&pairs, &grand] {
            assert_eq!(correct_rate(&ground_truth_check(&m, p).unwrap()), Some(1.0));
        }
        assert_eq!(m.ground_truth(), pairs);
        let g = m.game().unwrap();
        assert_eq!(g.value(PlayerSet::full(7)), 5.0);
    }

    #[test]
    fn andor_worked_example() {
        // x1 | (x2 & x3) | (x4 & x5) | x6 | x7 with A = {x2..x5}.
        let m = SyntheticModel::from_layout(Family::Andor, &[1, 2, 2, 1, 1], 1, 2, 0).unwrap();
        let truth = Partition::from_blocks(m.target, vec![set(&[1, 2]), set(&[3, 4])]).unwrap();
        assert_eq!(m.ground_truth(), truth);
        let checks = ground_truth_check(&m, &Partition::grand(m.target)).unwrap();
        assert_eq!(checks.len(), 3);
        assert_eq!(correct_rate(&checks), Some(2.0 / 3.0));
        let g = m.game().unwrap();
        assert_eq!(g.value(PlayerSet::full(7)), 1.0);
        assert_eq!(g.value(PlayerSet::EMPTY), 0.0);
    }

    #[test]
    fn singleton_partition_scores_half_on_mul_plus_or() {
        // (x0 & x1) | x2 with A = everything: one and, one or.
        let m = SyntheticModel::from_layout(Family::Andor, &[2, 1], 0, 1, 0).unwrap();
        let checks = ground_truth_check(&m, &Partition::singletons(m.target)).unwrap();
        assert_eq!(correct_rate(&checks), Some(0.5));
    }

    #[test]
    fn additions_only_are_ignored() {
        let m = SyntheticModel::from_layout(Family::Addmul, &[1, 1, 1, 1], 0, 3, 0).unwrap();
        assert!(m.operations.iter().all(|op| op.kind == OpKind::Add));
        assert!(ground_truth_check(&m, &Partition::grand(m.target)).unwrap().is_empty());
    }

    #[test]
    fn power_pair_has_positive_component() {
        // x0^x1 + x2
        let m = SyntheticModel::from_layout(Family::Exp, &[2, 1], 0, 1, 0).unwrap();
        let g = m.game().unwrap();
        assert_eq!(m.model.raw_value(PlayerSet::EMPTY), 1.0);
        assert_eq!(g.value(PlayerSet::EMPTY), 0.0);
        let c = elementary_components(&g, set(&[0, 1]), &ExactLimits::DEFAULT).unwrap();
        assert!((c.get(set(&[0, 1])).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generated_models_satisfy_invariants() {
        let cfg = GeneratorConfig::default();
        for family in Family::ALL {
            let data = generate_dataset(family, 40, 5, &cfg).unwrap();
            for m in &data {
                assert!((cfg.n_min..=cfg.n_max).contains(&m.n()));
                assert!(m.target.is_interval() && m.target.len() <= cfg.max_target);
                assert!(m.labeled_operations().count() >= 2);
                for op in &m.operations {
                    let mut v = op.vars.clone();
                    v.dedup();
                    assert!(v.windows(2).all(|w| w[1] == w[0] + 1), "{op:?}");
                    // A never cuts a grouped term.
                    if op.kind.constraint() == Constraint::Merge {
                        let inside = op.players().intersection(m.target);
                        assert!(inside.is_empty() || inside == op.players());
                    }
                }
                let truth = m.ground_truth();
                assert_eq!(correct_rate(&ground_truth_check(m, &truth).unwrap()), Some(1.0));

                let g = m.game().unwrap();
                let full = g.value(PlayerSet::full(m.n()));
                match family {
                    Family::Andor => assert_eq!(full, 1.0),
                    Family::Addmul => {
                        let terms = m.operations.iter().filter(|o| o.kind != OpKind::Add).count()
                            + (m.n() - m.operations.iter().filter(|o| o.kind == OpKind::Mul).map(|o| o.vars.len()).sum::<usize>());
                        assert_eq!(full, terms as f64);
                    }
                    Family::Exp => {}
                }
            }
            assert_eq!(data, generate_dataset(family, 40, 5, &cfg).unwrap());
        }
    }

    #[test]
    fn labels_agree_with_exact_pairwise_signs() {
        let limits = ExactLimits::DEFAULT;
        for family in Family::ALL {
            for m in generate_dataset(family, 15, 9, &GeneratorConfig::default()).unwrap() {
                let g = m.game().unwrap();
                for op in &m.operations {
                    for w in op.vars.windows(2) {
                        let b = pairwise_interaction(&g, w[0], w[1], &limits).unwrap();
                        match op.kind.constraint() {
                            Constraint::Merge => assert!(b > 1e-12, "{family:?} {op:?}: {b}"),
                            Constraint::Split => assert!(b < -1e-12, "{family:?} {op:?}: {b}"),
                            Constraint::Ignore => assert!(b.abs() < 1e-12, "{family:?} {op:?}: {b}"),
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn manifest_round_trip() {
        let data = generate_dataset(Family::Andor, 5, 1, &GeneratorConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_manifest(&data, &mut buf).unwrap();
        assert_eq!(String::from_utf8_lossy(&buf).lines().count(), 5);
        assert_eq!(read_manifest(buf.as_slice()).unwrap(), data);
        assert!(read_manifest("{\"family\": \"nope\"}\n".as_bytes()).is_err());
        assert!(Family::parse("mulmul").is_err());
    }
}
