//! Evaluation protocols: partition accuracy on synthetic datasets, error of
//! `T̂` against exact enumeration, instability across sample budgets and
//! convergence of the merge probabilities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{
    instability, optimize, t_at_checkpoints, BoundarySample, Direction, EstimatorConfig, PartitionDistribution,
};
use crate::exact::{exact_t, pairwise_interaction, ExactLimits, Partition};
use crate::game::{ExpressionGame, Game, Memoized};
use crate::player_set::PlayerSet;
use crate::rng::SeedTree;
use crate::synthetic::{ground_truth_check, OpKind, SyntheticModel};

use rand::Rng as _;

/// Pairwise interactions above this count as positive for the second baseline.
pub const BASELINE2_THRESHOLD: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Hardened maximizing distribution.
    Ours,
    /// Uniformly random boundaries.
    Baseline1,
    /// Adjacent players merged when their pairwise interaction is positive.
    Baseline2,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Ours, Method::Baseline1, Method::Baseline2];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ours => "ours",
            Method::Baseline1 => "baseline1",
            Method::Baseline2 => "baseline2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method '{s}' (expected ours, baseline1 or baseline2)")))
    }
}

fn memo_game(model: &SyntheticModel) -> Result<Memoized<ExpressionGame>> {
    Ok(Memoized::new(model.game()?))
}

/// Seed used for one model under a run seed.
pub fn model_run_seed(run_seed: u64, model: &SyntheticModel) -> u64 {
    SeedTree::new(run_seed).child(model.seed).seed()
}

/// Partition of the model's target chosen by `method`.
pub fn method_partition(model: &SyntheticModel, method: Method, config: &EstimatorConfig) -> Result<Partition> {
    let target = model.target;
    let seed = model_run_seed(config.seed, model);
    let bits = match method {
        Method::Ours => {
            let cfg = EstimatorConfig {
                direction: Direction::Max,
                seed,
                ..config.clone()
            };
            optimize(&memo_game(model)?, target, &cfg)?.hardened()
        }
        Method::Baseline1 => {
            let mut rng = SeedTree::new(seed).named("baseline1").rng();
            BoundarySample::new((1..target.len()).map(|_| rng.random::<bool>()).collect())
        }
        Method::Baseline2 => {
            let game = memo_game(model)?;
            let members = target.to_vec();
            let limits = ExactLimits::DEFAULT;
            BoundarySample::new(
                members
                    .windows(2)
                    .map(|w| Ok(pairwise_interaction(&game, w[0], w[1], &limits)? > BASELINE2_THRESHOLD))
                    .collect::<Result<Vec<_>>>()?,
            )
        }
    };
    bits.partition(target)
}

/// Pooled operation-correctness rate of one method on one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub method: Method,
    pub dataset: String,
    /// Correct checks over all checks in the dataset.
    pub rate: f64,
    pub models: usize,
    pub checks: usize,
    /// Per-model rate, in dataset order.
    pub per_model: Vec<f64>,
    pub seed: u64,
    pub config: EstimatorConfig,
}

pub fn eval_method_accuracy(
    dataset: &[SyntheticModel],
    name: &str,
    method: Method,
    config: &EstimatorConfig,
) -> Result<AccuracyReport> {
    if dataset.is_empty() {
        return Err(Error::Config(format!("dataset '{name}' is empty")));
    }
    config.validate()?;
    let per: Vec<(usize, usize)> = dataset
        .par_iter()
        .map(|m| {
            let checks = ground_truth_check(m, &method_partition(m, method, config)?)?;
            Ok((checks.iter().filter(|c| c.correct).count(), checks.len()))
        })
        .collect::<Result<_>>()?;
    let correct: usize = per.iter().map(|p| p.0).sum();
    let checks: usize = per.iter().map(|p| p.1).sum();
    if checks == 0 {
        return Err(Error::Config(format!("dataset '{name}' has no labeled operations")));
    }
    Ok(AccuracyReport {
        method,
        dataset: name.to_string(),
        rate: correct as f64 / checks as f64,
        models: dataset.len(),
        checks,
        per_model: per
            .iter()
            .map(|&(c, t)| if t == 0 { f64::NAN } else { c as f64 / t as f64 })
            .collect(),
        seed: config.seed,
        config: config.clone(),
    })
}

/// Rows are methods, columns datasets (in first-seen order).
pub fn accuracy_table_csv(reports: &[AccuracyReport]) -> String {
    let mut datasets: Vec<&str> = Vec::new();
    let mut methods: Vec<Method> = Vec::new();
    for r in reports {
        if !datasets.contains(&r.dataset.as_str()) {
            datasets.push(&r.dataset);
        }
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    let mut out = String::from("method");
    for d in &datasets {
        out.push(',');
        out.push_str(d);
    }
    out.push('\n');
    for m in methods {
        out.push_str(m.name());
        for d in &datasets {
            out.push(',');
            if let Some(r) = reports.iter().find(|r| r.method == m && r.dataset == *d) {
                out.push_str(&format!("{:.3}", r.rate));
            }
        }
        out.push('\n');
    }
    out
}

/// `|T_truth − T̂|` at checkpoint epochs for a set of games.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub epochs: Vec<usize>,
    pub game_ids: Vec<String>,
    pub truth: Vec<f64>,
    /// `estimates[g][e]`.
    pub estimates: Vec<Vec<f64>>,
    pub abs_error: Vec<Vec<f64>>,
    /// Absolute error over `max(|T_truth|, 1)`.
    pub rel_error: Vec<Vec<f64>>,
    pub config: EstimatorConfig,
}

impl ErrorCurve {
    /// Median relative error at each checkpoint.
    pub fn median_rel_error(&self) -> Vec<f64> {
        (0..self.epochs.len())
            .map(|e| median(self.rel_error.iter().map(|row| row[e]).collect()).unwrap_or(f64::NAN))
            .collect()
    }

    /// `game_id,x,y` with `x` the epoch and `y` the absolute error.
    pub fn to_long_csv(&self) -> String {
        let mut out = String::from("game_id,x,y\n");
        for (id, row) in self.game_ids.iter().zip(&self.abs_error) {
            for (e, y) in self.epochs.iter().zip(row) {
                out.push_str(&format!("{id},{e},{y}\n"));
            }
        }
        out
    }
}

/// A game with a target coalition, as fed to the curve and sweep protocols.
pub struct TargetGame<'a> {
    pub id: String,
    pub game: &'a (dyn Game + 'a),
    pub target: PlayerSet,
}

pub fn error_vs_exact(games: &[TargetGame<'_>], config: &EstimatorConfig, checkpoints: &[usize]) -> Result<ErrorCurve> {
    config.validate()?;
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("checkpoints must be non-empty and strictly increasing".into()));
    }
    let rows: Vec<(f64, Vec<f64>)> = games
        .par_iter()
        .enumerate()
        .map(|(i, tg)| {
            let truth = exact_t(tg.game, tg.target, config.semantics, true, &ExactLimits::DEFAULT)?.t;
            let cfg = config.with_seed(SeedTree::new(config.seed).child(i as u64).seed());
            let est = t_at_checkpoints(tg.game, tg.target, &cfg, checkpoints)?;
            Ok((truth, est.into_iter().map(|(_, t)| t).collect()))
        })
        .collect::<Result<_>>()?;
    let abs_error: Vec<Vec<f64>> = rows
        .iter()
        .map(|(truth, est)| est.iter().map(|t| (truth - t).abs()).collect())
        .collect();
    let rel_error = rows
        .iter()
        .zip(&abs_error)
        .map(|((truth, _), errs)| errs.iter().map(|e| e / truth.abs().max(1.0)).collect())
        .collect();
    Ok(ErrorCurve {
        epochs: checkpoints.to_vec(),
        game_ids: games.iter().map(|g| g.id.clone()).collect(),
        truth: rows.iter().map(|r| r.0).collect(),
        estimates: rows.into_iter().map(|r| r.1).collect(),
        abs_error,
        rel_error,
        config: config.clone(),
    })
}

/// Splits a per-step sample budget into `(K2, K3)`.
pub fn budget_split(budget: usize) -> (usize, usize) {
    let k2 = budget.clamp(1, 4);
    (k2, (budget / k2).max(1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub budget: usize,
    pub partition_samples: usize,
    pub subset_samples: usize,
    /// Median over non-degenerate games; `None` when every game was degenerate.
    pub median: Option<f64>,
    /// `None` marks a degenerate game.
    pub per_game: Vec<Option<f64>>,
    pub degenerate: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstabilitySweep {
    pub repeats: usize,
    pub rows: Vec<BudgetRow>,
    pub game_ids: Vec<String>,
    pub config: EstimatorConfig,
}

impl InstabilitySweep {
    pub fn medians(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.median).collect()
    }

    /// `game_id,x,y` with `x` the budget; degenerate games are omitted.
    pub fn to_long_csv(&self) -> String {
        let mut out = String::from("game_id,x,y\n");
        for row in &self.rows {
            for (id, v) in self.game_ids.iter().zip(&row.per_game) {
                if let Some(v) = v {
                    out.push_str(&format!("{id},{},{v}\n", row.budget));
                }
            }
        }
        out
    }
}

pub fn instability_sweep(
    games: &[TargetGame<'_>],
    budgets: &[usize],
    repeats: usize,
    config: &EstimatorConfig,
) -> Result<InstabilitySweep> {
    if budgets.len() < 2 || budgets.contains(&0) {
        return Err(Error::Config("instability sweep needs at least 2 positive budgets".into()));
    }
    config.validate()?;
    let mut rows = Vec::with_capacity(budgets.len());
    for (bi, &budget) in budgets.iter().enumerate() {
        let (k2, k3) = budget_split(budget);
        let per_game: Vec<Option<f64>> = games
            .par_iter()
            .enumerate()
            .map(|(i, tg)| {
                let cfg = EstimatorConfig {
                    partition_samples: k2,
                    subset_samples: k3,
                    seed: SeedTree::new(config.seed).child(bi as u64).child(i as u64).seed(),
                    ..config.clone()
                };
                match instability(tg.game, tg.target, &cfg, repeats) {
                    Ok(v) => Ok(Some(v)),
                    Err(Error::Degenerate(_)) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<_>>()?;
        let degenerate = per_game.iter().filter(|v| v.is_none()).count();
        rows.push(BudgetRow {
            budget,
            partition_samples: k2,
            subset_samples: k3,
            median: median(per_game.iter().flatten().copied().collect()),
            per_game,
            degenerate,
        });
    }
    Ok(InstabilitySweep {
        repeats,
        rows,
        game_ids: games.iter().map(|g| g.id.clone()).collect(),
        config: config.clone(),
    })
}

/// Final merge probabilities lying in this open interval are flagged.
pub const UNCONVERGED: (f64, f64) = (0.25, 0.75);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    /// `p_history[e]` for `e` in `0..=K1`.
    pub p_history: Vec<Vec<f64>>,
    pub final_p: Vec<f64>,
    /// Boundaries whose final probability did not settle.
    pub unconverged: Vec<usize>,
    /// Operation joining each boundary's two players, if any.
    pub labels: Vec<Option<OpKind>>,
    pub config: EstimatorConfig,
}

impl ConvergenceTrace {
    /// `epoch,p_1..p_{m-1}`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch");
        for i in 1..=self.final_p.len() {
            out.push_str(&format!(",p_{i}"));
        }
        out.push('\n');
        for (e, row) in self.p_history.iter().enumerate() {
            out.push_str(&e.to_string());
            for p in row {
                out.push_str(&format!(",{p}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Operation joining each adjacent pair of target members.
pub fn boundary_labels(model: &SyntheticModel) -> Vec<Option<OpKind>> {
    model
        .target
        .to_vec()
        .windows(2)
        .map(|w| {
            model
                .operations
                .iter()
                .find(|op| op.vars.windows(2).any(|v| v == w))
                .map(|op| op.kind)
        })
        .collect()
}

pub fn convergence_trace(model: &SyntheticModel, config: &EstimatorConfig) -> Result<ConvergenceTrace> {
    let out = optimize(&memo_game(model)?, model.target, config)?;
    Ok(trace_from(out.distribution, out.trace.p_history, boundary_labels(model), config))
}

fn trace_from(
    dist: PartitionDistribution,
    p_history: Vec<Vec<f64>>,
    labels: Vec<Option<OpKind>>,
    config: &EstimatorConfig,
) -> ConvergenceTrace {
    let final_p = dist.probs().to_vec();
    let unconverged = final_p
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > UNCONVERGED.0 && p < UNCONVERGED.1)
        .map(|(i, _)| i)
        .collect();
    ConvergenceTrace {
        p_history,
        final_p,
        unconverged,
        labels,
        config: config.clone(),
    }
}

/// Median of finite values; `None` when there are none.
pub fn median(mut v: Vec<f64>) -> Option<f64> {
    v.retain(|x| x.is_finite());
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let h = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[h] } else { 0.5 * (v[h - 1] + v[h]) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::Semantics;
    use crate::game::{Expr, ExpressionModel};
    use crate::synthetic::{generate_dataset, Family, GeneratorConfig};

    fn quick() -> EstimatorConfig {
        EstimatorConfig {
            epochs: 30,
            partition_samples: 4,
            subset_samples: 32,
            learning_rate: 0.1,
            ..EstimatorConfig::default()
        }
    }

    #[test]
    fn ground_truth_scores_one() {
        for family in Family::ALL {
            for m in generate_dataset(family, 10, 3, &GeneratorConfig::default()).unwrap() {
                let checks = ground_truth_check(&m, &m.ground_truth()).unwrap();
                assert!(checks.iter().all(|c| c.correct));
            }
        }
    }

    #[test]
    fn baselines_on_worked_example() {
        let m = SyntheticModel::from_layout(Family::Andor, &[1, 2, 2, 1, 1], 1, 2, 4).unwrap();
        let p = method_partition(&m, Method::Baseline2, &quick()).unwrap();
        assert_eq!(p, m.ground_truth());
        let r = eval_method_accuracy(std::slice::from_ref(&m), "andor", Method::Baseline2, &quick()).unwrap();
        assert_eq!(r.rate, 1.0);
        assert_eq!((r.models, r.checks), (1, 3));
    }

    #[test]
    fn ours_recovers_small_models() {
        for family in Family::ALL {
            let data = generate_dataset(family, 6, 11, &GeneratorConfig::default()).unwrap();
            let r = eval_method_accuracy(&data, family.name(), Method::Ours, &quick()).unwrap();
            assert!(r.rate >= 0.9, "{family:?}: {}", r.rate);
            assert_eq!(r, eval_method_accuracy(&data, family.name(), Method::Ours, &quick()).unwrap());
        }
    }

    #[test]
    fn baseline1_is_near_half() {
        let data = generate_dataset(Family::Addmul, 200, 1, &GeneratorConfig::default()).unwrap();
        let r = eval_method_accuracy(&data, "addmul", Method::Baseline1, &quick()).unwrap();
        assert!((0.45..=0.55).contains(&r.rate), "{}", r.rate);
    }

    #[test]
    fn empty_dataset_and_unknown_method() {
        assert!(matches!(
            eval_method_accuracy(&[], "x", Method::Ours, &quick()),
            Err(Error::Config(_))
        ));
        assert!(Method::parse("baseline3").is_err());
    }

    #[test]
    fn accuracy_csv_layout() {
        let data = generate_dataset(Family::Exp, 3, 1, &GeneratorConfig::default()).unwrap();
        let reports: Vec<_> = [Method::Baseline1, Method::Baseline2]
            .into_iter()
            .map(|m| eval_method_accuracy(&data, "exp", m, &quick()).unwrap())
            .collect();
        let csv = accuracy_table_csv(&reports);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "method,exp");
        assert!(lines[1].starts_with("baseline1,"));
        assert_eq!(lines[2], "baseline2,1.000");
    }

    #[test]
    fn additive_error_is_zero() {
        let g = ExpressionGame::new(ExpressionModel::binary(4, Expr::sum_of_vars(0..4)).unwrap()).unwrap();
        let games = [TargetGame {
            id: "add".into(),
            game: &g,
            target: PlayerSet::range(0, 3),
        }];
        for semantics in [Semantics::Exclusive, Semantics::Unit] {
            let cfg = EstimatorConfig { semantics, ..quick() };
            let curve = error_vs_exact(&games, &cfg, &[0, 10, 30]).unwrap();
            assert!(curve.abs_error[0].iter().all(|e| *e < 1e-9), "{curve:?}");
            assert_eq!(curve.to_long_csv().lines().count(), 4);
        }
        assert!(error_vs_exact(&games, &quick(), &[10, 10]).is_err());
    }

    #[test]
    fn sweep_marks_degenerate_games() {
        let add = ExpressionGame::new(ExpressionModel::binary(4, Expr::sum_of_vars(0..4)).unwrap()).unwrap();
        let mul = ExpressionGame::new(ExpressionModel::binary(3, Expr::product_of_vars(0..3)).unwrap()).unwrap();
        let games = [
            TargetGame {
                id: "add".into(),
                game: &add,
                target: PlayerSet::range(0, 3),
            },
            TargetGame {
                id: "mul".into(),
                game: &mul,
                target: PlayerSet::range(0, 2),
            },
        ];
        let sweep = instability_sweep(&games, &[8, 64], 3, &EstimatorConfig { epochs: 5, ..quick() }).unwrap();
        for row in &sweep.rows {
            assert_eq!(row.degenerate, 1);
            assert!(row.per_game[0].is_none() && row.per_game[1].is_some());
        }
        assert!(instability_sweep(&games, &[8], 3, &quick()).is_err());

        let exact = EstimatorConfig {
            exact_fallback: true,
            ..quick()
        };
        let sweep = instability_sweep(&games[1..], &[8, 64], 3, &exact).unwrap();
        assert_eq!(sweep.medians(), vec![Some(0.0), Some(0.0)]);
    }

    #[test]
    fn trace_labels_and_flags() {
        // x0*x1 + x2 | nothing: exclusive max merges the product, the
        // addition boundary drifts.
        let m = SyntheticModel::from_layout(Family::Addmul, &[2, 1], 0, 1, 0).unwrap();
        let cfg = EstimatorConfig {
            epochs: 60,
            ..quick()
        };
        let t = convergence_trace(&m, &cfg).unwrap();
        assert_eq!(t.labels, vec![Some(OpKind::Mul), Some(OpKind::Add)]);
        assert!(t.final_p[0] > 0.9);
        assert_eq!(t.p_history.len(), 61);
        assert_eq!(t.unconverged, vec![1]);
        assert_eq!(t.to_csv().lines().count(), 62);

        let or = SyntheticModel::from_layout(Family::Andor, &[1, 1], 0, 1, 0).unwrap();
        let t = convergence_trace(&or, &cfg).unwrap();
        assert_eq!(t.labels, vec![Some(OpKind::Or)]);
        assert!(t.final_p[0] < 0.1);
    }

    #[test]
    fn median_handles_even_and_empty() {
        assert_eq!(median(vec![3.0, 1.0, 2.0, 10.0]), Some(2.5));
        assert_eq!(median(vec![f64::NAN]), None);
    }
}
