use serde::{Deserialize, Serialize};

use super::distribution::{sample_partition, BoundarySample, PartitionDistribution};
use super::objective::{estimate_l_inner, grad_p_inner, Counter, Span};
use super::{Direction, EstimatorConfig};
use crate::error::{Error, Result};
use crate::exact::{exact_t, ExactLimits, Partition, Semantics};
use crate::game::Game;
use crate::player_set::PlayerSet;
use crate::rng::SeedTree;

/// Largest game and target the exact fallback will enumerate.
pub const EXACT_FALLBACK_MAX: usize = 12;

/// Optimizer history for one direction.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimateTrace {
    /// `objective[e]`: estimate of `E_{g~p_e} L(g)` from epoch `e`'s samples.
    pub objective: Vec<f64>,
    /// `p_history[e]` for `e` in `0..=K1`; row 0 is the initial 0.5 vector.
    pub p_history: Vec<Vec<f64>>,
    /// Fresh re-estimate of `E_{g~p_K1} L(g)`.
    pub final_value: f64,
    pub final_std_err: f64,
    pub evaluations: u64,
}

impl EstimateTrace {
    /// `epoch,L_estimate,p_1..p_{m-1}`; the last row holds the final
    /// distribution and its re-estimated value.
    pub fn to_csv(&self) -> String {
        let nb = self.p_history.first().map_or(0, Vec::len);
        let mut out = String::from("epoch,L_estimate");
        for i in 1..=nb {
            out.push_str(&format!(",p_{i}"));
        }
        out.push('\n');
        let rows = self
            .objective
            .iter()
            .copied()
            .chain(std::iter::once(self.final_value))
            .zip(&self.p_history)
            .enumerate();
        for (e, (l, p)) in rows {
            out.push_str(&format!("{e},{l}"));
            for x in p {
                out.push_str(&format!(",{x}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Result of one directional optimization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOutcome {
    pub direction: Direction,
    pub distribution: PartitionDistribution,
    /// Re-estimated extremal value, same as `trace.final_value`.
    pub value: f64,
    pub trace: EstimateTrace,
}

impl OptimizeOutcome {
    pub fn hardened(&self) -> BoundarySample {
        self.distribution.harden()
    }
}

/// Fresh pass: `K2` draws of `g`, each scored with `K3` contexts.
fn soft_value<G: Game + ?Sized>(
    span: &Span,
    ev: &mut Counter<'_, G>,
    dist: &PartitionDistribution,
    config: &EstimatorConfig,
    seeds: SeedTree,
) -> (f64, f64) {
    let mut rng = seeds.rng();
    let k2 = config.partition_samples;
    let means: Vec<f64> = (0..k2)
        .map(|_| {
            let g = sample_partition(dist, &mut rng);
            estimate_l_inner(span, ev, &g, config.subset_samples, config.semantics, &mut rng).0
        })
        .collect();
    let mean = means.iter().sum::<f64>() / k2 as f64;
    let se = if k2 > 1 {
        let var = means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k2 - 1) as f64;
        (var / k2 as f64).sqrt()
    } else {
        0.0
    };
    (mean, se)
}

/// Runs the optimizer; `checkpoints` are epochs at which the current
/// distribution is also re-scored (epoch 0 is the initial distribution).
pub(crate) fn run<G: Game + ?Sized>(
    game: &G,
    span: &Span,
    config: &EstimatorConfig,
    direction: Direction,
    checkpoints: &[usize],
) -> (OptimizeOutcome, Vec<(usize, f64)>) {
    let root = SeedTree::new(config.seed);
    let mut ev = Counter::new(game);
    let mut dist = PartitionDistribution::uniform(span.m());
    let mut trace = EstimateTrace {
        p_history: vec![dist.probs().to_vec()],
        ..Default::default()
    };
    let sign = match direction {
        Direction::Max => 1.0,
        Direction::Min => -1.0,
    };
    let mut marks = Vec::new();
    let checkpoint_seeds = root.named("checkpoint");
    let mut mark = |epoch: usize, dist: &PartitionDistribution, ev: &mut Counter<'_, G>| {
        if checkpoints.contains(&epoch) {
            let (v, _) = soft_value(span, ev, dist, config, checkpoint_seeds.child(epoch as u64));
            marks.push((epoch, v));
        }
    };
    mark(0, &dist, &mut ev);
    for epoch in 0..config.epochs {
        let mut rng = root.child(epoch as u64).rng();
        let (grad, objective) = grad_p_inner(
            span,
            &mut ev,
            &dist,
            config.partition_samples,
            config.subset_samples,
            config.semantics,
            &mut rng,
        );
        let step: Vec<f64> = grad.iter().map(|g| sign * (config.learning_rate * g)).collect();
        dist.apply(&step);
        trace.objective.push(objective);
        trace.p_history.push(dist.probs().to_vec());
        mark(epoch + 1, &dist, &mut ev);
    }
    let (value, se) = soft_value(span, &mut ev, &dist, config, root.named("final"));
    trace.final_value = value;
    trace.final_std_err = se;
    trace.evaluations = ev.calls;
    (
        OptimizeOutcome {
            direction,
            distribution: dist,
            value,
            trace,
        },
        marks,
    )
}

/// Stochastic gradient ascent (`Max`) or descent (`Min`) on `E_{g~p} L(g)`
/// from `p = 0.5`, with a fixed step and clamping after every update.
pub fn optimize<G: Game + ?Sized>(game: &G, target: PlayerSet, config: &EstimatorConfig) -> Result<OptimizeOutcome> {
    config.validate()?;
    let span = Span::new(game.n(), target)?;
    Ok(run(game, &span, config, config.direction, &[]).0)
}

/// Estimated interaction significance for one target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionReport {
    pub target: PlayerSet,
    pub semantics: Semantics,
    /// `T̂ = L̂_max − L̂_min`.
    pub t: f64,
    pub l_max: f64,
    pub l_min: f64,
    /// Scores of the all-singletons and grand-coalition partitions, used as
    /// the baseline for `b`, `b_max`, `b_min`.
    pub l_singletons: f64,
    pub l_grand: f64,
    pub b: f64,
    pub b_max: f64,
    pub b_min: f64,
    /// Partitions obtained by thresholding the learned probabilities at 0.5.
    pub omega_max: Partition,
    pub omega_min: Partition,
    pub p_max: Vec<f64>,
    pub p_min: Vec<f64>,
    pub trace_max: EstimateTrace,
    pub trace_min: EstimateTrace,
    pub evaluations: u64,
    pub seed_max: u64,
    pub seed_min: u64,
    /// Set when the exact fallback produced the numbers.
    pub exact: bool,
}

pub(crate) fn direction_seeds(seed: u64) -> (u64, u64, u64) {
    let root = SeedTree::new(seed);
    (
        root.named("max").seed(),
        root.named("min").seed(),
        root.named("baseline").seed(),
    )
}

/// Runs the optimizer in both directions from independent streams and
/// reports `T̂` plus baseline-relative values.
pub fn estimate_t<G: Game + ?Sized>(game: &G, target: PlayerSet, config: &EstimatorConfig) -> Result<InteractionReport> {
    config.validate()?;
    let span = Span::new(game.n(), target)?;
    let (seed_max, seed_min, seed_base) = direction_seeds(config.seed);
    if config.exact_fallback && game.n() <= EXACT_FALLBACK_MAX && span.m() <= EXACT_FALLBACK_MAX {
        return exact_report(game, target, config, seed_max, seed_min);
    }

    let max = run(game, &span, &config.with_seed(seed_max), Direction::Max, &[]).0;
    let min = run(game, &span, &config.with_seed(seed_min), Direction::Min, &[]).0;

    let mut ev = Counter::new(game);
    let budget = config.partition_samples * config.subset_samples;
    let base = SeedTree::new(seed_base);
    let nb = span.m() - 1;
    let l_singletons = estimate_l_inner(
        &span,
        &mut ev,
        &BoundarySample::new(vec![false; nb]),
        budget,
        config.semantics,
        &mut base.child(0).rng(),
    )
    .0;
    let l_grand = estimate_l_inner(
        &span,
        &mut ev,
        &BoundarySample::new(vec![true; nb]),
        budget,
        config.semantics,
        &mut base.child(1).rng(),
    )
    .0;

    Ok(InteractionReport {
        target,
        semantics: config.semantics,
        t: max.value - min.value,
        l_max: max.value,
        l_min: min.value,
        l_singletons,
        l_grand,
        b: l_grand - l_singletons,
        b_max: max.value - l_singletons,
        b_min: min.value - l_singletons,
        omega_max: max.hardened().partition(target)?,
        omega_min: min.hardened().partition(target)?,
        p_max: max.distribution.probs().to_vec(),
        p_min: min.distribution.probs().to_vec(),
        evaluations: max.trace.evaluations + min.trace.evaluations + ev.calls,
        trace_max: max.trace,
        trace_min: min.trace,
        seed_max,
        seed_min,
        exact: false,
    })
}

fn exact_report<G: Game + ?Sized>(
    game: &G,
    target: PlayerSet,
    config: &EstimatorConfig,
    seed_max: u64,
    seed_min: u64,
) -> Result<InteractionReport> {
    let limits = ExactLimits {
        max_players: EXACT_FALLBACK_MAX,
        max_contiguous_target: EXACT_FALLBACK_MAX,
        ..ExactLimits::DEFAULT
    };
    let r = exact_t(game, target, config.semantics, true, &limits)?;
    let probs = |p: &Partition| -> Vec<f64> {
        p.boundaries()
            .expect("contiguous")
            .into_iter()
            .map(|b| if b { 1.0 } else { 0.0 })
            .collect()
    };
    Ok(InteractionReport {
        target,
        semantics: config.semantics,
        t: r.t,
        l_max: r.b_max + r.singleton_value,
        l_min: r.b_min + r.singleton_value,
        l_singletons: r.singleton_value,
        l_grand: r.b + r.singleton_value,
        b: r.b,
        b_max: r.b_max,
        b_min: r.b_min,
        p_max: probs(&r.omega_max),
        p_min: probs(&r.omega_min),
        omega_max: r.omega_max,
        omega_min: r.omega_min,
        trace_max: EstimateTrace::default(),
        trace_min: EstimateTrace::default(),
        evaluations: 1 << game.n(),
        seed_max,
        seed_min,
        exact: true,
    })
}

/// `T̂` at each checkpoint epoch, both directions re-scored from fresh samples.
pub fn t_at_checkpoints<G: Game + ?Sized>(
    game: &G,
    target: PlayerSet,
    config: &EstimatorConfig,
    checkpoints: &[usize],
) -> Result<Vec<(usize, f64)>> {
    config.validate()?;
    if let Some(&e) = checkpoints.iter().find(|&&e| e > config.epochs) {
        return Err(Error::Config(format!("checkpoint {e} is past the last epoch {}", config.epochs)));
    }
    let span = Span::new(game.n(), target)?;
    let (seed_max, seed_min, _) = direction_seeds(config.seed);
    let (_, hi) = run(game, &span, &config.with_seed(seed_max), Direction::Max, checkpoints);
    let (_, lo) = run(game, &span, &config.with_seed(seed_min), Direction::Min, checkpoints);
    Ok(hi.iter().zip(&lo).map(|(&(e, a), &(_, b))| (e, a - b)).collect())
}

/// `E_{u≠v} |T_u − T_v| / E_w |T_w|` over repeated estimates.
pub fn instability_of(values: &[f64]) -> Result<f64> {
    let r = values.len();
    if r < 2 {
        return Err(Error::Config("instability needs at least 2 repeats".into()));
    }
    let scale = values.iter().map(|t| t.abs()).sum::<f64>() / r as f64;
    if scale == 0.0 {
        return Err(Error::Degenerate("every repeated estimate is zero; instability is undefined".into()));
    }
    let mut spread = 0.0;
    for u in 0..r {
        for v in 0..r {
            if u != v {
                spread += (values[u] - values[v]).abs();
            }
        }
    }
    Ok(spread / (r * (r - 1)) as f64 / scale)
}

/// Seed of the `r`-th repeat in an instability run.
pub fn repeat_seed(seed: u64, r: usize) -> u64 {
    SeedTree::new(seed).named("repeat").child(r as u64).seed()
}

/// Repeats [`estimate_t`] with distinct seeds and measures the spread of `T̂`.
pub fn instability<G: Game + ?Sized>(
    game: &G,
    target: PlayerSet,
    config: &EstimatorConfig,
    repeats: usize,
) -> Result<f64> {
    if repeats < 2 {
        return Err(Error::Config("instability needs at least 2 repeats".into()));
    }
    let ts = (0..repeats)
        .map(|r| Ok(estimate_t(game, target, &config.with_seed(repeat_seed(config.seed, r)))?.t))
        .collect::<Result<Vec<_>>>()?;
    instability_of(&ts)
}

/// Upper bound on evaluations for one `L(g)` context sample.
fn per_context(semantics: Semantics, m: usize, k: usize) -> u64 {
    match semantics {
        // v(S) plus one per coalition.
        Semantics::Exclusive => (m + 1) as u64,
        // One per prefix of an ordering of at most m + k units.
        Semantics::Unit => (m + k + 1) as u64,
    }
}

/// Upper bound on evaluations for one `(g, context)` gradient sample.
fn per_gradient_sample(semantics: Semantics, m: usize, k: usize) -> u64 {
    match semantics {
        // v(S) plus at most three intervals per boundary.
        Semantics::Exclusive => (3 * m as u64).saturating_sub(2).max(2),
        // Two clamped objectives per boundary.
        Semantics::Unit if m >= 2 => 2 * (m as u64 - 1) * per_context(semantics, m, k),
        Semantics::Unit => per_context(semantics, m, k),
    }
}

/// Bound on [`optimize`]'s evaluation count for a target of `m` players and
/// `k` outside players.
pub fn optimize_evaluation_bound(config: &EstimatorConfig, m: usize, k: usize) -> u64 {
    let (k1, k2, k3) = (
        config.epochs as u64,
        config.partition_samples as u64,
        config.subset_samples as u64,
    );
    k1 * k2 * k3 * per_gradient_sample(config.semantics, m, k) + k2 * k3 * per_context(config.semantics, m, k)
}

/// Bound on [`estimate_t`]'s evaluation count.
pub fn estimate_evaluation_bound(config: &EstimatorConfig, m: usize, k: usize) -> u64 {
    let budget = (config.partition_samples * config.subset_samples) as u64;
    2 * optimize_evaluation_bound(config, m, k) + 2 * budget * per_context(config.semantics, m, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::EPSILON;
    use crate::exact::exact_t;
    use crate::game::{Expr, ExpressionGame, ExpressionModel, Scaled};

    fn expr_game(n: usize, e: Expr) -> ExpressionGame {
        ExpressionGame::new(ExpressionModel::binary(n, e).unwrap()).unwrap()
    }

    fn small(semantics: Semantics) -> EstimatorConfig {
        EstimatorConfig {
            epochs: 30,
            partition_samples: 4,
            subset_samples: 32,
            semantics,
            seed: 17,
            ..EstimatorConfig::default()
        }
    }

    fn addmul() -> ExpressionGame {
        // x0 + x1*x2 + x3*x4 + x5
        expr_game(
            6,
            Expr::add([
                Expr::var(0),
                Expr::product_of_vars([1, 2]),
                Expr::product_of_vars([3, 4]),
                Expr::var(5),
            ]),
        )
    }

    #[test]
    fn mul_pairs_merge_and_or_pairs_split() {
        let g = addmul();
        let out = optimize(&g, PlayerSet::range(1, 5), &small(Semantics::Exclusive)).unwrap();
        let p = out.distribution.probs();
        assert!(p[0] > 0.9 && p[2] > 0.9, "{p:?}");
        assert_eq!(out.trace.p_history.len(), 31);
        assert_eq!(out.trace.objective.len(), 30);

        let or = expr_game(4, Expr::or([Expr::var(0), Expr::var(1), Expr::var(2), Expr::var(3)]));
        let out = optimize(&or, PlayerSet::range(1, 3), &small(Semantics::Exclusive)).unwrap();
        assert!(out.distribution.probs()[0] < 0.1, "{:?}", out.distribution.probs());
    }

    #[test]
    fn probabilities_stay_clamped() {
        let out = optimize(&addmul(), PlayerSet::range(0, 6), &small(Semantics::Exclusive)).unwrap();
        for row in &out.trace.p_history {
            assert!(row.iter().all(|&p| (EPSILON..=1.0 - EPSILON).contains(&p)));
        }
    }

    #[test]
    fn reproducible_under_fixed_seed() {
        let cfg = small(Semantics::Unit);
        let a = optimize(&addmul(), PlayerSet::range(1, 5), &cfg).unwrap();
        let b = optimize(&addmul(), PlayerSet::range(1, 5), &cfg).unwrap();
        assert_eq!(a, b);
        let c = optimize(&addmul(), PlayerSet::range(1, 5), &cfg.with_seed(18)).unwrap();
        assert_ne!(a.trace, c.trace);
    }

    #[test]
    fn min_on_game_is_max_on_negated_game() {
        let e = Expr::or([
            Expr::var(0),
            Expr::and([Expr::var(1), Expr::var(2)]),
            Expr::var(3),
            Expr::var(4),
        ]);
        let g = expr_game(5, e);
        let neg = Scaled::negated(&g);
        for sem in [Semantics::Exclusive, Semantics::Unit] {
            let mut cfg = small(sem);
            cfg.direction = Direction::Min;
            let lo = optimize(&g, PlayerSet::range(1, 5), &cfg).unwrap();
            cfg.direction = Direction::Max;
            let hi = optimize(&neg, PlayerSet::range(1, 5), &cfg).unwrap();
            assert_eq!(lo.distribution, hi.distribution);
            assert_eq!(lo.value, -hi.value);
            assert_eq!(lo.trace.evaluations, hi.trace.evaluations);
        }
    }

    #[test]
    fn estimate_t_tracks_exact_and_scales() {
        let g = addmul();
        let a = PlayerSet::range(1, 5);
        let cfg = small(Semantics::Exclusive);
        let est = estimate_t(&g, a, &cfg).unwrap();
        let exact = exact_t(&g, a, Semantics::Exclusive, true, &ExactLimits::DEFAULT).unwrap();
        assert!((est.t - exact.t).abs() / exact.t.abs().max(1.0) <= 0.1, "{} vs {}", est.t, exact.t);
        assert_eq!(est.omega_max.blocks().len(), 2);

        let doubled = estimate_t(&Scaled::new(&g, 2.0), a, &cfg).unwrap();
        assert!((doubled.t - 2.0 * est.t).abs() <= 0.1 * est.t.abs().max(1.0));

        let add = expr_game(5, Expr::sum_of_vars(0..5));
        let z = estimate_t(&add, PlayerSet::range(0, 4), &cfg).unwrap();
        assert!(z.t.abs() < 1e-9);
    }

    #[test]
    fn evaluation_counts_respect_bounds_and_scale() {
        let g = expr_game(
            7,
            Expr::or([
                Expr::var(0),
                Expr::and([Expr::var(1), Expr::var(2)]),
                Expr::var(3),
                Expr::and([Expr::var(4), Expr::var(5)]),
                Expr::var(6),
            ]),
        );
        let a = PlayerSet::range(1, 6);
        for sem in [Semantics::Exclusive, Semantics::Unit] {
            let base = EstimatorConfig {
                epochs: 4,
                partition_samples: 2,
                subset_samples: 8,
                semantics: sem,
                ..EstimatorConfig::default()
            };
            let count = |c: &EstimatorConfig| estimate_t(&g, a, c).unwrap().evaluations;
            let c0 = count(&base);
            assert!(c0 <= estimate_evaluation_bound(&base, 5, 2), "{sem}");
            for knob in 0..3 {
                let mut c = base.clone();
                match knob {
                    0 => c.epochs *= 2,
                    1 => c.partition_samples *= 2,
                    _ => c.subset_samples *= 2,
                }
                let c1 = count(&c);
                assert!(c1 <= estimate_evaluation_bound(&c, 5, 2));
                assert!(c1 <= 2 * c0 + 64, "{sem} knob {knob}: {c0} -> {c1}");
                assert!(c1 > c0);
            }
        }
    }

    #[test]
    fn exact_fallback_is_deterministic() {
        let g = addmul();
        let cfg = EstimatorConfig {
            exact_fallback: true,
            ..small(Semantics::Exclusive)
        };
        let r = estimate_t(&g, PlayerSet::range(1, 5), &cfg).unwrap();
        assert!(r.exact);
        assert_eq!(instability(&g, PlayerSet::range(1, 5), &cfg, 3).unwrap(), 0.0);
    }

    #[test]
    fn instability_metric() {
        assert_eq!(instability_of(&[2.0, 2.0, 2.0]).unwrap(), 0.0);
        // Pairs: |1-3| twice over 2 ordered pairs, scale 2.
        assert!((instability_of(&[1.0, 3.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(instability_of(&[0.0, 0.0]), Err(Error::Degenerate(_))));
        assert!(instability_of(&[1.0]).is_err());
    }

    #[test]
    fn trace_csv_layout() {
        let out = optimize(&addmul(), PlayerSet::range(1, 4), &EstimatorConfig {
            epochs: 2,
            partition_samples: 1,
            subset_samples: 2,
            ..EstimatorConfig::default()
        })
        .unwrap();
        let csv = out.trace.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "epoch,L_estimate,p_1,p_2");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("2,"));
    }
}
