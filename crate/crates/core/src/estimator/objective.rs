//! Monte-Carlo estimates of the partition objective `L(g)` and of its
//! gradient with respect to the merge probabilities.
//!
//! Under exclusive semantics the context of coalition `C_i` is a uniform
//! subset of `N∖A` (size uniform in `0..=|N∖A|`), so one sampled context
//! serves every coalition at once. Under unit semantics the universe is
//! `N∖A` plus the coalitions of `Ω_g`, sampled as random orderings of those
//! units.

use rand::seq::{index, SliceRandom};
use rand::{Rng as _, SeedableRng};
use serde::{Deserialize, Serialize};

use super::distribution::{lambda_weights, sample_partition, BoundarySample, PartitionDistribution};
use crate::error::{Error, Result};
use crate::exact::Semantics;
use crate::game::Game;
use crate::player_set::PlayerSet;
use crate::rng::Rng;

/// The target's ordered members, its complement, and all member intervals.
#[derive(Clone, Debug)]
pub(crate) struct Span {
    members: Vec<usize>,
    outside: Vec<usize>,
    intervals: Vec<PlayerSet>,
}

impl Span {
    pub(crate) fn new(n: usize, target: PlayerSet) -> Result<Self> {
        if target.is_empty() || !target.within(n) {
            return Err(Error::Domain(format!("target {target:?} is not a non-empty subset of the {n} players")));
        }
        let members = target.to_vec();
        let outside = target.complement(n).to_vec();
        let m = members.len();
        let mut intervals = vec![PlayerSet::EMPTY; m * m];
        for s in 0..m {
            let mut acc = PlayerSet::EMPTY;
            for e in s..m {
                acc = acc.insert(members[e]);
                intervals[s * m + e] = acc;
            }
        }
        Ok(Span {
            members,
            outside,
            intervals,
        })
    }

    pub(crate) fn m(&self) -> usize {
        self.members.len()
    }

    pub(crate) fn k(&self) -> usize {
        self.outside.len()
    }

    #[inline]
    fn interval(&self, s: usize, e: usize) -> PlayerSet {
        self.intervals[s * self.m() + e]
    }

    fn check_sample(&self, g: &BoundarySample) -> Result<()> {
        if g.players() != self.m() {
            return Err(Error::Domain(format!(
                "boundary vector of length {} does not fit a target of {} players",
                g.g.len(),
                self.m()
            )));
        }
        Ok(())
    }

    /// Uniform size in `0..=k`, then a uniform subset of that size.
    fn sample_context(&self, rng: &mut Rng) -> PlayerSet {
        let k = self.k();
        let r = rng.random_range(0..=k);
        index::sample(rng, k, r).into_iter().map(|i| self.outside[i]).collect()
    }
}

/// Counts every game evaluation requested by the estimator.
pub(crate) struct Counter<'g, G: ?Sized> {
    game: &'g G,
    pub(crate) calls: u64,
}

impl<'g, G: Game + ?Sized> Counter<'g, G> {
    pub(crate) fn new(game: &'g G) -> Self {
        Counter { game, calls: 0 }
    }

    #[inline]
    fn v(&mut self, s: PlayerSet) -> f64 {
        self.calls += 1;
        self.game.value(s)
    }
}

/// `v(S ∪ interval)` memo for one context `S`.
struct IntervalCache {
    stamp: Vec<u32>,
    value: Vec<f64>,
    current: u32,
}

impl IntervalCache {
    fn new(m: usize) -> Self {
        IntervalCache {
            stamp: vec![0; m * m],
            value: vec![0.0; m * m],
            current: 0,
        }
    }

    fn reset(&mut self) {
        self.current = self.current.wrapping_add(1);
        if self.current == 0 {
            self.stamp.iter_mut().for_each(|s| *s = u32::MAX);
            self.current = 1;
        }
    }
}

/// Start and end position of the coalition holding each position.
fn runs(g: &[bool]) -> (Vec<usize>, Vec<usize>) {
    let m = g.len() + 1;
    let mut start = vec![0; m];
    let mut end = vec![m - 1; m];
    for i in 1..m {
        start[i] = if g[i - 1] { start[i - 1] } else { i };
    }
    for i in (0..m - 1).rev() {
        end[i] = if g[i] { end[i + 1] } else { i };
    }
    (start, end)
}

struct ExclusivePass<'a, 'g, G: ?Sized> {
    span: &'a Span,
    ev: &'a mut Counter<'g, G>,
    cache: IntervalCache,
    s: PlayerSet,
    vs: f64,
}

impl<'a, 'g, G: Game + ?Sized> ExclusivePass<'a, 'g, G> {
    fn new(span: &'a Span, ev: &'a mut Counter<'g, G>) -> Self {
        let m = span.m();
        ExclusivePass {
            span,
            ev,
            cache: IntervalCache::new(m),
            s: PlayerSet::EMPTY,
            vs: 0.0,
        }
    }

    fn set_context(&mut self, s: PlayerSet) {
        self.cache.reset();
        self.s = s;
        self.vs = self.ev.v(s);
    }

    fn with(&mut self, a: usize, b: usize) -> f64 {
        let idx = a * self.span.m() + b;
        if self.cache.stamp[idx] != self.cache.current {
            self.cache.value[idx] = self.ev.v(self.s.union(self.span.interval(a, b)));
            self.cache.stamp[idx] = self.cache.current;
        }
        self.cache.value[idx]
    }

    /// `Σ_i λ_i(g) [v(S ∪ C_i) − v(S)]`.
    fn objective(&mut self, start: &[usize], end: &[usize], lambda: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..lambda.len() {
            acc += lambda[i] * (self.with(start[i], end[i]) - self.vs);
        }
        acc
    }

    /// Adds `L(g^{b←1}) − L(g^{b←0})` for every boundary `b`. Only the two
    /// coalitions meeting at `b` change, so the difference is local.
    fn accumulate_gradient(&mut self, start: &[usize], end: &[usize], grad: &mut [f64]) {
        for (b, gb) in grad.iter_mut().enumerate() {
            let (lo, hi) = (start[b], end[b + 1]);
            *gb += self.with(lo, hi) - self.with(lo, b) - self.with(b + 1, hi) + self.vs;
        }
    }
}

/// One ordering of the units of `Ω_g` and `N∖A`; returns the summed marginal
/// contributions of the target's coalitions.
fn unit_permutation_sample<G: Game + ?Sized>(
    ev: &mut Counter<'_, G>,
    units: &[(PlayerSet, bool)],
    order: &mut [usize],
    rng: &mut Rng,
) -> f64 {
    order.shuffle(rng);
    let mut s = PlayerSet::EMPTY;
    let mut prev = ev.v(s);
    let mut acc = 0.0;
    for &u in order.iter() {
        let (mask, inside) = units[u];
        s = s.union(mask);
        let cur = ev.v(s);
        if inside {
            acc += cur - prev;
        }
        prev = cur;
    }
    acc
}

fn unit_universe(span: &Span, g: &BoundarySample) -> Vec<(PlayerSet, bool)> {
    g.blocks()
        .into_iter()
        .map(|(a, b)| (span.interval(a, b), true))
        .chain(span.outside.iter().map(|&j| (PlayerSet::singleton(j), false)))
        .collect()
}

/// Running mean and variance.
#[derive(Default)]
struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn std_err(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let c = self.count as f64;
        (self.m2 / (c - 1.0) / c).sqrt()
    }
}

/// Estimate of `L(g)` with its standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
    pub evaluations: u64,
}

pub(crate) fn estimate_l_inner<G: Game + ?Sized>(
    span: &Span,
    ev: &mut Counter<'_, G>,
    g: &BoundarySample,
    k3: usize,
    semantics: Semantics,
    rng: &mut Rng,
) -> (f64, f64) {
    let mut mom = Moments::default();
    match semantics {
        Semantics::Exclusive => {
            let (start, end) = runs(&g.g);
            let lambda = lambda_weights(g);
            let mut pass = ExclusivePass::new(span, ev);
            for _ in 0..k3 {
                let s = span.sample_context(rng);
                pass.set_context(s);
                mom.push(pass.objective(&start, &end, &lambda));
            }
        }
        Semantics::Unit => {
            let units = unit_universe(span, g);
            let mut order: Vec<usize> = (0..units.len()).collect();
            for _ in 0..k3 {
                mom.push(unit_permutation_sample(ev, &units, &mut order, rng));
            }
        }
    }
    (mom.mean, mom.std_err())
}

/// Monte-Carlo estimate of `Σ_{i∈A} λ_i(g) φ(C_i | context)` from `k3` sampled contexts.
pub fn estimate_l<G: Game + ?Sized>(
    game: &G,
    target: PlayerSet,
    g: &BoundarySample,
    k3: usize,
    semantics: Semantics,
    rng: &mut Rng,
) -> Result<LEstimate> {
    if k3 == 0 {
        return Err(Error::Config("subset samples must be at least 1".into()));
    }
    let span = Span::new(game.n(), target)?;
    span.check_sample(g)?;
    let mut ev = Counter::new(game);
    let (mean, std_err) = estimate_l_inner(&span, &mut ev, g, k3, semantics, rng);
    Ok(LEstimate {
        mean,
        std_err,
        samples: k3,
        evaluations: ev.calls,
    })
}

/// Gradient of `E_{g~p} L(g)` with respect to `p`, plus an estimate of the
/// objective at `p` from the same samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimate {
    pub grad: Vec<f64>,
    pub objective: f64,
    pub evaluations: u64,
}

pub(crate) fn grad_p_inner<G: Game + ?Sized>(
    span: &Span,
    ev: &mut Counter<'_, G>,
    dist: &PartitionDistribution,
    k2: usize,
    k3: usize,
    semantics: Semantics,
    rng: &mut Rng,
) -> (Vec<f64>, f64) {
    let nb = dist.boundaries();
    let p = dist.probs();
    let mut grad = vec![0.0; nb];
    let mut objective = 0.0;
    match semantics {
        Semantics::Exclusive => {
            let mut pass = ExclusivePass::new(span, ev);
            for _ in 0..k2 {
                let g = sample_partition(dist, rng);
                let (start, end) = runs(&g.g);
                let lambda = lambda_weights(&g);
                for _ in 0..k3 {
                    let s = span.sample_context(rng);
                    pass.set_context(s);
                    pass.accumulate_gradient(&start, &end, &mut grad);
                    objective += pass.objective(&start, &end, &lambda);
                }
            }
            let total = (k2 * k3) as f64;
            grad.iter_mut().for_each(|x| *x /= total);
            objective /= total;
        }
        Semantics::Unit => {
            for _ in 0..k2 {
                let g = sample_partition(dist, rng);
                if nb == 0 {
                    objective += estimate_l_inner(span, ev, &g, k3, semantics, rng).0;
                    continue;
                }
                for b in 0..nb {
                    // Both clamps replay the same stream.
                    let seed = rng.random::<u64>();
                    let mut on = g.clone();
                    on.g[b] = true;
                    let mut off = g.clone();
                    off.g[b] = false;
                    let l1 = estimate_l_inner(span, ev, &on, k3, semantics, &mut Rng::seed_from_u64(seed)).0;
                    let l0 = estimate_l_inner(span, ev, &off, k3, semantics, &mut Rng::seed_from_u64(seed)).0;
                    grad[b] += l1 - l0;
                    objective += p[b] * l1 + (1.0 - p[b]) * l0;
                }
            }
            grad.iter_mut().for_each(|x| *x /= k2 as f64);
            objective /= (k2 * nb.max(1)) as f64;
        }
    }
    (grad, objective)
}

/// For every boundary `i`, estimates `E[L | g_i = 1] − E[L | g_i = 0]`. The
/// other bits come from `k2` draws of `dist`, shared by both clamps.
pub fn grad_p<G: Game + ?Sized>(
    game: &G,
    target: PlayerSet,
    dist: &PartitionDistribution,
    k2: usize,
    k3: usize,
    semantics: Semantics,
    rng: &mut Rng,
) -> Result<GradientEstimate> {
    if k2 == 0 || k3 == 0 {
        return Err(Error::Config("partition and subset samples must be at least 1".into()));
    }
    let span = Span::new(game.n(), target)?;
    if dist.boundaries() + 1 != span.m() {
        return Err(Error::Domain(format!(
            "distribution over {} boundaries does not fit a target of {} players",
            dist.boundaries(),
            span.m()
        )));
    }
    let mut ev = Counter::new(game);
    let (grad, objective) = grad_p_inner(&span, &mut ev, dist, k2, k3, semantics, rng);
    Ok(GradientEstimate {
        grad,
        objective,
        evaluations: ev.calls,
    })
}
