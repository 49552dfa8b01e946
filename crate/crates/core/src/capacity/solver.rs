//! Projected-gradient solvers on the probability simplex over a pattern.
//!
//! Both objectives are concave in `P`: the support function maximizes a
//! nonnegative combination of marginal entropies, and membership maximizes the
//! minimum slack (smoothed by a soft-min whose temperature is annealed).
//! Steps use backtracking with a sufficient-increase test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    axes_of, check_rate, feasibility_slack, min_slack, prefix_weights, KPattern, RateVector, Slack, SolverConfig,
};
use crate::info::{Distribution, Outcome};
use crate::{Error, Result};

const LOG2_E: f64 = std::f64::consts::LOG2_E;
/// Floor applied to marginal masses inside logarithms.
const MASS_FLOOR: f64 = 1e-300;
/// Mixing weight toward uniform used when evaluating the duality-gap bound.
const BOUND_MIX: f64 = 1e-9;
const TEMPERATURES: [f64; 7] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7];

/// Marginal class structure of a pattern: for every nonempty axis set, the
/// class of each outcome under projection.
struct EntropyModel {
    n: usize,
    masks: usize,
    class_of: Vec<Vec<usize>>,
    class_count: Vec<usize>,
}

impl EntropyModel {
    fn new(tuples: &[Outcome], k: usize) -> Self {
        let masks = (1usize << k) - 1;
        let mut class_of = Vec::with_capacity(masks);
        let mut class_count = Vec::with_capacity(masks);
        for mask in 1..=masks as u32 {
            let axes = axes_of(mask);
            let keys: Vec<Vec<usize>> = tuples.iter().map(|t| axes.iter().map(|&a| t[a]).collect()).collect();
            let mut distinct = keys.clone();
            distinct.sort();
            distinct.dedup();
            class_of.push(keys.iter().map(|key| distinct.binary_search(key).unwrap()).collect());
            class_count.push(distinct.len());
        }
        EntropyModel { n: tuples.len(), masks, class_of, class_count }
    }

    fn masses(&self, p: &[f64]) -> Vec<Vec<f64>> {
        (0..self.masks)
            .map(|s| {
                let mut m = vec![0.0; self.class_count[s]];
                for (x, &c) in self.class_of[s].iter().enumerate() {
                    m[c] += p[x];
                }
                m
            })
            .collect()
    }

    fn entropies(masses: &[Vec<f64>]) -> Vec<f64> {
        masses.iter().map(|m| crate::info::entropy_bits(m)).collect()
    }

    /// `grad += weight · ∂H(S)/∂p`, where `s = mask - 1`.
    fn add_grad(&self, s: usize, masses: &[f64], weight: f64, grad: &mut [f64]) {
        for (x, &c) in self.class_of[s].iter().enumerate() {
            grad[x] -= weight * (masses[c].max(MASS_FLOOR).log2() + LOG2_E);
        }
    }
}

trait Objective {
    fn eval(&self, p: &[f64]) -> (f64, Vec<f64>);
}

struct WeightedEntropy<'a> {
    model: &'a EntropyModel,
    weights: Vec<(usize, f64)>,
}

impl Objective for WeightedEntropy<'_> {
    fn eval(&self, p: &[f64]) -> (f64, Vec<f64>) {
        let masses = self.model.masses(p);
        let mut grad = vec![0.0; self.model.n];
        let mut value = 0.0;
        for &(s, w) in &self.weights {
            value += w * crate::info::entropy_bits(&masses[s]);
            self.model.add_grad(s, &masses[s], w, &mut grad);
        }
        (value, grad)
    }
}

struct SoftMinSlack<'a> {
    model: &'a EntropyModel,
    rate_sums: Vec<f64>,
    temperature: f64,
}

impl SoftMinSlack<'_> {
    fn slacks(&self, masses: &[Vec<f64>]) -> Vec<f64> {
        EntropyModel::entropies(masses).iter().zip(&self.rate_sums).map(|(h, r)| h - r).collect()
    }

    fn true_min(&self, p: &[f64]) -> f64 {
        self.slacks(&self.model.masses(p)).into_iter().fold(f64::INFINITY, f64::min)
    }
}

impl Objective for SoftMinSlack<'_> {
    fn eval(&self, p: &[f64]) -> (f64, Vec<f64>) {
        let masses = self.model.masses(p);
        let slacks = self.slacks(&masses);
        let lo = slacks.iter().copied().fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = slacks.iter().map(|s| (-(s - lo) / self.temperature).exp()).collect();
        let total: f64 = weights.iter().sum();
        let value = lo - self.temperature * total.ln();
        let mut grad = vec![0.0; self.model.n];
        for (s, w) in weights.iter().enumerate() {
            if *w > 0.0 {
                self.model.add_grad(s, &masses[s], w / total, &mut grad);
            }
        }
        (value, grad)
    }
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &mut [f64]) {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `max_i g_i - g·p`; bounds `max f - f(p)` for concave differentiable `f`.
fn frank_wolfe_gap(p: &[f64], g: &[f64]) -> f64 {
    g.iter().copied().fold(f64::NEG_INFINITY, f64::max) - dot(g, p)
}

struct Ascent {
    point: Vec<f64>,
    value: f64,
}

/// Projected gradient ascent with backtracking; stops when the Frank–Wolfe
/// gap drops below `gap_tol`, the step collapses, or `max_iter` is reached.
fn ascend(obj: &dyn Objective, start: Vec<f64>, max_iter: usize, gap_tol: f64, cfg: &SolverConfig) -> Ascent {
    let mut x = start;
    let (mut f, mut g) = obj.eval(&x);
    let mut step = cfg.initial_step;
    let mut stalled = 0;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        if frank_wolfe_gap(&x, &g) < gap_tol {
            break;
        }
        let mut accepted = false;
        while step > 1e-18 {
            let mut y: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi + step * gi).collect();
            project_simplex(&mut y);
            let moved: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            let predicted = dot(&g, &moved);
            let (fy, gy) = obj.eval(&y);
            if fy.is_finite() && fy >= f + cfg.armijo * predicted {
                stalled = if fy - f < 1e-15 { stalled + 1 } else { 0 };
                x = y;
                f = fy;
                g = gy;
                step = (step * 2.0).min(1e8);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || stalled >= 25 {
            break;
        }
    }
    Ascent { point: x, value: f }
}

/// Starting points: the uniform distribution, then Dirichlet(1) draws.
fn starts(n: usize, count: usize, seed: u64, stream: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut out = vec![vec![1.0 / n as f64; n]];
    while out.len() < count {
        let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let total: f64 = w.iter().sum();
        out.push(w.into_iter().map(|x| x / total).collect());
    }
    out
}

fn to_distribution(pattern: &KPattern, p: &[f64]) -> Distribution {
    let clean: Vec<f64> = p.iter().map(|x| if *x > 1e-15 { *x } else { 0.0 }).collect();
    Distribution::from_weights(pattern.tuples().to_vec(), &clean).expect("simplex point has positive mass")
}

/// Value of the support function `h(t)` with a certified upper bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SupportValue {
    /// Best objective value found (a lower bound on `h(t)`).
    pub value: f64,
    /// Duality-gap upper bound on `h(t)`.
    pub upper_bound: f64,
    /// Distribution attaining `value`.
    pub witness: Distribution,
    /// `upper_bound - value ≤ tolerance`.
    pub converged: bool,
}

/// `h(t) = max_P Σ_m (t_{σm} - t_{σ(m+1)}) H(σ1..σm)_P` for the decreasing
/// order `σ` of `t`, the maximum of `t·r` over the capacity region.
pub fn support_function(pattern: &KPattern, t: &[f64], cfg: &SolverConfig) -> Result<SupportValue> {
    cfg.validate()?;
    if t.len() != pattern.arity() || t.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::Invalid("direction must be a nonnegative vector with one entry per factor".into()));
    }
    let model = EntropyModel::new(pattern.tuples(), pattern.arity());
    Ok(support_with_model(pattern, &model, t, cfg, 0))
}

fn support_with_model(pattern: &KPattern, model: &EntropyModel, t: &[f64], cfg: &SolverConfig, stream: u64) -> SupportValue {
    let weights: Vec<(usize, f64)> =
        prefix_weights(t).into_iter().filter(|(_, w)| *w > 0.0).map(|(mask, w)| (mask as usize - 1, w)).collect();
    let n = model.n;
    if weights.is_empty() || n == 1 {
        let p = vec![1.0 / n as f64; n];
        let value = WeightedEntropy { model, weights }.eval(&p).0;
        return SupportValue { value, upper_bound: value, witness: to_distribution(pattern, &p), converged: true };
    }
    let obj = WeightedEntropy { model, weights };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut upper = f64::INFINITY;
    for start in starts(n, cfg.multistarts, cfg.seed, stream) {
        let run = ascend(&obj, start, cfg.max_iterations, cfg.tolerance * 1e-3, cfg);
        let mixed: Vec<f64> = run.point.iter().map(|x| (1.0 - BOUND_MIX) * x + BOUND_MIX / n as f64).collect();
        let (fm, gm) = obj.eval(&mixed);
        upper = upper.min(fm + frank_wolfe_gap(&mixed, &gm).max(0.0));
        if best.as_ref().is_none_or(|(v, _)| run.value > *v) {
            best = Some((run.value, run.point));
        }
        // Concave objective: once the bound meets the best value, more starts
        // cannot improve either.
        if best.as_ref().is_some_and(|(v, _)| upper - v <= cfg.tolerance) {
            break;
        }
    }
    let (value, point) = best.expect("at least one start");
    let upper_bound = upper.max(value);
    SupportValue {
        value,
        upper_bound,
        witness: to_distribution(pattern, &point),
        converged: upper_bound - value <= cfg.tolerance,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Accept,
    Reject,
    Undetermined,
}

/// Outcome of [`membership`], carrying the certificate behind the verdict.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum MembershipResult {
    Accept {
        witness: Distribution,
        slacks: Vec<Slack>,
        min_slack: f64,
    },
    /// `direction · rate > support_value`, with the direction scaled so that
    /// its largest entry is 1.
    Reject {
        direction: Vec<f64>,
        rate_value: f64,
        support_value: f64,
        gap: f64,
        maximizer: Distribution,
    },
    Undetermined {
        best_witness: Distribution,
        best_min_slack: f64,
        best_direction: Vec<f64>,
        best_gap: f64,
    },
}

impl MembershipResult {
    pub fn verdict(&self) -> Verdict {
        match self {
            MembershipResult::Accept { .. } => Verdict::Accept,
            MembershipResult::Reject { .. } => Verdict::Reject,
            MembershipResult::Undetermined { .. } => Verdict::Undetermined,
        }
    }

    pub fn is_accept(&self) -> bool {
        self.verdict() == Verdict::Accept
    }

    pub fn is_reject(&self) -> bool {
        self.verdict() == Verdict::Reject
    }
}

/// Maximizes the minimum slack over `P`, returning the best point and value.
fn best_min_slack(pattern: &KPattern, model: &EntropyModel, rate: &RateVector, cfg: &SolverConfig) -> (Vec<f64>, f64) {
    let rate_sums: Vec<f64> = (1..=model.masks as u32).map(|mask| rate.sum_over(mask)).collect();
    let n = pattern.len();
    let per_stage = (cfg.max_iterations / TEMPERATURES.len()).max(1);
    let mut best = (vec![1.0 / n as f64; n], f64::NEG_INFINITY);
    for start in starts(n, cfg.multistarts, cfg.seed, u64::MAX) {
        let mut x = start;
        let probe = SoftMinSlack { model, rate_sums: rate_sums.clone(), temperature: 1.0 };
        let mut local_best = (x.clone(), probe.true_min(&x));
        for &temperature in &TEMPERATURES {
            let obj = SoftMinSlack { model, rate_sums: rate_sums.clone(), temperature };
            x = ascend(&obj, x, per_stage, 0.0, cfg).point;
            let m = obj.true_min(&x);
            if m > local_best.1 {
                local_best = (x.clone(), m);
            }
        }
        if local_best.1 > best.1 {
            best = local_best;
        }
        if best.1 >= -cfg.tolerance {
            break;
        }
    }
    best
}

/// All points of the simplex grid `{c / res : Σ c = res}` in `k` dimensions.
fn direction_grid(k: usize, res: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut counts = vec![0usize; k];
    fn go(counts: &mut [usize], pos: usize, left: usize, res: usize, out: &mut Vec<Vec<f64>>) {
        if pos + 1 == counts.len() {
            counts[pos] = left;
            out.push(counts.iter().map(|&c| c as f64 / res as f64).collect());
            return;
        }
        for c in 0..=left {
            counts[pos] = c;
            go(counts, pos + 1, left - c, res, out);
        }
    }
    go(&mut counts, 0, res, res, &mut out);
    out
}

struct Separation {
    t: Vec<f64>,
    gap: f64,
    support: SupportValue,
}

/// Separation gap of `rate` along `t`, normalized so that `max t = 1`.
fn separation(pattern: &KPattern, model: &EntropyModel, rate: &RateVector, t: Vec<f64>, cfg: &SolverConfig, stream: u64) -> Separation {
    let scale = t.iter().copied().fold(0.0, f64::max);
    let t: Vec<f64> = t.iter().map(|x| x / scale).collect();
    let support = support_with_model(pattern, model, &t, cfg, stream);
    let gap = rate.dot(&t) - support.upper_bound;
    Separation { t, gap, support }
}

fn search_direction(pattern: &KPattern, model: &EntropyModel, rate: &RateVector, cfg: &SolverConfig) -> Separation {
    let k = pattern.arity();
    let grid = direction_grid(k, cfg.grid_resolution);
    let scored: Vec<Separation> = grid
        .into_par_iter()
        .enumerate()
        .map(|(i, t)| separation(pattern, model, rate, t, cfg, i as u64))
        .collect();
    // First maximal entry wins, so the result does not depend on scheduling.
    let mut best = scored.into_iter().reduce(|a, b| if b.gap > a.gap { b } else { a }).expect("grid is nonempty");
    let mut delta = 0.5 / cfg.grid_resolution as f64;
    let mut stream = u64::MAX / 2;
    for _ in 0..cfg.refine_rounds {
        let base: Vec<f64> = {
            let total: f64 = best.t.iter().sum();
            best.t.iter().map(|x| x / total).collect()
        };
        let mut candidates = Vec::new();
        for i in 0..k {
            for j in 0..k {
                if i != j && base[j] >= delta {
                    let mut t = base.clone();
                    t[i] += delta;
                    t[j] -= delta;
                    candidates.push(t);
                }
            }
        }
        let scored: Vec<Separation> = candidates
            .into_par_iter()
            .enumerate()
            .map(|(i, t)| separation(pattern, model, rate, t, cfg, stream + i as u64))
            .collect();
        stream += 1 << 20;
        let improved = scored.into_iter().reduce(|a, b| if b.gap > a.gap { b } else { a });
        match improved {
            Some(s) if s.gap > best.gap => best = s,
            _ => delta *= 0.5,
        }
    }
    best
}

/// Decides whether `rate` lies in the capacity region of `pattern`.
///
/// First maximizes the minimum slack over distributions on the pattern; if it
/// reaches `-verdict_margin` the maximizer is returned as witness. Otherwise
/// searches a grid of directions `t` (with local refinement) for a separating
/// hyperplane `t·r > h(t)`, using the certified upper bound on `h(t)`.
/// Points on or very near the boundary may come back [`Verdict::Undetermined`].
pub fn membership(pattern: &KPattern, rate: &RateVector, cfg: &SolverConfig) -> Result<MembershipResult> {
    cfg.validate()?;
    check_rate(pattern, rate)?;
    let model = EntropyModel::new(pattern.tuples(), pattern.arity());
    let (point, _) = best_min_slack(pattern, &model, rate, cfg);
    let witness = to_distribution(pattern, &point);
    let slacks = feasibility_slack(pattern, &witness, rate)?;
    let found = min_slack(&slacks);
    if found >= -cfg.verdict_margin {
        return Ok(MembershipResult::Accept { witness, slacks, min_slack: found });
    }
    let sep = search_direction(pattern, &model, rate, cfg);
    if sep.gap > cfg.verdict_margin {
        return Ok(MembershipResult::Reject {
            rate_value: rate.dot(&sep.t),
            support_value: sep.support.upper_bound,
            gap: sep.gap,
            direction: sep.t,
            maximizer: sep.support.witness,
        });
    }
    Ok(MembershipResult::Undetermined {
        best_witness: witness,
        best_min_slack: found,
        best_direction: sep.t,
        best_gap: sep.gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::vertex_rates;
    use crate::fixtures;
    use crate::info::binary_entropy;

    fn ex() -> KPattern {
        KPattern::try_from(&fixtures::lambda_ex()).unwrap()
    }

    fn quick() -> SolverConfig {
        SolverConfig { multistarts: 4, grid_resolution: 10, ..Default::default() }
    }

    #[test]
    fn simplex_projection() {
        let mut v = vec![0.5, 0.5, 0.5];
        project_simplex(&mut v);
        assert!(v.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
        let mut w = vec![2.0, 0.0, -1.0];
        project_simplex(&mut w);
        assert_eq!(w, vec![1.0, 0.0, 0.0]);
        let mut u = vec![0.2, 0.3, 0.5];
        project_simplex(&mut u);
        assert!((u[2] - 0.5).abs() < 1e-15 && (u[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn support_function_examples() {
        let cfg = SolverConfig::default();
        let h = support_function(&ex(), &[1.0, 0.0, 0.0], &cfg).unwrap();
        assert!((h.value - 1.0).abs() < 1e-6 && h.converged);
        assert!(h.upper_bound >= h.value);
        let h = support_function(&ex(), &[1.0, 1.0, 1.0], &cfg).unwrap();
        assert!((h.value - 6f64.log2()).abs() < 1e-6);
        assert!((h.upper_bound - 6f64.log2()).abs() < 1e-6);
        let h = support_function(&ex(), &[0.0, 0.0, 0.0], &cfg).unwrap();
        assert_eq!(h.value, 0.0);
        assert!(support_function(&ex(), &[1.0, 0.0], &cfg).is_err());
    }

    #[test]
    fn support_function_upper_bound_is_sound_on_a_skewed_direction() {
        let cfg = SolverConfig::default();
        let b = KPattern::try_from(&fixtures::lambda_bcrl()).unwrap();
        let h = support_function(&b, &[0.7, 0.2, 0.9], &cfg).unwrap();
        assert!(h.converged);
        // Any distribution's prefix value stays below the upper bound.
        for p in starts(b.len(), 200, 11, 0) {
            let d = Distribution::new(b.tuples().to_vec(), p).unwrap();
            let vs = vertex_rates(&b, &d).unwrap();
            let best = vs.iter().map(|v| v.rate.dot(&[0.7, 0.2, 0.9])).fold(f64::MIN, f64::max);
            assert!(best <= h.upper_bound + 1e-9);
        }
    }

    #[test]
    fn zero_rate_is_accepted() {
        let r = membership(&ex(), &RateVector::zero(3), &quick()).unwrap();
        assert!(r.is_accept());
        let single = KPattern::new(vec![vec![1, 1, 1]]).unwrap();
        assert!(membership(&single, &RateVector::zero(3), &quick()).unwrap().is_accept());
    }

    #[test]
    fn single_tuple_rejects_any_positive_rate() {
        let single = KPattern::new(vec![vec![1, 1, 1]]).unwrap();
        let r = membership(&single, &RateVector::new(vec![0.3, 0.0, 0.0]).unwrap(), &quick()).unwrap();
        match r {
            MembershipResult::Reject { direction, gap, .. } => {
                assert!(gap > 0.29);
                assert_eq!(direction[0], 1.0);
            }
            other => panic!("expected reject, got {other:?}"),
        }
    }

    #[test]
    fn remark_region_boundary() {
        let pat = fixtures::remark_binary();
        let h = binary_entropy(2.0 / 3.0);
        let cfg = SolverConfig::default();
        assert!(membership(&pat, &RateVector::new(vec![2.0 / 3.0, h]).unwrap(), &cfg).unwrap().is_accept());
        assert!(membership(&pat, &RateVector::new(vec![0.7, h]).unwrap(), &cfg).unwrap().is_reject());
    }

    #[test]
    fn grid_covers_the_simplex() {
        assert_eq!(direction_grid(3, 25).len(), 351);
        assert_eq!(direction_grid(2, 4).len(), 5);
        assert!(direction_grid(3, 5).iter().all(|t| (t.iter().sum::<f64>() - 1.0).abs() < 1e-12));
    }
}
