//! Monte Carlo simulation of random covering maps `Λⁿ → [M_a]×[M_b]×[M_c]`,
//! and the failure bounds that control them.
//!
//! Each trial draws three uniformly random total maps on `Iⁿ`, `Jⁿ`, `Kⁿ`,
//! pushes `Λⁿ` (or a single type class inside it) forward, and records how
//! many cells of the target box are missed.

use std::fmt::Write as _;
use std::time::Instant;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{RateVector, DEFAULT_SEED};
use crate::info::{enumerate_types_over, NType, DEFAULT_TYPE_CAP};
use crate::pattern::Pattern;
use crate::{Error, Result};

/// Maximum number of tuples of `Λⁿ` enumerated per trial.
pub const TUPLE_CAP: u128 = 10_000_000;
/// Maximum number of entries in one materialized random map.
pub const MAP_CAP: u128 = 1 << 24;
/// Maximum number of cells in the target box.
pub const BOX_CAP: u128 = 1 << 26;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub rate: RateVector,
    pub trials: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Restrict the domain to one type class of `Λⁿ`; outcomes are 0-based
    /// triples of the pattern.
    #[serde(default)]
    pub type_class: Option<NType>,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl SimConfig {
    pub fn new(n: usize, rate: RateVector, trials: usize) -> Self {
        SimConfig { n, rate, trials, seed: DEFAULT_SEED, type_class: None }
    }
}

/// `⌊2^{r n}⌋`, never below 1.
pub fn target_size(rate: f64, n: usize) -> u64 {
    (rate * n as f64).exp2().floor().max(1.0) as u64
}

/// Target box sizes `(M_a, M_b, M_c)` for a rate triple.
pub fn target_sizes(rate: &RateVector, n: usize) -> Result<[u64; 3]> {
    let r = rate.as_slice();
    if r.len() != 3 {
        return Err(Error::DimensionMismatch(format!("simulation needs 3 rates, got {}", r.len())));
    }
    Ok([target_size(r[0], n), target_size(r[1], n), target_size(r[2], n)])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimReport {
    pub n: usize,
    pub targets: [u64; 3],
    pub box_size: u64,
    pub domain_size: u64,
    pub trials: usize,
    pub successes: usize,
    pub missing: Vec<u64>,
    pub failure_rate: f64,
    /// Binomial standard error of `failure_rate`.
    pub std_error: f64,
    /// Best typed union bound over all n-types of the pattern (exact counts).
    pub predicted_bound: f64,
    pub seconds: f64,
}

impl SimReport {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    /// Per-trial missing-cell counts as `trial,missing` CSV.
    pub fn missing_csv(&self) -> String {
        let mut out = String::from("trial,missing\n");
        for (t, m) in self.missing.iter().enumerate() {
            let _ = writeln!(out, "{t},{m}");
        }
        out
    }
}

fn checked_pow(base: usize, n: usize, cap: u128, what: &'static str) -> Result<usize> {
    let mut acc: u128 = 1;
    for _ in 0..n {
        acc = acc.saturating_mul(base as u128);
        if acc > cap {
            return Err(Error::SizeCap { what, needed: acc, cap });
        }
    }
    Ok(acc as usize)
}

/// Domain of one trial: for each enumerated tuple of `Λⁿ`, the flat indices of
/// its three coordinate strings in `Iⁿ`, `Jⁿ`, `Kⁿ`.
fn domain(pattern: &Pattern, n: usize, restriction: Option<&[u64]>) -> Result<Vec<[u32; 3]>> {
    let triples = pattern.triples();
    let p = triples.len();
    checked_pow(p, n, TUPLE_CAP, "tuples of the pattern power")?;
    let dims = pattern.dims();
    let mut out = Vec::new();
    let mut digits = vec![0usize; n];
    let mut counts = vec![0u64; p];
    counts[0] = n as u64;
    loop {
        if restriction.is_none_or(|want| want == counts.as_slice()) {
            let mut idx = [0u32; 3];
            for &d in &digits {
                for a in 0..3 {
                    idx[a] = idx[a] * dims[a] as u32 + triples[d][a] as u32;
                }
            }
            out.push(idx);
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            counts[digits[pos]] -= 1;
            digits[pos] += 1;
            if digits[pos] < p {
                counts[digits[pos]] += 1;
                break;
            }
            digits[pos] = 0;
            counts[0] += 1;
        }
    }
}

fn restriction_counts(pattern: &Pattern, n: usize, t: &NType) -> Result<Vec<u64>> {
    if t.n() != n as u64 {
        return Err(Error::Invalid(format!("type has denominator {}, expected {n}", t.n())));
    }
    let mut counts = vec![0u64; pattern.len()];
    for (o, &c) in t.outcomes().iter().zip(t.counts()) {
        let triple: [usize; 3] =
            o.as_slice().try_into().map_err(|_| Error::Invalid("type outcomes must be triples".into()))?;
        let pos = pattern
            .position(&triple)
            .ok_or_else(|| Error::Invalid(format!("type outcome {o:?} is not in the pattern")))?;
        counts[pos] += c;
    }
    Ok(counts)
}

fn run_trial(dom: &[[u32; 3]], map_sizes: [usize; 3], targets: [u64; 3], seed: u64, trial: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let maps: Vec<Vec<u32>> =
        (0..3).map(|a| (0..map_sizes[a]).map(|_| rng.gen_range(0..targets[a]) as u32).collect()).collect();
    let [ma, mb, mc] = targets.map(|t| t as usize);
    let box_size = ma * mb * mc;
    let mut covered = vec![false; box_size];
    let mut hits = 0u64;
    for idx in dom {
        let cell = (maps[0][idx[0] as usize] as usize * mb + maps[1][idx[1] as usize] as usize) * mc
            + maps[2][idx[2] as usize] as usize;
        if !covered[cell] {
            covered[cell] = true;
            hits += 1;
        }
    }
    debug_assert!({
        // |S| / |X×Y| ≤ |π_X(S)| / |X| for the image S in [M_a] × ([M_b]×[M_c]).
        let rows = covered.chunks(mb * mc).filter(|row| row.iter().any(|&c| c)).count();
        hits as f64 / box_size as f64 <= rows as f64 / ma as f64 + 1e-12
    });
    box_size as u64 - hits
}

/// Runs `cfg.trials` independent trials; the report is identical for a given
/// seed regardless of thread count.
pub fn simulate(pattern: &Pattern, cfg: &SimConfig) -> Result<SimReport> {
    let start = Instant::now();
    if pattern.is_empty() {
        return Err(Error::Invalid("pattern is empty".into()));
    }
    if cfg.trials == 0 {
        return Err(Error::Invalid("trials must be positive".into()));
    }
    if cfg.rate.as_slice().iter().any(|&r| r < 0.0) {
        return Err(Error::Invalid("rates must be nonnegative".into()));
    }
    let targets = target_sizes(&cfg.rate, cfg.n)?;
    let box_size = targets.iter().map(|&t| t as u128).product::<u128>();
    if box_size > BOX_CAP {
        return Err(Error::SizeCap { what: "target box cells", needed: box_size, cap: BOX_CAP });
    }
    let dims = pattern.dims();
    let map_sizes = [
        checked_pow(dims[0], cfg.n, MAP_CAP, "map entries")?,
        checked_pow(dims[1], cfg.n, MAP_CAP, "map entries")?,
        checked_pow(dims[2], cfg.n, MAP_CAP, "map entries")?,
    ];
    let restriction = cfg.type_class.as_ref().map(|t| restriction_counts(pattern, cfg.n, t)).transpose()?;
    let dom = domain(pattern, cfg.n, restriction.as_deref())?;
    let missing: Vec<u64> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|trial| run_trial(&dom, map_sizes, targets, cfg.seed, trial))
        .collect();
    let successes = missing.iter().filter(|&&m| m == 0).count();
    let failure_rate = 1.0 - successes as f64 / cfg.trials as f64;
    let predicted_bound = match &cfg.type_class {
        Some(t) => typed_failure_bound(pattern, t, cfg.n, &cfg.rate)?.union_exact,
        None => best_typed_failure_bound(pattern, cfg.n, &cfg.rate)?.1.union_exact,
    };
    Ok(SimReport {
        n: cfg.n,
        targets,
        box_size: box_size as u64,
        domain_size: dom.len() as u64,
        trials: cfg.trials,
        successes,
        missing,
        failure_rate,
        std_error: (failure_rate * (1.0 - failure_rate) / cfg.trials as f64).sqrt(),
        predicted_bound,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Probability bound that a product of independent random subsets misses `T`:
/// `(1-α)^{pX} + (1-β)^{minFiberY} + (1-γ)^{minFiberZ}`. Not clamped.
pub fn single_shot_bound(p_x: u64, min_fiber_y: u64, min_fiber_z: u64, alpha: f64, beta: f64, gamma: f64) -> Result<f64> {
    if p_x == 0 || min_fiber_y == 0 || min_fiber_z == 0 {
        return Err(Error::Invalid("sizes must be at least 1".into()));
    }
    if [alpha, beta, gamma].iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::Invalid("probabilities must lie in [0, 1]".into()));
    }
    Ok(miss(alpha, p_x as f64) + miss(beta, min_fiber_y as f64) + miss(gamma, min_fiber_z as f64))
}

/// `(1-p)^count`, stable for large counts.
fn miss(p: f64, count: f64) -> f64 {
    if p >= 1.0 {
        return if count == 0.0 { 1.0 } else { 0.0 };
    }
    (count * (-p).ln_1p()).exp()
}

fn big_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

/// Typed failure bounds for one n-type, per cell and after the union bound
/// over the target box. Values are not clamped to 1.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TypedBound {
    pub targets: [u64; 3],
    /// `|T(P_I)|`, `|T(P_IJ)|/|T(P_I)|`, `|T(P)|/|T(P_IJ)|`.
    pub fiber_sizes: [f64; 3],
    pub per_cell_exact: f64,
    pub union_exact: f64,
    /// Same bound with the entropy estimates of the type-class sizes.
    pub per_cell_entropy: f64,
    pub union_entropy: f64,
}

/// Failure bound for covering the target box from one type class of `Λⁿ`.
///
/// The exact form uses `α = 1/M_a` etc. and exact type-class cardinalities;
/// the entropy form uses `2^{-an}` and the `(n+1)^{-|I|}`-style lower
/// estimates of fiber sizes.
pub fn typed_failure_bound(pattern: &Pattern, t: &NType, n: usize, rate: &RateVector) -> Result<TypedBound> {
    let counts = restriction_counts(pattern, n, t)?;
    let targets = target_sizes(rate, n)?;
    let r = rate.as_slice();
    let labeled = NType::new(pattern.triples().iter().map(|x| x.to_vec()).collect(), counts)?;
    let full = labeled.type_class_size();
    let ti = labeled.marginal(&[0])?.type_class_size();
    let tij = labeled.marginal(&[0, 1])?.type_class_size();
    let fiber_sizes = [big_to_f64(&ti), big_to_f64(&(&tij / &ti)), big_to_f64(&(&full / &tij))];
    let per_cell_exact = (0..3).map(|a| miss(1.0 / targets[a] as f64, fiber_sizes[a])).sum::<f64>();
    let cells = targets.iter().map(|&x| x as f64).product::<f64>();

    let p = labeled.to_distribution()?;
    let h_i = p.marginal_entropy(&[0])?;
    let h_ij = p.marginal_entropy(&[0, 1])?;
    let h = p.entropy();
    let dims = pattern.dims();
    let nf = n as f64;
    let poly = |m: usize| (nf + 1.0).powf(-(m as f64));
    let estimates = [
        (h_i * nf).exp2() * poly(dims[0]),
        ((h_ij - h_i) * nf).exp2() * poly(dims[0] * dims[1]),
        ((h - h_ij) * nf).exp2() * poly(dims[0] * dims[1] * dims[2]),
    ];
    let per_cell_entropy = (0..3).map(|a| (-(-r[a] * nf).exp2() * estimates[a]).exp()).sum::<f64>();
    let box_entropy = ((r[0] + r[1] + r[2]) * nf).exp2();
    Ok(TypedBound {
        targets,
        fiber_sizes,
        per_cell_exact,
        union_exact: cells * per_cell_exact,
        per_cell_entropy,
        union_entropy: box_entropy * per_cell_entropy,
    })
}

/// The n-type minimizing the exact union bound, with its bound.
pub fn best_typed_failure_bound(pattern: &Pattern, n: usize, rate: &RateVector) -> Result<(NType, TypedBound)> {
    let outcomes: Vec<Vec<usize>> = pattern.triples().iter().map(|x| x.to_vec()).collect();
    let types = enumerate_types_over(&outcomes, n as u64, DEFAULT_TYPE_CAP)?;
    let mut best: Option<(NType, TypedBound)> = None;
    for t in types {
        let b = typed_failure_bound(pattern, &t, n, rate)?;
        if best.as_ref().is_none_or(|(_, cur)| b.union_exact < cur.union_exact) {
            best = Some((t, b));
        }
    }
    best.ok_or_else(|| Error::Invalid("no types for n = 0".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn rate(r: [f64; 3]) -> RateVector {
        RateVector::new(r.to_vec()).unwrap()
    }

    #[test]
    fn zero_rate_always_succeeds() {
        let r = simulate(&fixtures::lambda_ex(), &SimConfig::new(3, rate([0.0; 3]), 20)).unwrap();
        assert_eq!(r.successes, 20);
        assert_eq!(r.box_size, 1);
    }

    #[test]
    fn single_triple_never_covers_a_larger_box() {
        let p = Pattern::new([1, 1, 1], [[0, 0, 0]]).unwrap();
        let r = simulate(&p, &SimConfig::new(2, rate([0.5, 0.0, 0.0]), 30)).unwrap();
        assert_eq!(r.targets, [2, 1, 1]);
        assert_eq!(r.successes, 0);
        assert!(r.missing.iter().all(|&m| m == 1));
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = SimConfig::new(3, rate([0.34, 0.34, 0.34]), 50);
        let a = simulate(&fixtures::lambda_ex(), &cfg).unwrap();
        let b = simulate(&fixtures::lambda_ex(), &cfg).unwrap();
        assert_eq!(a.missing, b.missing);
    }

    #[test]
    fn domain_enumeration() {
        let ex = fixtures::lambda_ex();
        assert_eq!(domain(&ex, 3, None).unwrap().len(), 216);
        let mut counts = vec![0u64; 6];
        counts[0] = 2;
        counts[3] = 1;
        assert_eq!(domain(&ex, 3, Some(&counts)).unwrap().len(), 3);
        assert!(matches!(domain(&ex, 10, None), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn type_restriction_never_helps() {
        let ex = fixtures::lambda_ex();
        let mut cfg = SimConfig::new(4, rate([0.25; 3]), 100);
        let full = simulate(&ex, &cfg).unwrap();
        let outcomes: Vec<Vec<usize>> = ex.triples().iter().map(|t| t.to_vec()).collect();
        cfg.type_class = Some(NType::new(outcomes, vec![1, 1, 1, 1, 0, 0]).unwrap());
        let typed = simulate(&ex, &cfg).unwrap();
        // Same seed: identical maps, and the typed image is a subset.
        for (f, t) in full.missing.iter().zip(&typed.missing) {
            assert!(f <= t);
        }
    }

    #[test]
    fn single_shot_examples() {
        assert_eq!(single_shot_bound(4, 2, 2, 1.0, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(single_shot_bound(4, 2, 2, 0.0, 0.0, 0.0).unwrap(), 3.0);
        assert!((single_shot_bound(4, 2, 2, 0.5, 0.5, 0.5).unwrap() - 0.5625).abs() < 1e-15);
        assert!(single_shot_bound(0, 1, 1, 0.5, 0.5, 0.5).is_err());
        assert!(single_shot_bound(1, 1, 1, 1.5, 0.5, 0.5).is_err());
    }

    #[test]
    fn typed_bound_degenerate_cases() {
        let ex = fixtures::lambda_ex();
        let outcomes: Vec<Vec<usize>> = ex.triples().iter().map(|t| t.to_vec()).collect();
        let point = NType::new(outcomes.clone(), vec![1, 0, 0, 0, 0, 0]).unwrap();
        let b = typed_failure_bound(&ex, &point, 1, &rate([0.0; 3])).unwrap();
        assert_eq!(b.fiber_sizes, [1.0, 1.0, 1.0]);
        // α = 1: every cell is hit.
        assert_eq!(b.per_cell_exact, 0.0);
        assert_eq!(b.union_exact, b.per_cell_exact);
        let b = typed_failure_bound(&ex, &point, 1, &rate([1.0, 0.0, 0.0])).unwrap();
        assert_eq!(b.per_cell_exact, 0.5);
        assert_eq!(b.union_exact, 1.0);
    }

    #[test]
    fn typed_bound_for_balanced_type() {
        let ex = fixtures::lambda_ex();
        let (t, b) = best_typed_failure_bound(&ex, 4, &rate([0.25; 3])).unwrap();
        assert_eq!(t.n(), 4);
        assert!(b.per_cell_exact > 0.0 && b.per_cell_exact < 1.0, "{b:?}");
        // Fiber sizes multiply to at most 4! here, so the union bound is vacuous.
        assert!(b.union_exact >= 1.0);
        assert_eq!(b.union_exact, 8.0 * b.per_cell_exact);
    }
}
