//! The capacity region of a pattern.
//!
//! For `Λ ⊆ I_1×…×I_k`, a rate vector `r` lies in the region iff some
//! distribution `P` on `Λ` satisfies `Σ_{j∈S} r_j ≤ H(S)_P` for every nonempty
//! axis set `S`. The region is convex, so membership is decided with two
//! certificates: a witness `P` (accept) or a direction `t ≥ 0` with
//! `t·r > h(t)`, where `h` is the support function (reject).
//!
//! Axis sets are bitmasks: bit `j` set means axis `j` is in the set.

mod solver;

use serde::{Deserialize, Serialize};

use crate::info::{Distribution, Outcome};
use crate::pattern::Pattern;
use crate::{Error, Result};

pub use solver::{membership, support_function, MembershipResult, SupportValue, Verdict};

/// Seed used when no seed is given.
pub const DEFAULT_SEED: u64 = 0x5eed_2024;

/// A nonempty set of `k`-tuples; the ground set for capacity computations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "KPatternJson", into = "KPatternJson")]
pub struct KPattern {
    arity: usize,
    tuples: Vec<Outcome>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KPatternJson {
    pub tuples: Vec<Outcome>,
}

impl TryFrom<KPatternJson> for KPattern {
    type Error = Error;

    fn try_from(json: KPatternJson) -> Result<Self> {
        KPattern::new(json.tuples)
    }
}

impl From<KPattern> for KPatternJson {
    fn from(p: KPattern) -> Self {
        KPatternJson { tuples: p.tuples }
    }
}

impl KPattern {
    pub fn new(mut tuples: Vec<Outcome>) -> Result<Self> {
        let arity = tuples.first().map(Vec::len).ok_or_else(|| Error::Invalid("pattern is empty".into()))?;
        if arity == 0 || arity > 16 {
            return Err(Error::Invalid(format!("unsupported number of factors {arity}")));
        }
        if tuples.iter().any(|t| t.len() != arity) {
            return Err(Error::Invalid("tuples have different lengths".into()));
        }
        tuples.sort();
        tuples.dedup();
        Ok(KPattern { arity, tuples })
    }

    /// Number of factors `k`.
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn tuples(&self) -> &[Outcome] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn uniform(&self) -> Distribution {
        Distribution::uniform(self.tuples.clone()).expect("nonempty pattern")
    }
}

impl TryFrom<&Pattern> for KPattern {
    type Error = Error;

    /// Labels are the 1-based indices used in the JSON format.
    fn try_from(p: &Pattern) -> Result<Self> {
        KPattern::new(p.triples().iter().map(|t| t.iter().map(|x| x + 1).collect()).collect())
    }
}

/// Nonnegative rates, in bits per symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RateVector(Vec<f64>);

impl RateVector {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if let Some(r) = rates.iter().find(|r| !r.is_finite() || **r < 0.0) {
            return Err(Error::Invalid(format!("rate {r} is not a nonnegative number")));
        }
        Ok(RateVector(rates))
    }

    pub fn zero(k: usize) -> Self {
        RateVector(vec![0.0; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    /// Sum of the rates over an axis set.
    pub fn sum_over(&self, mask: u32) -> f64 {
        self.0.iter().enumerate().filter(|(j, _)| mask >> j & 1 == 1).map(|(_, r)| r).sum()
    }
}

impl TryFrom<Vec<f64>> for RateVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        RateVector::new(v)
    }
}

impl From<RateVector> for Vec<f64> {
    fn from(r: RateVector) -> Self {
        r.0
    }
}

/// Axes contained in a bitmask.
pub fn axes_of(mask: u32) -> Vec<usize> {
    (0..32).filter(|j| mask >> j & 1 == 1).collect()
}

/// `"I"`, `"JK"`, `"IJK"` for up to three factors, `"{0,3}"` beyond.
pub fn axis_set_name(mask: u32, k: usize) -> String {
    if k <= 3 {
        axes_of(mask).iter().map(|&j| ['I', 'J', 'K'][j]).collect()
    } else {
        let parts: Vec<String> = axes_of(mask).iter().map(ToString::to_string).collect();
        format!("{{{}}}", parts.join(","))
    }
}

/// One entropy constraint `Σ_{j∈S} r_j ≤ H(S)_P` evaluated at a point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub axes: String,
    pub mask: u32,
    pub entropy: f64,
    pub rate_sum: f64,
    pub slack: f64,
}

fn check_distribution(pattern: &KPattern, p: &Distribution) -> Result<()> {
    if p.arity() != pattern.arity() {
        return Err(Error::DimensionMismatch(format!(
            "distribution has arity {}, pattern has {} factors",
            p.arity(),
            pattern.arity()
        )));
    }
    if let Some(o) = p.support().into_iter().find(|o| pattern.tuples.binary_search(o).is_err()) {
        return Err(Error::Invalid(format!("distribution puts mass on {o:?}, which is outside the pattern")));
    }
    Ok(())
}

fn check_rate(pattern: &KPattern, r: &RateVector) -> Result<()> {
    if r.len() != pattern.arity() {
        return Err(Error::DimensionMismatch(format!("rate has {} entries, pattern has {} factors", r.len(), pattern.arity())));
    }
    Ok(())
}

/// `H(S)_P` for every nonempty axis set, indexed by `mask - 1`.
pub fn marginal_entropies(p: &Distribution) -> Vec<f64> {
    let k = p.arity();
    (1u32..1 << k).map(|mask| p.marginal_entropy(&axes_of(mask)).expect("axes in range")).collect()
}

/// `H(S)_P - Σ_{j∈S} r_j` for all `2^k - 1` nonempty axis sets.
pub fn feasibility_slack(pattern: &KPattern, p: &Distribution, rate: &RateVector) -> Result<Vec<Slack>> {
    check_distribution(pattern, p)?;
    check_rate(pattern, rate)?;
    let k = pattern.arity();
    let entropies = marginal_entropies(p);
    Ok((1u32..1 << k)
        .map(|mask| {
            let entropy = entropies[mask as usize - 1];
            let rate_sum = rate.sum_over(mask);
            Slack { axes: axis_set_name(mask, k), mask, entropy, rate_sum, slack: entropy - rate_sum }
        })
        .collect())
}

pub fn min_slack(slacks: &[Slack]) -> f64 {
    slacks.iter().map(|s| s.slack).fold(f64::INFINITY, f64::min)
}

/// A chain-rule vertex `(H(σ1), H(σ2|σ1), …)` for an ordering `σ` of the axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub ordering: Vec<usize>,
    pub rate: RateVector,
}

/// All permutations of `0..k` in lexicographic order.
pub fn orderings(k: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for j in 0..k {
            if !prefix.contains(&j) {
                prefix.push(j);
                go(prefix, k, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::with_capacity(k), k, &mut out);
    out
}

fn vertex_from_entropies(entropies: &[f64], ordering: &[usize]) -> Vec<f64> {
    let mut rate = vec![0.0; ordering.len()];
    let mut prefix = 0u32;
    let mut prev = 0.0;
    for &axis in ordering {
        prefix |= 1 << axis;
        let h = entropies[prefix as usize - 1];
        rate[axis] = (h - prev).max(0.0);
        prev = h;
    }
    rate
}

/// The `k!` chain-rule vertices, one per ordering of the axes.
pub fn vertex_rates(pattern: &KPattern, p: &Distribution) -> Result<Vec<Vertex>> {
    check_distribution(pattern, p)?;
    let entropies = marginal_entropies(p);
    Ok(orderings(pattern.arity())
        .into_iter()
        .map(|ordering| {
            let rate = RateVector(vertex_from_entropies(&entropies, &ordering));
            Vertex { ordering, rate }
        })
        .collect())
}

/// Axis order sorting `t` decreasingly; ties keep the lower axis first.
pub fn decreasing_order(t: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..t.len()).collect();
    order.sort_by(|&a, &b| t[b].total_cmp(&t[a]));
    order
}

/// Weights `u_S` on the prefix sets of the decreasing order of `t`:
/// `u_{σ1..σm} = t_{σm} - t_{σ(m+1)}` with `t_{σ(k+1)} = 0`.
pub fn prefix_weights(t: &[f64]) -> Vec<(u32, f64)> {
    let order = decreasing_order(t);
    let mut prefix = 0u32;
    order
        .iter()
        .enumerate()
        .map(|(m, &axis)| {
            prefix |= 1 << axis;
            let next = order.get(m + 1).map_or(0.0, |&b| t[b]);
            (prefix, t[axis] - next)
        })
        .collect()
}

/// Result of [`dual_certificate_check`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DualCheck {
    pub ordering: Vec<usize>,
    /// Nonzero dual variables as `(axis set name, value)`.
    pub dual: Vec<(String, f64)>,
    pub dual_objective: f64,
    pub primal_value: f64,
    pub vertex: Vec<f64>,
    pub vertex_min_slack: f64,
    /// Largest violation of a dual constraint `Σ_{S∋j} u_S ≥ t_j` (0 if feasible).
    pub dual_violation: f64,
    pub passed: bool,
}

/// Checks LP duality at `P` for direction `t`: builds the prefix-set dual
/// solution for the decreasing order of `t`, verifies dual feasibility, and
/// compares the dual objective `Σ u_S H(S)_P` with `t·v`, where `v` is the
/// chain-rule vertex for the same order (itself checked to be feasible).
pub fn dual_certificate_check(pattern: &KPattern, t: &[f64], p: &Distribution, tol: f64) -> Result<DualCheck> {
    check_distribution(pattern, p)?;
    let k = pattern.arity();
    if t.len() != k || t.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::Invalid("direction must be a nonnegative vector with one entry per factor".into()));
    }
    let entropies = marginal_entropies(p);
    let weights = prefix_weights(t);
    let mut dual_violation: f64 = 0.0;
    for (j, tj) in t.iter().enumerate() {
        let covered: f64 = weights.iter().filter(|(mask, _)| mask >> j & 1 == 1).map(|(_, u)| u).sum();
        dual_violation = dual_violation.max(tj - covered);
    }
    if weights.iter().any(|(_, u)| *u < 0.0) {
        dual_violation = f64::INFINITY;
    }
    let dual_objective: f64 = weights.iter().map(|&(mask, u)| u * entropies[mask as usize - 1]).sum();
    let ordering = decreasing_order(t);
    let vertex = vertex_from_entropies(&entropies, &ordering);
    let primal_value: f64 = t.iter().zip(&vertex).map(|(a, b)| a * b).sum();
    let slacks = feasibility_slack(pattern, p, &RateVector(vertex.clone()))?;
    let vertex_min_slack = min_slack(&slacks);
    let passed = dual_violation <= tol && (dual_objective - primal_value).abs() <= tol && vertex_min_slack >= -tol;
    Ok(DualCheck {
        ordering,
        dual: weights.iter().filter(|(_, u)| *u != 0.0).map(|&(mask, u)| (axis_set_name(mask, k), u)).collect(),
        dual_objective,
        primal_value,
        vertex,
        vertex_min_slack,
        dual_violation,
        passed,
    })
}

/// The largest possible sum rate, `log |Λ|`, attained at the uniform distribution.
pub fn sum_rate_max(pattern: &KPattern) -> (f64, Distribution) {
    ((pattern.len() as f64).log2(), pattern.uniform())
}

/// Parameters for the projected-gradient solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Optimization tolerance (duality gap for the support function).
    pub tolerance: f64,
    /// Margin applied to verdicts: accept when the best minimum slack is at
    /// least `-verdict_margin`, reject when `t·r - h(t) > verdict_margin`.
    pub verdict_margin: f64,
    pub multistarts: usize,
    pub max_iterations: usize,
    /// First trial step of the backtracking line search.
    pub initial_step: f64,
    /// Sufficient-increase constant of the backtracking line search.
    pub armijo: f64,
    /// Points per edge of the direction grid on the unit simplex.
    pub grid_resolution: usize,
    pub refine_rounds: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-6,
            verdict_margin: 1e-4,
            multistarts: 32,
            max_iterations: 5000,
            initial_step: 1.0,
            armijo: 1e-4,
            grid_resolution: 25,
            refine_rounds: 6,
            seed: DEFAULT_SEED,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || !(self.verdict_margin > 0.0) {
            return Err(Error::Invalid("tolerances must be positive".into()));
        }
        if self.multistarts == 0 || self.max_iterations == 0 || self.grid_resolution == 0 {
            return Err(Error::Invalid("multistarts, iterations and grid resolution must be at least 1".into()));
        }
        if !(self.initial_step > 0.0) || !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(Error::Invalid("step parameters out of range".into()));
        }
        Ok(())
    }
}
