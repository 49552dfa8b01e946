//! Upper bounds on matrix multiplication exponents from partial patterns.
//!
//! Every bound takes caller-supplied rank bounds (`L`, `R`) as given; nothing
//! here computes ranks. Logarithms are base 2. Reports echo their inputs and
//! attach the certificates they rely on, so they can be re-checked.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::capacity::{feasibility_slack, membership, min_slack, KPattern, MembershipResult, RateVector, SolverConfig};
use crate::info::{entropy_bits, Distribution};
use crate::pattern::Pattern;
use crate::{Error, Result};

/// Bisection stops when the bracket is narrower than this.
pub const BISECTION_TOL: f64 = 1e-9;
/// Default stopping threshold for iterative scaling (max ℓ¹ marginal deviation).
pub const SCALING_TOL: f64 = 1e-9;
pub const SCALING_MAX_SWEEPS: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub formula: String,
    pub value: f64,
    pub inputs: Map<String, Value>,
    pub artifacts: Map<String, Value>,
    /// For square bounds on the support-rank exponent: the implied bound
    /// `2 + 3/2 (value - 2)` on the ordinary exponent.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub omega_bound: Option<f64>,
    #[serde(default)]
    pub degenerate: bool,
}

impl BoundReport {
    fn new(formula: &str, value: f64) -> Self {
        BoundReport {
            formula: formula.to_string(),
            value,
            inputs: Map::new(),
            artifacts: Map::new(),
            omega_bound: None,
            degenerate: false,
        }
    }

    fn input(mut self, key: &str, v: impl Serialize) -> Self {
        self.inputs.insert(key.into(), serde_json::to_value(v).expect("serializable input"));
        self
    }

    fn artifact(mut self, key: &str, v: impl Serialize) -> Self {
        self.artifacts.insert(key.into(), serde_json::to_value(v).expect("serializable artifact"));
        self
    }

    fn square(mut self) -> Self {
        if self.value.is_finite() {
            self.omega_bound = Some(omega_from_support_exponent(self.value));
        }
        self
    }
}

/// `ω ≤ 2 + 3/2 (ω_s - 2)`.
pub fn omega_from_support_exponent(omega_s: f64) -> f64 {
    2.0 + 1.5 * (omega_s - 2.0)
}

/// `ω_s ≤ 3 log L / log |Λ|` for a support-rank bound `L` of the pattern tensor.
pub fn omega_s_pattern_bound(pattern: &Pattern, rank: u64) -> Result<BoundReport> {
    if pattern.len() <= 1 {
        return Err(Error::Invalid("the pattern must have at least 2 elements".into()));
    }
    if rank == 0 {
        return Err(Error::Invalid("rank bound must be at least 1".into()));
    }
    let value = 3.0 * (rank as f64).log2() / (pattern.len() as f64).log2();
    Ok(BoundReport::new("omega_s <= 3 log L / log |pattern|", value)
        .input("pattern_size", pattern.len())
        .input("rank", rank)
        .square())
}

/// `ω_s(r) ≤ log L` for a rate vector `r` certified to lie in the capacity
/// region; refuses when membership does not accept.
pub fn rate_specific_bound(pattern: &Pattern, rank: u64, rate: &RateVector, cfg: &SolverConfig) -> Result<BoundReport> {
    if rank == 0 {
        return Err(Error::Invalid("rank bound must be at least 1".into()));
    }
    let cert = RateCertificate::certify(pattern, rate, cfg)?;
    Ok(BoundReport::new("omega_s(a,b,c) <= log L", (rank as f64).log2())
        .input("pattern_size", pattern.len())
        .input("rank", rank)
        .input("rate", rate)
        .artifact("certificate", &cert))
}

/// The largest `ω` with `Σ sizes_i^{ω/3} ≤ R`, found by bisection.
///
/// Infinite when `R` is below the number of terms; when every size is 1 the
/// inequality does not involve `ω` and the report is flagged degenerate with
/// value 0.
pub fn sum_inequality_omega(sizes: &[u64], rank: f64) -> Result<BoundReport> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::Invalid("sizes must be a nonempty list of positive integers".into()));
    }
    if !(rank > 0.0) || !rank.is_finite() {
        return Err(Error::Invalid("rank bound must be positive".into()));
    }
    let lhs = |w: f64| sizes.iter().map(|&s| (s as f64).powf(w / 3.0)).sum::<f64>();
    let base = BoundReport::new("sum_i |pattern_i|^(omega_s/3) <= R", f64::INFINITY)
        .input("sizes", sizes)
        .input("rank", rank);
    if (sizes.len() as f64) > rank {
        return Ok(base.artifact("infeasible", "fewer rank than terms"));
    }
    if sizes.iter().all(|&s| s == 1) {
        let mut r = base;
        r.value = 0.0;
        r.degenerate = true;
        return Ok(r);
    }
    let mut lo = 0.0;
    let mut hi = 3.0 * rank.max(2.0).log2() + 3.0;
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if lhs(mid) <= rank {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let value = 0.5 * (lo + hi);
    let mut r = base.artifact("bracket", [lo, hi]).artifact("residual", lhs(value) - rank);
    r.value = value;
    Ok(r.square())
}

/// A rate vector together with a distribution witnessing its membership in
/// the capacity region of a pattern.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCertificate {
    pub pattern: Pattern,
    pub rate: RateVector,
    /// Distribution over 1-based pattern triples.
    pub witness: Distribution,
    pub min_slack: f64,
}

impl RateCertificate {
    /// Runs the membership solver and keeps the accepting witness.
    pub fn certify(pattern: &Pattern, rate: &RateVector, cfg: &SolverConfig) -> Result<Self> {
        let kp = KPattern::try_from(pattern)?;
        match membership(&kp, rate, cfg)? {
            MembershipResult::Accept { witness, min_slack, .. } => {
                Ok(RateCertificate { pattern: pattern.clone(), rate: rate.clone(), witness, min_slack })
            }
            other => Err(Error::Certificate(format!(
                "rate {:?} is not certified: membership returned {:?}",
                rate.as_slice(),
                other.verdict()
            ))),
        }
    }

    /// Re-evaluates the witness slacks; every one must be at least `-margin`.
    pub fn check(&self, margin: f64) -> Result<()> {
        let kp = KPattern::try_from(&self.pattern)?;
        let s = min_slack(&feasibility_slack(&kp, &self.witness, &self.rate)?);
        if s < -margin {
            return Err(Error::Certificate(format!("witness slack {s} is below -{margin}")));
        }
        Ok(())
    }
}

fn mix_rates(weights: &[f64], certs: &[RateCertificate]) -> Result<Vec<f64>> {
    let k = certs.first().map_or(3, |c| c.rate.len());
    let mut mixed = vec![0.0; k];
    for (w, c) in weights.iter().zip(certs) {
        if c.rate.len() != k {
            return Err(Error::DimensionMismatch("component rates differ in length".into()));
        }
        for (m, r) in mixed.iter_mut().zip(c.rate.as_slice()) {
            *m += w * r;
        }
    }
    Ok(mixed)
}

/// `ω_s(Σ Q(i) r_i) ≤ log R - H(Q)` for a direct sum of pattern tensors with
/// certified component rates `r_i`.
pub fn sum_inequality_rate_bound(q: &[f64], rank: f64, components: &[RateCertificate], margin: f64) -> Result<BoundReport> {
    if q.len() != components.len() || q.is_empty() {
        return Err(Error::Certificate(format!("{} weights but {} component certificates", q.len(), components.len())));
    }
    let outcomes = (0..q.len()).map(|i| vec![i]).collect();
    let dist = Distribution::new(outcomes, q.to_vec())?;
    if !(rank > 0.0) {
        return Err(Error::Invalid("rank bound must be positive".into()));
    }
    for c in components {
        c.check(margin)?;
    }
    let mixed = mix_rates(q, components)?;
    let value = rank.log2() - dist.entropy();
    Ok(BoundReport::new("omega_s(sum_i Q(i) r_i) <= log R - H(Q)", value)
        .input("q", q)
        .input("rank", rank)
        .input("sizes", components.iter().map(|c| c.pattern.len()).collect::<Vec<_>>())
        .artifact("mixed_rate", mixed)
        .artifact("entropy_q", dist.entropy())
        .artifact("certificates", components))
}

/// Integer labels on the three axes witnessing that a triple set is tight.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TightWitness {
    pub u: Vec<i64>,
    pub v: Vec<i64>,
    pub w: Vec<i64>,
}

fn injective(x: &[i64]) -> bool {
    let mut s = x.to_vec();
    s.sort_unstable();
    s.windows(2).all(|w| w[0] != w[1])
}

/// True iff the labels have the axis sizes of `support`, are injective, and
/// `u(i) + v(j) + w(k) = 0` on every triple.
pub fn tight_witness_verify(support: &Pattern, witness: &TightWitness) -> bool {
    let d = support.dims();
    let labels = [&witness.u, &witness.v, &witness.w];
    if (0..3).any(|a| labels[a].len() != d[a] || !injective(labels[a])) {
        return false;
    }
    support.triples().iter().all(|t| witness.u[t[0]] + witness.v[t[1]] + witness.w[t[2]] == 0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxEntropy {
    /// Distribution over the 0-based support triples.
    pub distribution: Distribution,
    pub entropy: f64,
    pub sweeps: usize,
    /// Largest ℓ¹ deviation of a marginal from its target.
    pub deviation: f64,
    pub converged: bool,
}

fn check_marginal(target: &[f64], size: usize) -> Result<()> {
    if target.len() != size {
        return Err(Error::DimensionMismatch(format!("marginal has {} entries, axis has {size}", target.len())));
    }
    if target.iter().any(|p| !p.is_finite() || *p < 0.0) || (target.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Distribution("marginal must be a probability vector".into()));
    }
    Ok(())
}

/// Whether some distribution on `support` has the given axis marginals.
fn marginals_feasible(support: &Pattern, targets: &[Vec<f64>; 3]) -> bool {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = support.triples().iter().map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    for (a, target) in targets.iter().enumerate() {
        for (i, &mass) in target.iter().enumerate() {
            let row: Vec<_> = support
                .triples()
                .iter()
                .zip(&vars)
                .filter(|(t, _)| t[a] == i)
                .map(|(_, &v)| (v, 1.0))
                .collect();
            if row.is_empty() {
                if mass > 0.0 {
                    return false;
                }
                continue;
            }
            lp.add_constraint(row.as_slice(), ComparisonOp::Eq, mass);
        }
    }
    lp.solve().is_ok()
}

fn axis_marginals(support: &Pattern, p: &[f64]) -> [Vec<f64>; 3] {
    let d = support.dims();
    let mut m = [vec![0.0; d[0]], vec![0.0; d[1]], vec![0.0; d[2]]];
    for (t, &x) in support.triples().iter().zip(p) {
        for a in 0..3 {
            m[a][t[a]] += x;
        }
    }
    m
}

fn deviation(support: &Pattern, p: &[f64], targets: &[Vec<f64>; 3]) -> f64 {
    let m = axis_marginals(support, p);
    (0..3)
        .map(|a| m[a].iter().zip(&targets[a]).map(|(x, y)| (x - y).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// The maximum-entropy distribution on `support` with the three prescribed
/// single-axis marginals, by iterative proportional scaling from uniform.
pub fn max_entropy_matching_marginals(support: &Pattern, targets: &[Vec<f64>; 3], tol: f64) -> Result<MaxEntropy> {
    if support.is_empty() {
        return Err(Error::Invalid("support is empty".into()));
    }
    let d = support.dims();
    for a in 0..3 {
        check_marginal(&targets[a], d[a])?;
    }
    if !marginals_feasible(support, targets) {
        return Err(Error::InfeasibleMarginals);
    }
    let mut p: Vec<f64> = support
        .triples()
        .iter()
        .map(|t| if (0..3).all(|a| targets[a][t[a]] > 0.0) { 1.0 } else { 0.0 })
        .collect();
    let mut dev = deviation(support, &p, targets);
    let mut sweeps = 0;
    while dev >= tol && sweeps < SCALING_MAX_SWEEPS {
        for a in 0..3 {
            let m = axis_marginals(support, &p);
            for (x, t) in p.iter_mut().zip(support.triples()) {
                if m[a][t[a]] > 0.0 {
                    *x *= targets[a][t[a]] / m[a][t[a]];
                }
            }
        }
        sweeps += 1;
        dev = deviation(support, &p, targets);
    }
    let outcomes = support.triples().iter().map(|t| t.to_vec()).collect();
    let distribution = Distribution::from_weights(outcomes, &p)?;
    Ok(MaxEntropy { entropy: entropy_bits(distribution.probs()), distribution, sweeps, deviation: dev, converged: dev < tol })
}

/// Structured input of the laser-method bound: a tight outer support whose
/// blocks are pattern tensors with certified rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaserInput {
    /// Outer support (0-based block coordinates).
    pub support: Pattern,
    /// Weights aligned with the support triples.
    pub q: Vec<f64>,
    /// Certified block rates aligned with the support triples; each carries
    /// its block pattern.
    pub blocks: Vec<RateCertificate>,
    /// Asymptotic rank bound of the whole tensor.
    pub rank: f64,
    pub witness: TightWitness,
}

/// `ω_s(a,b,c) ≤ log R - min_A H(Q_A) - H(Q) + max_P H(P)` at the mixed rate,
/// together with the square form obtained from `(a+b+c)/3 · ω_s ≤ ω_s(a,b,c)`.
pub fn laser_bound(input: &LaserInput, margin: f64) -> Result<BoundReport> {
    let support = &input.support;
    if input.q.len() != support.len() || input.blocks.len() != support.len() {
        return Err(Error::DimensionMismatch(format!(
            "support has {} triples, got {} weights and {} blocks",
            support.len(),
            input.q.len(),
            input.blocks.len()
        )));
    }
    if !tight_witness_verify(support, &input.witness) {
        return Err(Error::Certificate("tightness witness does not verify on the support".into()));
    }
    if !(input.rank > 0.0) {
        return Err(Error::Invalid("rank bound must be positive".into()));
    }
    for (i, b) in input.blocks.iter().enumerate() {
        b.check(margin).map_err(|e| Error::Certificate(format!("block {i}: {e}")))?;
    }
    let outcomes: Vec<Vec<usize>> = support.triples().iter().map(|t| t.to_vec()).collect();
    let q = Distribution::new(outcomes, input.q.clone())?;
    let targets = axis_marginals(support, q.probs());
    let marginal_entropies: Vec<f64> = targets.iter().map(|m| entropy_bits(m)).collect();
    let min_marginal = marginal_entropies.iter().copied().fold(f64::INFINITY, f64::min);
    let maxent = max_entropy_matching_marginals(support, &targets, SCALING_TOL)?;
    let value = input.rank.log2() - min_marginal - q.entropy() + maxent.entropy;
    let mixed = mix_rates(q.probs(), &input.blocks)?;
    let log_sizes: f64 = q.probs().iter().zip(&input.blocks).map(|(w, b)| w * (b.pattern.len() as f64).log2()).sum();
    let square = if log_sizes > 0.0 { Some(3.0 * value / log_sizes) } else { None };
    Ok(BoundReport::new("omega_s(a,b,c) <= log R - min H(Q_A) - H(Q) + max H(P)", value)
        .input("support", support)
        .input("q", &input.q)
        .input("rank", input.rank)
        .input("witness", &input.witness)
        .artifact("mixed_rate", mixed)
        .artifact("marginal_entropies", marginal_entropies)
        .artifact("entropy_q", q.entropy())
        .artifact("max_entropy", maxent.entropy)
        .artifact("max_entropy_distribution", &maxent.distribution)
        .artifact("omega_s_square", square)
        .artifact("block_certificates", &input.blocks))
}

/// Square form of a laser report, if present.
pub fn laser_square_bound(report: &BoundReport) -> Option<f64> {
    report.artifacts.get("omega_s_square").and_then(Value::as_f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn pattern_bound_examples() {
        let r = omega_s_pattern_bound(&fixtures::lambda_ex(), 5).unwrap();
        close(r.value, 3.0 * 5f64.ln() / 6f64.ln(), 1e-12);
        close(r.value, 2.694733, 1e-6);
        let full = Pattern::full(2, 2, 2).unwrap();
        close(omega_s_pattern_bound(&full, 7).unwrap().value, 7f64.log2(), 1e-12);
        close(omega_s_pattern_bound(&full, 8).unwrap().value, 3.0, 1e-12);
        let single = Pattern::new([1, 1, 1], [[0, 0, 0]]).unwrap();
        assert!(omega_s_pattern_bound(&single, 1).is_err());
        assert!(omega_s_pattern_bound(&full, 0).is_err());
    }

    #[test]
    fn pattern_bound_is_monotone() {
        let ex = fixtures::lambda_ex();
        let full = Pattern::full(2, 2, 2).unwrap();
        for l in 1..20 {
            assert!(omega_s_pattern_bound(&ex, l).unwrap().value < omega_s_pattern_bound(&ex, l + 1).unwrap().value);
            assert!(omega_s_pattern_bound(&full, l).unwrap().value < omega_s_pattern_bound(&ex, l).unwrap().value + 1e-15);
        }
    }

    #[test]
    fn sum_inequality_examples() {
        let r = sum_inequality_omega(&[8], 7.0).unwrap();
        close(r.value, 7f64.log2(), 1e-8);
        close(sum_inequality_omega(&[6], 5.0).unwrap().value, 2.694733, 1e-6);
        let d = sum_inequality_omega(&[1, 1], 2.0).unwrap();
        assert!(d.degenerate);
        assert_eq!(d.value, 0.0);
        assert!(sum_inequality_omega(&[4, 4, 4], 2.0).unwrap().value.is_infinite());
        for (sizes, rank) in [(vec![8u64, 6, 1], 20.0), (vec![27], 23.0), (vec![2, 3], 4.5)] {
            let r = sum_inequality_omega(&sizes, rank).unwrap();
            let lhs: f64 = sizes.iter().map(|&s| (s as f64).powf(r.value / 3.0)).sum();
            assert!((lhs - rank).abs() < 1e-6);
        }
    }

    #[test]
    fn single_term_sum_matches_pattern_bound() {
        for (s, r) in [(6u64, 5u64), (8, 7), (12, 10), (27, 23)] {
            let a = sum_inequality_omega(&[s], r as f64).unwrap().value;
            let b = 3.0 * (r as f64).log2() / (s as f64).log2();
            close(a, b, 1e-8);
        }
    }

    #[test]
    fn tight_witness_examples() {
        let one = Pattern::new([1, 1, 1], [[0, 0, 0]]).unwrap();
        assert!(tight_witness_verify(&one, &TightWitness { u: vec![0], v: vec![0], w: vec![0] }));
        let diag = Pattern::new([2, 2, 2], [[0, 0, 0], [1, 1, 1]]).unwrap();
        assert!(tight_witness_verify(&diag, &TightWitness { u: vec![0, 1], v: vec![0, 1], w: vec![0, -2] }));
        assert!(!tight_witness_verify(&diag, &TightWitness { u: vec![0, 0], v: vec![0, 1], w: vec![0, -1] }));
        let full = Pattern::full(2, 2, 2).unwrap();
        let range: Vec<i64> = (-4..=4).collect();
        for &u0 in &range {
            for &u1 in &range {
                for &v0 in &range {
                    for &v1 in &range {
                        let w = TightWitness { u: vec![u0, u1], v: vec![v0, v1], w: vec![-u0 - v0, -u1 - v1] };
                        assert!(!tight_witness_verify(&full, &w));
                    }
                }
            }
        }
    }

    #[test]
    fn max_entropy_trivial_cases() {
        let diag = Pattern::new([3, 3, 3], [[0, 0, 0], [1, 1, 1], [2, 2, 2]]).unwrap();
        let q = vec![0.5, 0.3, 0.2];
        let r = max_entropy_matching_marginals(&diag, &[q.clone(), q.clone(), q.clone()], 1e-9).unwrap();
        close(r.entropy, entropy_bits(&q), 1e-9);
        let full = Pattern::full(2, 3, 2).unwrap();
        let t = [vec![0.25, 0.75], vec![0.2, 0.3, 0.5], vec![0.5, 0.5]];
        let r = max_entropy_matching_marginals(&full, &t, 1e-9).unwrap();
        assert!(r.converged);
        close(r.entropy, t.iter().map(|m| entropy_bits(m)).sum(), 1e-8);
    }

    #[test]
    fn max_entropy_against_grid() {
        let ex = fixtures::lambda_ex();
        let u = vec![0.5, 0.5];
        let r = max_entropy_matching_marginals(&ex, &[u.clone(), u.clone(), u.clone()], 1e-9).unwrap();
        assert!(r.deviation < 1e-9);
        close(r.entropy, 6f64.log2(), 1e-9);
        // Skewed targets: compare with every feasible point of a 1/24 grid.
        let t = [vec![0.25, 0.75], vec![0.5, 0.5], vec![0.625, 0.375]];
        let r = max_entropy_matching_marginals(&ex, &t, 1e-10).unwrap();
        assert!(r.converged);
        let mut best = f64::NEG_INFINITY;
        let steps = 24usize;
        let mut c = [0usize; 6];
        fn rec(c: &mut [usize; 6], pos: usize, left: usize, f: &mut impl FnMut(&[usize; 6])) {
            if pos == 5 {
                c[5] = left;
                f(c);
                return;
            }
            for x in 0..=left {
                c[pos] = x;
                rec(c, pos + 1, left - x, f);
            }
        }
        rec(&mut c, 0, steps, &mut |c| {
            let p: Vec<f64> = c.iter().map(|&x| x as f64 / steps as f64).collect();
            if deviation(&ex, &p, &t) < 1e-12 {
                best = best.max(entropy_bits(&p));
            }
        });
        assert!(best.is_finite());
        assert!(r.entropy >= best - 1e-3);
    }

    #[test]
    fn infeasible_marginals() {
        let diag = Pattern::new([2, 2, 2], [[0, 0, 0], [1, 1, 1]]).unwrap();
        let t = [vec![0.5, 0.5], vec![0.2, 0.8], vec![0.5, 0.5]];
        assert!(matches!(max_entropy_matching_marginals(&diag, &t, 1e-9), Err(Error::InfeasibleMarginals)));
        let bad = [vec![0.5, 0.6], vec![0.5, 0.5], vec![0.5, 0.5]];
        assert!(max_entropy_matching_marginals(&diag, &bad, 1e-9).is_err());
    }

    fn quick() -> SolverConfig {
        SolverConfig { multistarts: 4, grid_resolution: 10, ..Default::default() }
    }

    #[test]
    fn rate_specific_examples() {
        let ex = fixtures::lambda_ex();
        let r = rate_specific_bound(&ex, 5, &RateVector::zero(3), &quick()).unwrap();
        close(r.value, 5f64.log2(), 1e-12);
        let vertex = RateVector::new(vec![1.0, 0.918296, 0.666667]).unwrap();
        close(rate_specific_bound(&ex, 5, &vertex, &quick()).unwrap().value, 2.321928, 1e-6);
        let refused = rate_specific_bound(&fixtures::lambda_bcrl(), 5, &RateVector::new(vec![1.0, 1.0, 0.5]).unwrap(), &quick());
        assert!(matches!(refused, Err(Error::Certificate(_))));
    }

    #[test]
    fn sum_rate_bound_examples() {
        let ex = fixtures::lambda_ex();
        let cert = RateCertificate::certify(&ex, &RateVector::new(vec![1.0, 1.0, 0.5]).unwrap(), &quick()).unwrap();
        let one = sum_inequality_rate_bound(&[1.0], 5.0, std::slice::from_ref(&cert), 1e-4).unwrap();
        close(one.value, 5f64.log2(), 1e-12);
        let two = sum_inequality_rate_bound(&[0.5, 0.5], 10.0, &[cert.clone(), cert.clone()], 1e-4).unwrap();
        close(two.value, 10f64.log2() - 1.0, 1e-12);
        close(two.value, 2.321928, 1e-6);
        assert!(sum_inequality_rate_bound(&[0.5, 0.5], 10.0, &[cert.clone()], 1e-4).is_err());
        let mut forged = cert;
        forged.rate = RateVector::new(vec![1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(sum_inequality_rate_bound(&[1.0], 5.0, &[forged], 1e-4), Err(Error::Certificate(_))));
    }

    #[test]
    fn laser_single_and_diagonal() {
        let ex = fixtures::lambda_ex();
        let cert = RateCertificate::certify(&ex, &RateVector::zero(3), &quick()).unwrap();
        let single = LaserInput {
            support: Pattern::new([1, 1, 1], [[0, 0, 0]]).unwrap(),
            q: vec![1.0],
            blocks: vec![cert.clone()],
            rank: 7.0,
            witness: TightWitness { u: vec![0], v: vec![0], w: vec![0] },
        };
        close(laser_bound(&single, 1e-4).unwrap().value, 7f64.log2(), 1e-12);
        let d = 4;
        let diag = LaserInput {
            support: Pattern::new([d, d, d], (0..d).map(|i| [i, i, i])).unwrap(),
            q: vec![0.25; d],
            blocks: vec![cert; d],
            rank: 40.0,
            witness: TightWitness { u: (0..d as i64).collect(), v: (0..d as i64).collect(), w: (0..d as i64).map(|i| -2 * i).collect() },
        };
        close(laser_bound(&diag, 1e-4).unwrap().value, 40f64.log2() - 2.0, 1e-9);
    }

    #[test]
    fn laser_three_blocks_term_by_term() {
        let ex = fixtures::lambda_ex();
        let rate = RateVector::new(vec![1.0, 0.918296, 0.666667]).unwrap();
        let cert = RateCertificate::certify(&ex, &rate, &quick()).unwrap();
        let input = LaserInput {
            support: Pattern::new([2, 2, 2], [[0, 0, 1], [0, 1, 0], [1, 0, 0]]).unwrap(),
            q: vec![1.0 / 3.0; 3],
            blocks: vec![cert; 3],
            rank: 30.0,
            witness: TightWitness { u: vec![0, 1], v: vec![0, 1], w: vec![-1, 0] },
        };
        let r = laser_bound(&input, 1e-4).unwrap();
        // Marginals are (2/3, 1/3) on each axis; uniform Q is the only
        // distribution on three points with those marginals.
        let h_axis = entropy_bits(&[2.0 / 3.0, 1.0 / 3.0]);
        let h_q = 3f64.log2();
        close(r.value, 30f64.log2() - h_axis - h_q + h_q, 1e-9);
        close(laser_square_bound(&r).unwrap(), 3.0 * r.value / 6f64.log2(), 1e-9);
        let mut broken = input.clone();
        broken.witness.w = vec![0, 0];
        assert!(matches!(laser_bound(&broken, 1e-4), Err(Error::Certificate(_))));
    }

    #[test]
    fn omega_conversion() {
        close(omega_from_support_exponent(2.0), 2.0, 0.0);
        close(omega_from_support_exponent(7f64.log2()), 2.0 + 1.5 * (7f64.log2() - 2.0), 1e-15);
        assert!(sum_inequality_omega(&[8], 7.0).unwrap().omega_bound.is_some());
    }
}
