//! Distributions over labeled finite sets, marginal entropies and n-types.
//!
//! Outcomes are tuples of labels (`Vec<usize>`), so a distribution over a
//! pattern `Λ` lives on `Λ` itself rather than on the full box. Marginals are
//! taken by selecting tuple coordinates.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::tensor::parse_rational;
use crate::{Error, Result};

pub type Outcome = Vec<usize>;

/// Tolerance on the total mass of a floating-point distribution.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Default cap on the number of types produced by [`enumerate_types`].
pub const DEFAULT_TYPE_CAP: usize = 1_000_000;

/// Shannon entropy in bits of a (sub)probability vector, with `0 log 0 = 0`.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    let h: f64 = probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum();
    h.max(0.0)
}

/// Binary entropy `h(p) = -p log p - (1-p) log(1-p)`.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_bits(&[p, 1.0 - p])
}

fn check_axes(arity: usize, axes: &[usize]) -> Result<()> {
    for (n, &a) in axes.iter().enumerate() {
        if a >= arity {
            return Err(Error::Axes(format!("axis {a} out of range for arity {arity}")));
        }
        if axes[..n].contains(&a) {
            return Err(Error::Axes(format!("axis {a} repeated")));
        }
    }
    Ok(())
}

fn check_outcomes(outcomes: &[Outcome]) -> Result<usize> {
    let arity = outcomes.first().map_or(0, Vec::len);
    if outcomes.iter().any(|o| o.len() != arity) {
        return Err(Error::Distribution("outcomes have different arities".into()));
    }
    let mut sorted: Vec<&Outcome> = outcomes.iter().collect();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Distribution("repeated outcome".into()));
    }
    Ok(arity)
}

/// Groups `outcomes` by their projection onto `axes`, summing `weight`.
fn project<W: Clone + std::ops::AddAssign>(
    outcomes: &[Outcome],
    weights: &[W],
    axes: &[usize],
) -> BTreeMap<Outcome, W> {
    let mut out: BTreeMap<Outcome, W> = BTreeMap::new();
    for (o, w) in outcomes.iter().zip(weights) {
        let key: Outcome = axes.iter().map(|&a| o[a]).collect();
        match out.get_mut(&key) {
            Some(acc) => *acc += w.clone(),
            None => {
                out.insert(key, w.clone());
            }
        }
    }
    out
}

/// A probability distribution on a finite set of labeled tuples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionJson", into = "DistributionJson")]
pub struct Distribution {
    outcomes: Vec<Outcome>,
    probs: Vec<f64>,
    exact: Option<Vec<BigRational>>,
}

impl Distribution {
    /// Probabilities must be nonnegative and sum to one within [`MASS_TOLERANCE`].
    pub fn new(outcomes: Vec<Outcome>, probs: Vec<f64>) -> Result<Self> {
        if outcomes.len() != probs.len() {
            return Err(Error::Distribution(format!("{} outcomes but {} probabilities", outcomes.len(), probs.len())));
        }
        check_outcomes(&outcomes)?;
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::Distribution(format!("probability {p} is not a nonnegative number")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Distribution(format!("probabilities sum to {total}")));
        }
        Ok(Distribution { outcomes, probs, exact: None })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(outcomes: Vec<Outcome>, weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Distribution("weights must have positive finite total".into()));
        }
        Distribution::new(outcomes, weights.iter().map(|w| w / total).collect())
    }

    /// Exact rational probabilities summing to exactly one.
    pub fn from_rationals(outcomes: Vec<Outcome>, probs: Vec<BigRational>) -> Result<Self> {
        if probs.iter().any(Signed::is_negative) {
            return Err(Error::Distribution("negative probability".into()));
        }
        let total = probs.iter().fold(BigRational::zero(), |acc, p| acc + p);
        if !total.is_one() {
            return Err(Error::Distribution(format!("probabilities sum to {total}")));
        }
        let floats: Vec<f64> = probs.iter().map(|p| p.to_f64().unwrap_or(f64::NAN)).collect();
        let total_f: f64 = floats.iter().sum();
        let floats = floats.into_iter().map(|p| p / total_f).collect();
        let mut d = Distribution::new(outcomes, floats)?;
        d.exact = Some(probs);
        Ok(d)
    }

    pub fn uniform(outcomes: Vec<Outcome>) -> Result<Self> {
        let n = outcomes.len();
        if n == 0 {
            return Err(Error::Distribution("uniform distribution on an empty set".into()));
        }
        let p = vec![BigRational::new(BigUint::one().into(), BigUint::from(n).into()); n];
        Distribution::from_rationals(outcomes, p)
    }

    pub fn point_mass(outcomes: Vec<Outcome>, at: usize) -> Result<Self> {
        let p = (0..outcomes.len()).map(|i| if i == at { BigRational::one() } else { BigRational::zero() }).collect();
        Distribution::from_rationals(outcomes, p)
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn exact(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Tuple length of the outcomes.
    pub fn arity(&self) -> usize {
        self.outcomes.first().map_or(0, Vec::len)
    }

    pub fn prob(&self, outcome: &[usize]) -> f64 {
        self.outcomes.iter().position(|o| o == outcome).map_or(0.0, |i| self.probs[i])
    }

    /// Outcomes with nonzero probability.
    pub fn support(&self) -> Vec<&Outcome> {
        self.outcomes.iter().zip(&self.probs).filter(|(_, p)| **p > 0.0).map(|(o, _)| o).collect()
    }

    /// Entropy in bits.
    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.probs)
    }

    /// Pushforward onto the coordinates `axes`, in the given order.
    pub fn marginal(&self, axes: &[usize]) -> Result<Distribution> {
        check_axes(self.arity(), axes)?;
        if let Some(exact) = &self.exact {
            let m = project(&self.outcomes, exact, axes);
            let (outcomes, probs) = m.into_iter().unzip();
            return Distribution::from_rationals(outcomes, probs);
        }
        let m = project(&self.outcomes, &self.probs, axes);
        let (outcomes, probs): (Vec<_>, Vec<f64>) = m.into_iter().unzip();
        let total: f64 = probs.iter().sum();
        Distribution::new(outcomes, probs.iter().map(|p| p / total).collect())
    }

    /// `H(axes)_P`; the empty axis set has entropy zero.
    pub fn marginal_entropy(&self, axes: &[usize]) -> Result<f64> {
        check_axes(self.arity(), axes)?;
        let m = project(&self.outcomes, &self.probs, axes);
        Ok(entropy_bits(&m.into_values().collect::<Vec<_>>()))
    }

    /// `H(target | given) = H(target ∪ given) - H(given)`.
    pub fn conditional_entropy(&self, target: &[usize], given: &[usize]) -> Result<f64> {
        if let Some(a) = target.iter().find(|a| given.contains(a)) {
            return Err(Error::Axes(format!("axis {a} appears in both target and condition")));
        }
        let joint: Vec<usize> = given.iter().chain(target).copied().collect();
        Ok((self.marginal_entropy(&joint)? - self.marginal_entropy(given)?).max(0.0))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbValue {
    Exact(String),
    Float(f64),
}

/// Wire form: `{"support": [[...], ...], "probs": ["1/4", 0.25, ...]}`.
/// Exact rational strings are kept exact when every entry is one.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistributionJson {
    pub support: Vec<Outcome>,
    pub probs: Vec<ProbValue>,
}

impl TryFrom<DistributionJson> for Distribution {
    type Error = Error;

    fn try_from(json: DistributionJson) -> Result<Self> {
        let all_exact = json.probs.iter().all(|p| matches!(p, ProbValue::Exact(_)));
        if all_exact {
            let probs = json
                .probs
                .iter()
                .map(|p| match p {
                    ProbValue::Exact(s) => parse_rational(s),
                    ProbValue::Float(_) => unreachable!(),
                })
                .collect::<Result<Vec<_>>>()?;
            return Distribution::from_rationals(json.support, probs);
        }
        let probs = json
            .probs
            .iter()
            .map(|p| match p {
                ProbValue::Exact(s) => parse_rational(s).map(|r| r.to_f64().unwrap_or(f64::NAN)),
                ProbValue::Float(x) => Ok(*x),
            })
            .collect::<Result<Vec<_>>>()?;
        Distribution::new(json.support, probs)
    }
}

impl From<Distribution> for DistributionJson {
    fn from(d: Distribution) -> Self {
        let probs = match &d.exact {
            Some(exact) => exact.iter().map(|r| ProbValue::Exact(r.to_string())).collect(),
            None => d.probs.iter().map(|&p| ProbValue::Float(p)).collect(),
        };
        DistributionJson { support: d.outcomes, probs }
    }
}

/// An n-type: integer counts over a labeled ground set, summing to `n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NType {
    outcomes: Vec<Outcome>,
    counts: Vec<u64>,
}

impl NType {
    pub fn new(outcomes: Vec<Outcome>, counts: Vec<u64>) -> Result<Self> {
        if outcomes.len() != counts.len() {
            return Err(Error::Distribution(format!("{} outcomes but {} counts", outcomes.len(), counts.len())));
        }
        check_outcomes(&outcomes)?;
        Ok(NType { outcomes, counts })
    }

    /// A type over the unlabeled ground set `{0, …, m-1}`.
    pub fn unlabeled(counts: Vec<u64>) -> Self {
        let outcomes = (0..counts.len()).map(|i| vec![i]).collect();
        NType { outcomes, counts }
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// The type as a distribution (exact probabilities `count / n`).
    pub fn to_distribution(&self) -> Result<Distribution> {
        let n = self.n();
        if n == 0 {
            return Err(Error::Distribution("0-type has no distribution".into()));
        }
        let probs = self.counts.iter().map(|&c| BigRational::new(c.into(), n.into())).collect();
        Distribution::from_rationals(self.outcomes.clone(), probs)
    }

    pub fn marginal(&self, axes: &[usize]) -> Result<NType> {
        check_axes(self.outcomes.first().map_or(0, Vec::len), axes)?;
        let m = project(&self.outcomes, &self.counts, axes);
        let (outcomes, counts) = m.into_iter().unzip();
        Ok(NType { outcomes, counts })
    }

    /// `|T^n_P| = n! / ∏ (nP(x))!`.
    pub fn type_class_size(&self) -> BigUint {
        multinomial(&self.counts)
    }
}

/// Exact multinomial coefficient `(Σ c)! / ∏ c!`, as a product of binomials.
pub fn multinomial(counts: &[u64]) -> BigUint {
    let mut acc = BigUint::one();
    let mut total = 0u64;
    for &c in counts {
        for r in 1..=c {
            total += 1;
            acc = acc * BigUint::from(total) / BigUint::from(r);
        }
    }
    acc
}

/// All compositions of `n` into `m` ordered nonnegative parts, i.e. all
/// n-types over an `m`-element set, in lexicographic order of counts.
pub fn enumerate_types(m: usize, n: u64, cap: usize) -> Result<Vec<NType>> {
    if m == 0 || n == 0 {
        return Err(Error::Invalid("enumerate_types needs m, n ≥ 1".into()));
    }
    let needed = binomial_u128(n as u128 + m as u128 - 1, m as u128 - 1);
    if needed > cap as u128 {
        return Err(Error::SizeCap { what: "n-types", needed, cap: cap as u128 });
    }
    let mut out = Vec::with_capacity(needed as usize);
    let mut counts = vec![0u64; m];
    compositions(&mut counts, 0, n, &mut |c| out.push(NType::unlabeled(c.to_vec())));
    Ok(out)
}

/// All n-types over the given outcomes.
pub fn enumerate_types_over(outcomes: &[Outcome], n: u64, cap: usize) -> Result<Vec<NType>> {
    check_outcomes(outcomes)?;
    Ok(enumerate_types(outcomes.len(), n, cap)?
        .into_iter()
        .map(|t| NType { outcomes: outcomes.to_vec(), counts: t.counts })
        .collect())
}

fn compositions(counts: &mut [u64], pos: usize, remaining: u64, emit: &mut impl FnMut(&[u64])) {
    if pos + 1 == counts.len() {
        counts[pos] = remaining;
        emit(counts);
        return;
    }
    for c in (0..=remaining).rev() {
        counts[pos] = c;
        compositions(counts, pos + 1, remaining - c, emit);
    }
}

fn binomial_u128(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}
