//! Rank and border-rank witnesses.

use std::collections::BTreeMap;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::SparseTensor;
use crate::pattern::Pattern;
use crate::{Error, Result};

/// Largest ε-degree accepted in a single decomposition entry.
pub const MAX_EPS_DEGREE: usize = 64;

/// Parses `"p/q"`, `"p"` or a plain JSON integer rendering.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    BigRational::from_str(s).map_err(|_| Error::Rational(s.to_string()))
}

/// One simple tensor `(Σ a_i x_i)(Σ b_j y_j)(Σ c_k z_k)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimpleTerm {
    pub a: Vec<BigRational>,
    pub b: Vec<BigRational>,
    pub c: Vec<BigRational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankDecomposition {
    dims: [usize; 3],
    terms: Vec<SimpleTerm>,
}

impl RankDecomposition {
    pub fn new(dims: [usize; 3], terms: Vec<SimpleTerm>) -> Result<Self> {
        for (m, term) in terms.iter().enumerate() {
            let lens = [term.a.len(), term.b.len(), term.c.len()];
            if lens != dims {
                return Err(Error::DimensionMismatch(format!("term {m} has lengths {lens:?}, expected {dims:?}")));
            }
        }
        Ok(RankDecomposition { dims, terms })
    }

    /// The diagonal witness `Σ t_{ijk} x_i y_j z_k`, one term per nonzero entry.
    pub fn diagonal(t: &SparseTensor) -> Self {
        let dims = t.dims();
        let unit = |n: usize, at: usize, c: BigRational| {
            let mut v = vec![BigRational::zero(); n];
            v[at] = c;
            v
        };
        let terms = t
            .iter()
            .map(|(idx, c)| SimpleTerm {
                a: unit(dims[0], idx[0], c.clone()),
                b: unit(dims[1], idx[1], BigRational::one()),
                c: unit(dims[2], idx[2], BigRational::one()),
            })
            .collect();
        RankDecomposition { dims, terms }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn terms(&self) -> &[SimpleTerm] {
        &self.terms
    }

    /// Number of simple terms `L`.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Exact expansion of the sum of simple tensors.
    pub fn evaluate(&self) -> SparseTensor {
        let mut out = SparseTensor::zero(self.dims);
        for term in &self.terms {
            for (i, a) in term.a.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
                for (j, b) in term.b.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
                    let ab = a * b;
                    for (k, c) in term.c.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
                        out.add_at([i, j, k], &ab * c);
                    }
                }
            }
        }
        out
    }

    /// True iff the decomposition expands to exactly `t`.
    pub fn verify(&self, t: &SparseTensor) -> bool {
        self.dims == t.dims() && self.evaluate() == *t
    }

    /// True iff the expansion has support exactly `support`, certifying
    /// `R_s(support) ≤ self.len()`.
    pub fn verify_support_witness(&self, support: &Pattern) -> bool {
        self.dims == support.dims() && self.evaluate().support() == *support
    }

    pub fn to_eps(&self) -> EpsDecomposition {
        let lift = |v: &[BigRational]| v.iter().map(|c| EpsPoly::constant(c.clone())).collect();
        EpsDecomposition {
            dims: self.dims,
            order: 0,
            terms: self.terms.iter().map(|t| EpsTerm { a: lift(&t.a), b: lift(&t.b), c: lift(&t.c) }).collect(),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let json: DecompositionJson = serde_json::from_str(s).map_err(|e| Error::Invalid(e.to_string()))?;
        RankDecomposition::try_from(json)
    }
}

/// A univariate polynomial in ε, dense by degree, without trailing zeros.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EpsPoly(Vec<BigRational>);

impl EpsPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Result<Self> {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        if coeffs.len() > MAX_EPS_DEGREE + 1 {
            return Err(Error::Invalid(format!(
                "ε-degree {} exceeds the cap {MAX_EPS_DEGREE}",
                coeffs.len() - 1
            )));
        }
        Ok(EpsPoly(coeffs))
    }

    pub fn constant(c: BigRational) -> Self {
        if c.is_zero() {
            EpsPoly(Vec::new())
        } else {
            EpsPoly(vec![c])
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn coeff(&self, d: usize) -> BigRational {
        self.0.get(d).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.0
    }

    fn mul(&self, other: &EpsPoly) -> EpsPoly {
        if self.is_zero() || other.is_zero() {
            return EpsPoly::default();
        }
        let mut out = vec![BigRational::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        EpsPoly(out)
    }

    fn add_assign(&mut self, other: &EpsPoly) {
        if self.0.len() < other.0.len() {
            self.0.resize(other.0.len(), BigRational::zero());
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
        while self.0.last().is_some_and(Zero::is_zero) {
            self.0.pop();
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpsTerm {
    pub a: Vec<EpsPoly>,
    pub b: Vec<EpsPoly>,
    pub c: Vec<EpsPoly>,
}

/// A decomposition whose vectors depend polynomially on ε, claimed to equal
/// `ε^order · T + O(ε^{order+1})`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpsDecomposition {
    dims: [usize; 3],
    order: usize,
    terms: Vec<EpsTerm>,
}

impl EpsDecomposition {
    pub fn new(dims: [usize; 3], order: usize, terms: Vec<EpsTerm>) -> Result<Self> {
        for (m, term) in terms.iter().enumerate() {
            let lens = [term.a.len(), term.b.len(), term.c.len()];
            if lens != dims {
                return Err(Error::DimensionMismatch(format!("term {m} has lengths {lens:?}, expected {dims:?}")));
            }
        }
        Ok(EpsDecomposition { dims, order, terms })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn terms(&self) -> &[EpsTerm] {
        &self.terms
    }

    pub fn terms_mut(&mut self) -> &mut [EpsTerm] {
        &mut self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Full expansion: the ε-polynomial coefficient of every monomial.
    pub fn expand(&self) -> BTreeMap<[usize; 3], EpsPoly> {
        let mut out: BTreeMap<[usize; 3], EpsPoly> = BTreeMap::new();
        for term in &self.terms {
            for (i, a) in term.a.iter().enumerate().filter(|(_, p)| !p.is_zero()) {
                for (j, b) in term.b.iter().enumerate().filter(|(_, p)| !p.is_zero()) {
                    let ab = a.mul(b);
                    for (k, c) in term.c.iter().enumerate().filter(|(_, p)| !p.is_zero()) {
                        out.entry([i, j, k]).or_default().add_assign(&ab.mul(c));
                    }
                }
            }
        }
        out.retain(|_, p| !p.is_zero());
        out
    }

    /// True iff the coefficients of `ε⁰ … ε^{d-1}` vanish identically and the
    /// `ε^d` coefficient is exactly `t`. Fails if `d` differs from the claimed order.
    pub fn verify(&self, t: &SparseTensor, d: usize) -> Result<bool> {
        if d != self.order {
            return Err(Error::Invalid(format!("order {d} does not match the decomposition's claimed order {}", self.order)));
        }
        if self.dims != t.dims() {
            return Ok(false);
        }
        let expansion = self.expand();
        for (idx, poly) in &expansion {
            if (0..d).any(|e| !poly.coeff(e).is_zero()) {
                return Ok(false);
            }
            if poly.coeff(d) != t.get(idx) {
                return Ok(false);
            }
        }
        Ok(t.iter().all(|(idx, _)| expansion.contains_key(idx)))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let json: DecompositionJson = serde_json::from_str(s).map_err(|e| Error::Invalid(e.to_string()))?;
        EpsDecomposition::try_from(json)
    }
}

/// A coefficient on the wire: a rational string, a JSON number, or a list of
/// ε-coefficients indexed by degree.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Scalar(String),
    Integer(i64),
    Poly(Vec<String>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermJson {
    pub a: Vec<Coefficient>,
    pub b: Vec<Coefficient>,
    pub c: Vec<Coefficient>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionJson {
    pub terms: Vec<TermJson>,
    #[serde(default)]
    pub order: usize,
    /// Needed only when `terms` is empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<[usize; 3]>,
}

impl Coefficient {
    fn to_poly(&self) -> Result<EpsPoly> {
        match self {
            Coefficient::Scalar(s) => Ok(EpsPoly::constant(parse_rational(s)?)),
            Coefficient::Integer(n) => Ok(EpsPoly::constant(BigRational::from_integer((*n).into()))),
            Coefficient::Poly(cs) => EpsPoly::new(cs.iter().map(|s| parse_rational(s)).collect::<Result<_>>()?),
        }
    }

    fn from_poly(p: &EpsPoly) -> Self {
        match p.degree() {
            None => Coefficient::Scalar("0".into()),
            Some(0) => Coefficient::Scalar(p.coeff(0).to_string()),
            Some(_) => Coefficient::Poly(p.coeffs().iter().map(ToString::to_string).collect()),
        }
    }
}

fn json_dims(json: &DecompositionJson) -> Result<[usize; 3]> {
    match (json.terms.first(), json.dims) {
        (Some(t), None) => Ok([t.a.len(), t.b.len(), t.c.len()]),
        (_, Some(d)) => Ok(d),
        (None, None) => Err(Error::Invalid("empty decomposition needs explicit \"dims\"".into())),
    }
}

fn polys(v: &[Coefficient], term: usize, name: &str) -> Result<Vec<EpsPoly>> {
    v.iter()
        .enumerate()
        .map(|(i, c)| c.to_poly().map_err(|e| Error::Invalid(format!("terms[{term}].{name}[{i}]: {e}"))))
        .collect()
}

impl TryFrom<DecompositionJson> for EpsDecomposition {
    type Error = Error;

    fn try_from(json: DecompositionJson) -> Result<Self> {
        let dims = json_dims(&json)?;
        let terms = json
            .terms
            .iter()
            .enumerate()
            .map(|(m, t)| Ok(EpsTerm { a: polys(&t.a, m, "a")?, b: polys(&t.b, m, "b")?, c: polys(&t.c, m, "c")? }))
            .collect::<Result<_>>()?;
        EpsDecomposition::new(dims, json.order, terms)
    }
}

impl TryFrom<DecompositionJson> for RankDecomposition {
    type Error = Error;

    fn try_from(json: DecompositionJson) -> Result<Self> {
        let eps = EpsDecomposition::try_from(json)?;
        if eps.order != 0 {
            return Err(Error::Invalid("a plain decomposition must have order 0".into()));
        }
        let constant = |v: &[EpsPoly]| -> Result<Vec<BigRational>> {
            v.iter()
                .map(|p| match p.degree() {
                    None | Some(0) => Ok(p.coeff(0)),
                    Some(_) => Err(Error::Invalid("ε-dependent coefficient in a plain decomposition".into())),
                })
                .collect()
        };
        let terms = eps
            .terms
            .iter()
            .map(|t| Ok(SimpleTerm { a: constant(&t.a)?, b: constant(&t.b)?, c: constant(&t.c)? }))
            .collect::<Result<_>>()?;
        RankDecomposition::new(eps.dims, terms)
    }
}

impl From<&EpsDecomposition> for DecompositionJson {
    fn from(e: &EpsDecomposition) -> Self {
        let enc = |v: &[EpsPoly]| v.iter().map(Coefficient::from_poly).collect();
        DecompositionJson {
            terms: e.terms.iter().map(|t| TermJson { a: enc(&t.a), b: enc(&t.b), c: enc(&t.c) }).collect(),
            order: e.order,
            dims: Some(e.dims),
        }
    }
}
