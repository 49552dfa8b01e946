//! Exact trilinear forms over the rationals.
//!
//! `T = Σ t_{i,j,k} x_i y_j z_k` is stored sparsely; zero coefficients are
//! never kept, so [`SparseTensor::support`] is just the key set.

mod decomp;

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pattern::{MapTriple, Pattern};
use crate::{Error, Result};

pub use decomp::{
    parse_rational, Coefficient, DecompositionJson, EpsDecomposition, EpsPoly, EpsTerm, RankDecomposition, SimpleTerm,
    TermJson, MAX_EPS_DEGREE,
};

/// Default sample range `{1..S}` for [`SparseTensor::support_transfer`].
pub const DEFAULT_SAMPLE_MAX: u64 = 1 << 16;
/// Default number of draws before [`SparseTensor::support_transfer`] gives up.
pub const DEFAULT_RETRY_BUDGET: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseTensor {
    dims: [usize; 3],
    coeffs: BTreeMap<[usize; 3], BigRational>,
}

impl SparseTensor {
    pub fn zero(dims: [usize; 3]) -> Self {
        SparseTensor { dims, coeffs: BTreeMap::new() }
    }

    /// Sums the given entries; repeated indices accumulate.
    pub fn from_entries(dims: [usize; 3], entries: impl IntoIterator<Item = ([usize; 3], BigRational)>) -> Result<Self> {
        let mut t = SparseTensor::zero(dims);
        for (idx, c) in entries {
            for axis in 0..3 {
                if idx[axis] >= dims[axis] {
                    return Err(Error::IndexOutOfRange { axis, index: idx[axis], size: dims[axis] });
                }
            }
            t.add_at(idx, c);
        }
        Ok(t)
    }

    /// `M(Λ) = Σ_{(i,j,k)∈Λ} x_{i,j} y_{j,k} z_{k,i}`, with `x_{i,j}` at index
    /// `i·m + j`, `y_{j,k}` at `j·n + k` and `z_{k,i}` at `k·l + i`.
    pub fn from_pattern(pattern: &Pattern) -> Self {
        let [l, m, n] = pattern.dims();
        let coeffs = pattern
            .triples()
            .iter()
            .map(|&[i, j, k]| ([i * m + j, j * n + k, k * l + i], BigRational::one()))
            .collect();
        SparseTensor { dims: [l * m, m * n, n * l], coeffs }
    }

    /// The tensor with coefficient 1 on every triple of `support`.
    pub fn from_support(support: &Pattern) -> Self {
        let coeffs = support.triples().iter().map(|&t| (t, BigRational::one())).collect();
        SparseTensor { dims: support.dims(), coeffs }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn nnz(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn get(&self, idx: &[usize; 3]) -> BigRational {
        self.coeffs.get(idx).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[usize; 3], &BigRational)> {
        self.coeffs.iter()
    }

    pub(crate) fn add_at(&mut self, idx: [usize; 3], c: BigRational) {
        if c.is_zero() {
            return;
        }
        let slot = self.coeffs.entry(idx).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.coeffs.remove(&idx);
        }
    }

    /// The set of triples with nonzero coefficient.
    pub fn support(&self) -> Pattern {
        Pattern::new(self.dims.map(|d| d.max(1)), self.coeffs.keys().copied()).expect("indices checked on insert")
    }

    /// `T1 ⊗ T2`, pairing variables row-major on each axis.
    pub fn tensor_product(&self, other: &SparseTensor) -> SparseTensor {
        let d2 = other.dims;
        let dims = [self.dims[0] * d2[0], self.dims[1] * d2[1], self.dims[2] * d2[2]];
        let mut coeffs = BTreeMap::new();
        for (a, ca) in &self.coeffs {
            for (b, cb) in &other.coeffs {
                let idx = [a[0] * d2[0] + b[0], a[1] * d2[1] + b[1], a[2] * d2[2] + b[2]];
                coeffs.insert(idx, ca * cb);
            }
        }
        SparseTensor { dims, coeffs }
    }

    /// `T' = Σ t_{i,j,k} (a_i x_{f(i)}) (b_j y_{g(j)}) (c_k z_{h(k)})`.
    pub fn restrict(&self, scalings: &Scalings, map: &MapTriple) -> Result<SparseTensor> {
        map.check_domain(self.dims)?;
        scalings.check(self.dims)?;
        let mut out = SparseTensor::zero(map.targets());
        for (idx, t) in &self.coeffs {
            let s = &scalings.a[idx[0]] * &scalings.b[idx[1]] * &scalings.c[idx[2]];
            if s.is_zero() {
                continue;
            }
            out.add_at(map.apply(idx), s * t);
        }
        Ok(out)
    }

    /// Randomized restriction whose support is exactly `(f×g×h)(supp T)`.
    ///
    /// Each draw picks `a_i, b_j, c_k` uniformly from `{1..sample_max}`. A
    /// target coefficient is a nonzero cubic polynomial in these, so a draw
    /// fails with probability at most `3 / sample_max` per target triple.
    pub fn support_transfer(
        &self,
        map: &MapTriple,
        sample_max: u64,
        retry_budget: usize,
        seed: u64,
    ) -> Result<Transfer> {
        if self.is_zero() {
            return Err(Error::Invalid("support transfer needs a nonzero tensor".into()));
        }
        if sample_max == 0 {
            return Err(Error::Invalid("sample range must be at least 1".into()));
        }
        map.check_domain(self.dims)?;
        let target = self.support().direct_image(map)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |len: usize| -> Vec<BigRational> {
            (0..len).map(|_| BigRational::from_integer(rng.gen_range(1..=sample_max).into())).collect()
        };
        for attempt in 1..=retry_budget {
            let scalings = Scalings { a: draw(self.dims[0]), b: draw(self.dims[1]), c: draw(self.dims[2]) };
            let restricted = self.restrict(&scalings, map)?;
            if restricted.support() == target {
                return Ok(Transfer { tensor: restricted, scalings, attempts: attempt });
            }
        }
        Err(Error::RetryBudgetExhausted { budget: retry_budget, sample_max })
    }
}

/// Diagonal scalings `a`, `b`, `c` applied before a restriction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scalings {
    pub a: Vec<BigRational>,
    pub b: Vec<BigRational>,
    pub c: Vec<BigRational>,
}

impl Scalings {
    pub fn ones(dims: [usize; 3]) -> Self {
        let one = |n| vec![BigRational::one(); n];
        Scalings { a: one(dims[0]), b: one(dims[1]), c: one(dims[2]) }
    }

    pub fn zeros(dims: [usize; 3]) -> Self {
        let zero = |n| vec![BigRational::zero(); n];
        Scalings { a: zero(dims[0]), b: zero(dims[1]), c: zero(dims[2]) }
    }

    /// Indicator scalings selecting the single triple `at`.
    pub fn indicator(dims: [usize; 3], at: [usize; 3]) -> Self {
        let mut s = Scalings::zeros(dims);
        s.a[at[0]] = BigRational::one();
        s.b[at[1]] = BigRational::one();
        s.c[at[2]] = BigRational::one();
        s
    }

    fn check(&self, dims: [usize; 3]) -> Result<()> {
        let lens = [self.a.len(), self.b.len(), self.c.len()];
        if lens != dims {
            return Err(Error::DimensionMismatch(format!("scalings have lengths {lens:?}, tensor dims {dims:?}")));
        }
        Ok(())
    }
}

/// Output of [`SparseTensor::support_transfer`].
#[derive(Clone, Debug)]
pub struct Transfer {
    pub tensor: SparseTensor,
    pub scalings: Scalings,
    /// Number of draws used, including the successful one.
    pub attempts: usize,
}
