//! Patterns `Λ ⊆ I×J×K` and their algebra.
//!
//! A [`Pattern`] is kept canonical: triples are sorted and deduplicated, so two
//! patterns over the same index sets compare equal iff they are the same set.
//! Products pair indices row-major, `(i1, i2) ↦ i1·|I2| + i2`, which makes
//! [`Pattern::power`] associative and reproducible.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default cap on the number of triples produced by [`Pattern::power`].
pub const DEFAULT_POWER_CAP: usize = 10_000_000;

/// A set of index triples inside the box `[dims[0]] × [dims[1]] × [dims[2]]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PatternJson", into = "PatternJson")]
pub struct Pattern {
    dims: [usize; 3],
    triples: Vec<[usize; 3]>,
}

/// Wire form of a pattern: 1-based indices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PatternJson {
    pub dims: [usize; 3],
    pub triples: Vec<[usize; 3]>,
}

impl TryFrom<PatternJson> for Pattern {
    type Error = Error;

    fn try_from(json: PatternJson) -> Result<Self> {
        Pattern::from_one_based(json.dims, json.triples)
    }
}

impl From<Pattern> for PatternJson {
    fn from(p: Pattern) -> Self {
        PatternJson {
            dims: p.dims,
            triples: p.triples.iter().map(|t| [t[0] + 1, t[1] + 1, t[2] + 1]).collect(),
        }
    }
}

fn check_dims(dims: [usize; 3]) -> Result<()> {
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::Invalid(format!("pattern dims must be positive, got {dims:?}")));
    }
    Ok(())
}

impl Pattern {
    /// Builds a pattern from 0-based triples. Duplicates are collapsed.
    pub fn new(dims: [usize; 3], triples: impl IntoIterator<Item = [usize; 3]>) -> Result<Self> {
        check_dims(dims)?;
        let mut set = BTreeSet::new();
        for t in triples {
            for axis in 0..3 {
                if t[axis] >= dims[axis] {
                    return Err(Error::IndexOutOfRange { axis, index: t[axis], size: dims[axis] });
                }
            }
            set.insert(t);
        }
        Ok(Pattern { dims, triples: set.into_iter().collect() })
    }

    /// Builds a pattern from 1-based triples, as written in the JSON format.
    pub fn from_one_based(dims: [usize; 3], triples: impl IntoIterator<Item = [usize; 3]>) -> Result<Self> {
        check_dims(dims)?;
        let mut shifted = Vec::new();
        for t in triples {
            for axis in 0..3 {
                if t[axis] == 0 || t[axis] > dims[axis] {
                    return Err(Error::IndexOutOfRange { axis, index: t[axis], size: dims[axis] });
                }
            }
            shifted.push([t[0] - 1, t[1] - 1, t[2] - 1]);
        }
        Pattern::new(dims, shifted)
    }

    pub fn empty(dims: [usize; 3]) -> Result<Self> {
        Pattern::new(dims, [])
    }

    /// The full box `[l]×[m]×[n]`, i.e. total matrix multiplication.
    pub fn full(l: usize, m: usize, n: usize) -> Result<Self> {
        let mut triples = Vec::with_capacity(l * m * n);
        for i in 0..l {
            for j in 0..m {
                for k in 0..n {
                    triples.push([i, j, k]);
                }
            }
        }
        Pattern::new([l, m, n], triples)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    /// Triples in canonical (lexicographic) order.
    pub fn triples(&self) -> &[[usize; 3]] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, t: &[usize; 3]) -> bool {
        self.triples.binary_search(t).is_ok()
    }

    /// Position of `t` in [`Pattern::triples`].
    pub fn position(&self, t: &[usize; 3]) -> Option<usize> {
        self.triples.binary_search(t).ok()
    }

    pub fn is_subset(&self, other: &Pattern) -> bool {
        self.triples.iter().all(|t| other.contains(t))
    }

    /// `Λ1 × Λ2` with row-major index pairing on each axis.
    pub fn product(&self, other: &Pattern) -> Pattern {
        let d2 = other.dims;
        let dims = [self.dims[0] * d2[0], self.dims[1] * d2[1], self.dims[2] * d2[2]];
        let mut triples = Vec::with_capacity(self.len() * other.len());
        for a in &self.triples {
            for b in &other.triples {
                triples.push([a[0] * d2[0] + b[0], a[1] * d2[1] + b[1], a[2] * d2[2] + b[2]]);
            }
        }
        // Row-major pairing of two sorted lists is already sorted and distinct.
        Pattern { dims, triples }
    }

    /// `Λⁿ`, refusing when `|Λ|ⁿ` exceeds `cap` triples.
    pub fn power(&self, n: usize, cap: usize) -> Result<Pattern> {
        if n == 0 {
            return Err(Error::Invalid("power exponent must be at least 1".into()));
        }
        let needed = (self.len() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if needed > cap as u128 {
            return Err(Error::SizeCap { what: "pattern power", needed, cap: cap as u128 });
        }
        for axis in 0..3 {
            let size = (self.dims[axis] as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
            if size > usize::MAX as u128 {
                return Err(Error::SizeCap { what: "pattern power dims", needed: size, cap: usize::MAX as u128 });
            }
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.product(self);
        }
        Ok(acc)
    }

    /// Block-diagonal sum: `other`'s indices are offset by `self`'s dims.
    pub fn direct_sum(&self, other: &Pattern) -> Pattern {
        let d1 = self.dims;
        let dims = [d1[0] + other.dims[0], d1[1] + other.dims[1], d1[2] + other.dims[2]];
        let triples = self
            .triples
            .iter()
            .copied()
            .chain(other.triples.iter().map(|t| [t[0] + d1[0], t[1] + d1[1], t[2] + d1[2]]))
            .collect();
        Pattern { dims, triples }
    }

    /// `(f×g×h)(Λ)`.
    pub fn direct_image(&self, map: &MapTriple) -> Result<Pattern> {
        map.check_domain(self.dims)?;
        Pattern::new(map.targets, self.triples.iter().map(|t| map.apply(t)))
    }

    /// The support of the partial matrix multiplication tensor `M(Λ)`:
    /// `{((i,j),(j,k),(k,i)) : (i,j,k) ∈ Λ}`.
    pub fn mm_support(&self) -> Support {
        let [l, m, n] = self.dims;
        let mut triples: Vec<_> = self.triples.iter().map(|&[i, j, k]| [[i, j], [j, k], [k, i]]).collect();
        triples.sort_unstable();
        Support { shape: [[l, m], [m, n], [n, l]], triples }
    }
}

/// A triple of total maps `f: I→I'`, `g: J→J'`, `h: K→K'`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MapTripleJson", into = "MapTripleJson")]
pub struct MapTriple {
    maps: [Vec<usize>; 3],
    targets: [usize; 3],
}

/// Wire form of a map triple: 1-based target indices; `targets` defaults to
/// the largest index used on each axis.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapTripleJson {
    pub f: Vec<usize>,
    pub g: Vec<usize>,
    pub h: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<[usize; 3]>,
}

impl TryFrom<MapTripleJson> for MapTriple {
    type Error = Error;

    fn try_from(json: MapTripleJson) -> Result<Self> {
        let mut maps = [json.f, json.g, json.h];
        for (axis, map) in maps.iter_mut().enumerate() {
            for v in map.iter_mut() {
                if *v == 0 {
                    return Err(Error::IndexOutOfRange { axis, index: 0, size: 0 });
                }
                *v -= 1;
            }
        }
        let [f, g, h] = maps;
        match json.targets {
            Some(targets) => MapTriple::new(f, g, h, targets),
            None => MapTriple::inferred(f, g, h),
        }
    }
}

impl From<MapTriple> for MapTripleJson {
    fn from(m: MapTriple) -> Self {
        let [f, g, h] = m.maps.map(|v| v.into_iter().map(|x| x + 1).collect());
        MapTripleJson { f, g, h, targets: Some(m.targets) }
    }
}

impl MapTriple {
    pub fn new(f: Vec<usize>, g: Vec<usize>, h: Vec<usize>, targets: [usize; 3]) -> Result<Self> {
        check_dims(targets)?;
        let maps = [f, g, h];
        for (axis, map) in maps.iter().enumerate() {
            if let Some(&bad) = map.iter().find(|&&v| v >= targets[axis]) {
                return Err(Error::IndexOutOfRange { axis, index: bad, size: targets[axis] });
            }
        }
        Ok(MapTriple { maps, targets })
    }

    /// Target sizes taken as one past the largest image index (at least 1).
    pub fn inferred(f: Vec<usize>, g: Vec<usize>, h: Vec<usize>) -> Result<Self> {
        let target = |v: &[usize]| v.iter().max().map_or(1, |m| m + 1);
        let targets = [target(&f), target(&g), target(&h)];
        MapTriple::new(f, g, h, targets)
    }

    pub fn identity(dims: [usize; 3]) -> Result<Self> {
        MapTriple::new((0..dims[0]).collect(), (0..dims[1]).collect(), (0..dims[2]).collect(), dims)
    }

    /// Every index sent to the first target index.
    pub fn constant(dims: [usize; 3]) -> Result<Self> {
        MapTriple::new(vec![0; dims[0]], vec![0; dims[1]], vec![0; dims[2]], [1, 1, 1])
    }

    pub fn domain(&self) -> [usize; 3] {
        [self.maps[0].len(), self.maps[1].len(), self.maps[2].len()]
    }

    pub fn targets(&self) -> [usize; 3] {
        self.targets
    }

    pub fn map(&self, axis: usize) -> &[usize] {
        &self.maps[axis]
    }

    pub fn apply(&self, t: &[usize; 3]) -> [usize; 3] {
        [self.maps[0][t[0]], self.maps[1][t[1]], self.maps[2][t[2]]]
    }

    pub(crate) fn check_domain(&self, dims: [usize; 3]) -> Result<()> {
        if self.domain() != dims {
            return Err(Error::DimensionMismatch(format!(
                "map domain {:?} does not match index sets {:?}",
                self.domain(),
                dims
            )));
        }
        Ok(())
    }
}

/// A subset of `(I×J)×(J×K)×(K×I)`, each axis indexed by a pair.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Support {
    shape: [[usize; 2]; 3],
    triples: Vec<[[usize; 2]; 3]>,
}

impl Support {
    pub fn new(shape: [[usize; 2]; 3], triples: impl IntoIterator<Item = [[usize; 2]; 3]>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for t in triples {
            for axis in 0..3 {
                for half in 0..2 {
                    if t[axis][half] >= shape[axis][half] {
                        return Err(Error::IndexOutOfRange {
                            axis,
                            index: t[axis][half],
                            size: shape[axis][half],
                        });
                    }
                }
            }
            set.insert(t);
        }
        Ok(Support { shape, triples: set.into_iter().collect() })
    }

    pub fn shape(&self) -> [[usize; 2]; 3] {
        self.shape
    }

    pub fn triples(&self) -> &[[[usize; 2]; 3]] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Image under the induced maps `(f×g, g×h, h×f)`.
    pub fn image_under(&self, map: &MapTriple) -> Result<Support> {
        let [[l, m], [m2, n], [n2, l2]] = self.shape;
        if m != m2 || n != n2 || l != l2 {
            return Err(Error::DimensionMismatch("support is not of matrix multiplication shape".into()));
        }
        map.check_domain([l, m, n])?;
        let (f, g, h) = (map.map(0), map.map(1), map.map(2));
        let [tl, tm, tn] = map.targets();
        Support::new(
            [[tl, tm], [tm, tn], [tn, tl]],
            self.triples
                .iter()
                .map(|&[[i, j], [j2, k], [k2, i2]]| [[f[i], g[j]], [g[j2], h[k]], [h[k2], f[i2]]]),
        )
    }

    /// Pairwise product, with pairs combined row-major on each coordinate.
    pub fn product(&self, other: &Support) -> Support {
        let s2 = other.shape;
        let shape = std::array::from_fn(|a| std::array::from_fn(|h| self.shape[a][h] * s2[a][h]));
        let mut triples = Vec::with_capacity(self.len() * other.len());
        for x in &self.triples {
            for y in &other.triples {
                triples.push(std::array::from_fn(|a| std::array::from_fn(|h| x[a][h] * s2[a][h] + y[a][h])));
            }
        }
        triples.sort_unstable();
        Support { shape, triples }
    }

    /// Flattens each pair `(p, q)` to `p·shape[a][1] + q`, the variable order
    /// used by [`crate::tensor::SparseTensor::from_pattern`].
    pub fn flatten(&self) -> Pattern {
        let dims = self.shape.map(|[p, q]| p * q);
        let shape = self.shape;
        let triples = self.triples.iter().map(|t| std::array::from_fn(|a| t[a][0] * shape[a][1] + t[a][1]));
        Pattern::new(dims, triples).expect("flattened indices are in range")
    }
}
