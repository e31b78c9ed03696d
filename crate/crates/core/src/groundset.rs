//! Finite subsets of `Z^d` and `Z/NZ`, sumsets and representation functions.
//!
//! Internally every operation works on a scalar image of the set: residues are
//! kept as they are, and lattice vectors are packed into `i128` by a balanced
//! mixed-radix map that is injective (and order preserving) on the box of
//! coordinates the operation can produce.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numbers::factorize;

/// Largest set an operation may materialise.
pub const DEFAULT_CAP: usize = 1 << 24;
/// Ranges up to this size use dense arrays.
pub(crate) const DENSE_LIMIT: i128 = 1 << 22;
const PACK_LIMIT: i128 = 1 << 120;
/// Largest order accepted for dissociativity, spans and energies.
pub const MAX_ORDER: u32 = 64;
/// Largest `n + m` accepted by `n_minus_m`.
pub const MAX_FOLD: u32 = 1 << 10;

/// Reject `k = 0` and orders above [`MAX_ORDER`].
pub(crate) fn check_order(k: u32) -> Result<()> {
    if k == 0 {
        return invalid("k must be positive");
    }
    if k > MAX_ORDER {
        return invalid(format!("k = {k} exceeds the supported maximum {MAX_ORDER}"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Ambient {
    Lattice { rank: usize },
    Residues { modulus: u64 },
}

impl Ambient {
    pub const INTEGERS: Ambient = Ambient::Lattice { rank: 1 };

    pub fn rank(&self) -> usize {
        match *self {
            Ambient::Lattice { rank } => rank,
            Ambient::Residues { .. } => 1,
        }
    }

    pub fn modulus(&self) -> Option<u64> {
        match *self {
            Ambient::Residues { modulus } => Some(modulus),
            _ => None,
        }
    }

    pub fn is_integers(&self) -> bool {
        *self == Ambient::INTEGERS
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Ambient::Lattice { rank } if rank == 0 => invalid("lattice rank must be at least 1"),
            Ambient::Residues { modulus } if modulus < 2 => invalid("modulus must be at least 2"),
            Ambient::Residues { modulus } if modulus > i64::MAX as u64 => {
                invalid("modulus must fit in a signed 64-bit integer")
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Ambient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ambient::Lattice { rank } => write!(f, "Z^{rank}"),
            Ambient::Residues { modulus } => write!(f, "Z/{modulus}Z"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Arith {
    Int,
    Mod(i128),
}

impl Arith {
    #[inline]
    pub(crate) fn norm(self, x: i128) -> i128 {
        match self {
            Arith::Int => x,
            Arith::Mod(n) => x.rem_euclid(n),
        }
    }
}

/// Balanced mixed-radix packing of `Z^d` into `i128`, coordinate 0 most significant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Codec {
    radices: Vec<i128>,
    weights: Vec<i128>,
}

impl Codec {
    pub(crate) fn identity() -> Codec {
        Codec { radices: vec![1], weights: vec![1] }
    }

    /// Codec faithful on vectors with `|v_j| <= bounds[j]`.
    pub(crate) fn with_bounds(bounds: &[i128]) -> Result<Codec> {
        let d = bounds.len();
        if d <= 1 {
            return Ok(Codec::identity());
        }
        let mut radices = vec![1i128; d];
        let mut weights = vec![1i128; d];
        for j in (0..d - 1).rev() {
            let r = bounds[j + 1]
                .checked_mul(2)
                .and_then(|x| x.checked_add(1))
                .ok_or(Error::Overflow("lattice packing"))?;
            radices[j + 1] = r;
            weights[j] = weights[j + 1]
                .checked_mul(r)
                .filter(|w| *w < PACK_LIMIT)
                .ok_or(Error::Overflow("lattice packing"))?;
        }
        let mut total: i128 = 0;
        for j in 0..d {
            total = bounds[j]
                .checked_mul(weights[j])
                .and_then(|x| x.checked_add(total))
                .filter(|t| *t < PACK_LIMIT)
                .ok_or(Error::Overflow("lattice packing"))?;
        }
        Ok(Codec { radices, weights })
    }

    #[inline]
    pub(crate) fn pack(&self, v: &[i64]) -> i128 {
        v.iter().zip(&self.weights).map(|(&x, &w)| x as i128 * w).sum()
    }

    pub(crate) fn unpack_into(&self, mut x: i128, out: &mut Vec<i64>) -> Result<()> {
        let d = self.weights.len();
        let start = out.len();
        out.resize(start + d, 0);
        for j in (1..d).rev() {
            let r = self.radices[j];
            let mut digit = x.rem_euclid(r);
            if digit > r / 2 {
                digit -= r;
            }
            out[start + j] = digit as i64;
            x = (x - digit) / r;
        }
        out[start] = i64::try_from(x).map_err(|_| Error::Overflow("coordinate exceeds 64 bits"))?;
        Ok(())
    }
}

/// Scalar image of one or more sets under a common codec.
#[derive(Clone, Debug)]
pub(crate) struct Packed {
    pub ambient: Ambient,
    pub arith: Arith,
    pub codec: Codec,
}

impl Packed {
    /// Common packing for `sets`, faithful on `Σ_i scale_i · (coordinates of set i)`.
    pub(crate) fn for_combination(sets: &[(&GroundSet, i128)]) -> Result<Packed> {
        let ambient = sets.first().map(|(s, _)| s.ambient).ok_or_else(|| {
            Error::InvalidParam("no sets given".into())
        })?;
        for (s, _) in sets {
            if s.ambient != ambient {
                return Err(Error::AmbientMismatch(format!("{} vs {}", ambient, s.ambient)));
            }
        }
        let arith = match ambient {
            Ambient::Residues { modulus } => Arith::Mod(modulus as i128),
            Ambient::Lattice { .. } => Arith::Int,
        };
        let codec = match ambient {
            Ambient::Lattice { rank } if rank > 1 => {
                let mut bounds = vec![0i128; rank];
                for (s, scale) in sets {
                    for (j, m) in s.max_abs_coords().into_iter().enumerate() {
                        bounds[j] = scale
                            .checked_mul(m as i128)
                            .and_then(|x| x.checked_add(bounds[j]))
                            .ok_or(Error::Overflow("lattice packing"))?;
                    }
                }
                Codec::with_bounds(&bounds)?
            }
            _ => Codec::identity(),
        };
        Ok(Packed { ambient, arith, codec })
    }

    pub(crate) fn values(&self, s: &GroundSet) -> Vec<i128> {
        s.iter().map(|v| self.arith.norm(self.codec.pack(v))).collect()
    }

    /// Rebuild a set from sorted, deduplicated, normalised scalar values.
    pub(crate) fn to_set(&self, vals: &[i128]) -> Result<GroundSet> {
        let mut coords = Vec::with_capacity(vals.len() * self.ambient.rank());
        for &x in vals {
            self.codec.unpack_into(x, &mut coords)?;
        }
        Ok(GroundSet { ambient: self.ambient, coords })
    }
}

/// A finite set of elements of one ambient group, stored sorted and without duplicates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GroundSetRepr", into = "GroundSetRepr")]
pub struct GroundSet {
    ambient: Ambient,
    coords: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ElemRepr {
    Int(i64),
    Vec(Vec<i64>),
}

#[derive(Serialize, Deserialize)]
struct GroundSetRepr {
    ambient: Ambient,
    elements: Vec<ElemRepr>,
}

impl TryFrom<GroundSetRepr> for GroundSet {
    type Error = Error;
    fn try_from(r: GroundSetRepr) -> Result<GroundSet> {
        let vecs: Vec<Vec<i64>> = r
            .elements
            .into_iter()
            .map(|e| match e {
                ElemRepr::Int(x) => vec![x],
                ElemRepr::Vec(v) => v,
            })
            .collect();
        GroundSet::from_vectors(r.ambient, vecs)
    }
}

impl From<GroundSet> for GroundSetRepr {
    fn from(s: GroundSet) -> GroundSetRepr {
        let elements = if s.rank() == 1 {
            s.coords.iter().map(|&x| ElemRepr::Int(x)).collect()
        } else {
            s.iter().map(|v| ElemRepr::Vec(v.to_vec())).collect()
        };
        GroundSetRepr { ambient: s.ambient, elements }
    }
}

impl GroundSet {
    pub fn empty(ambient: Ambient) -> GroundSet {
        GroundSet { ambient, coords: Vec::new() }
    }

    /// Subset of `Z`.
    pub fn integers<I: IntoIterator<Item = i64>>(elems: I) -> GroundSet {
        let mut coords: Vec<i64> = elems.into_iter().collect();
        coords.sort_unstable();
        coords.dedup();
        GroundSet { ambient: Ambient::INTEGERS, coords }
    }

    /// Subset of `Z/NZ`; elements are reduced into `[0, N)`.
    pub fn residues<I: IntoIterator<Item = i64>>(modulus: u64, elems: I) -> Result<GroundSet> {
        let ambient = Ambient::Residues { modulus };
        ambient.validate()?;
        let n = modulus as i64;
        GroundSet::integers(elems.into_iter().map(|x| x.rem_euclid(n))).with_ambient(ambient)
    }

    /// Subset of `Z^d` (or of `Z/NZ` when `ambient` is residues, rank 1).
    pub fn from_vectors(ambient: Ambient, elems: Vec<Vec<i64>>) -> Result<GroundSet> {
        ambient.validate()?;
        let d = ambient.rank();
        if let Some(v) = elems.iter().find(|v| v.len() != d) {
            return invalid(format!("element of length {} in rank-{d} ambient", v.len()));
        }
        let mut elems = elems;
        if let Ambient::Residues { modulus } = ambient {
            for v in &mut elems {
                v[0] = v[0].rem_euclid(modulus as i64);
            }
        }
        elems.sort_unstable();
        elems.dedup();
        Ok(GroundSet { ambient, coords: elems.concat() })
    }

    /// `{1, ..., n}`.
    pub fn interval(n: i64) -> GroundSet {
        GroundSet::integers(1..=n)
    }

    fn with_ambient(mut self, ambient: Ambient) -> Result<GroundSet> {
        self.ambient = ambient;
        Ok(self)
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn rank(&self) -> usize {
        self.ambient.rank()
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.rank()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn get(&self, i: usize) -> &[i64] {
        let d = self.rank();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[i64]> + '_ {
        self.coords.chunks_exact(self.rank())
    }

    /// Elements as scalars, for rank-1 ambients.
    pub fn scalars(&self) -> Option<&[i64]> {
        (self.rank() == 1).then_some(&self.coords[..])
    }

    /// Elements as integers; requires the ambient to be `Z`.
    pub fn as_integers(&self) -> Result<&[i64]> {
        if !self.ambient.is_integers() {
            return Err(Error::AmbientMismatch(format!("expected Z, got {}", self.ambient)));
        }
        Ok(&self.coords)
    }

    pub fn to_vectors(&self) -> Vec<Vec<i64>> {
        self.iter().map(|v| v.to_vec()).collect()
    }

    pub fn position(&self, v: &[i64]) -> Option<usize> {
        let (mut lo, mut hi) = (0usize, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.get(mid).cmp(v) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn contains(&self, v: &[i64]) -> bool {
        v.len() == self.rank() && self.position(v).is_some()
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(&vec![0; self.rank()])
    }

    pub fn is_subset(&self, other: &GroundSet) -> bool {
        self.ambient == other.ambient && self.iter().all(|v| other.contains(v))
    }

    /// Elements at the given indices.
    pub fn select(&self, idx: &[usize]) -> GroundSet {
        let mut vecs: Vec<Vec<i64>> = idx.iter().map(|&i| self.get(i).to_vec()).collect();
        vecs.sort_unstable();
        vecs.dedup();
        GroundSet { ambient: self.ambient, coords: vecs.concat() }
    }

    pub fn filter<F: FnMut(&[i64]) -> bool>(&self, mut keep: F) -> GroundSet {
        let mut coords = Vec::new();
        for v in self.iter() {
            if keep(v) {
                coords.extend_from_slice(v);
            }
        }
        GroundSet { ambient: self.ambient, coords }
    }

    pub fn without_zero(&self) -> GroundSet {
        self.filter(|v| v.iter().any(|&x| x != 0))
    }

    pub fn union(&self, other: &GroundSet) -> Result<GroundSet> {
        self.check_same(other)?;
        let mut vecs = self.to_vectors();
        vecs.extend(other.to_vectors());
        GroundSet::from_vectors(self.ambient, vecs)
    }

    pub fn intersection(&self, other: &GroundSet) -> Result<GroundSet> {
        self.check_same(other)?;
        Ok(self.filter(|v| other.contains(v)))
    }

    pub fn minus(&self, other: &GroundSet) -> Result<GroundSet> {
        self.check_same(other)?;
        Ok(self.filter(|v| !other.contains(v)))
    }

    fn check_same(&self, other: &GroundSet) -> Result<()> {
        if self.ambient != other.ambient {
            return Err(Error::AmbientMismatch(format!("{} vs {}", self.ambient, other.ambient)));
        }
        Ok(())
    }

    pub(crate) fn max_abs_coords(&self) -> Vec<u64> {
        let mut m = vec![0u64; self.rank()];
        for v in self.iter() {
            for (j, &x) in v.iter().enumerate() {
                m[j] = m[j].max(x.unsigned_abs());
            }
        }
        m
    }

    /// Size of an element for ordering purposes: `|x|` in `Z`, distance to 0 in `Z/NZ`,
    /// max-norm in `Z^d`.
    pub fn magnitude(&self, v: &[i64]) -> u64 {
        match self.ambient {
            Ambient::Residues { modulus } => {
                let x = v[0] as u64;
                x.min(modulus - x)
            }
            Ambient::Lattice { .. } => v.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0),
        }
    }

    /// `{x + y : x in self, y in other}`.
    pub fn sumset(&self, other: &GroundSet) -> Result<GroundSet> {
        self.combine(other, false, DEFAULT_CAP)
    }

    /// `{x - y : x in self, y in other}`.
    pub fn difference(&self, other: &GroundSet) -> Result<GroundSet> {
        self.combine(other, true, DEFAULT_CAP)
    }

    pub fn sumset_capped(&self, other: &GroundSet, cap: usize) -> Result<GroundSet> {
        self.combine(other, false, cap)
    }

    fn combine(&self, other: &GroundSet, negate: bool, cap: usize) -> Result<GroundSet> {
        let p = Packed::for_combination(&[(self, 1), (other, 1)])?;
        let a = p.values(self);
        let mut b = p.values(other);
        if negate {
            for x in &mut b {
                *x = p.arith.norm(-*x);
            }
        }
        let vals = pairwise_sums(&a, &b, p.arith, cap)?;
        p.to_set(&vals)
    }

    pub fn neg(&self) -> Result<GroundSet> {
        let mut vecs = Vec::with_capacity(self.len());
        for v in self.iter() {
            let w: Option<Vec<i64>> = match self.ambient {
                Ambient::Residues { modulus } => Some(vec![(modulus as i64 - v[0]) % modulus as i64]),
                Ambient::Lattice { .. } => v.iter().map(|x| x.checked_neg()).collect(),
            };
            vecs.push(w.ok_or(Error::Overflow("negation"))?);
        }
        GroundSet::from_vectors(self.ambient, vecs)
    }

    /// `{k·x : x in self}`.
    pub fn dilate(&self, k: i64) -> Result<GroundSet> {
        let mut vecs = Vec::with_capacity(self.len());
        for v in self.iter() {
            let mut w = Vec::with_capacity(v.len());
            for &x in v {
                w.push(match self.ambient {
                    Ambient::Residues { modulus } => {
                        ((x as i128 * k as i128).rem_euclid(modulus as i128)) as i64
                    }
                    _ => x.checked_mul(k).ok_or(Error::Overflow("dilation"))?,
                });
            }
            vecs.push(w);
        }
        GroundSet::from_vectors(self.ambient, vecs)
    }

    pub fn translate(&self, t: &[i64]) -> Result<GroundSet> {
        self.sumset(&GroundSet::from_vectors(self.ambient, vec![t.to_vec()])?)
    }

    /// `hA`; `0A = {0}`.
    pub fn h_fold(&self, h: u32) -> Result<GroundSet> {
        self.n_minus_m(h, 0)
    }

    /// `nA - mA`.
    pub fn n_minus_m(&self, n: u32, m: u32) -> Result<GroundSet> {
        if n as u64 + m as u64 > MAX_FOLD as u64 {
            return invalid(format!("n + m = {} exceeds {MAX_FOLD}", n as u64 + m as u64));
        }
        let zero = GroundSet::from_vectors(self.ambient, vec![vec![0; self.rank()]])?;
        if self.is_empty() && n + m > 0 {
            return Ok(GroundSet::empty(self.ambient));
        }
        let mut acc = zero;
        for _ in 0..n {
            acc = acc.sumset(self)?;
        }
        for _ in 0..m {
            acc = acc.difference(self)?;
        }
        Ok(acc)
    }

    /// `Σ_k(A) = A ∪ 2A ∪ ... ∪ kA`, built layer by layer.
    pub fn sigma_k(&self, k: u32) -> Result<GroundSet> {
        let mut out = GroundSet::empty(self.ambient);
        let mut layer = self.clone();
        for j in 1..=k {
            if j > 1 {
                layer = layer.sumset(self)?;
            }
            out = out.union(&layer)?;
            if out.len() > DEFAULT_CAP {
                return Err(Error::CapExceeded { what: "Σ_k".into(), cap: DEFAULT_CAP as u64 });
            }
        }
        Ok(out)
    }

    /// `Span_k(A) = {Σ ε_a a : ε_a ∈ [-k, k]}`.
    pub fn span(&self, k: u32, cap: usize) -> Result<GroundSet> {
        check_order(k)?;
        let p = Packed::for_combination(&[(self, span_scale(self, k))])?;
        let mut cur = vec![0i128];
        for x in p.values(self) {
            cur = span_step(&cur, x, k, p.arith, cap)
                .ok_or_else(|| Error::CapExceeded { what: "span".into(), cap: cap as u64 })?;
        }
        p.to_set(&cur)
    }

    /// The cube `Q(Λ) = {Σ ε_λ λ : ε ∈ {0,1}}` and whether all `2^|Λ|` sums are distinct.
    pub fn cube(&self) -> Result<(GroundSet, bool)> {
        const CUBE_CAP: usize = 24;
        if self.len() > CUBE_CAP {
            return Err(Error::CapExceeded { what: "cube generators".into(), cap: CUBE_CAP as u64 });
        }
        let p = Packed::for_combination(&[(self, self.len().max(1) as i128)])?;
        let mut sums = vec![0i128];
        for x in p.values(self) {
            let shifted: Vec<i128> = sums.iter().map(|&s| p.arith.norm(s + x)).collect();
            sums.extend(shifted);
        }
        let total = sums.len();
        sums.sort_unstable();
        sums.dedup();
        let proper = sums.len() == total;
        Ok((p.to_set(&sums)?, proper))
    }
}

pub(crate) fn span_scale(s: &GroundSet, k: u32) -> i128 {
    k as i128 * s.len().max(1) as i128
}

/// `∪_{j ∈ [-k,k]} (cur + j·x)`, sorted and deduplicated, or `None` once it
/// grows past `limit`. Shifts are merged one at a time so memory tracks the
/// output rather than `|cur|(2k+1)`.
pub(crate) fn span_step(cur: &[i128], x: i128, k: u32, arith: Arith, limit: usize) -> Option<Vec<i128>> {
    let mut next = cur.to_vec();
    let mut merged = Vec::new();
    for j in (-(k as i128)..=k as i128).filter(|&j| j != 0) {
        let shifted = shift_sorted(cur, j * x, arith);
        merged.clear();
        merged.reserve(next.len() + shifted.len());
        let (mut a, mut b) = (0, 0);
        while a < next.len() || b < shifted.len() {
            let v = if b == shifted.len() || (a < next.len() && next[a] <= shifted[b]) {
                a += 1;
                next[a - 1]
            } else {
                b += 1;
                shifted[b - 1]
            };
            if merged.last() != Some(&v) {
                merged.push(v);
            }
        }
        std::mem::swap(&mut next, &mut merged);
        if next.len() > limit {
            return None;
        }
    }
    (next.len() <= limit).then_some(next)
}

/// `sorted + x`, kept sorted (a rotation in `Z/NZ`).
pub(crate) fn shift_sorted(sorted: &[i128], x: i128, arith: Arith) -> Vec<i128> {
    match arith {
        Arith::Int => sorted.iter().map(|&s| s + x).collect(),
        Arith::Mod(n) => {
            let x = x.rem_euclid(n);
            let split = sorted.partition_point(|&s| s + x < n);
            let mut out = Vec::with_capacity(sorted.len());
            out.extend(sorted[split..].iter().map(|&s| s + x - n));
            out.extend(sorted[..split].iter().map(|&s| s + x));
            out
        }
    }
}

/// Sorted distinct values of `a + b`.
pub(crate) fn pairwise_sums(a: &[i128], b: &[i128], arith: Arith, cap: usize) -> Result<Vec<i128>> {
    if a.is_empty() || b.is_empty() {
        return Ok(Vec::new());
    }
    let (lo, hi) = match arith {
        Arith::Mod(n) => (0, n - 1),
        Arith::Int => (
            a.iter().min().unwrap() + b.iter().min().unwrap(),
            a.iter().max().unwrap() + b.iter().max().unwrap(),
        ),
    };
    let out: Vec<i128> = if hi - lo < (1 << 26) {
        let mut bits = vec![0u64; ((hi - lo) as usize >> 6) + 1];
        for &x in a {
            for &y in b {
                let i = (arith.norm(x + y) - lo) as usize;
                bits[i >> 6] |= 1 << (i & 63);
            }
        }
        let mut out = Vec::new();
        for (w, &word) in bits.iter().enumerate() {
            let mut word = word;
            while word != 0 {
                let t = word.trailing_zeros() as usize;
                out.push(lo + (w * 64 + t) as i128);
                word &= word - 1;
            }
        }
        out
    } else {
        if (a.len() as u128) * (b.len() as u128) > (cap as u128).max(1 << 26) {
            return Err(Error::CapExceeded { what: "sumset pairs".into(), cap: cap as u64 });
        }
        let mut v: Vec<i128> = Vec::with_capacity(a.len() * b.len());
        for &x in a {
            v.extend(b.iter().map(|&y| arith.norm(x + y)));
        }
        v.sort_unstable();
        v.dedup();
        v
    };
    if out.len() > cap {
        return Err(Error::CapExceeded { what: "sumset".into(), cap: cap as u64 });
    }
    Ok(out)
}

/// Counter type for convolutions: machine integers with a big-integer fallback.
pub(crate) trait Count: Clone + PartialEq {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, o: &Self) -> Option<Self>;
    fn mul(&self, o: &Self) -> Option<Self>;
    fn is_zero(&self) -> bool;
}

impl Count for u128 {
    fn zero() -> Self {
        0
    }
    fn one() -> Self {
        1
    }
    fn add(&self, o: &Self) -> Option<Self> {
        self.checked_add(*o)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        self.checked_mul(*o)
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
}

impl Count for BigUint {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn add(&self, o: &Self) -> Option<Self> {
        Some(self + o)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        Some(self * o)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

/// Representation counts of `p_1 + ... + p_k` as sorted `(value, count)` pairs.
/// Returns `None` if a counter overflows.
pub(crate) fn convolve<C: Count>(parts: &[Vec<i128>], arith: Arith) -> Option<Vec<(i128, C)>> {
    if parts.is_empty() {
        return Some(vec![(0, C::one())]);
    }
    if parts.iter().any(|p| p.is_empty()) {
        return Some(Vec::new());
    }
    let dense_len = match arith {
        Arith::Mod(n) => Some(n),
        Arith::Int => {
            let span: i128 = parts
                .iter()
                .map(|p| p.iter().max().unwrap() - p.iter().min().unwrap())
                .sum();
            Some(span + 1)
        }
    }
    .filter(|&len| len <= DENSE_LIMIT);
    if let Some(len) = dense_len {
        let len = len as usize;
        let offset: i128 = match arith {
            Arith::Mod(_) => 0,
            Arith::Int => parts.iter().map(|p| *p.iter().min().unwrap()).sum(),
        };
        let mut cur = vec![C::zero(); len];
        let mut support: Vec<usize> = Vec::new();
        let first_min = match arith {
            Arith::Mod(_) => 0,
            Arith::Int => *parts[0].iter().min().unwrap(),
        };
        // Positions are relative to the running minimum so that the array never shifts.
        let mut running = first_min;
        for &x in &parts[0] {
            let i = (arith.norm(x) - running) as usize;
            if cur[i].is_zero() {
                support.push(i);
            }
            cur[i] = cur[i].add(&C::one())?;
        }
        for part in &parts[1..] {
            let pmin = match arith {
                Arith::Mod(_) => 0,
                Arith::Int => *part.iter().min().unwrap(),
            };
            let mut next = vec![C::zero(); len];
            let mut next_support = Vec::new();
            for &i in &support {
                let c = &cur[i];
                for &y in part {
                    let j = match arith {
                        Arith::Mod(n) => ((i as i128 + y).rem_euclid(n)) as usize,
                        Arith::Int => i + (y - pmin) as usize,
                    };
                    if next[j].is_zero() {
                        next_support.push(j);
                    }
                    next[j] = next[j].add(c)?;
                }
            }
            running += pmin;
            cur = next;
            support = next_support;
        }
        debug_assert!(matches!(arith, Arith::Mod(_)) || running == offset);
        support.sort_unstable();
        return Some(
            support
                .into_iter()
                .map(|i| (i as i128 + offset, cur[i].clone()))
                .collect(),
        );
    }
    let mut cur: HashMap<i128, C> = HashMap::new();
    for &x in &parts[0] {
        let e = cur.entry(x).or_insert_with(C::zero);
        *e = e.add(&C::one())?;
    }
    for part in &parts[1..] {
        let mut next: HashMap<i128, C> = HashMap::with_capacity(cur.len() * part.len().min(64));
        for (x, c) in &cur {
            for &y in part {
                let e = next.entry(arith.norm(x + y)).or_insert_with(C::zero);
                *e = e.add(c)?;
            }
        }
        cur = next;
    }
    let mut out: Vec<(i128, C)> = cur.into_iter().collect();
    out.sort_unstable_by_key(|(x, _)| *x);
    Some(out)
}

/// Representation counts with automatic big-integer fallback.
pub(crate) fn convolve_big(parts: &[Vec<i128>], arith: Arith) -> Vec<(i128, BigUint)> {
    match convolve::<u128>(parts, arith) {
        Some(v) => v.into_iter().map(|(x, c)| (x, BigUint::from(c))).collect(),
        None => convolve::<BigUint>(parts, arith).expect("big counters do not overflow"),
    }
}

/// A representation function `x ↦ r(x)` with finite support.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepFn {
    support: GroundSet,
    counts: Vec<BigUint>,
}

impl RepFn {
    /// `r_{A_1 ± ... ± A_k}`; `negate[i]` selects subtraction of part `i`.
    pub fn of_combination(parts: &[&GroundSet], negate: &[bool]) -> Result<RepFn> {
        if parts.is_empty() || parts.len() != negate.len() {
            return invalid("need one sign per part");
        }
        let scaled: Vec<(&GroundSet, i128)> = parts.iter().map(|p| (*p, 1)).collect();
        let p = Packed::for_combination(&scaled)?;
        let vals: Vec<Vec<i128>> = parts
            .iter()
            .zip(negate)
            .map(|(s, &neg)| {
                p.values(s)
                    .into_iter()
                    .map(|x| if neg { p.arith.norm(-x) } else { x })
                    .collect()
            })
            .collect();
        let entries = convolve_big(&vals, p.arith);
        let keys: Vec<i128> = entries.iter().map(|(x, _)| *x).collect();
        Ok(RepFn { support: p.to_set(&keys)?, counts: entries.into_iter().map(|(_, c)| c).collect() })
    }

    /// `r_{A_1 + ... + A_k}`.
    pub fn of_sum(parts: &[&GroundSet]) -> Result<RepFn> {
        RepFn::of_combination(parts, &vec![false; parts.len()])
    }

    /// `r_{kA}`, counting ordered `k`-tuples.
    pub fn k_fold(a: &GroundSet, k: u32) -> Result<RepFn> {
        check_order(k)?;
        RepFn::of_sum(&vec![a; k as usize])
    }

    /// `r_{A-B}`.
    pub fn difference(a: &GroundSet, b: &GroundSet) -> Result<RepFn> {
        RepFn::of_combination(&[a, b], &[false, true])
    }

    pub fn support(&self) -> &GroundSet {
        &self.support
    }

    pub fn counts(&self) -> &[BigUint] {
        &self.counts
    }

    pub fn get(&self, v: &[i64]) -> BigUint {
        self.support.position(v).map(|i| self.counts[i].clone()).unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i64], &BigUint)> {
        self.support.iter().zip(self.counts.iter())
    }

    pub fn total(&self) -> BigUint {
        self.counts.iter().sum()
    }

    pub fn max(&self) -> BigUint {
        self.counts.iter().max().cloned().unwrap_or_default()
    }

    pub fn sum_of_squares(&self) -> BigUint {
        self.counts.iter().map(|c| c * c).sum()
    }

    /// Counts as `u64`, if they all fit.
    pub fn small_counts(&self) -> Option<Vec<u64>> {
        self.counts.iter().map(|c| c.to_u64()).collect()
    }
}

/// Prime-exponent embedding of a set of positive integers into `Z^r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MultEmbedding {
    pub primes: Vec<u64>,
    pub set: GroundSet,
    /// `(n, exponent vector of n)` in the order of the input set.
    pub pairs: Vec<(i64, Vec<i64>)>,
}

/// `a ↦ (v_p(a))_p`, turning products into sums.
pub fn mult_embed(a: &GroundSet) -> Result<MultEmbedding> {
    let xs = a.as_integers()?;
    if let Some(&x) = xs.iter().find(|&&x| x <= 0) {
        return invalid(format!("multiplicative embedding needs positive integers, got {x}"));
    }
    let factored: Vec<Vec<(u64, u32)>> = xs.iter().map(|&x| factorize(x as u64)).collect();
    let mut primes: Vec<u64> = factored.iter().flatten().map(|&(p, _)| p).collect();
    primes.sort_unstable();
    primes.dedup();
    let rank = primes.len().max(1);
    let pairs: Vec<(i64, Vec<i64>)> = xs
        .iter()
        .zip(&factored)
        .map(|(&x, f)| {
            let mut v = vec![0i64; rank];
            for &(p, e) in f {
                let j = primes.binary_search(&p).expect("prime collected");
                v[j] = e as i64;
            }
            (x, v)
        })
        .collect();
    let set = GroundSet::from_vectors(
        Ambient::Lattice { rank },
        pairs.iter().map(|(_, v)| v.clone()).collect(),
    )?;
    Ok(MultEmbedding { primes, set, pairs })
}

impl fmt::Display for GroundSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            if v.len() == 1 {
                write!(f, "{}", v[0])?;
            } else {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "({})", parts.join(","))?;
            }
        }
        write!(f, "}}")
    }
}
