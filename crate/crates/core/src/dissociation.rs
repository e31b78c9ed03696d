//! Dissociativity tests, certificates and additive dimension bounds.
//!
//! A set `Λ` is `k`-dissociated when `Σ ε_λ λ = 0` with `ε_λ ∈ [-k, k]` forces
//! `ε = 0`. For `k = 1` this is distinctness of the `2^|Λ|` subset sums.

use num_bigint::BigUint;
use num_traits::One;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::groundset::{check_order, shift_sorted, span_scale, span_step, Arith, GroundSet, Packed};
use crate::numbers::ceil_log;
use crate::Budget;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Dissociated,
    Relation,
}

/// Outcome of a dissociativity test. `relation` is aligned with the sorted
/// elements of the tested set and is empty for a `Dissociated` verdict.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub k: u32,
    pub relation: Vec<i64>,
    pub method: String,
    pub states_visited: u64,
}

impl Certificate {
    pub fn is_dissociated(&self) -> bool {
        self.verdict == Verdict::Dissociated
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("certificate serialises")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Certificate> {
        serde_json::from_slice(bytes).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })
    }

    /// Check the certificate against `set`. Relations are checked by direct
    /// summation; a dissociated verdict is re-derived by incremental span
    /// extension, which shares no code with the merge or split searches.
    pub fn verify(&self, set: &GroundSet, budget: Budget) -> Result<()> {
        check_order(self.k).map_err(|e| Error::Verification(e.to_string()))?;
        match self.verdict {
            Verdict::Relation => {
                if self.relation.len() != set.len() {
                    return Err(Error::Verification("relation length differs from set size".into()));
                }
                if self.relation.iter().all(|&e| e == 0) {
                    return Err(Error::Verification("relation is identically zero".into()));
                }
                if self.relation.iter().any(|e| e.unsigned_abs() > self.k as u64) {
                    return Err(Error::Verification("coefficient outside [-k, k]".into()));
                }
                if !relation_sums_to_zero(set, &self.relation) {
                    return Err(Error::Verification("relation does not sum to zero".into()));
                }
                Ok(())
            }
            Verdict::Dissociated => {
                if !self.relation.is_empty() {
                    return Err(Error::Verification("dissociated verdict carries a relation".into()));
                }
                let p = Packed::for_combination(&[(set, span_scale(set, self.k))])?;
                let mut ext = Extender::new(self.k, p.arith, Mode::SortedSpan, None);
                let mut visited = 0u64;
                for x in p.values(set) {
                    // The next span is at most 2k+1 times larger; refuse before allocating it.
                    let next = (ext.size() as u128 * (2 * self.k as u128 + 1)).min(u64::MAX as u128) as u64;
                    if visited.saturating_add(next) > budget.0 {
                        return Err(Error::BudgetExceeded { budget: budget.0, visited: visited.saturating_add(next) });
                    }
                    if !ext.can_add(x) {
                        return Err(Error::Verification("set admits a relation".into()));
                    }
                    ext.add(x);
                    visited += ext.size() as u64;
                }
                Ok(())
            }
        }
    }
}

/// `Σ ε_i λ_i == 0` evaluated exactly in the ambient group.
pub fn relation_sums_to_zero(set: &GroundSet, eps: &[i64]) -> bool {
    let d = set.rank();
    let mut acc = vec![0i128; d];
    for (v, &e) in set.iter().zip(eps) {
        for j in 0..d {
            acc[j] += e as i128 * v[j] as i128;
        }
    }
    match set.ambient().modulus() {
        Some(n) => acc.iter().all(|x| x.rem_euclid(n as i128) == 0),
        None => acc.iter().all(|&x| x == 0),
    }
}

/// Incremental test for extending a `k`-dissociated set.
#[derive(Clone, Debug)]
pub(crate) struct Extender {
    k: u32,
    arith: Arith,
    table: Table,
}

#[derive(Clone, Debug)]
pub(crate) enum Table {
    /// Sorted subset sums (`k = 1` only).
    Sums(Vec<i128>),
    /// Sorted `Span_k` of the current set.
    Span(Vec<i128>),
    /// `Span_k` as a bitset over `[lo, lo + nbits)` (integers) or `Z/NZ`.
    Bits { lo: i128, nbits: usize, bits: Vec<u64> },
}

/// Which table an [`Extender`] keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    /// Always a sorted span.
    SortedSpan,
    /// A span, as a bitset when the value range allows.
    Span,
    /// Like `Span`, but subset sums instead of a sorted span when `k = 1`.
    Auto,
}

const BITSET_LIMIT: i128 = 1 << 27;

impl Extender {
    /// `radius` bounds the absolute values in `Span_k` for the integer bitset.
    pub(crate) fn new(k: u32, arith: Arith, mode: Mode, radius: Option<i128>) -> Extender {
        let table = if mode == Mode::SortedSpan {
            Table::Span(vec![0])
        } else {
            let width = match arith {
                Arith::Mod(n) => Some(n),
                Arith::Int => radius.map(|r| 2 * r + 1),
            };
            match width {
                Some(w) if w <= BITSET_LIMIT => {
                    let lo = match arith {
                        Arith::Mod(_) => 0,
                        Arith::Int => -radius.unwrap_or(0),
                    };
                    let nbits = w as usize;
                    let mut bits = vec![0u64; nbits.div_ceil(64)];
                    let i = (0 - lo) as usize;
                    bits[i >> 6] |= 1 << (i & 63);
                    Table::Bits { lo, nbits, bits }
                }
                _ if k == 1 && mode == Mode::Auto => Table::Sums(vec![0]),
                _ => Table::Span(vec![0]),
            }
        };
        Extender { k, arith, table }
    }

    pub(crate) fn size(&self) -> usize {
        match &self.table {
            Table::Sums(v) | Table::Span(v) => v.len(),
            Table::Bits { bits, .. } => bits.len(),
        }
    }

    fn bit(&self, lo: i128, nbits: usize, bits: &[u64], x: i128) -> bool {
        let i = self.arith.norm(x) - lo;
        if i < 0 || i as usize >= nbits {
            return false;
        }
        let i = i as usize;
        bits[i >> 6] >> (i & 63) & 1 == 1
    }

    /// Membership in the current span; not available for subset-sum tables.
    pub(crate) fn contains(&self, x: i128) -> bool {
        match &self.table {
            Table::Sums(_) => panic!("subset-sum table has no span membership"),
            Table::Span(span) => span.binary_search(&self.arith.norm(x)).is_ok(),
            Table::Bits { lo, nbits, bits } => self.bit(*lo, *nbits, bits, x),
        }
    }

    /// Whether the current set together with `x` is still `k`-dissociated.
    pub(crate) fn can_add(&self, x: i128) -> bool {
        if self.arith.norm(x) == 0 {
            return false;
        }
        match &self.table {
            Table::Sums(sums) => {
                let shifted = shift_sorted(sums, x, self.arith);
                !sorted_intersect(sums, &shifted)
            }
            Table::Span(span) => {
                (1..=self.k as i128).all(|j| span.binary_search(&self.arith.norm(j * x)).is_err())
            }
            Table::Bits { lo, nbits, bits } => (1..=self.k as i128).all(|j| !self.bit(*lo, *nbits, bits, j * x)),
        }
    }

    pub(crate) fn add(&mut self, x: i128) {
        let arith = self.arith;
        let k = self.k;
        match &mut self.table {
            Table::Sums(sums) => {
                let shifted = shift_sorted(sums, x, arith);
                let mut merged = Vec::with_capacity(sums.len() * 2);
                let (mut i, mut j) = (0, 0);
                while i < sums.len() || j < shifted.len() {
                    if j == shifted.len() || (i < sums.len() && sums[i] <= shifted[j]) {
                        merged.push(sums[i]);
                        i += 1;
                    } else {
                        merged.push(shifted[j]);
                        j += 1;
                    }
                }
                *sums = merged;
            }
            Table::Span(span) => *span = span_step(span, x, k, arith, usize::MAX).expect("no limit"),
            Table::Bits { nbits, bits, .. } => {
                let old = bits.clone();
                let n = *nbits as i128;
                for j in -(k as i128)..=(k as i128) {
                    if j == 0 {
                        continue;
                    }
                    let shift = j * x;
                    match arith {
                        Arith::Int => or_shifted(bits, &old, shift, *nbits),
                        Arith::Mod(_) => {
                            let s = shift.rem_euclid(n);
                            or_shifted(bits, &old, s, *nbits);
                            or_shifted(bits, &old, s - n, *nbits);
                        }
                    }
                }
            }
        }
    }
}

/// `dst |= src << shift` on bit positions `[0, nbits)`; negative shifts move down.
fn or_shifted(dst: &mut [u64], src: &[u64], shift: i128, nbits: usize) {
    let len = src.len() as i128;
    let words = shift.div_euclid(64);
    let bit = shift.rem_euclid(64) as u32;
    for (i, &w) in src.iter().enumerate() {
        if w == 0 {
            continue;
        }
        let t = i as i128 + words;
        if (0..len).contains(&t) {
            dst[t as usize] |= w << bit;
        }
        if bit > 0 && (0..len).contains(&(t + 1)) {
            dst[(t + 1) as usize] |= w >> (64 - bit);
        }
    }
    let tail = nbits % 64;
    if tail != 0 {
        if let Some(last) = dst.last_mut() {
            *last &= (1u64 << tail) - 1;
        }
    }
}

fn sorted_intersect(a: &[i128], b: &[i128]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

fn zero_relation(set: &GroundSet, k: u32) -> Option<Certificate> {
    let zero = vec![0i64; set.rank()];
    set.position(&zero).map(|i| {
        let mut relation = vec![0; set.len()];
        relation[i] = 1;
        Certificate { verdict: Verdict::Relation, k, relation, method: "zero-element".into(), states_visited: 1 }
    })
}

/// Decide whether `set` is `k`-dissociated, with a checkable certificate.
pub fn is_k_dissociated(set: &GroundSet, k: u32, budget: Budget) -> Result<Certificate> {
    check_order(k)?;
    let n = set.len();
    if n == 0 {
        return Ok(Certificate {
            verdict: Verdict::Dissociated,
            k,
            relation: vec![],
            method: "empty".into(),
            states_visited: 0,
        });
    }
    if let Some(c) = zero_relation(set, k) {
        return Ok(c);
    }
    let p = Packed::for_combination(&[(set, span_scale(set, k))])?;
    let vals = p.values(set);
    if k == 1 && n < 63 && (1u64 << n) <= budget.0 {
        return Ok(subset_sum_merge(&vals, p.arith));
    }
    let half = n.div_ceil(2) as u32;
    let side = (2 * k as u64 + 1).checked_pow(half);
    match side {
        Some(s) if s <= budget.0 => Ok(meet_in_the_middle(&vals, k, p.arith)),
        _ if k == 1 => subset_sum_budgeted(&vals, p.arith, budget),
        _ => Err(Error::BudgetExceeded { budget: budget.0, visited: 0 }),
    }
}

fn subset_sum_budgeted(vals: &[i128], arith: Arith, budget: Budget) -> Result<Certificate> {
    // Runs the merge while it fits; an early relation is still a valid answer.
    let mut fit = 0;
    while fit < vals.len() && fit < 63 && (1u64 << (fit + 1)) <= budget.0 {
        fit += 1;
    }
    let c = subset_sum_merge(&vals[..fit], arith);
    if c.verdict == Verdict::Relation {
        let mut relation = c.relation;
        relation.resize(vals.len(), 0);
        return Ok(Certificate { relation, ..c });
    }
    Err(Error::BudgetExceeded { budget: budget.0, visited: c.states_visited })
}

/// Subset sums with membership masks, merged one element at a time.
fn subset_sum_merge(vals: &[i128], arith: Arith) -> Certificate {
    let n = vals.len();
    let mut sums: Vec<(i128, u64)> = vec![(0, 0)];
    let mut visited = 1u64;
    for (i, &x) in vals.iter().enumerate() {
        let mut shifted: Vec<(i128, u64)> =
            sums.iter().map(|&(s, m)| (arith.norm(s + x), m | (1 << i))).collect();
        if matches!(arith, Arith::Mod(_)) {
            shifted.sort_unstable_by_key(|p| p.0);
        }
        let mut merged = Vec::with_capacity(sums.len() * 2);
        let (mut a, mut b) = (0, 0);
        while a < sums.len() || b < shifted.len() {
            if a < sums.len() && b < shifted.len() && sums[a].0 == shifted[b].0 {
                let m1 = shifted[b].1;
                let m2 = sums[a].1;
                let relation = (0..n)
                    .map(|j| ((m1 >> j) & 1) as i64 - ((m2 >> j) & 1) as i64)
                    .collect();
                return Certificate {
                    verdict: Verdict::Relation,
                    k: 1,
                    relation,
                    method: "subset-sum-merge".into(),
                    states_visited: visited,
                };
            }
            if b == shifted.len() || (a < sums.len() && sums[a].0 < shifted[b].0) {
                merged.push(sums[a]);
                a += 1;
            } else {
                merged.push(shifted[b]);
                b += 1;
            }
        }
        visited += merged.len() as u64;
        sums = merged;
    }
    Certificate {
        verdict: Verdict::Dissociated,
        k: 1,
        relation: vec![],
        method: "subset-sum-merge".into(),
        states_visited: visited,
    }
}

/// All coefficient vectors of `vals` in `[-k, k]`, indexed in mixed radix `2k+1`.
fn half_sums(vals: &[i128], k: u32, arith: Arith) -> Vec<i128> {
    let k = k as i128;
    let mut out = vec![0i128];
    for &e in vals {
        let mut next = Vec::with_capacity(out.len() * (2 * k as usize + 1));
        for t in -k..=k {
            next.extend(out.iter().map(|&v| arith.norm(v + t * e)));
        }
        out = next;
    }
    out
}

fn decode(mut idx: usize, len: usize, k: u32) -> Vec<i64> {
    let base = 2 * k as usize + 1;
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push((idx % base) as i64 - k as i64);
        idx /= base;
    }
    out
}

fn zero_index(len: usize, k: u32) -> usize {
    let base = 2 * k as usize + 1;
    (0..len).fold((0, 1), |(acc, w), _| (acc + k as usize * w, w * base)).0
}

fn meet_in_the_middle(vals: &[i128], k: u32, arith: Arith) -> Certificate {
    let h = vals.len().div_ceil(2);
    let (lv, rv) = vals.split_at(h);
    let left = half_sums(lv, k, arith);
    let right = half_sums(rv, k, arith);
    let visited = (left.len() + right.len()) as u64;
    let mut sorted: Vec<(i128, usize)> = left.iter().copied().zip(0..).collect();
    sorted.sort_unstable();
    let (z_left, z_right) = (zero_index(lv.len(), k), zero_index(rv.len(), k));
    for (j, &v) in right.iter().enumerate() {
        let target = arith.norm(-v);
        let start = sorted.partition_point(|&(x, _)| x < target);
        for &(x, i) in &sorted[start..] {
            if x != target {
                break;
            }
            if i == z_left && j == z_right {
                continue;
            }
            let mut relation = decode(i, lv.len(), k);
            relation.extend(decode(j, rv.len(), k));
            return Certificate {
                verdict: Verdict::Relation,
                k,
                relation,
                method: "meet-in-the-middle".into(),
                states_visited: visited,
            };
        }
    }
    Certificate {
        verdict: Verdict::Dissociated,
        k,
        relation: vec![],
        method: "meet-in-the-middle".into(),
        states_visited: visited,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreedyOrder {
    DescAbs,
    AscAbs,
    Given,
}

/// Element indices of `set` in the requested order (ties by stored order).
pub fn ordered_indices(set: &GroundSet, order: GreedyOrder) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..set.len()).collect();
    match order {
        GreedyOrder::DescAbs => idx.sort_by_key(|&i| std::cmp::Reverse(set.magnitude(set.get(i)))),
        GreedyOrder::AscAbs => idx.sort_by_key(|&i| set.magnitude(set.get(i))),
        GreedyOrder::Given => {}
    }
    idx
}

pub(crate) struct Prepared {
    pub packed: Packed,
    pub vals: Vec<i128>,
    pub radius: Option<i128>,
}

pub(crate) fn prepare(set: &GroundSet, k: u32) -> Result<Prepared> {
    let packed = Packed::for_combination(&[(set, span_scale(set, k))])?;
    let vals = packed.values(set);
    let radius = match packed.arith {
        Arith::Int => Some(k as i128 * vals.iter().map(|v| v.abs()).sum::<i128>()),
        Arith::Mod(_) => None,
    };
    Ok(Prepared { packed, vals, radius })
}

impl Prepared {
    pub(crate) fn span_extender(&self, k: u32) -> Extender {
        Extender::new(k, self.packed.arith, Mode::Span, self.radius)
    }

    pub(crate) fn extender(&self, k: u32) -> Extender {
        Extender::new(k, self.packed.arith, Mode::Auto, self.radius)
    }
}

/// Greedy maximal `k`-dissociated subset, scanning elements in `order`.
pub fn greedy_dissociated(set: &GroundSet, k: u32, order: GreedyOrder) -> Result<GroundSet> {
    greedy_in_order(set, k, &ordered_indices(set, order)).map(|idx| set.select(&idx))
}

/// Greedy over an explicit index order; returns chosen indices.
pub fn greedy_in_order(set: &GroundSet, k: u32, order: &[usize]) -> Result<Vec<usize>> {
    check_order(k)?;
    let prep = prepare(set, k)?;
    let mut ext = prep.extender(k);
    let mut chosen = Vec::new();
    for &i in order {
        if ext.can_add(prep.vals[i]) {
            ext.add(prep.vals[i]);
            chosen.push(i);
        }
    }
    Ok(chosen)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DimKind {
    #[serde(rename = "dim_k")]
    Dim,
    #[serde(rename = "d_k")]
    D,
    #[serde(rename = "d*_k")]
    DStar,
}

/// Certified bounds on one of the dimension-type invariants.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionBounds {
    pub kind: DimKind,
    pub k: u32,
    pub lower: u64,
    pub upper: u64,
    pub witness_lower: Option<GroundSet>,
    pub witness_upper: Option<GroundSet>,
    pub exact: bool,
    pub states_visited: u64,
}

impl DimensionBounds {
    pub fn value(&self) -> Option<u64> {
        self.exact.then_some(self.lower)
    }
}

/// `⌈log_{2k+1} n⌉`.
pub fn log_lower_bound(n: usize, k: u32) -> u64 {
    ceil_log(2 * k as u64 + 1, &BigUint::from(n))
}

/// Largest `d` for which `d` elements of `set` could carry `(k+1)^d` distinct
/// nonnegative combinations.
fn counting_upper_bound(set: &GroundSet, k: u32, order: &[usize]) -> u64 {
    let n = order.len();
    let kk = BigUint::from(k as u64 + 1);
    let d = set.rank();
    let mut best = 0u64;
    let mut sums = vec![0u128; d];
    let mut pow = BigUint::one();
    for (t, &i) in order.iter().enumerate() {
        let v = set.get(i);
        for j in 0..d {
            sums[j] += v[j].unsigned_abs() as u128;
        }
        pow *= &kk;
        let room = match set.ambient().modulus() {
            Some(m) => BigUint::from(m),
            None => sums.iter().fold(BigUint::one(), |acc, &s| acc * (BigUint::from(s) * (2 * k as u64) + 1u32)),
        };
        if pow <= room {
            best = t as u64 + 1;
        }
    }
    best.min(n as u64)
}

struct Search<'a> {
    vals: &'a [i128],
    best: Vec<usize>,
    visited: u64,
    budget: u64,
    aborted: bool,
}

impl Search<'_> {
    fn expand(&mut self, chosen: &mut Vec<usize>, ext: &Extender, cands: &[usize]) {
        if chosen.len() > self.best.len() {
            self.best = chosen.clone();
        }
        for (pos, &c) in cands.iter().enumerate() {
            if self.aborted || chosen.len() + (cands.len() - pos) <= self.best.len() {
                return;
            }
            let mut child = ext.clone();
            child.add(self.vals[c]);
            self.visited += child.size() as u64 + (cands.len() - pos) as u64;
            if self.visited > self.budget {
                self.aborted = true;
                return;
            }
            let next: Vec<usize> =
                cands[pos + 1..].iter().copied().filter(|&y| child.can_add(self.vals[y])).collect();
            chosen.push(c);
            self.expand(chosen, &child, &next);
            chosen.pop();
        }
    }
}

/// `dim_k(A)`: largest `k`-dissociated subset, by branch and bound over
/// elements in descending magnitude. Bounds are certified when the budget runs out.
pub fn dim_k_exact(set: &GroundSet, k: u32, budget: Budget) -> Result<DimensionBounds> {
    check_order(k)?;
    let prep = prepare(set, k)?;
    let order: Vec<usize> = ordered_indices(set, GreedyOrder::DescAbs)
        .into_iter()
        .filter(|&i| prep.packed.arith.norm(prep.vals[i]) != 0)
        .collect();
    let greedy = {
        let mut ext = prep.extender(k);
        let mut chosen = Vec::new();
        for &i in &order {
            if ext.can_add(prep.vals[i]) {
                ext.add(prep.vals[i]);
                chosen.push(i);
            }
        }
        chosen
    };
    let counting = counting_upper_bound(set, k, &order);
    let mut search = Search { vals: &prep.vals, best: greedy, visited: 0, budget: budget.0, aborted: false };
    if (search.best.len() as u64) < counting {
        let root = prep.extender(k);
        search.expand(&mut Vec::new(), &root, &order);
    }
    let lower_set = set.select(&search.best);
    let lower = search.best.len() as u64;
    if search.aborted {
        Ok(DimensionBounds {
            kind: DimKind::Dim,
            k,
            lower,
            upper: counting.max(lower),
            witness_lower: Some(lower_set),
            witness_upper: None,
            exact: false,
            states_visited: search.visited,
        })
    } else {
        Ok(DimensionBounds {
            kind: DimKind::Dim,
            k,
            lower,
            upper: lower,
            witness_lower: Some(lower_set.clone()),
            witness_upper: Some(lower_set),
            exact: true,
            states_visited: search.visited,
        })
    }
}

/// Whether every element of `set` lies in `Span_k(spanner)`.
pub fn spans(spanner: &GroundSet, set: &GroundSet, k: u32) -> Result<bool> {
    let p = Packed::for_combination(&[(spanner, span_scale(spanner, k)), (set, 1)])?;
    let vals = p.values(spanner);
    let radius = k as i128 * vals.iter().map(|v| v.abs()).sum::<i128>();
    let mut ext = Extender::new(k, p.arith, Mode::Span, Some(radius));
    for x in vals {
        ext.add(x);
    }
    Ok(p.values(set).into_iter().all(|x| ext.contains(x)))
}

/// Greedy spanning subset: keep `a` whenever it is not yet in `Span_k`.
fn greedy_spanning(prep: &Prepared, set: &GroundSet, k: u32) -> Vec<usize> {
    let mut ext = prep.span_extender(k);
    let mut chosen = Vec::new();
    for i in ordered_indices(set, GreedyOrder::DescAbs) {
        if !ext.contains(prep.vals[i]) {
            ext.add(prep.vals[i]);
            chosen.push(i);
        }
    }
    chosen
}

/// `d_k(A)`: smallest `S ⊆ A` with `A ⊆ Span_k(S)`, by increasing cardinality.
pub fn d_k_exact(set: &GroundSet, k: u32, budget: Budget) -> Result<DimensionBounds> {
    check_order(k)?;
    let with_zero = set.len() + usize::from(!set.contains_zero());
    let log_lower = log_lower_bound(with_zero, k);
    let prep = prepare(set, k)?;
    let greedy = greedy_spanning(&prep, set, k);
    let upper = greedy.len() as u64;
    let cands: Vec<usize> = ordered_indices(set, GreedyOrder::DescAbs)
        .into_iter()
        .filter(|&i| prep.packed.arith.norm(prep.vals[i]) != 0)
        .collect();
    let mut search = SpanSearch { prep: &prep, cands: &cands, visited: 0, budget: budget.0 };
    let mut lower = log_lower.min(upper);
    let mut found: Option<Vec<usize>> = None;
    let mut aborted = false;
    for s in lower as usize..upper as usize {
        let mut chosen = Vec::with_capacity(s);
        match search.run(0, s, &prep.span_extender(k), &mut chosen) {
            Some(true) => {
                found = Some(chosen);
                break;
            }
            Some(false) => lower = s as u64 + 1,
            None => {
                aborted = true;
                break;
            }
        }
    }
    let visited = search.visited;
    let (upper, witness_upper) = match found {
        Some(idx) => (idx.len() as u64, set.select(&idx)),
        None => (upper, set.select(&greedy)),
    };
    let exact = !aborted;
    Ok(DimensionBounds {
        kind: DimKind::D,
        k,
        lower: if exact { upper } else { lower },
        upper,
        witness_lower: None,
        witness_upper: Some(witness_upper),
        exact,
        states_visited: visited,
    })
}

struct SpanSearch<'a> {
    prep: &'a Prepared,
    cands: &'a [usize],
    visited: u64,
    budget: u64,
}

impl SpanSearch<'_> {
    /// Look for `s` more elements from `cands[from..]` whose span covers the set.
    /// `None` means the budget ran out.
    fn run(&mut self, from: usize, s: usize, ext: &Extender, chosen: &mut Vec<usize>) -> Option<bool> {
        if s == 0 {
            return Some(self.prep.vals.iter().all(|&x| ext.contains(x)));
        }
        for pos in from..self.cands.len() {
            if self.cands.len() - pos < s {
                break;
            }
            let c = self.cands[pos];
            let mut next = ext.clone();
            next.add(self.prep.vals[c]);
            self.visited += next.size() as u64;
            if self.visited > self.budget {
                return None;
            }
            chosen.push(c);
            match self.run(pos + 1, s - 1, &next, chosen) {
                Some(true) => return Some(true),
                None => return None,
                Some(false) => {}
            }
            chosen.pop();
        }
        Some(false)
    }
}

/// Bounds on `d*_k(A)` (spanning sets drawn from the whole group).
///
/// The upper bound is `d_k(A)`. The lower bound is the larger of
/// `⌈log_{2k+1}|A ∪ {0}|⌉` and the count forced by a dissociated witness:
/// if `Λ ⊆ A` is `l`-dissociated with `|Λ| = d` and `A ⊆ Span_k(S)` then the
/// `(l+1)^d` sums `Σ ω_λ λ`, `ω ∈ [0,l]`, are distinct and lie in
/// `Span_{lkd}(S)`, so `(l+1)^d <= (2lkd+1)^{|S|}`.
pub fn d_star_bounds(set: &GroundSet, k: u32, budget: Budget) -> Result<DimensionBounds> {
    let d = d_k_exact(set, k, budget)?;
    let dim1 = dim_k_exact(set, 1, budget)?;
    let dimk = if k == 1 { dim1.clone() } else { dim_k_exact(set, k, budget)? };
    let with_zero = set.len() + usize::from(!set.contains_zero());
    let mut lower = log_lower_bound(with_zero, k);
    let mut witness = None;
    for (l, w) in [(1u32, &dim1), (k, &dimk)] {
        let dd = w.lower;
        if dd == 0 {
            continue;
        }
        let base = 2 * l as u64 * k as u64 * dd + 1;
        let need = ceil_log(base, &BigUint::from(l as u64 + 1).pow(dd as u32));
        if need > lower {
            lower = need;
            witness = w.witness_lower.clone();
        }
    }
    let lower = lower.min(d.upper);
    Ok(DimensionBounds {
        kind: DimKind::DStar,
        k,
        lower,
        upper: d.upper,
        witness_lower: witness,
        witness_upper: d.witness_upper,
        exact: lower == d.upper,
        states_visited: d.states_visited + dim1.states_visited + dimk.states_visited,
    })
}

/// A dissociated subset of `Σ_n(Λ)` built from random `n`-element subsets of an
/// `l`-dissociated `Λ`. Each candidate column sum is kept only if the set stays
/// dissociated; the final set is re-verified.
pub fn coin_weighing_dissociated(
    lambda: &GroundSet,
    l: u32,
    n: usize,
    target: usize,
    seed: u64,
    trials: u32,
    budget: Budget,
) -> Result<(GroundSet, Certificate)> {
    if n == 0 || n > lambda.len() {
        return invalid("need 1 <= n <= |Λ|");
    }
    let cert = is_k_dissociated(lambda, l, budget)?;
    if !cert.is_dissociated() {
        return Err(Error::Precondition(format!("Λ is not {l}-dissociated")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rank = lambda.rank();
    let mut chosen: Vec<Vec<i64>> = Vec::new();
    for _ in 0..trials {
        if chosen.len() >= target {
            break;
        }
        let cols = sample(&mut rng, lambda.len(), n);
        let mut v = vec![0i64; rank];
        for i in cols.iter() {
            for (j, &x) in lambda.get(i).iter().enumerate() {
                v[j] = v[j].checked_add(x).ok_or(Error::Overflow("column sum"))?;
            }
        }
        let mut cand = chosen.clone();
        cand.push(v);
        let s = GroundSet::from_vectors(lambda.ambient(), cand.clone())?;
        if s.len() == cand.len() && is_k_dissociated(&s, 1, budget)?.is_dissociated() {
            chosen = cand;
        }
    }
    if chosen.len() < target {
        return Err(Error::TrialsExhausted(trials));
    }
    let s = GroundSet::from_vectors(lambda.ambient(), chosen)?;
    let cert = is_k_dissociated(&s, 1, budget)?;
    cert.verify(&s, budget)?;
    Ok((s, cert))
}
