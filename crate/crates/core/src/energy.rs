//! Higher energies `T_k`, mixed energies and energy-weighted dimension.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::dissociation::{dim_k_exact, log_lower_bound};
use crate::error::{invalid, Error, Result};
use crate::groundset::{convolve, convolve_big, mult_embed, Ambient, Arith, Count, GroundSet, Packed, RepFn};
use crate::Budget;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Add,
    Mul,
}

impl std::str::FromStr for Op {
    type Err = Error;
    fn from_str(s: &str) -> Result<Op> {
        match s {
            "add" | "+" => Ok(Op::Add),
            "mul" | "x" | "*" => Ok(Op::Mul),
            _ => invalid(format!("unknown operation {s:?}")),
        }
    }
}

/// An energy value as it appears in reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyValue {
    pub value_dec: String,
}

impl From<&BigUint> for EnergyValue {
    fn from(v: &BigUint) -> Self {
        EnergyValue { value_dec: v.to_str_radix(10) }
    }
}

fn sum_of_squares<C: Count>(entries: &[(i128, C)]) -> Option<C> {
    let mut acc = C::zero();
    for (_, c) in entries {
        acc = acc.add(&c.mul(c)?)?;
    }
    Some(acc)
}

fn energy_of(parts: &[Vec<i128>], arith: Arith) -> BigUint {
    if let Some(v) = convolve::<u128>(parts, arith).and_then(|e| sum_of_squares(&e)) {
        return BigUint::from(v);
    }
    let e = convolve::<BigUint>(parts, arith).expect("big counters do not overflow");
    sum_of_squares(&e).expect("big counters do not overflow")
}

/// Multiplicative representation counts in `Z/NZ`.
fn convolve_mul_mod(parts: &[Vec<i128>], n: i128) -> Vec<(i128, BigUint)> {
    let mut cur: std::collections::BTreeMap<i128, BigUint> = std::collections::BTreeMap::new();
    cur.insert(1 % n, BigUint::from(1u32));
    for part in parts {
        let mut next = std::collections::BTreeMap::new();
        for (x, c) in &cur {
            for &y in part {
                *next.entry((x * y).rem_euclid(n)).or_insert_with(BigUint::default) += c;
            }
        }
        cur = next;
    }
    cur.into_iter().collect()
}

/// Lift `set` to an additive problem for `op`: the set itself for `+`, the
/// prime-exponent image for `×` on positive integers.
pub(crate) fn additive_image(set: &GroundSet, op: Op) -> Result<GroundSet> {
    match (op, set.ambient()) {
        (Op::Add, _) => Ok(set.clone()),
        (Op::Mul, Ambient::Lattice { rank: 1 }) => Ok(mult_embed(set)?.set),
        (Op::Mul, amb) => Err(Error::AmbientMismatch(format!("multiplicative image needs Z, got {amb}"))),
    }
}

/// `T_k(A) = #{a_1 + ... + a_k = a_{k+1} + ... + a_{2k}}` (or products for `×`).
pub fn t_k(set: &GroundSet, k: u32, op: Op) -> Result<BigUint> {
    crate::groundset::check_order(k)?;
    if let (Op::Mul, Ambient::Residues { modulus }) = (op, set.ambient()) {
        let vals: Vec<i128> = set.iter().map(|v| v[0] as i128).collect();
        let r = convolve_mul_mod(&vec![vals; k as usize], modulus as i128);
        return Ok(r.iter().map(|(_, c)| c * c).sum());
    }
    let image = additive_image(set, op)?;
    let p = Packed::for_combination(&[(&image, k as i128)])?;
    let vals = p.values(&image);
    Ok(energy_of(&vec![vals; k as usize], p.arith))
}

/// `E(A, B) = #{a - b = a' - b'}`.
pub fn additive_energy(a: &GroundSet, b: &GroundSet) -> Result<BigUint> {
    Ok(RepFn::difference(a, b)?.sum_of_squares())
}

/// `T_k(A_1, ..., A_{2k}) = Σ_x r_{A_1+...+A_k}(x) r_{A_{k+1}+...+A_{2k}}(x)`.
pub fn t_k_multi(parts: &[GroundSet]) -> Result<BigUint> {
    if parts.is_empty() || parts.len() % 2 != 0 {
        return invalid("need an even, positive number of parts");
    }
    let k = parts.len() / 2;
    let scaled: Vec<(&GroundSet, i128)> = parts.iter().map(|p| (p, 1)).collect();
    let p = Packed::for_combination(&scaled)?;
    let vals: Vec<Vec<i128>> = parts.iter().map(|s| p.values(s)).collect();
    let left = convolve_big(&vals[..k], p.arith);
    let right = convolve_big(&vals[k..], p.arith);
    let (mut i, mut j) = (0, 0);
    let mut acc = BigUint::default();
    while i < left.len() && j < right.len() {
        match left[i].0.cmp(&right[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += &left[i].1 * &right[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    Ok(acc)
}

/// The mixed-energy Hölder inequality `T_k(A_1..A_2k)^{2k} <= Π_j T_k(A_j)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HolderCheck {
    pub mixed: BigUint,
    pub factors: Vec<BigUint>,
    pub holds: bool,
}

pub fn holder_check(parts: &[GroundSet]) -> Result<HolderCheck> {
    let mixed = t_k_multi(parts)?;
    let k = (parts.len() / 2) as u32;
    let factors = parts.iter().map(|p| t_k(p, k, Op::Add)).collect::<Result<Vec<_>>>()?;
    let rhs: BigUint = factors.iter().product();
    let holds = mixed.pow(2 * k) <= rhs;
    Ok(HolderCheck { mixed, factors, holds })
}

/// `T_k(Λ) / (k^k |Λ|^k)`.
pub fn rudin_ratio(lambda: &GroundSet, k: u32) -> Result<BigRational> {
    if lambda.is_empty() {
        return invalid("empty set");
    }
    let t = t_k(lambda, k, Op::Add)?;
    let denom = BigUint::from(k).pow(k) * BigUint::from(lambda.len()).pow(k);
    Ok(BigRational::new(BigInt::from(t), BigInt::from(denom)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    Exact,
    Heuristic,
}

/// Bounds on `dim_{α,k}(A) = min{dim(B) : B ⊆ A, T_k(B) >= α T_k(A)}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AlphaDim {
    pub lower: u64,
    pub upper: u64,
    pub exact: bool,
    pub witness: Option<GroundSet>,
    pub mode: AlphaMode,
}

/// Largest set handled by [`AlphaMode::Exact`].
pub const ALPHA_EXACT_CAP: usize = 16;

fn alpha_threshold(alpha: f64, total: &BigUint) -> Result<BigRational> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return invalid("α must lie in (0, 1]");
    }
    let a = BigRational::from_float(alpha).ok_or_else(|| Error::InvalidParam("α is not finite".into()))?;
    Ok(a * BigRational::from_integer(BigInt::from(total.clone())))
}

fn meets(t: &BigUint, threshold: &BigRational) -> bool {
    BigRational::from_integer(BigInt::from(t.clone())) >= *threshold
}

pub fn dim_alpha_k(set: &GroundSet, alpha: f64, k: u32, mode: AlphaMode, budget: Budget) -> Result<AlphaDim> {
    let total = t_k(set, k, Op::Add)?;
    let threshold = alpha_threshold(alpha, &total)?;
    match mode {
        AlphaMode::Exact => alpha_exact(set, k, &threshold, budget),
        AlphaMode::Heuristic => alpha_heuristic(set, k, &threshold, budget),
    }
}

fn alpha_exact(set: &GroundSet, k: u32, threshold: &BigRational, budget: Budget) -> Result<AlphaDim> {
    let n = set.len();
    if n > ALPHA_EXACT_CAP {
        return Err(Error::CapExceeded { what: "exact dim_{α,k} set size".into(), cap: ALPHA_EXACT_CAP as u64 });
    }
    let p = Packed::for_combination(&[(set, k as i128)])?;
    let vals = p.values(set);
    let full = 1usize << n;
    let mut qualifies = vec![false; full];
    for (mask, q) in qualifies.iter_mut().enumerate().skip(1) {
        let sub: Vec<i128> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| vals[i]).collect();
        *q = meets(&energy_of(&vec![sub; k as usize], p.arith), threshold);
    }
    let mut best: Option<(u64, usize)> = None;
    let mut exact = true;
    for mask in 1..full {
        if !qualifies[mask] || (0..n).any(|i| mask >> i & 1 == 1 && qualifies[mask ^ (1 << i)]) {
            continue;
        }
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let b = set.select(&idx);
        let nonzero = b.without_zero().len();
        if let Some((d, _)) = best {
            if log_lower_bound(nonzero + 1, 1) >= d {
                continue;
            }
        }
        let dim = dim_k_exact(&b, 1, budget)?;
        exact &= dim.exact;
        let d = dim.upper;
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, mask));
        }
    }
    let (d, mask) = best.ok_or_else(|| Error::Precondition("no subset reaches the energy threshold".into()))?;
    let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
    Ok(AlphaDim { lower: d, upper: d, exact, witness: Some(set.select(&idx)), mode: AlphaMode::Exact })
}

/// Upper bound from dissociated peeling: if the remainder after removing
/// `l`-element dissociated blocks keeps enough energy, its dimension bounds
/// `dim_{α,k}`. Lower bound: a qualifying `B` has `T_k(B) <= |B|^{2k-1}` and
/// `|B ∪ {0}| <= 3^{dim B}`.
fn alpha_heuristic(set: &GroundSet, k: u32, threshold: &BigRational, budget: Budget) -> Result<AlphaDim> {
    let whole = dim_k_exact(set, 1, budget)?;
    let mut upper = whole.upper;
    let mut witness = Some(set.clone());
    let max_l = whole.upper.max(1);
    for l in 1..=max_l {
        let peel = crate::decompose::dissociated_peeling(set, l as usize, budget)?;
        let rest = peel.remainder;
        if rest.is_empty() || !meets(&t_k(&rest, k, Op::Add)?, threshold) {
            continue;
        }
        let d = dim_k_exact(&rest, 1, budget)?.upper;
        if d < upper {
            upper = d;
            witness = Some(rest);
        }
        break;
    }
    let need = threshold.ceil().to_integer();
    let mut lower = 0u64;
    if need > BigInt::one() {
        // smallest d with 3^{d(2k-1)} >= need
        let need = need.to_biguint().unwrap_or_default();
        let base = BigUint::from(3u32).pow(2 * k - 1);
        let mut acc = BigUint::from(1u32);
        while acc < need {
            acc *= &base;
            lower += 1;
        }
    } else if threshold > &BigRational::zero() {
        lower = 0;
    }
    let lower = lower.min(upper);
    Ok(AlphaDim { lower, upper, exact: lower == upper, witness, mode: AlphaMode::Heuristic })
}

/// Energy as `f64`, for fitted constants.
pub fn to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn z(xs: &[i64]) -> GroundSet {
        GroundSet::integers(xs.iter().copied())
    }

    fn naive_t(xs: &[i64], k: usize) -> u64 {
        let mut counts: HashMap<i64, u64> = HashMap::new();
        let n = xs.len();
        for idx in 0..n.pow(k as u32) {
            let mut s = 0;
            let mut t = idx;
            for _ in 0..k {
                s += xs[t % n];
                t /= n;
            }
            *counts.entry(s).or_default() += 1;
        }
        counts.values().map(|c| c * c).sum()
    }

    #[test]
    fn small_values() {
        assert_eq!(t_k(&z(&[0, 1]), 2, Op::Add).unwrap(), BigUint::from(6u32));
        assert_eq!(t_k(&z(&[0, 1]), 3, Op::Add).unwrap(), BigUint::from(20u32));
        assert_eq!(t_k(&GroundSet::interval(3), 2, Op::Add).unwrap(), BigUint::from(19u32));
        assert_eq!(additive_energy(&GroundSet::interval(4), &GroundSet::interval(4)).unwrap(), BigUint::from(44u32));
        assert_eq!(t_k(&GroundSet::interval(8), 2, Op::Add).unwrap(), BigUint::from(344u32));
        let g = GroundSet::residues(7, [1, 2, 4]).unwrap();
        assert_eq!(t_k(&g, 2, Op::Add).unwrap(), BigUint::from(15u32));
    }

    #[test]
    fn multiplicative_energy_via_embedding() {
        let a = z(&[1, 2, 4, 8]);
        assert_eq!(t_k(&a, 2, Op::Mul).unwrap(), t_k(&z(&[0, 1, 2, 3]), 2, Op::Add).unwrap());
        let r = GroundSet::residues(7, [1, 2, 4]).unwrap();
        // {1,2,4} is a subgroup of order 3: every product has 3 representations.
        assert_eq!(t_k(&r, 2, Op::Mul).unwrap(), BigUint::from(27u32));
    }

    #[test]
    fn rudin_ratio_of_singleton() {
        let r = rudin_ratio(&z(&[1]), 2).unwrap();
        assert_eq!(r, BigRational::new(BigInt::from(1), BigInt::from(4)));
    }

    #[test]
    fn alpha_dimension() {
        let a = GroundSet::interval(6);
        let full = dim_alpha_k(&a, 1.0, 2, AlphaMode::Exact, Budget::default()).unwrap();
        assert_eq!(full.upper, dim_k_exact(&a, 1, Budget::default()).unwrap().upper);
        let tiny = dim_alpha_k(&a, 1e-9, 2, AlphaMode::Exact, Budget::default()).unwrap();
        assert_eq!(tiny.upper, 1);
        let h = dim_alpha_k(&a, 0.5, 2, AlphaMode::Heuristic, Budget::default()).unwrap();
        let e = dim_alpha_k(&a, 0.5, 2, AlphaMode::Exact, Budget::default()).unwrap();
        assert!(h.lower <= e.upper && e.upper <= h.upper);
        assert!(dim_alpha_k(&a, 0.0, 2, AlphaMode::Exact, Budget::default()).is_err());
    }

    #[test]
    fn holder_on_small_parts() {
        let parts = vec![z(&[0, 1]), z(&[0, 2, 3]), z(&[1, 5]), z(&[0, 1, 2, 3])];
        assert!(holder_check(&parts).unwrap().holds);
        assert!(t_k_multi(&parts[..3]).is_err());
    }

    proptest! {
        #[test]
        fn convolution_matches_enumeration(xs in proptest::collection::btree_set(-20i64..20, 1..6), k in 2usize..4) {
            let xs: Vec<i64> = xs.into_iter().collect();
            prop_assert_eq!(t_k(&z(&xs), k as u32, Op::Add).unwrap(), BigUint::from(naive_t(&xs, k)));
        }

        #[test]
        fn symmetric_multi_energy_agrees(xs in proptest::collection::btree_set(0i64..30, 1..6)) {
            let a = z(&xs.into_iter().collect::<Vec<_>>());
            let four = vec![a.clone(), a.clone(), a.clone(), a.clone()];
            prop_assert_eq!(t_k_multi(&four).unwrap(), t_k(&a, 2, Op::Add).unwrap());
            prop_assert_eq!(additive_energy(&a, &a).unwrap(), t_k(&a, 2, Op::Add).unwrap());
        }

        #[test]
        fn holder_inequality(parts in proptest::collection::vec(proptest::collection::btree_set(0i64..12, 1..5), 4)) {
            let sets: Vec<GroundSet> = parts.into_iter().map(|p| z(&p.into_iter().collect::<Vec<_>>())).collect();
            prop_assert!(holder_check(&sets).unwrap().holds);
        }

        #[test]
        fn energy_bounds(xs in proptest::collection::btree_set(-30i64..30, 1..8), k in 1u32..4) {
            let a = z(&xs.into_iter().collect::<Vec<_>>());
            let n = BigUint::from(a.len());
            let t = t_k(&a, k, Op::Add).unwrap();
            prop_assert!(t <= n.pow(2 * k - 1));
            prop_assert!(t >= n.pow(k));
        }
    }
}
