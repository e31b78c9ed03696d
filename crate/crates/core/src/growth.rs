//! Growth of iterated sumsets against dimension, β estimates, polynomial
//! growth, Freiman models and shift stability of the dimension.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dissociation::{
    dim_k_exact, greedy_dissociated, is_k_dissociated, DimensionBounds, Extender, GreedyOrder, Mode,
};
use crate::error::{invalid, Error, Result};
use crate::groundset::{Ambient, Arith, GroundSet, Packed, DEFAULT_CAP};
use crate::numbers::{binomial, factorial, lcm, next_prime};
use crate::Budget;

/// `|A|, |2A|, ..., |n_max A|`, stopping early at the size cap.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthCurve {
    pub sizes: Vec<u64>,
    /// First `n` whose sumset exceeded the cap.
    pub truncated_at: Option<u32>,
}

impl GrowthCurve {
    /// `|nA|` for `n >= 1`.
    pub fn size(&self, n: u32) -> Option<u64> {
        self.sizes.get(n.checked_sub(1)? as usize).copied()
    }
}

pub fn growth_sequence(set: &GroundSet, n_max: u32, cap: usize) -> Result<GrowthCurve> {
    if n_max == 0 {
        return invalid("n_max must be positive");
    }
    let mut sizes = vec![set.len() as u64];
    let mut acc = set.clone();
    let mut truncated_at = None;
    for n in 2..=n_max {
        match acc.sumset_capped(set, cap) {
            Ok(next) => acc = next,
            Err(Error::CapExceeded { .. }) => {
                truncated_at = Some(n);
                break;
            }
            Err(e) => return Err(e),
        }
        sizes.push(acc.len() as u64);
    }
    if sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Verification(format!("sumset sizes decrease: {sizes:?}")));
    }
    Ok(GrowthCurve { sizes, truncated_at })
}

// ---------------------------------------------------------------------------
// Growth against dimension

/// The fitted constant for one `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageFit {
    pub n: u32,
    pub size: u64,
    pub constant: f64,
}

/// `|nA| >= (d/(4n))^{n-1}` for `n <= d/4`, where `d` is the size of a
/// dissociated subset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage2Fit {
    pub n: u32,
    pub size: u64,
    /// `d / (n |nA|^{1/(n-1)})`; the bound holds when this is at most 4.
    pub constant: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage3Fit {
    pub k: u32,
    pub dim_k: u64,
    pub n: u32,
    pub size: u64,
    /// `dim_k log dim_k / log |nA|`.
    pub constant: f64,
}

/// `|nS| (2^n n!)^m >= Π_j k^n |Λ_j|^n` for `S = [k]·Λ_1 + ... + [k]·Λ_m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCheck {
    pub k: u32,
    pub n: u32,
    pub m: u32,
    pub part_sizes: Vec<usize>,
    /// `|nS|`, or `None` when it exceeded the cap (which already beats the bound).
    pub ns_size: Option<u64>,
    pub bound: String,
    pub holds: bool,
}

/// For a maximal `k`-dissociated `Λ ⊆ A` and `L` the lcm of the least `j`
/// with `j a ∈ Span_k(Λ)`: `|nA| <= (2nkL+1)^{|Λ|}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanContainment {
    pub k: u32,
    pub lambda: GroundSet,
    pub multiplier_lcm: u64,
    pub checked: Vec<(u32, bool)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub curve: GrowthCurve,
    pub dim: DimensionBounds,
    pub stage1: Vec<StageFit>,
    pub stage2: Vec<Stage2Fit>,
    pub stage3: Option<Stage3Fit>,
    pub split_checks: Vec<SplitCheck>,
    pub span: Option<SpanContainment>,
    /// `|2A| >= C(|A|, 2)` when `A` is dissociated.
    pub dissociated_pairs: Option<bool>,
    pub hard_violations: Vec<String>,
}

/// Split `Λ` round-robin into `m` parts of nearly equal size.
fn split(lambda: &GroundSet, m: usize) -> Vec<GroundSet> {
    let idx: Vec<Vec<usize>> = (0..m).map(|j| (j..lambda.len()).step_by(m).collect()).collect();
    idx.iter().map(|i| lambda.select(i)).collect()
}

/// `{c λ : c ∈ [k], λ ∈ Λ}`.
fn scaled_union(lambda: &GroundSet, k: u32) -> Result<GroundSet> {
    let mut out = GroundSet::empty(lambda.ambient());
    for c in 1..=k {
        out = out.union(&lambda.dilate(c as i64)?)?;
    }
    Ok(out)
}

/// The split-Λ lower bound for `|nS|`, checked exactly.
pub fn split_check(lambda: &GroundSet, k: u32, n: u32, m: u32, cap: usize) -> Result<SplitCheck> {
    if n == 0 || m == 0 || (m as usize) > lambda.len() {
        return invalid("need n >= 1 and 1 <= m <= |Λ|");
    }
    let parts = split(lambda, m as usize);
    let mut s = GroundSet::from_vectors(lambda.ambient(), vec![vec![0; lambda.rank()]])?;
    for p in &parts {
        s = s.sumset_capped(&scaled_union(p, k)?, cap)?;
    }
    let mut ns = Some(s.clone());
    for _ in 1..n {
        ns = match ns.as_ref().map(|acc| acc.sumset_capped(&s, cap)) {
            Some(Ok(next)) => Some(next),
            Some(Err(Error::CapExceeded { .. })) | None => None,
            Some(Err(e)) => return Err(e),
        };
    }
    let mut rhs = BigUint::one();
    for p in &parts {
        rhs *= BigUint::from(k).pow(n) * BigUint::from(p.len()).pow(n);
    }
    let per_part = BigUint::from(2u32).pow(n) * factorial(n as u64);
    let lhs_factor = per_part.pow(m);
    let size = ns.as_ref().map(|x| x.len() as u64);
    let effective = BigUint::from(size.unwrap_or(cap as u64 + 1));
    let holds = effective * &lhs_factor >= rhs;
    let bound = Ratio::new(rhs, lhs_factor);
    Ok(SplitCheck {
        k,
        n,
        m,
        part_sizes: parts.iter().map(|p| p.len()).collect(),
        ns_size: size,
        bound: bound.to_string(),
        holds,
    })
}

/// Least `j ∈ [1, k]` with `j a ∈ Span_k(Λ)` for every `a`, combined by lcm.
fn span_multipliers(lambda: &GroundSet, set: &GroundSet, k: u32) -> Result<Option<u64>> {
    let scale = k as i128 * lambda.len().max(1) as i128;
    let p = Packed::for_combination(&[(lambda, scale), (set, k as i128)])?;
    let lv = p.values(lambda);
    let radius = match p.arith {
        Arith::Int => Some(k as i128 * lv.iter().map(|v| v.abs()).sum::<i128>()),
        Arith::Mod(_) => None,
    };
    let mut ext = Extender::new(k, p.arith, Mode::Span, radius);
    for &x in &lv {
        ext.add(x);
    }
    let mut l = 1u64;
    for a in p.values(set) {
        let Some(j) = (1..=k).find(|&j| ext.contains(p.arith.norm(j as i128 * a))) else {
            return Ok(None);
        };
        l = lcm(l, j as u64).ok_or(Error::Overflow("multiplier lcm"))?;
    }
    Ok(Some(l))
}

fn span_containment(set: &GroundSet, k: u32, curve: &GrowthCurve) -> Result<Option<SpanContainment>> {
    let lambda = greedy_dissociated(set, k, GreedyOrder::DescAbs)?;
    let Some(l) = span_multipliers(&lambda, set, k)? else {
        return Err(Error::Verification("a maximal dissociated subset fails to span".into()));
    };
    if let Some(m) = set.ambient().modulus() {
        if crate::numbers::gcd(l, m) != 1 {
            return Ok(None);
        }
    }
    let checked = curve
        .sizes
        .iter()
        .enumerate()
        .map(|(i, &size)| {
            let n = i as u64 + 1;
            let bound = BigUint::from(2 * n * k as u64 * l + 1).pow(lambda.len() as u32);
            (n as u32, BigUint::from(size) <= bound)
        })
        .collect();
    Ok(Some(SpanContainment { k, lambda, multiplier_lcm: l, checked }))
}

/// Largest `n` for which stage three evaluates `|nA|`.
const STAGE3_MAX_N: u32 = 64;

/// Evaluate the three growth stages and the exact inequalities behind them.
pub fn verify_growth_bounds(set: &GroundSet, n_max: u32, k: u32, budget: Budget) -> Result<GrowthReport> {
    crate::groundset::check_order(k)?;
    let curve = growth_sequence(set, n_max, DEFAULT_CAP)?;
    let dim = dim_k_exact(set, 1, budget)?;
    let d = dim.lower;
    let n_a = set.len() as f64;
    let mut hard = Vec::new();

    let mut stage1 = Vec::new();
    let mut stage2 = Vec::new();
    for (i, &size) in curve.sizes.iter().enumerate().skip(1) {
        let n = i as u32 + 1;
        let e = 1.0 / (n - 1) as f64;
        if set.len() > 1 {
            let c = d as f64 / (n_a.ln() * (size as f64 / n_a).powf(e));
            stage1.push(StageFit { n, size, constant: c });
        }
        if 4 * n as u64 <= d {
            let c = d as f64 / (n as f64 * (size as f64).powf(e));
            let base = Ratio::new(BigUint::from(d), BigUint::from(4 * n as u64));
            let holds = Ratio::from_integer(BigUint::from(size)) >= num_traits::pow(base, (n - 1) as usize);
            if !holds {
                hard.push(format!("|{n}A| = {size} is below (d/4n)^(n-1) with d = {d}"));
            }
            stage2.push(Stage2Fit { n, size, constant: c, holds });
        }
    }

    let mut stage3 = None;
    if dim.exact && d >= 2 {
        let k3 = ((d as f64) * (d as f64).ln()).ceil() as u32;
        let dk = dim_k_exact(set, k3.max(1), budget)?;
        if dk.exact && dk.lower >= 2 {
            let dk_f = dk.lower as f64;
            let n3 = (dk_f * dk_f * dk_f.ln()).ceil() as u32;
            if n3 <= STAGE3_MAX_N {
                let c3 = growth_sequence(set, n3, DEFAULT_CAP)?;
                if let Some(size) = c3.size(n3) {
                    stage3 = Some(Stage3Fit {
                        k: k3,
                        dim_k: dk.lower,
                        n: n3,
                        size,
                        constant: dk_f * dk_f.ln() / (size as f64).ln(),
                    });
                }
            }
        }
    }

    let mut split_checks = Vec::new();
    let mut witnesses = vec![(1u32, dim.witness_lower.clone().unwrap_or_else(|| GroundSet::empty(set.ambient())))];
    if k > 1 {
        witnesses.push((k, greedy_dissociated(set, k, GreedyOrder::DescAbs)?));
    }
    for (kk, lambda) in &witnesses {
        let dl = lambda.len() as u32;
        for m in 1..=dl {
            for n in (1..).take_while(|n| 4 * n * m <= dl) {
                let c = split_check(lambda, *kk, n, m, 1 << 20)?;
                if !c.holds {
                    hard.push(format!("split bound fails for k={kk}, n={n}, m={m}"));
                }
                split_checks.push(c);
            }
        }
    }

    let span = span_containment(set, k, &curve)?;
    if let Some(s) = &span {
        for &(n, ok) in &s.checked {
            if !ok {
                hard.push(format!("|{n}A| exceeds the span-containment bound"));
            }
        }
    }

    let mut dissociated_pairs = None;
    if set.len() >= 2 && curve.sizes.len() >= 2 && is_k_dissociated(set, 1, budget)?.is_dissociated() {
        let ok = BigUint::from(curve.sizes[1]) >= binomial(set.len() as u64, 2);
        if !ok {
            hard.push("dissociated set with too few pairwise sums".into());
        }
        dissociated_pairs = Some(ok);
    }

    Ok(GrowthReport { curve, dim, stage1, stage2, stage3, split_checks, span, dissociated_pairs, hard_violations: hard })
}

// ---------------------------------------------------------------------------
// β estimate

/// An upper bound `|A+X+Y| / sqrt(|X||Y|)` for `β(A)` with its witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub sumset_size: u64,
    pub x: GroundSet,
    pub y: GroundSet,
    /// `|A+X+Y|^2 / (|X||Y|)` as a reduced fraction.
    pub value_squared: String,
    pub value: f64,
    pub family: String,
}

impl BetaEstimate {
    /// Recompute the estimate from its witness.
    pub fn recompute(&self, set: &GroundSet) -> Result<Ratio<u128>> {
        beta_pair(set, &self.x, &self.y)
    }
}

/// `|A+X+Y|^2 / (|X||Y|)` for one pair.
pub fn beta_pair(set: &GroundSet, x: &GroundSet, y: &GroundSet) -> Result<Ratio<u128>> {
    if x.is_empty() || y.is_empty() {
        return invalid("X and Y must be nonempty");
    }
    let s = set.sumset(x)?.sumset(y)?.len() as u128;
    Ok(Ratio::new(s * s, x.len() as u128 * y.len() as u128))
}

/// Largest candidate sumset materialised by [`beta_hat`].
const BETA_CANDIDATE_CAP: usize = 4096;
const BETA_SUMSET_CAP: usize = 1 << 20;

/// `|A + [1,w]|` for integer `A`, as a union of intervals.
fn interval_sum_size(xs: &[i64], w: u64) -> u64 {
    if xs.is_empty() {
        return 0;
    }
    let gaps: u64 = xs.windows(2).map(|p| ((p[1] as i128 - p[0] as i128) as u64).min(w)).sum();
    gaps + w
}

/// Best `|A+X+Y|^2/(|X||Y|)` over singletons, `A`, `hA` (`h <= 4`), intervals
/// `[m]` with `m <= interval_max` and the extra candidates.
pub fn beta_hat(set: &GroundSet, interval_max: u64, extra: &[GroundSet]) -> Result<BetaEstimate> {
    if set.is_empty() {
        return invalid("A must be nonempty");
    }
    let amb = set.ambient();
    let zero = GroundSet::from_vectors(amb, vec![vec![0; set.rank()]])?;
    let mut cands: Vec<(String, GroundSet)> = vec![("{0}".into(), zero), ("A".into(), set.clone())];
    let mut h_set = set.clone();
    for h in 2..=4 {
        match h_set.sumset_capped(set, BETA_CANDIDATE_CAP) {
            Ok(s) => {
                h_set = s;
                cands.push((format!("{h}A"), h_set.clone()));
            }
            Err(Error::CapExceeded { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    for (i, e) in extra.iter().enumerate() {
        if e.ambient() != amb {
            return Err(Error::AmbientMismatch(format!("extra candidate {i}")));
        }
        if !e.is_empty() {
            cands.push((format!("extra[{i}]"), e.clone()));
        }
    }
    // (value, |A+X+Y|, X, Y); ties keep the earlier candidate
    let mut best: Option<(Ratio<u128>, u64, GroundSet, GroundSet)> = None;
    fn consider(best: &mut Option<(Ratio<u128>, u64, GroundSet, GroundSet)>, s: u64, x: (usize, u64), make: impl FnOnce() -> Result<(GroundSet, GroundSet)>) -> Result<()> {
        let v = Ratio::new(s as u128 * s as u128, x.0 as u128 * x.1 as u128);
        if best.as_ref().is_none_or(|(b, ..)| v < *b) {
            let (x, y) = make()?;
            *best = Some((v, s, x, y));
        }
        Ok(())
    }
    for i in 0..cands.len() {
        for j in i..cands.len() {
            let ax = set.sumset_capped(&cands[i].1, BETA_SUMSET_CAP);
            match ax.and_then(|ax| ax.sumset_capped(&cands[j].1, BETA_SUMSET_CAP)) {
                Ok(s) => {
                    let dims = (cands[i].1.len(), cands[j].1.len() as u64);
                    consider(&mut best, s.len() as u64, dims, || Ok((cands[i].1.clone(), cands[j].1.clone())))?
                }
                Err(Error::CapExceeded { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    let mut family: Vec<String> = cands.iter().map(|(n, _)| n.clone()).collect();
    match amb {
        Ambient::Lattice { rank: 1 } if interval_max > 0 => {
            let xs = set.as_integers()?;
            for m in 1..=interval_max {
                for m2 in [m, m + 1].into_iter().filter(|&m2| m2 <= interval_max) {
                    // [m] + [m2] = [2, m + m2]
                    let s = interval_sum_size(xs, m + m2 - 1);
                    consider(&mut best, s, (m as usize, m2), || {
                        Ok((GroundSet::interval(m as i64), GroundSet::interval(m2 as i64)))
                    })?;
                }
            }
            family.push(format!("[m],[m'] for m <= m' <= m+1 <= {interval_max}"));
        }
        Ambient::Residues { modulus } if interval_max > 0 => {
            let top = interval_max.min(modulus);
            for m in 1..=top {
                for m2 in [m, m + 1].into_iter().filter(|&m2| m2 <= top) {
                    let x = GroundSet::residues(modulus, 1..=m as i64)?;
                    let y = GroundSet::residues(modulus, 1..=m2 as i64)?;
                    let s = set.sumset(&x)?.sumset(&y)?.len() as u64;
                    consider(&mut best, s, (x.len(), y.len() as u64), || Ok((x, y)))?;
                }
            }
            family.push(format!("[m],[m'] mod {modulus} for m <= m' <= m+1 <= {top}"));
        }
        _ => {}
    }
    let (v, s, x, y) = best.expect("singleton candidate always present");
    let value = s as f64 / ((x.len() as f64) * (y.len() as f64)).sqrt();
    Ok(BetaEstimate { sumset_size: s, x, y, value_squared: v.to_string(), value, family: family.join(", ") })
}

// ---------------------------------------------------------------------------
// Polynomial growth

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyFit {
    /// Least `d >= 0` with `|nA| <= n^d |A|` for every computed `n`.
    pub d_fit: f64,
    pub curve: GrowthCurve,
    pub per_n: Vec<(u32, f64)>,
}

pub fn polynomial_growth_fit(set: &GroundSet, n_max: u32, cap: usize) -> Result<PolyFit> {
    if n_max < 2 {
        return invalid("n_max must be at least 2");
    }
    if set.is_empty() {
        return invalid("A must be nonempty");
    }
    let curve = growth_sequence(set, n_max, cap)?;
    let a = set.len() as f64;
    let per_n: Vec<(u32, f64)> = curve
        .sizes
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &s)| {
            let n = i as u32 + 1;
            (n, ((s as f64 / a).ln() / (n as f64).ln()).max(0.0))
        })
        .collect();
    let d_fit = per_n.iter().map(|&(_, d)| d).fold(0.0, f64::max);
    Ok(PolyFit { d_fit, curve, per_n })
}

// ---------------------------------------------------------------------------
// Freiman models

/// `A_* ⊆ A` and an `l`-isomorphic image `B ⊆ Z/mZ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreimanModel {
    pub l: u32,
    pub a_star: GroundSet,
    pub modulus: u64,
    pub image: GroundSet,
    /// `(a, φ(a))` for `a ∈ A_*`.
    pub map: Vec<(i64, i64)>,
    pub prime: u64,
    pub multiplier: u64,
    pub trial: u32,
    pub verified: bool,
}

/// Largest number of `l`-multisets compared by [`verify_isomorphism`].
const MULTISET_CAP: u64 = 1 << 22;

/// Whether `a_i ↦ b_i` preserves and reflects every equality of `l`-fold sums.
pub fn verify_isomorphism(map: &[(i64, i64)], l: u32, modulus: u64) -> Result<bool> {
    let n = map.len() as u64;
    if binomial(n + l as u64 - 1, l as u64) > BigUint::from(MULTISET_CAP) {
        return Err(Error::CapExceeded { what: "l-multisets".into(), cap: MULTISET_CAP });
    }
    if map.is_empty() {
        return Ok(true);
    }
    let mut fwd: HashMap<i128, u64> = HashMap::new();
    let mut back: HashMap<u64, i128> = HashMap::new();
    let mut idx = vec![0usize; l as usize];
    loop {
        let s: i128 = idx.iter().map(|&i| map[i].0 as i128).sum();
        let t = idx.iter().fold(0u64, |acc, &i| ((acc as u128 + map[i].1 as u128) % modulus as u128) as u64);
        if *fwd.entry(s).or_insert(t) != t || *back.entry(t).or_insert(s) != s {
            return Ok(false);
        }
        let mut p = idx.len();
        while p > 0 && idx[p - 1] == map.len() - 1 {
            p -= 1;
        }
        if p == 0 {
            return Ok(true);
        }
        let v = idx[p - 1] + 1;
        for slot in &mut idx[p - 1..] {
            *slot = v;
        }
    }
}

/// Random dilation modulo a prime, restriction to the densest of `l`
/// intervals, then reduction modulo `m` (default `m = |lA - lA|`).
pub fn freiman_model(set: &GroundSet, l: u32, trials: u32, seed: u64, modulus: Option<u64>) -> Result<FreimanModel> {
    if l < 2 {
        return invalid("l must be at least 2");
    }
    let xs = set.as_integers()?;
    if xs.is_empty() {
        return invalid("A must be nonempty");
    }
    let moduli = match modulus {
        Some(m) if m >= 2 => vec![m],
        Some(_) => return invalid("modulus must be at least 2"),
        None => {
            let m = (set.n_minus_m(l, l)?.len() as u64).max(2);
            vec![m, m + 1]
        }
    };
    let diam = (xs[xs.len() - 1] as i128 - xs[0] as i128) as u64;
    let q = next_prime(2 * l as u64 * diam.max(1) + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = xs[0] as i128;
    let mut trial = 0;
    for &m in &moduli {
        for _ in 0..trials {
            trial += 1;
            let lambda = if q > 2 { rng.gen_range(1..q) } else { 1 };
            let images: Vec<u64> = xs
                .iter()
                .map(|&x| ((x as i128 - base) as u128 * lambda as u128 % q as u128) as u64)
                .collect();
            let width = q.div_ceil(l as u64);
            let mut counts = vec![0usize; l as usize];
            for &y in &images {
                counts[(y / width) as usize] += 1;
            }
            let part = (0..l as usize).max_by_key(|&i| (counts[i], std::cmp::Reverse(i))).unwrap_or(0) as u64;
            let map: Vec<(i64, i64)> = xs
                .iter()
                .zip(&images)
                .filter(|(_, &y)| y / width == part)
                .map(|(&x, &y)| (x, (y % m) as i64))
                .collect();
            if verify_isomorphism(&map, l, m)? {
                let a_star = GroundSet::integers(map.iter().map(|p| p.0));
                let image = GroundSet::residues(m.max(1), map.iter().map(|p| p.1))?;
                return Ok(FreimanModel {
                    l,
                    a_star,
                    modulus: m,
                    image,
                    map,
                    prime: q,
                    multiplier: lambda,
                    trial,
                    verified: true,
                });
            }
        }
    }
    Err(Error::TrialsExhausted(trial))
}

// ---------------------------------------------------------------------------
// Shifts

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    pub dim: u64,
    /// `(x, dim(A+x))`.
    pub shifted: Vec<(Vec<i64>, u64)>,
    /// `max(dim(A+x)/dim(A), dim(A)/dim(A+x))` over shifts with both dimensions positive.
    pub max_ratio: f64,
    /// Shifts skipped because one of the dimensions is zero.
    pub excluded: usize,
    pub all_exact: bool,
}

pub fn dim_shift_ratio(set: &GroundSet, shifts: &[Vec<i64>], budget: Budget) -> Result<ShiftReport> {
    let base = dim_k_exact(set, 1, budget)?;
    let mut all_exact = base.exact;
    let d0 = base.lower;
    let mut shifted = Vec::with_capacity(shifts.len());
    let mut max_ratio = 1.0f64;
    let mut excluded = 0;
    for x in shifts {
        let moved = set.translate(x)?;
        let dx = dim_k_exact(&moved, 1, budget)?;
        all_exact &= dx.exact;
        let d1 = dx.lower;
        if d0 == 0 || d1 == 0 {
            excluded += usize::from(d0 != d1);
        } else {
            let r = (d1 as f64 / d0 as f64).max(d0 as f64 / d1 as f64);
            max_ratio = max_ratio.max(r);
        }
        shifted.push((x.clone(), d1));
    }
    Ok(ShiftReport { dim: d0, shifted, max_ratio, excluded, all_exact })
}

/// `dim(A) / dim(A+X)` and `dim(A+X) / (|X| dim(A))`.
pub fn dim_sumset_ratios(set: &GroundSet, x: &GroundSet, budget: Budget) -> Result<(u64, u64, f64, f64)> {
    let da = dim_k_exact(set, 1, budget)?.lower;
    let dax = dim_k_exact(&set.sumset(x)?, 1, budget)?.lower;
    let lower = if dax == 0 { 0.0 } else { da as f64 / dax as f64 };
    let upper = if da == 0 || x.is_empty() { 0.0 } else { dax as f64 / (x.len() as f64 * da as f64) };
    Ok((da, dax, lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z(xs: &[i64]) -> GroundSet {
        GroundSet::integers(xs.iter().copied())
    }

    #[test]
    fn growth_examples() {
        let c = growth_sequence(&GroundSet::interval(3), 5, DEFAULT_CAP).unwrap();
        assert_eq!(c.sizes, vec![3, 5, 7, 9, 11]);
        assert_eq!(growth_sequence(&z(&[0]), 4, DEFAULT_CAP).unwrap().sizes, vec![1; 4]);
        assert_eq!(growth_sequence(&z(&[0, 1, 4]), 3, DEFAULT_CAP).unwrap().sizes, vec![3, 6, 10]);
        let t = growth_sequence(&z(&[1, 100, 10_000, 1_000_000]), 6, 30).unwrap();
        assert_eq!(t.sizes, vec![4, 10, 20]);
        assert_eq!(t.truncated_at, Some(4));
    }

    #[test]
    fn growth_bounds_on_small_sets() {
        let r = verify_growth_bounds(&GroundSet::interval(16), 4, 2, Budget::default()).unwrap();
        assert!(r.hard_violations.is_empty(), "{:?}", r.hard_violations);
        assert_eq!(r.stage1.len(), 3);
        let cube = z(&[1, 2, 4, 8]).cube().unwrap().0;
        let r = verify_growth_bounds(&cube, 4, 2, Budget::default()).unwrap();
        assert!(r.dim.exact);
        assert!(r.hard_violations.is_empty());
        let r = verify_growth_bounds(&z(&[1, 3, 9, 27, 81, 243, 729, 2187]), 3, 1, Budget::default()).unwrap();
        assert_eq!(r.dissociated_pairs, Some(true));
        assert!(!r.split_checks.is_empty());
        assert!(r.hard_violations.is_empty());
    }

    #[test]
    fn split_bound_is_exact_on_dissociated_sets() {
        let lambda = z(&[1, 3, 9, 27, 81, 243, 729, 2187]);
        let c = split_check(&lambda, 1, 2, 1, 1 << 20).unwrap();
        // 2Λ has C(8,2) + 8 = 36 elements; the bound is 64/8 = 8
        assert_eq!(c.ns_size, Some(36));
        assert_eq!(c.bound, "8");
        assert!(c.holds);
    }

    #[test]
    fn beta_examples() {
        let a = z(&[0, 10]);
        let i100 = GroundSet::interval(100);
        assert_eq!(beta_pair(&a, &i100, &i100).unwrap(), Ratio::new(209 * 209, 100 * 100));
        assert!(beta_hat(&a, 100, &[]).unwrap().value <= 2.09);
        assert_eq!(beta_pair(&a, &z(&[0]), &z(&[0])).unwrap(), Ratio::from_integer(4));
        let single = beta_hat(&z(&[5, 9, 40]), 0, &[]).unwrap();
        assert!(single.value <= 3.0);
        let a = z(&[0, 3, 7, 20]);
        let b = beta_hat(&a, 40, &[]).unwrap();
        assert!(b.value <= 2.5, "{}", b.value);
        let r = b.recompute(&a).unwrap();
        assert_eq!(r.to_string(), b.value_squared);
    }

    #[test]
    fn polynomial_fit_examples() {
        let f = polynomial_growth_fit(&GroundSet::interval(3), 6, DEFAULT_CAP).unwrap();
        assert!(f.d_fit <= 1.0 && f.d_fit > 0.0);
        assert_eq!(polynomial_growth_fit(&z(&[0]), 4, DEFAULT_CAP).unwrap().d_fit, 0.0);
        let f = polynomial_growth_fit(&z(&[0, 1, 10, 100]), 4, DEFAULT_CAP).unwrap();
        let naive = (2..=4u32)
            .map(|n| {
                let s = z(&[0, 1, 10, 100]).h_fold(n).unwrap().len() as f64;
                (s / 4.0).ln() / (n as f64).ln()
            })
            .fold(0.0, f64::max);
        assert!((f.d_fit - naive).abs() < 1e-12);
    }

    #[test]
    fn freiman_examples() {
        let m = freiman_model(&GroundSet::interval(8), 2, 50, 1, None).unwrap();
        assert_eq!(m.modulus, 29);
        assert!(m.verified && m.a_star.len() >= 4);
        let m = freiman_model(&z(&[0, 1, 2]), 2, 50, 1, Some(9)).unwrap();
        assert!(m.verified);
        assert!(matches!(
            freiman_model(&GroundSet::interval(8), 2, 50, 1, Some(5)),
            Err(Error::TrialsExhausted(50))
        ));
        assert!(!verify_isomorphism(&[(0, 0), (1, 1), (2, 3)], 2, 10).unwrap());
    }

    #[test]
    fn shift_examples() {
        let r = dim_shift_ratio(&z(&[1, 2, 3]), &[vec![0], vec![10]], Budget::default()).unwrap();
        assert_eq!(r.dim, 2);
        // {11, 12, 13} has eight distinct subset sums
        assert_eq!(r.shifted[0].1, 2);
        assert_eq!(r.shifted[1].1, 3);
        assert_eq!(r.max_ratio, 1.5);
        let r = dim_shift_ratio(&z(&[0]), &[vec![3]], Budget::default()).unwrap();
        assert_eq!(r.excluded, 1);
    }

    proptest! {
        #[test]
        fn beta_witness_recomputes(xs in proptest::collection::vec(-30i64..30, 1..8), l in 0u64..20) {
            let a = GroundSet::integers(xs);
            let b = beta_hat(&a, l, &[]).unwrap();
            prop_assert_eq!(b.recompute(&a).unwrap().to_string(), b.value_squared);
            prop_assert!(b.value >= 1.0 - 1e-12);
        }

        #[test]
        fn curve_is_monotone(xs in proptest::collection::vec(0i64..50, 1..8), m in 2u64..40) {
            let c = growth_sequence(&GroundSet::residues(m, xs).unwrap(), 5, DEFAULT_CAP).unwrap();
            prop_assert!(c.sizes.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn freiman_models_verify(xs in proptest::collection::vec(0i64..12, 2..7)) {
            let a = GroundSet::integers(xs);
            let m = freiman_model(&a, 2, 200, 9, None).unwrap();
            prop_assert!(m.a_star.len() * 2 >= a.len());
            prop_assert!(verify_isomorphism(&m.map, 2, m.modulus).unwrap());
        }
    }
}
