//! Constructive decompositions: dissociated peeling, level sets, an
//! asymmetric Balog–Szemerédi–Gowers pipeline, β-decomposition, the
//! sum/product energy splitting loop, Sidon extraction and ratio boxes.

use std::collections::{HashMap, HashSet};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dissociation::{dim_k_exact, greedy_in_order, ordered_indices, GreedyOrder};
use crate::energy::{additive_energy, additive_image, t_k, to_f64, Op};
use crate::error::{invalid, Error, Result};
use crate::groundset::{mult_embed, Ambient, GroundSet, Packed, RepFn};
use crate::growth::{beta_hat, BetaEstimate};
use crate::Budget;

fn big_rat(x: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(x.clone()))
}

fn rat_from_f64(x: f64, what: &str) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::InvalidParam(format!("{what} is not finite")))
}

fn dec(x: &BigUint) -> String {
    x.to_str_radix(10)
}

// ---------------------------------------------------------------------------
// Dissociated peeling

/// `A = A_1 ⊔ ... ⊔ A_s ⊔ A_*` with each `A_j` dissociated of size `l`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeelingResult {
    pub l: usize,
    pub blocks: Vec<GroundSet>,
    pub remainder: GroundSet,
    /// `dim(remainder) < l` was proven rather than assumed.
    pub remainder_certified: bool,
}

/// Repeatedly remove `l`-element dissociated subsets. Each block is the first
/// `l` picks of the descending greedy scan, or part of an exact maximum
/// dissociated subset when greedy falls short. Zero never enters a block.
pub fn dissociated_peeling(set: &GroundSet, l: usize, budget: Budget) -> Result<PeelingResult> {
    if l == 0 {
        return invalid("block size l must be positive");
    }
    let zero = set.filter(|v| v.iter().all(|&x| x == 0));
    let mut rest = set.without_zero();
    let mut blocks = Vec::new();
    let certified = loop {
        if rest.len() < l {
            break true;
        }
        let greedy = greedy_in_order(&rest, 1, &ordered_indices(&rest, GreedyOrder::DescAbs))?;
        let block = if greedy.len() >= l {
            rest.select(&greedy[..l])
        } else {
            let dim = dim_k_exact(&rest, 1, budget)?;
            match dim.witness_lower {
                Some(w) if w.len() >= l => {
                    let idx = ordered_indices(&w, GreedyOrder::DescAbs);
                    w.select(&idx[..l])
                }
                _ => break dim.upper < l as u64,
            }
        };
        rest = rest.minus(&block)?;
        blocks.push(block);
    };
    Ok(PeelingResult { l, blocks, remainder: rest.union(&zero)?, remainder_certified: certified })
}

// ---------------------------------------------------------------------------
// Level sets

/// `{x : lo < r(x) <= hi}` for one band of a representation function.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSet {
    /// Band index: `(0,1]` is 0, `(b^{i-1}, b^i]` is `i`.
    pub level: u32,
    pub lo: String,
    pub hi: String,
    pub set: GroundSet,
}

impl LevelSet {
    pub fn hi_value(&self) -> BigUint {
        self.hi.parse().unwrap_or_default()
    }
}

/// Partition of the support of `r` into bands `(0,1], (1,b], (b,b^2], ...`;
/// empty bands are omitted.
pub fn level_sets(r: &RepFn, base: u64) -> Result<Vec<LevelSet>> {
    if base < 2 {
        return invalid("level-set base must be at least 2");
    }
    let b = BigUint::from(base);
    let mut members: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
    for (i, c) in r.counts().iter().enumerate() {
        let mut level = 0u32;
        let mut hi = BigUint::one();
        while c > &hi {
            hi *= &b;
            level += 1;
        }
        members.entry(level).or_default().push(i);
    }
    Ok(members
        .into_iter()
        .map(|(level, idx)| {
            let hi = b.pow(level);
            let lo = if level == 0 { BigUint::zero() } else { b.pow(level - 1) };
            LevelSet { level, lo: dec(&lo), hi: dec(&hi), set: r.support().select(&idx) }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Asymmetric BSG

/// Largest vertex set handled by the popular-difference graph.
pub const BSG_VERTEX_CAP: usize = 2048;
const BSG_CANDIDATES: usize = 64;

/// Measurements of a BSG run; every size is recomputed from `H` and `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BsgStats {
    /// Amplification index: `P` is a level set of `r_{2^{j-1}B}`.
    pub j: u32,
    pub level: u32,
    pub p_size: usize,
    pub energy_p: String,
    pub popular_differences: usize,
    pub graph_density: f64,
    pub h_size: usize,
    pub hh_size: usize,
    pub doubling: f64,
    pub intersection: usize,
    pub used_fallback: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BsgResult {
    pub h: GroundSet,
    pub x: Vec<i64>,
    pub energy_ab: String,
    /// `|A||B|^2 / E(A,B)`.
    pub k_measured: f64,
    /// `|H+H| < |A+A|·|H|` and `|B ∩ (H+x)| > 1`.
    pub nontrivial: bool,
    pub stats: BsgStats,
}

/// Pick `H` with small doubling inside a set `P` of large energy, by the
/// popular-difference graph and the paths-of-length-three argument.
fn symmetric_bsg(p_set: &GroundSet, seed: u64) -> Result<(GroundSet, usize, f64, bool)> {
    let n = p_set.len();
    if n > BSG_VERTEX_CAP {
        return Err(Error::CapExceeded { what: "BSG vertex set".into(), cap: BSG_VERTEX_CAP as u64 });
    }
    let packed = Packed::for_combination(&[(p_set, 2)])?;
    let vals = packed.values(p_set);
    let rdiff = RepFn::difference(p_set, p_set)?;
    let energy = rdiff.sum_of_squares();
    let two_n2 = BigUint::from(2 * n as u64 * n as u64);
    let popular: HashSet<i128> = packed
        .values(rdiff.support())
        .into_iter()
        .zip(rdiff.counts())
        .filter(|(_, c)| *c * &two_n2 >= energy)
        .map(|(d, _)| d)
        .collect();
    let words = n.div_ceil(64);
    let mut adj = vec![vec![0u64; words]; n];
    let mut edges = 0u64;
    for i in 0..n {
        for j in 0..n {
            if popular.contains(&packed.arith.norm(vals[i] - vals[j])) {
                adj[i][j / 64] |= 1 << (j % 64);
                edges += 1;
            }
        }
    }
    let density = edges as f64 / (n as f64 * n as f64);
    let tau = density * density * n as f64 / 2.0;
    let common = |x: usize, y: usize| -> u32 { adj[x].iter().zip(&adj[y]).map(|(a, b)| (a & b).count_ones()).sum() };

    let candidates: Vec<usize> = if n <= BSG_CANDIDATES {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c: Vec<usize> = sample(&mut rng, n, BSG_CANDIDATES).into_vec();
        let top = (0..n).max_by_key(|&i| (adj[i].iter().map(|w| w.count_ones()).sum::<u32>(), std::cmp::Reverse(i)));
        c.extend(top);
        c.sort_unstable();
        c.dedup();
        c
    };
    // score = max(|H+H|, n) / |H|, minimised
    let mut best: Option<(usize, usize, GroundSet)> = None;
    for v in candidates {
        let u: Vec<usize> = (0..n).filter(|&y| adj[v][y / 64] >> (y % 64) & 1 == 1).collect();
        let half = u.len() / 2;
        let h_idx: Vec<usize> = u
            .iter()
            .copied()
            .filter(|&x| u.iter().filter(|&&y| (common(x, y) as f64) < tau).count() <= half)
            .collect();
        if h_idx.is_empty() {
            continue;
        }
        let h = p_set.select(&h_idx);
        let hh = h.sumset(&h)?.len();
        let num = hh.max(n);
        let better = match &best {
            None => true,
            Some((bn, bh, _)) => (num as u128) * (*bh as u128) < (*bn as u128) * (h.len() as u128),
        };
        if better {
            best = Some((num, h.len(), h));
        }
    }
    let popular_count = popular.len();
    match best {
        Some((_, _, h)) => Ok((h, popular_count, density, false)),
        None => Ok((p_set.select(&[0]), popular_count, density, true)),
    }
}

/// `T_1 = |B|`, `T_2`, `T_4`, ..., `T_{2^l}`.
fn dyadic_energies(b: &GroundSet, l: u32) -> Result<Vec<BigUint>> {
    let mut out = vec![BigUint::from(b.len())];
    for j in 1..=l {
        out.push(t_k(b, 1 << j, Op::Add)?);
    }
    Ok(out)
}

/// The BSG pipeline without its preconditions: choose `j`, a level set `P` of
/// `r_{2^{j-1}B}`, then `H` inside `P` and the best translate `x`.
fn bsg_core(b: &GroundSet, l: u32, seed: u64) -> Result<(GroundSet, Vec<i64>, BsgStats)> {
    if b.is_empty() {
        return invalid("B must be nonempty");
    }
    let l = l.max(1);
    let t = dyadic_energies(b, l)?;
    let nb = BigUint::from(b.len());
    // j maximising T_{2^j} / (|B|^{2^j} T_{2^{j-1}})
    let mut j_best = 1u32;
    let mut best_ratio: Option<BigRational> = None;
    for j in 1..=l {
        let den = nb.pow(1 << j) * &t[j as usize - 1];
        let ratio = BigRational::new(BigInt::from(t[j as usize].clone()), BigInt::from(den));
        if best_ratio.as_ref().is_none_or(|r| ratio > *r) {
            best_ratio = Some(ratio);
            j_best = j;
        }
    }
    let r = RepFn::k_fold(b, 1 << (j_best - 1))?;
    let levels = level_sets(&r, 2)?;
    let mut chosen: Option<(BigUint, LevelSet, BigUint)> = None;
    for lv in levels {
        let e = additive_energy(&lv.set, &lv.set)?;
        let score = lv.hi_value().pow(4) * &e;
        if chosen.as_ref().is_none_or(|(s, _, _)| score > *s) {
            chosen = Some((score, lv, e));
        }
    }
    let (_, level, energy_p) = chosen.expect("nonempty support has a level");
    let (h, popular, density, fallback) = symmetric_bsg(&level.set, seed)?;
    let rx = RepFn::difference(b, &h)?;
    let mut best_x = 0;
    for (i, c) in rx.counts().iter().enumerate() {
        if c > &rx.counts()[best_x] {
            best_x = i;
        }
    }
    let x = rx.support().get(best_x).to_vec();
    let hh_size = h.sumset(&h)?.len();
    let intersection = b.intersection(&h.translate(&x)?)?.len();
    let stats = BsgStats {
        j: j_best,
        level: level.level,
        p_size: level.set.len(),
        energy_p: dec(&energy_p),
        popular_differences: popular,
        graph_density: density,
        h_size: h.len(),
        hh_size,
        doubling: hh_size as f64 / h.len() as f64,
        intersection,
        used_fallback: fallback,
    };
    Ok((h, x, stats))
}

/// Given `E(A,B) >= |A||B|^2/K` with `|A| >= |B|`, find `H` with small
/// doubling and `x` such that `B ∩ (H+x)` is large.
pub fn bsg_asymmetric(a: &GroundSet, b: &GroundSet, k_target: f64, l: u32, seed: u64) -> Result<BsgResult> {
    if b.is_empty() || a.len() < b.len() {
        return Err(Error::Precondition("need |A| >= |B| >= 1".into()));
    }
    if l == 0 {
        return invalid("l must be positive");
    }
    if !(k_target >= 1.0) {
        return invalid("K must be at least 1");
    }
    let energy = additive_energy(a, b)?;
    let need = BigUint::from(a.len()) * BigUint::from(b.len()).pow(2);
    if big_rat(&energy) * rat_from_f64(k_target, "K")? < big_rat(&need) {
        return Err(Error::Precondition(format!(
            "E(A,B) = {energy} is below |A||B|^2/K = {}",
            to_f64(&need) / k_target
        )));
    }
    let (h, x, stats) = bsg_core(b, l, seed)?;
    let aa = a.sumset(a)?.len();
    let nontrivial = stats.hh_size < aa * stats.h_size && stats.intersection > 1;
    Ok(BsgResult {
        h,
        x,
        k_measured: to_f64(&need) / to_f64(&energy),
        energy_ab: dec(&energy),
        nontrivial,
        stats,
    })
}

// ---------------------------------------------------------------------------
// β-decomposition

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaDecomposition {
    pub a_star: GroundSet,
    pub k: u32,
    /// `K` with `T_k(A) = |A|^{2k-1} K^{1-k}`.
    pub k_param: f64,
    /// Chain index: the largest `j` with `T_j K >= |A|^2 T_{j-1}`.
    pub j: Option<u32>,
    /// `M = (kK)^{k / log_2 k}`; the statement is vacuous when `M >= |A|`.
    pub m_threshold: f64,
    pub vacuous: bool,
    pub note: Option<String>,
    pub p_size: usize,
    pub bsg: Option<BsgStats>,
    pub h: Option<GroundSet>,
    pub x: Option<Vec<i64>>,
    pub beta: BetaEstimate,
}

fn interval_budget(set: &GroundSet) -> u64 {
    match set.scalars() {
        Some(xs) if set.ambient().is_integers() && !xs.is_empty() => {
            let diam = (xs[xs.len() - 1] as i128 - xs[0] as i128) as u64;
            (2 * diam + 2).min(256)
        }
        _ => 0,
    }
}

/// Find `A_* ⊆ A` with small β from large `T_k(A)`.
pub fn beta_decomposition(set: &GroundSet, k: u32, k_param: Option<f64>, seed: u64) -> Result<BetaDecomposition> {
    if k < 2 {
        return invalid("k must be at least 2");
    }
    if set.is_empty() {
        return invalid("A must be nonempty");
    }
    let n = set.len();
    let nb = BigUint::from(n);
    let mut t = vec![BigUint::one(), nb.clone()];
    for j in 2..=k {
        t.push(t_k(set, j, Op::Add)?);
    }
    let kp = match k_param {
        Some(v) if v >= 1.0 && v.is_finite() => v,
        Some(_) => return invalid("K must be finite and at least 1"),
        None => (to_f64(&nb.pow(2 * k - 1)) / to_f64(&t[k as usize])).powf(1.0 / (k - 1) as f64).max(1.0),
    };
    let m_threshold = (k as f64 * kp).powf(k as f64 / (k as f64).log2());
    let vacuous = m_threshold >= n as f64;
    let kr = rat_from_f64(kp, "K")?;
    let n2 = big_rat(&nb.pow(2));
    let j = (2..=k).rev().find(|&j| big_rat(&t[j as usize]) * &kr >= &n2 * big_rat(&t[j as usize - 1]));
    let whole = |note: String| -> Result<BetaDecomposition> {
        Ok(BetaDecomposition {
            a_star: set.clone(),
            k,
            k_param: kp,
            j,
            m_threshold,
            vacuous,
            note: Some(note),
            p_size: 0,
            bsg: None,
            h: None,
            x: None,
            beta: beta_hat(set, interval_budget(set), &[])?,
        })
    };
    if vacuous {
        return whole(format!("M = {m_threshold:.3} >= |A| = {n}: nothing to find"));
    }
    let Some(j) = j else {
        return whole("no j in [2, k] passes the chain test".into());
    };
    let r = RepFn::k_fold(set, j - 1)?;
    let mut chosen: Option<(BigUint, GroundSet)> = None;
    for lv in level_sets(&r, 2)? {
        let score = lv.hi_value().pow(2) * additive_energy(&lv.set, set)?;
        if chosen.as_ref().is_none_or(|(s, _)| score > *s) {
            chosen = Some((score, lv.set));
        }
    }
    let (_, p_set) = chosen.expect("nonempty support has a level");
    let l = (k as f64).log2().floor().max(1.0) as u32;
    let (h, x, stats) = bsg_core(set, l, seed)?;
    let a_star = set.intersection(&h.translate(&x)?)?;
    let beta = beta_hat(&a_star, interval_budget(&a_star), std::slice::from_ref(&h))?;
    Ok(BetaDecomposition {
        a_star,
        k,
        k_param: kp,
        j: Some(j),
        m_threshold,
        vacuous,
        note: None,
        p_size: p_set.len(),
        bsg: Some(stats),
        h: Some(h),
        x: Some(x),
        beta,
    })
}

// ---------------------------------------------------------------------------
// Sum/product energy splitting

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeelStep {
    pub c_size: usize,
    pub t_mul_c: String,
    pub below_threshold: bool,
    /// The peeled set `D_j`, absent on the final step.
    pub peeled: Option<GroundSet>,
    /// `|D_j| >= |A|^{1/2}`.
    pub peeled_large: Option<bool>,
    pub vacuous: Option<bool>,
}

/// `A = B ⊔ C` with `T_s^×(C)` at most the threshold; `B` collects the
/// peeled β-structured pieces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub a: GroundSet,
    pub b: GroundSet,
    pub c: GroundSet,
    pub s: u32,
    pub q: u32,
    pub k_param: f64,
    /// `|A|^{2s-1} K^{1-s}` as a reduced fraction.
    pub threshold: String,
    pub t_add_s_b: String,
    pub t_mul_s_c: String,
    pub t_add_q_b: String,
    pub iterations: Vec<PeelStep>,
    pub max_iter_hit: bool,
    /// `δ` with `max(T_s^+(B), T_s^×(C)) = |A|^{2s-δ}`.
    pub measured_delta: f64,
    pub warnings: Vec<String>,
}

impl DecompositionResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("decomposition serialises")
    }

    pub fn from_json(bytes: &[u8]) -> Result<DecompositionResult> {
        serde_json::from_slice(bytes).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })
    }

    pub fn peels(&self) -> usize {
        self.iterations.iter().filter(|s| s.peeled.is_some()).count()
    }
}

/// `K = |A|^{(δ-1)/(s-1)}` with `δ = 1 + c·sqrt(log s / log log s)`, `c = 1/2`.
pub fn default_dec_k(n: usize, s: u32) -> f64 {
    let ls = (s as f64).log2();
    let delta = 1.0 + 0.5 * (ls / (1.0 + ls).log2()).sqrt();
    (n as f64).powf((delta - 1.0) / (s as f64 - 1.0))
}

fn dec_threshold(n: usize, s: u32, kp: f64) -> Result<BigRational> {
    if !(2..=64).contains(&s) {
        return invalid("s must lie in [2, 64]");
    }
    if !(kp >= 1.0 && kp.is_finite()) {
        return invalid("K must be finite and at least 1");
    }
    let kr = rat_from_f64(kp, "K")?;
    let base = big_rat(&BigUint::from(n).pow(2 * s - 1));
    Ok(base / num_traits::pow(kr, (s - 1) as usize))
}

fn measured_delta(n: usize, s: u32, e: &BigUint) -> f64 {
    if n < 2 || e.is_zero() {
        return 0.0;
    }
    2.0 * s as f64 - crate::numbers::log2_big(e) / (n as f64).log2()
}

fn from_exponents(emb: &crate::groundset::MultEmbedding, image: &GroundSet) -> GroundSet {
    let lookup: HashMap<&[i64], i64> = emb.pairs.iter().map(|(x, v)| (v.as_slice(), *x)).collect();
    GroundSet::integers(image.iter().filter_map(|v| lookup.get(v).copied()))
}

/// Peel multiplicatively structured pieces off `A` until the rest has small
/// multiplicative energy.
pub fn dec_tk(set: &GroundSet, s: u32, q: u32, k_param: Option<f64>, max_iter: u32, seed: u64) -> Result<DecompositionResult> {
    if s < 2 || q < 2 {
        return invalid("s and q must be at least 2");
    }
    let xs = set.as_integers()?;
    if xs.iter().any(|&x| x <= 0) {
        return invalid("A must consist of positive integers");
    }
    let n = set.len();
    let kp = k_param.unwrap_or_else(|| default_dec_k(n, s));
    let threshold = dec_threshold(n, s, kp)?;
    let mut warnings = Vec::new();
    if n >= 16 {
        let l = (n as f64).ln();
        let ll = l.ln();
        let lll = ll.ln();
        if lll > 0.0 && s as f64 > l / (ll * lll).sqrt() {
            warnings.push(format!("s = {s} is large for |A| = {n}; the exponent saving is not expected"));
        }
    }
    let mut b = GroundSet::empty(Ambient::INTEGERS);
    let mut c = set.clone();
    let mut iterations = Vec::new();
    let mut max_iter_hit = true;
    let sqrt_n = (n as f64).sqrt();
    for _ in 0..=max_iter {
        let tc = t_k(&c, s, Op::Mul)?;
        let below = big_rat(&tc) <= threshold;
        if below || iterations.len() as u32 == max_iter {
            iterations.push(PeelStep {
                c_size: c.len(),
                t_mul_c: dec(&tc),
                below_threshold: below,
                peeled: None,
                peeled_large: None,
                vacuous: None,
            });
            max_iter_hit = !below;
            break;
        }
        let emb = mult_embed(&c)?;
        let bd = beta_decomposition(&emb.set, s, None, seed)?;
        let d = from_exponents(&emb, &bd.a_star);
        if d.is_empty() {
            return Err(Error::Verification("β-decomposition returned an empty piece".into()));
        }
        let large = d.len() as f64 >= sqrt_n;
        if !large {
            warnings.push(format!("peeled piece of size {} is below |A|^(1/2)", d.len()));
        }
        iterations.push(PeelStep {
            c_size: c.len(),
            t_mul_c: dec(&tc),
            below_threshold: false,
            peeled: Some(d.clone()),
            peeled_large: Some(large),
            vacuous: Some(bd.vacuous),
        });
        b = b.union(&d)?;
        c = c.minus(&d)?;
    }
    let t_add_s_b = t_k(&b, s, Op::Add)?;
    let t_mul_s_c = t_k(&c, s, Op::Mul)?;
    let t_add_q_b = t_k(&b, q, Op::Add)?;
    let worst = (&t_add_s_b).max(&t_mul_s_c).clone();
    Ok(DecompositionResult {
        a: set.clone(),
        b,
        c,
        s,
        q,
        k_param: kp,
        threshold: threshold.to_string(),
        t_add_s_b: dec(&t_add_s_b),
        t_mul_s_c: dec(&t_mul_s_c),
        t_add_q_b: dec(&t_add_q_b),
        iterations,
        max_iter_hit,
        measured_delta: measured_delta(n, s, &worst),
        warnings,
    })
}

/// Replay a decomposition trace against freshly computed energies.
pub fn verify_trace(r: &DecompositionResult) -> Result<()> {
    let fail = |m: String| Err(Error::Verification(m));
    if r.q < 2 {
        return fail(format!("q = {} is below 2", r.q));
    }
    if !r.b.intersection(&r.c)?.is_empty() || r.b.union(&r.c)? != r.a {
        return fail("B and C do not partition A".into());
    }
    let threshold = dec_threshold(r.a.len(), r.s, r.k_param)?;
    if threshold.to_string() != r.threshold {
        return fail(format!("threshold {} does not match {}", r.threshold, threshold));
    }
    let mut c = r.a.clone();
    let mut b = GroundSet::empty(r.a.ambient());
    for (i, step) in r.iterations.iter().enumerate() {
        let tc = t_k(&c, r.s, Op::Mul)?;
        if step.c_size != c.len() || dec(&tc) != step.t_mul_c {
            return fail(format!("step {i}: recorded |C| or T_s^x(C) disagrees"));
        }
        if step.below_threshold != (big_rat(&tc) <= threshold) {
            return fail(format!("step {i}: threshold flag disagrees"));
        }
        match &step.peeled {
            Some(d) => {
                if d.is_empty() || !d.is_subset(&c) || step.below_threshold {
                    return fail(format!("step {i}: invalid peel"));
                }
                b = b.union(d)?;
                c = c.minus(d)?;
            }
            None if i + 1 != r.iterations.len() => return fail(format!("step {i}: stop before the end")),
            None => {}
        }
    }
    if b != r.b || c != r.c {
        return fail("replayed B, C differ from the recorded sets".into());
    }
    let checks = [
        (t_k(&r.b, r.s, Op::Add)?, &r.t_add_s_b, "T_s^+(B)"),
        (t_k(&r.c, r.s, Op::Mul)?, &r.t_mul_s_c, "T_s^x(C)"),
        (t_k(&r.b, r.q, Op::Add)?, &r.t_add_q_b, "T_q^+(B)"),
    ];
    for (v, rec, name) in checks {
        if &dec(&v) != rec {
            return fail(format!("{name}: recorded {rec}, recomputed {v}"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Sidon extraction

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SidonMode {
    ExactTiny,
    Greedy,
}

/// Largest set for [`SidonMode::ExactTiny`].
pub const SIDON_EXACT_CAP: usize = 20;

/// `M[j]` = all sums of `j`-element multisets of the chosen elements, each
/// obtained exactly once.
#[derive(Clone)]
struct MultisetSums {
    h: usize,
    levels: Vec<Vec<i128>>,
}

impl MultisetSums {
    fn new(h: usize) -> Self {
        let mut levels = vec![Vec::new(); h + 1];
        levels[0].push(0);
        MultisetSums { h, levels }
    }

    fn shifted(&self, j: usize, y: i128, norm: impl Fn(i128) -> i128) -> Vec<Vec<i128>> {
        (0..=j).map(|t| self.levels[j - t].iter().map(|&m| norm(m + t as i128 * y)).collect()).collect()
    }

    /// Whether adding `y` keeps every `h`-fold sum unique.
    fn admits(&self, y: i128, norm: impl Fn(i128) -> i128 + Copy) -> bool {
        let mut seen = HashSet::new();
        self.shifted(self.h, y, norm).into_iter().flatten().all(|v| seen.insert(v))
    }

    fn add(&mut self, y: i128, norm: impl Fn(i128) -> i128 + Copy) {
        let next: Vec<Vec<i128>> = (0..=self.h)
            .map(|j| {
                let mut v: Vec<i128> = self.shifted(j, y, norm).into_iter().flatten().collect();
                v.sort_unstable();
                v
            })
            .collect();
        self.levels = next;
    }
}

struct SidonSearch<'a> {
    vals: &'a [i128],
    norm: &'a dyn Fn(i128) -> i128,
    best: Vec<usize>,
    visited: u64,
    budget: u64,
}

impl SidonSearch<'_> {
    fn expand(&mut self, from: usize, chosen: &mut Vec<usize>, sums: &MultisetSums) -> Result<()> {
        if chosen.len() > self.best.len() {
            self.best = chosen.clone();
        }
        for i in from..self.vals.len() {
            if chosen.len() + (self.vals.len() - i) <= self.best.len() {
                return Ok(());
            }
            self.visited += 1;
            if self.visited > self.budget {
                return Err(Error::BudgetExceeded { budget: self.budget, visited: self.visited });
            }
            let norm = |x| (self.norm)(x);
            if sums.admits(self.vals[i], norm) {
                let mut next = sums.clone();
                next.add(self.vals[i], norm);
                chosen.push(i);
                self.expand(i + 1, chosen, &next)?;
                chosen.pop();
            }
        }
        Ok(())
    }
}

/// A `B_h[1]` subset of `A`: every value has at most one representation as a
/// sum (or product) of an `h`-element multiset.
pub fn sidon_extract(set: &GroundSet, h: u32, op: Op, mode: SidonMode, budget: Budget) -> Result<GroundSet> {
    if h < 2 {
        return invalid("h must be at least 2");
    }
    let image = additive_image(set, op)?;
    let vecs: Vec<Vec<i64>> = match op {
        Op::Add => set.to_vectors(),
        Op::Mul => mult_embed(set)?.pairs.into_iter().map(|(_, v)| v).collect(),
    };
    let packed = Packed::for_combination(&[(&image, h as i128)])?;
    let vals: Vec<i128> = vecs.iter().map(|v| packed.arith.norm(packed.codec.pack(v))).collect();
    let arith = packed.arith;
    let norm = move |x: i128| arith.norm(x);
    let chosen = match mode {
        SidonMode::Greedy => {
            let mut sums = MultisetSums::new(h as usize);
            let mut chosen = Vec::new();
            for (i, &y) in vals.iter().enumerate() {
                if sums.admits(y, norm) {
                    sums.add(y, norm);
                    chosen.push(i);
                }
            }
            chosen
        }
        SidonMode::ExactTiny => {
            if set.len() > SIDON_EXACT_CAP {
                return Err(Error::CapExceeded { what: "exact Sidon set size".into(), cap: SIDON_EXACT_CAP as u64 });
            }
            let mut search = SidonSearch { vals: &vals, norm: &norm, best: Vec::new(), visited: 0, budget: budget.0 };
            search.expand(0, &mut Vec::new(), &MultisetSums::new(h as usize))?;
            search.best
        }
    };
    Ok(set.select(&chosen))
}

/// Whether `set` is `B_h[1]`, by direct enumeration of multisets.
pub fn is_sidon(set: &GroundSet, h: u32, op: Op) -> Result<bool> {
    let image = additive_image(set, op)?;
    let packed = Packed::for_combination(&[(&image, h as i128)])?;
    let vals = packed.values(&image);
    let mut seen = HashSet::new();
    let mut idx = vec![0usize; h as usize];
    if vals.is_empty() {
        return Ok(true);
    }
    loop {
        let s = packed.arith.norm(idx.iter().map(|&i| vals[i]).sum());
        if !seen.insert(s) {
            return Ok(false);
        }
        // next nondecreasing index tuple
        let mut p = h as usize;
        while p > 0 && idx[p - 1] == vals.len() - 1 {
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

// ---------------------------------------------------------------------------
// Ratio box

/// Largest set accepted by [`ratio_box`].
pub const RATIO_BOX_CAP: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatioBox {
    /// Largest `n` with `[n]/[n] ⊆ (A-A)/(A-A)`.
    pub n: u64,
    /// First absent fraction with numerator and denominator at most `n + 1`.
    pub first_missing: Fraction,
}

enum Positive {
    Bits(Vec<u64>),
    Hash(HashSet<u64>),
}

impl Positive {
    fn contains(&self, d: u64) -> bool {
        match self {
            Positive::Bits(b) => (d as usize / 64) < b.len() && b[d as usize / 64] >> (d % 64) & 1 == 1,
            Positive::Hash(h) => h.contains(&d),
        }
    }
}

/// `[n]/[n] ⊆ D/D` for `D = A - A`.
pub fn ratio_box(set: &GroundSet) -> Result<RatioBox> {
    let xs = set.as_integers()?;
    if xs.len() > RATIO_BOX_CAP {
        return Err(Error::CapExceeded { what: "ratio box set size".into(), cap: RATIO_BOX_CAP as u64 });
    }
    let mut diffs: Vec<u64> = Vec::with_capacity(xs.len() * xs.len() / 2);
    for (i, &x) in xs.iter().enumerate() {
        for &y in &xs[i + 1..] {
            let d = y as i128 - x as i128;
            diffs.push(u64::try_from(d).map_err(|_| Error::Overflow("difference"))?);
        }
    }
    diffs.sort_unstable();
    diffs.dedup();
    let max_d = diffs.last().copied().unwrap_or(0);
    let pos = if max_d < 1 << 28 {
        let mut bits = vec![0u64; max_d as usize / 64 + 1];
        for &d in &diffs {
            bits[d as usize / 64] |= 1 << (d % 64);
        }
        Positive::Bits(bits)
    } else {
        Positive::Hash(diffs.iter().copied().collect())
    };
    // a/b (reduced) lies in D/D iff t·a and t·b are both positive differences
    let present = |a: u64, b: u64| -> bool {
        let top = a.max(b);
        (1..=max_d / top).any(|t| pos.contains(t * a) && pos.contains(t * b))
    };
    let mut n = 0u64;
    loop {
        let m = n + 1;
        let mut level = (1..=m).filter(|&a| crate::numbers::gcd(a, m) == 1).map(|a| (a, m));
        let mut rev = (1..m).filter(|&b| crate::numbers::gcd(m, b) == 1).map(|b| (m, b));
        if let Some((num, den)) = level.find(|&(a, b)| !present(a, b)).or_else(|| rev.find(|&(a, b)| !present(a, b))) {
            return Ok(RatioBox { n, first_missing: Fraction { num, den } });
        }
        n = m;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dissociation::is_k_dissociated;
    use proptest::prelude::*;

    fn z(xs: &[i64]) -> GroundSet {
        GroundSet::integers(xs.iter().copied())
    }

    #[test]
    fn peeling_small_cases() {
        let p = dissociated_peeling(&GroundSet::interval(8), 4, Budget::default()).unwrap();
        assert_eq!(p.blocks, vec![z(&[4, 6, 7, 8])]);
        assert_eq!(p.remainder, z(&[1, 2, 3, 5]));
        assert!(p.remainder_certified);

        let p = dissociated_peeling(&z(&[0, 3, -5, 9]), 1, Budget::default()).unwrap();
        assert_eq!(p.blocks.len(), 3);
        assert!(p.blocks.iter().all(|b| b.len() == 1));
        assert_eq!(p.remainder, z(&[0]));

        let p = dissociated_peeling(&z(&[1, 2, 4, 8, 16, 32]), 3, Budget::default()).unwrap();
        assert_eq!(p.blocks.len(), 2);
        assert!(p.remainder.is_empty());
        assert!(dissociated_peeling(&z(&[1]), 0, Budget::default()).is_err());
    }

    #[test]
    fn level_sets_of_interval_sums() {
        let r = RepFn::k_fold(&GroundSet::interval(4), 2).unwrap();
        let lv = level_sets(&r, 2).unwrap();
        let sets: Vec<GroundSet> = lv.iter().map(|l| l.set.clone()).collect();
        assert_eq!(sets, vec![z(&[2, 8]), z(&[3, 7]), z(&[4, 5, 6])]);
        assert_eq!((lv[2].lo.as_str(), lv[2].hi.as_str()), ("2", "4"));

        let flat = RepFn::k_fold(&z(&[1, 2, 4]), 1).unwrap();
        assert_eq!(level_sets(&flat, 2).unwrap().len(), 1);
        assert!(level_sets(&flat, 1).is_err());
    }

    #[test]
    fn bsg_recovers_progression() {
        let a = GroundSet::interval(8);
        let r = bsg_asymmetric(&a, &a, 8.0 * 64.0 / 344.0 + 1e-9, 2, 1).unwrap();
        assert!(!r.h.is_empty());
        assert!(r.nontrivial);
        assert!(r.stats.doubling <= 2.0);
        assert_eq!(r.stats.hh_size, r.h.sumset(&r.h).unwrap().len());
        let dissociated = z(&[1, 2, 4, 8, 16, 32, 64, 128]);
        assert!(matches!(bsg_asymmetric(&dissociated, &dissociated, 1.5, 2, 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn beta_decomposition_cases() {
        let ap = GroundSet::interval(32);
        let r = beta_decomposition(&ap, 2, None, 3).unwrap();
        assert_eq!(r.j, Some(2));
        assert!(!r.vacuous);
        assert!(r.a_star.len() >= 16);
        assert!(r.beta.value <= 2.5);

        let diss = z(&[1, 2, 4, 8, 16, 32, 64, 128, 256, 512]);
        let r = beta_decomposition(&diss, 2, None, 3).unwrap();
        assert!(r.vacuous);
        assert_eq!(r.a_star, diss);
        assert!(r.note.is_some());

        let mixed = GroundSet::interval(16).union(&z(&[1_000_001, 1_000_002, 1_000_003, 1_000_004])).unwrap();
        let r = beta_decomposition(&mixed, 2, None, 3).unwrap();
        assert!(r.a_star.is_subset(&GroundSet::interval(16)));
    }

    #[test]
    fn dec_tk_contracts() {
        let gp = GroundSet::integers((0..16).map(|i| 1i64 << i));
        let r = dec_tk(&gp, 2, 2, None, 64, 1).unwrap();
        verify_trace(&r).unwrap();
        assert!(r.peels() >= 1);
        assert!(r.iterations.last().unwrap().below_threshold);

        let primes = GroundSet::integers(crate::numbers::first_primes(16).into_iter().map(|p| p as i64));
        let r = dec_tk(&primes, 2, 2, None, 64, 1).unwrap();
        verify_trace(&r).unwrap();
        assert_eq!(r.peels(), 0);
        assert!(r.b.is_empty());

        let mut tampered = r.clone();
        tampered.t_mul_s_c = "1".into();
        assert!(verify_trace(&tampered).is_err());
        let back = DecompositionResult::from_json(r.to_json().as_bytes()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn sidon_examples() {
        let b = sidon_extract(&GroundSet::interval(5), 2, Op::Add, SidonMode::ExactTiny, Budget::default()).unwrap();
        assert_eq!(b.len(), 3);
        assert!(is_sidon(&b, 2, Op::Add).unwrap());
        let a = z(&[2, 3, 4, 9]);
        assert_eq!(sidon_extract(&a, 2, Op::Mul, SidonMode::ExactTiny, Budget::default()).unwrap(), a);
        assert_eq!(sidon_extract(&z(&[7]), 3, Op::Add, SidonMode::Greedy, Budget::default()).unwrap(), z(&[7]));
        let g = sidon_extract(&GroundSet::interval(30), 2, Op::Add, SidonMode::Greedy, Budget::default()).unwrap();
        assert_eq!(g, z(&[1, 2, 4, 8, 13, 21]));
    }

    fn naive_ratio_box(xs: &[i64]) -> u64 {
        let mut ratios = HashSet::new();
        for &a in xs {
            for &b in xs {
                for &c in xs {
                    for &d in xs {
                        let (p, q) = (a - b, c - d);
                        if p > 0 && q > 0 {
                            let g = crate::numbers::gcd(p as u64, q as u64);
                            ratios.insert((p as u64 / g, q as u64 / g));
                        }
                    }
                }
            }
        }
        let mut n = 0;
        while (1..=n + 1).all(|a| {
            (1..=n + 1).all(|b| {
                let g = crate::numbers::gcd(a, b);
                ratios.contains(&(a / g, b / g))
            })
        }) {
            n += 1;
        }
        n
    }

    #[test]
    fn ratio_box_examples() {
        let ap = z(&[3, 10, 17, 24, 31]);
        assert_eq!(ratio_box(&ap).unwrap(), RatioBox { n: 4, first_missing: Fraction { num: 1, den: 5 } });
        assert_eq!(ratio_box(&z(&[5])).unwrap().n, 0);
        assert_eq!(ratio_box(&z(&[0, 1, 3])).unwrap().n, 3);
    }

    fn naive_sidon_max(xs: &[i64]) -> usize {
        (0u32..1 << xs.len())
            .filter(|m| {
                let s = GroundSet::integers((0..xs.len()).filter(|i| m >> i & 1 == 1).map(|i| xs[i]));
                is_sidon(&s, 2, Op::Add).unwrap()
            })
            .map(|m| m.count_ones() as usize)
            .max()
            .unwrap_or(0)
    }

    proptest! {
        #[test]
        fn ratio_box_matches_naive(xs in proptest::collection::vec(-60i64..60, 1..14)) {
            let s = GroundSet::integers(xs);
            prop_assert_eq!(ratio_box(&s).unwrap().n, naive_ratio_box(s.as_integers().unwrap()));
        }

        #[test]
        fn peeling_partitions(xs in proptest::collection::vec(-40i64..40, 0..12), l in 1usize..5) {
            let s = GroundSet::integers(xs);
            let p = dissociated_peeling(&s, l, Budget::default()).unwrap();
            let mut all = p.remainder.clone();
            for b in &p.blocks {
                prop_assert_eq!(b.len(), l);
                prop_assert!(is_k_dissociated(b, 1, Budget::default()).unwrap().is_dissociated());
                prop_assert!(all.intersection(b).unwrap().is_empty());
                all = all.union(b).unwrap();
            }
            prop_assert_eq!(all, s);
            if p.remainder_certified {
                prop_assert!(dim_k_exact(&p.remainder, 1, Budget::default()).unwrap().upper < l as u64);
            }
        }

        #[test]
        fn exact_sidon_is_maximum(xs in proptest::collection::vec(0i64..40, 1..9)) {
            let s = GroundSet::integers(xs);
            let b = sidon_extract(&s, 2, Op::Add, SidonMode::ExactTiny, Budget::default()).unwrap();
            prop_assert!(is_sidon(&b, 2, Op::Add).unwrap());
            prop_assert!(b.is_subset(&s));
            prop_assert_eq!(b.len(), naive_sidon_max(s.as_integers().unwrap()));
        }

        #[test]
        fn level_sets_partition_support(xs in proptest::collection::vec(-20i64..20, 1..10), k in 1u32..4) {
            let r = RepFn::k_fold(&GroundSet::integers(xs), k).unwrap();
            let lv = level_sets(&r, 2).unwrap();
            let mut all = GroundSet::empty(Ambient::INTEGERS);
            for l in &lv {
                prop_assert!(all.intersection(&l.set).unwrap().is_empty());
                all = all.union(&l.set).unwrap();
                for v in l.set.iter() {
                    let c = r.get(v);
                    prop_assert!(c <= l.hi_value());
                    prop_assert!(c > l.lo.parse::<BigUint>().unwrap());
                }
            }
            prop_assert_eq!(&all, r.support());
        }
    }

    #[test]
    fn greedy_sidon_on_products_is_valid() {
        let s = GroundSet::interval(40);
        let b = sidon_extract(&s, 2, Op::Mul, SidonMode::Greedy, Budget::default()).unwrap();
        assert!(is_sidon(&b, 2, Op::Mul).unwrap());
        assert!(b.len() > 10);
    }
}
