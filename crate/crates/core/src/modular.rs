//! Multiplicative subgroups of `F_p^*`, the Dirichlet quantity
//! `D_{s,N}(A) = min_q Σ ||qa/N||^s`, Fourier maxima, randomized
//! multiplicative covering and subgroup growth experiments.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::decompose::Fraction;
use crate::dissociation::{dim_k_exact, DimensionBounds};
use crate::energy::{t_k, Op};
use crate::error::{invalid, Error, Result};
use crate::groundset::{Ambient, GroundSet};
use crate::growth::{growth_sequence, GrowthCurve};
use crate::numbers::{euler_phi, factorize, gcd, inv_mod, is_prime, mul_mod, pow_mod, primitive_root};
use crate::Budget;

// ---------------------------------------------------------------------------
// Subgroups

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupSpec {
    pub p: u64,
    pub t: u64,
    /// Element of order exactly `t`.
    pub generator: u64,
}

/// The subgroup of order `t` in `F_p^*`, generated by `g^{(p-1)/t}` for the
/// smallest primitive root `g`.
pub fn subgroup(p: u64, t: u64) -> Result<(SubgroupSpec, GroundSet)> {
    if p > 1 << 31 || !is_prime(p) {
        return invalid(format!("{p} is not a prime below 2^31"));
    }
    if t as usize > crate::groundset::DEFAULT_CAP {
        return Err(Error::CapExceeded { what: "subgroup order".into(), cap: crate::groundset::DEFAULT_CAP as u64 });
    }
    if t == 0 || (p - 1) % t != 0 {
        return invalid(format!("{t} does not divide p - 1 = {}", p - 1));
    }
    let g = primitive_root(p).ok_or_else(|| Error::InvalidParam(format!("no primitive root mod {p}")))?;
    let h = pow_mod(g, (p - 1) / t, p);
    let mut elems = Vec::with_capacity(t as usize);
    let mut x = 1u64;
    for _ in 0..t {
        elems.push(x as i64);
        x = mul_mod(x, h, p);
    }
    if x != 1 || factorize(t).iter().any(|&(q, _)| pow_mod(h, t / q, p) == 1) {
        return Err(Error::Verification(format!("{h} does not have order {t} mod {p}")));
    }
    let gamma = GroundSet::residues(p, elems)?;
    if gamma.len() as u64 != t {
        return Err(Error::Verification("subgroup elements are not distinct".into()));
    }
    Ok((SubgroupSpec { p, t, generator: h }, gamma))
}

// ---------------------------------------------------------------------------
// Dirichlet quantity

/// The exponent `s`. Integer exponents are evaluated exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Exponent {
    Int(u32),
    Real(f64),
}

impl Exponent {
    pub fn as_f64(self) -> f64 {
        match self {
            Exponent::Int(s) => s as f64,
            Exponent::Real(s) => s,
        }
    }

    fn validate(self) -> Result<()> {
        match self {
            Exponent::Int(0) => invalid("exponent must be positive"),
            Exponent::Real(s) if !(s.is_finite() && s > 0.0) => invalid("exponent must be positive"),
            _ => Ok(()),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Exponent> {
        let s = s.trim();
        let e = if let Ok(v) = s.parse::<u32>() {
            Exponent::Int(v)
        } else {
            let v = s
                .parse::<f64>()
                .map_err(|_| Error::InvalidParam(format!("bad exponent {s:?}")))?;
            if v.fract() == 0.0 && (1.0..=u32::MAX as f64).contains(&v) {
                Exponent::Int(v as u32)
            } else {
                Exponent::Real(v)
            }
        };
        e.validate()?;
        Ok(e)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Int(s) => write!(f, "{s}"),
            Exponent::Real(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletValue {
    /// Exact reduced fraction for integer `s`, otherwise the float in decimal.
    pub value: String,
    pub value_f64: f64,
    pub exact: bool,
    /// Absolute error bound on `value_f64` (zero when exact).
    pub error_bound: f64,
    pub argmin_q: u64,
    pub s: Exponent,
    pub modulus: u64,
}

impl DirichletValue {
    pub fn rational(&self) -> Option<BigRational> {
        if self.exact {
            BigRational::from_str(&self.value).ok()
        } else {
            None
        }
    }
}

/// Largest `|q range| · |A|` scanned without an explicit range.
pub const DIRICHLET_SCAN_CAP: u64 = 1 << 28;

/// Residues of `set` modulo `n`, for residue sets (with matching modulus) or
/// integer sets.
pub(crate) fn residues_mod(set: &GroundSet, n: u64) -> Result<Vec<u64>> {
    match set.ambient() {
        Ambient::Residues { modulus } if modulus == n => Ok(set.iter().map(|v| v[0] as u64).collect()),
        Ambient::Residues { modulus } => Err(Error::AmbientMismatch(format!(
            "set lives in Z/{modulus}Z but modulus {n} was requested"
        ))),
        a if a.is_integers() => Ok(set.iter().map(|v| v[0].rem_euclid(n as i64) as u64).collect()),
        a => Err(Error::AmbientMismatch(format!("expected residues or integers, got {a}"))),
    }
}

fn dist(q: u64, a: u64, n: u64) -> u64 {
    let r = mul_mod(q, a, n);
    r.min(n - r)
}

fn big_pow(n: u64, s: u32) -> BigUint {
    BigUint::from(n).pow(s)
}

/// `min_{q} Σ_{a∈A} ||qa/N||^s` over `q ∈ [1, N-1]` or the given inclusive range.
pub fn dirichlet_min(set: &GroundSet, modulus: u64, s: Exponent, q_range: Option<(u64, u64)>) -> Result<DirichletValue> {
    s.validate()?;
    if modulus < 2 {
        return invalid("modulus must be at least 2");
    }
    if modulus > i64::MAX as u64 {
        return invalid("modulus must fit in a signed 64-bit integer");
    }
    let elems = residues_mod(set, modulus)?;
    let (lo, hi) = match q_range {
        Some((lo, hi)) => {
            if lo < 1 || hi >= modulus || lo > hi {
                return invalid(format!("q range [{lo}, {hi}] is not inside [1, {}]", modulus - 1));
            }
            (lo, hi)
        }
        None => {
            let work = (modulus - 1).saturating_mul(elems.len().max(1) as u64);
            if work > DIRICHLET_SCAN_CAP {
                return Err(Error::CapExceeded { what: "Dirichlet scan (N·|A|)".into(), cap: DIRICHLET_SCAN_CAP });
            }
            (1, modulus - 1)
        }
    };
    match s {
        Exponent::Int(e) => {
            let half = (modulus / 2) as u128;
            let term = half.checked_pow(e).ok_or(Error::Overflow("Dirichlet sum"))?;
            term.checked_mul(elems.len() as u128).ok_or(Error::Overflow("Dirichlet sum"))?;
            let (num, q) = (lo..=hi)
                .into_par_iter()
                .map(|q| {
                    let sum: u128 = elems.iter().map(|&a| (dist(q, a, modulus) as u128).pow(e)).sum();
                    (sum, q)
                })
                .min()
                .expect("nonempty range");
            let r = BigRational::new(BigInt::from(num), BigInt::from(big_pow(modulus, e)));
            Ok(DirichletValue {
                value: r.to_string(),
                value_f64: r.to_f64().unwrap_or(f64::NAN),
                exact: true,
                error_bound: 0.0,
                argmin_q: q,
                s,
                modulus,
            })
        }
        Exponent::Real(e) => {
            let nf = modulus as f64;
            let (v, q) = (lo..=hi)
                .into_par_iter()
                .map(|q| {
                    let sum: f64 = elems.iter().map(|&a| (dist(q, a, modulus) as f64 / nf).powf(e)).sum();
                    (sum, q)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .expect("nonempty range");
            // powf is within a few ulps; summation adds at most |A| roundings.
            let error_bound = (elems.len() as f64 + 4.0) * 4.0 * f64::EPSILON * v.max(f64::MIN_POSITIVE);
            Ok(DirichletValue {
                value: format!("{v:e}"),
                value_f64: v,
                exact: false,
                error_bound,
                argmin_q: q,
                s,
                modulus,
            })
        }
    }
}

/// Check of `d >= s log(N-1) / log(dT)` where `D_{s,N}(A) = |A|/T` and
/// `d = dim(A)`, together with the pigeonhole form
/// `D_{s,N}(A) <= |A| min(1/2, d/M)^s`, `M = floor((N-1)^{1/d})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletDimReport {
    pub modulus: u64,
    pub s: Exponent,
    pub size: usize,
    pub dirichlet: DirichletValue,
    pub dim: DimensionBounds,
    /// `T = |A| / D_{s,N}(A)`; absent when the Dirichlet value vanishes.
    pub t_value: Option<f64>,
    /// `s log(N-1) / log(dT)` with `d` the certified lower bound.
    pub bound: Option<f64>,
    /// `d log(dT) - s log(N-1)`.
    pub slack: Option<f64>,
    /// `None` when skipped or when the dimension bounds do not decide it.
    pub holds: Option<bool>,
    pub pigeonhole_m: Option<u64>,
    pub pigeonhole_holds: Option<bool>,
    pub skipped: Option<String>,
}

/// `floor(x^{1/d})` computed exactly.
fn int_root(x: u64, d: u64) -> u64 {
    if d == 1 || x <= 1 {
        return x;
    }
    let fits = |m: u64| -> bool {
        let mut acc: u128 = 1;
        for _ in 0..d {
            acc *= m as u128;
            if acc > x as u128 {
                return false;
            }
        }
        true
    };
    let mut m = (x as f64).powf(1.0 / d as f64).round() as u64;
    while m > 0 && !fits(m) {
        m -= 1;
    }
    while fits(m + 1) {
        m += 1;
    }
    m
}

fn pigeonhole_check(dv: &DirichletValue, size: usize, d: u64, m: u64) -> bool {
    // Each ||q a/N|| is at most min(1/2, d/M) for the pigeonhole q.
    match (dv.s, dv.rational()) {
        (Exponent::Int(e), Some(value)) => {
            let per_term = if m == 0 || 2 * d >= m {
                BigRational::new(BigInt::from(1), BigInt::from(2))
            } else {
                BigRational::new(BigInt::from(d), BigInt::from(m))
            };
            let cap = num_traits::pow(per_term, e as usize) * BigRational::from_integer(BigInt::from(size));
            value <= cap
        }
        _ => {
            let e = dv.s.as_f64();
            let per_term = if m == 0 { 0.5 } else { (d as f64 / m as f64).min(0.5) };
            dv.value_f64 - dv.error_bound <= size as f64 * per_term.powf(e) * (1.0 + 1e-12)
        }
    }
}

/// Measures `D_{s,N}(A)` and `dim(A)` and checks the dimension lower bound.
/// Integer sets are reduced mod `N` for the Dirichlet value while `dim` is
/// taken over the integers, which can only be larger.
pub fn verify_dirichlet_dim(set: &GroundSet, modulus: u64, s: Exponent, budget: Budget) -> Result<DirichletDimReport> {
    if set.is_empty() {
        return invalid("set must be nonempty");
    }
    let dirichlet = dirichlet_min(set, modulus, s, None)?;
    let dim = dim_k_exact(set, 1, budget)?;
    let size = set.len();
    let mut report = DirichletDimReport {
        modulus,
        s,
        size,
        dirichlet,
        dim,
        t_value: None,
        bound: None,
        slack: None,
        holds: None,
        pigeonhole_m: None,
        pigeonhole_holds: None,
        skipped: None,
    };
    if report.dirichlet.value_f64 <= 0.0 {
        report.skipped = Some("Dirichlet value vanishes".into());
        return Ok(report);
    }
    let (lo, hi) = (report.dim.lower, report.dim.upper);
    let ln_t = (size as f64).ln() - report.dirichlet.value_f64.ln();
    let sf = s.as_f64();
    let target = sf * ((modulus - 1) as f64).ln();
    let lhs = |d: u64| d as f64 * ((d as f64).ln() + ln_t);
    let tol = 1e-9 * target.abs().max(1.0);
    report.t_value = Some(ln_t.exp());
    let log_dt = (lo as f64).ln() + ln_t;
    report.bound = (log_dt > 0.0).then(|| target / log_dt);
    report.slack = Some(lhs(lo) - target);
    report.holds = if lhs(lo) >= target - tol {
        Some(true)
    } else if lhs(hi) < target - tol {
        Some(false)
    } else {
        None
    };
    if report.dim.exact {
        let m = int_root(modulus - 1, lo.max(1));
        report.pigeonhole_m = Some(m);
        report.pigeonhole_holds = Some(pigeonhole_check(&report.dirichlet, size, lo.max(1), m));
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Fourier

/// Largest dense transform.
pub const FOURIER_CAP: u64 = 1 << 22;
const PARSEVAL_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierMax {
    pub modulus: u64,
    pub size: usize,
    /// `max_{r != 0} |Σ_a e(ar/N)|`.
    pub max_abs: f64,
    pub argmax: u64,
    pub parseval_rel_error: f64,
}

pub fn fourier_max(set: &GroundSet) -> Result<FourierMax> {
    let n = match set.ambient() {
        Ambient::Residues { modulus } => modulus,
        a => return Err(Error::AmbientMismatch(format!("Fourier transform needs residues, got {a}"))),
    };
    if n > FOURIER_CAP {
        return Err(Error::CapExceeded { what: "Fourier modulus".into(), cap: FOURIER_CAP });
    }
    let mut buf = vec![Complex::new(0.0f64, 0.0); n as usize];
    for v in set.iter() {
        buf[v[0] as usize].re = 1.0;
    }
    FftPlanner::new().plan_fft_forward(n as usize).process(&mut buf);
    let size = set.len();
    let energy: f64 = buf.iter().map(|c| c.norm_sqr()).sum();
    let expected = n as f64 * size as f64;
    let parseval_rel_error = if expected == 0.0 { energy } else { (energy - expected).abs() / expected };
    if parseval_rel_error > PARSEVAL_TOLERANCE {
        return Err(Error::Verification(format!(
            "Parseval mismatch: Σ|Â|² = {energy}, N|A| = {expected}"
        )));
    }
    let tie = 1e-9 * (size as f64).max(1.0);
    let (mut argmax, mut max_abs) = (1u64, buf[1].norm());
    for (r, c) in buf.iter().enumerate().skip(2) {
        let v = c.norm();
        if v > max_abs + tie {
            max_abs = v;
            argmax = r as u64;
        }
    }
    Ok(FourierMax { modulus: n, size, max_abs, argmax, parseval_rel_error })
}

// ---------------------------------------------------------------------------
// Random covering

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverResult {
    /// Sampled multipliers, `den = 1` in `F_p`.
    pub x: Vec<Fraction>,
    /// `A \ X·S`.
    pub omega: GroundSet,
    pub pool_size: usize,
    /// `|AA| / |A|`.
    pub doubling: f64,
    pub p_prob: f64,
    /// `D^3 p |A|`.
    pub predicted_x: f64,
    /// `D |A| (1 - p)^{|S|}`.
    pub predicted_omega: f64,
    pub trial: u32,
    pub trials: u32,
}

enum MulContext {
    Field(u64),
    Positive,
}

fn mul_context(set: &GroundSet) -> Result<MulContext> {
    match set.ambient() {
        Ambient::Residues { modulus } if is_prime(modulus) => {
            if set.contains_zero() {
                return invalid("0 is not invertible in F_p");
            }
            Ok(MulContext::Field(modulus))
        }
        a if a.is_integers() => {
            if set.iter().any(|v| v[0] <= 0) {
                return invalid("integer covering needs positive elements");
            }
            Ok(MulContext::Positive)
        }
        a => Err(Error::AmbientMismatch(format!("covering needs F_p or positive integers, got {a}"))),
    }
}

fn fraction(num: u64, den: u64) -> Fraction {
    let g = gcd(num, den);
    Fraction { num: num / g, den: den / g }
}

/// Covers `A ⊆ X·S ⊔ Ω` by sampling `X` from the pool `A·S^{-1}` at rate
/// `p_prob`; keeps the trial with the smallest `(|Ω|, |X|)`.
pub fn random_cover(a: &GroundSet, s: &GroundSet, p_prob: f64, trials: u32, seed: u64) -> Result<CoverResult> {
    if s.is_empty() {
        return invalid("S must be nonempty");
    }
    if trials == 0 {
        return invalid("trials must be positive");
    }
    if !(0.0..=1.0).contains(&p_prob) {
        return invalid("probability must lie in [0, 1]");
    }
    let ctx = mul_context(a)?;
    if s.ambient() != a.ambient() || !s.is_subset(a) {
        return invalid("S must be a subset of A");
    }
    let av: Vec<u64> = a.iter().map(|v| v[0] as u64).collect();
    let sv: Vec<u64> = s.iter().map(|v| v[0] as u64).collect();

    let quotient = |x: u64, y: u64| -> Result<Fraction> {
        match ctx {
            MulContext::Field(p) => Ok(Fraction { num: mul_mod(x, inv_mod(y, p).expect("nonzero mod prime"), p), den: 1 }),
            MulContext::Positive => Ok(fraction(x, y)),
        }
    };
    let mut pool = Vec::with_capacity(av.len() * sv.len());
    for &x in &av {
        for &y in &sv {
            pool.push(quotient(x, y)?);
        }
    }
    pool.sort_unstable_by(|u, v| (u.num as u128 * v.den as u128).cmp(&(v.num as u128 * u.den as u128)));
    pool.dedup();

    let products: HashSet<u128> = match ctx {
        MulContext::Field(p) => av.iter().flat_map(|&x| av.iter().map(move |&y| mul_mod(x, y, p) as u128)).collect(),
        MulContext::Positive => av.iter().flat_map(|&x| av.iter().map(move |&y| x as u128 * y as u128)).collect(),
    };
    let doubling = products.len() as f64 / av.len() as f64;

    let mut best: Option<(usize, Vec<Fraction>, Vec<u64>, u32)> = None;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
        let x: Vec<Fraction> = pool.iter().copied().filter(|_| rng.gen_bool(p_prob)).collect();
        let chosen: HashSet<Fraction> = x.iter().copied().collect();
        let mut omega = Vec::new();
        for &el in &av {
            let mut covered = false;
            for &y in &sv {
                if chosen.contains(&quotient(el, y)?) {
                    covered = true;
                    break;
                }
            }
            if !covered {
                omega.push(el);
            }
        }
        let better = match &best {
            None => true,
            Some((bo, bx, _, _)) => (omega.len(), x.len()) < (*bo, bx.len()),
        };
        if better {
            best = Some((omega.len(), x, omega, trial));
        }
    }
    let (_, x, omega, trial) = best.expect("at least one trial");
    let omega = GroundSet::from_vectors(a.ambient(), omega.into_iter().map(|v| vec![v as i64]).collect())?;
    let n = av.len() as f64;
    Ok(CoverResult {
        x,
        omega,
        pool_size: pool.len(),
        doubling,
        p_prob,
        predicted_x: doubling.powi(3) * p_prob * n,
        predicted_omega: doubling * n * (1.0 - p_prob).powi(sv.len() as i32),
        trial,
        trials,
    })
}

// ---------------------------------------------------------------------------
// Subgroup growth

/// Largest prime for [`subgroup_growth_experiment`].
pub const SUBGROUP_PRIME_CAP: u64 = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthConstant {
    pub n: u32,
    pub size: u64,
    /// `|nΓ| / (t / (n log^3 t))^n`.
    pub constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgroupGrowthReport {
    pub spec: SubgroupSpec,
    pub gamma: GroundSet,
    pub curve: GrowthCurve,
    /// `T_k^+(Γ)` for `k = 1..=k_max`, in decimal.
    pub energies: Vec<String>,
    pub dim: DimensionBounds,
    /// `dim(Γ) / min{log p / log log p, log p / log t, φ(t)}` from the lower bound.
    pub dim_constant: Option<f64>,
    pub growth_constants: Vec<GrowthConstant>,
    /// `log |n_max Γ| / log p`.
    pub sumset_exponent: f64,
}

pub fn subgroup_growth_experiment(p: u64, t: u64, n_max: u32, k_max: u32, budget: Budget) -> Result<SubgroupGrowthReport> {
    if p > SUBGROUP_PRIME_CAP {
        return Err(Error::CapExceeded { what: "subgroup prime".into(), cap: SUBGROUP_PRIME_CAP });
    }
    if k_max == 0 {
        return invalid("k_max must be positive");
    }
    let (spec, gamma) = subgroup(p, t)?;
    let curve = growth_sequence(&gamma, n_max, p as usize + 1)?;
    let energies = (1..=k_max)
        .map(|k| t_k(&gamma, k, Op::Add).map(|v| v.to_str_radix(10)))
        .collect::<Result<Vec<_>>>()?;
    let dim = dim_k_exact(&gamma, 1, budget)?;

    let lp = (p as f64).ln();
    let lt = (t as f64).ln();
    let mut terms = vec![euler_phi(t) as f64];
    if lp.ln() > 0.0 {
        terms.push(lp / lp.ln());
    }
    if lt > 0.0 {
        terms.push(lp / lt);
    }
    let floor = terms.iter().copied().fold(f64::INFINITY, f64::min);
    let dim_constant = (floor.is_finite() && floor > 0.0).then(|| dim.lower as f64 / floor);

    let mut growth_constants = Vec::new();
    if t >= 3 {
        for (i, &size) in curve.sizes.iter().enumerate() {
            let n = i as u32 + 1;
            let base = t as f64 / (n as f64 * lt.powi(3));
            growth_constants.push(GrowthConstant { n, size, constant: size as f64 / base.powi(n as i32) });
        }
    }
    let last = *curve.sizes.last().expect("n_max >= 1");
    let sumset_exponent = (last as f64).ln() / lp;
    Ok(SubgroupGrowthReport {
        spec,
        gamma,
        curve,
        energies,
        dim,
        dim_constant,
        growth_constants,
        sumset_exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numbers::divisors;
    use num_traits::Zero;
    use proptest::prelude::*;

    fn res(n: u64, v: &[i64]) -> GroundSet {
        GroundSet::residues(n, v.iter().copied()).unwrap()
    }

    fn naive_dirichlet(elems: &[u64], n: u64, s: u32) -> (BigRational, u64) {
        let mut best: Option<(BigRational, u64)> = None;
        for q in 1..n {
            let mut total = BigRational::zero();
            for &a in elems {
                let r = BigRational::new(BigInt::from(q * a % n), BigInt::from(n));
                let one = BigRational::from_integer(BigInt::from(1));
                let d = if r.clone() * BigInt::from(2) <= one { r } else { one - r };
                total += num_traits::pow(d, s as usize);
            }
            if best.as_ref().map_or(true, |(b, _)| total < *b) {
                best = Some((total, q));
            }
        }
        best.unwrap()
    }

    #[test]
    fn subgroup_examples() {
        let (spec, g) = subgroup(7, 3).unwrap();
        assert_eq!(g, res(7, &[1, 2, 4]));
        assert_eq!(spec.generator, 2);
        assert_eq!(subgroup(13, 4).unwrap().1, res(13, &[1, 5, 8, 12]));
        assert_eq!(subgroup(31, 1).unwrap().1, res(31, &[1]));
        assert!(subgroup(15, 2).is_err());
        assert!(subgroup(13, 5).is_err());
    }

    #[test]
    fn subgroups_are_closed() {
        for p in [7u64, 13, 31, 61, 1009] {
            for t in divisors(p - 1) {
                let (_, g) = subgroup(p, t).unwrap();
                assert_eq!(g.len() as u64, t);
                let elems: HashSet<u64> = g.iter().map(|v| v[0] as u64).collect();
                for &x in &elems {
                    for &y in &elems {
                        assert!(elems.contains(&mul_mod(x, y, p)));
                    }
                }
            }
        }
    }

    #[test]
    fn dirichlet_examples() {
        let v = dirichlet_min(&GroundSet::integers([1]), 5, Exponent::Int(2), None).unwrap();
        assert_eq!((v.value.as_str(), v.argmin_q), ("1/25", 1));
        let (_, g) = subgroup(7, 3).unwrap();
        let v = dirichlet_min(&g, 7, Exponent::Int(2), None).unwrap();
        assert_eq!(v.rational().unwrap(), BigRational::new(2.into(), 7.into()));
        let full = res(11, &(0..11).collect::<Vec<_>>());
        let values: HashSet<String> = (1..11)
            .map(|q| dirichlet_min(&full, 11, Exponent::Int(2), Some((q, q))).unwrap().value)
            .collect();
        assert_eq!(values.len(), 1);
    }

    #[test]
    fn dirichlet_real_exponent_matches_integer() {
        let (_, g) = subgroup(31, 5).unwrap();
        let exact = dirichlet_min(&g, 31, Exponent::Int(2), None).unwrap();
        let real = dirichlet_min(&g, 31, Exponent::Real(2.0), None).unwrap();
        assert!((exact.value_f64 - real.value_f64).abs() <= real.error_bound + 1e-15);
        assert_eq!("1.5".parse::<Exponent>().unwrap(), Exponent::Real(1.5));
        assert_eq!("2".parse::<Exponent>().unwrap(), Exponent::Int(2));
        assert!("0".parse::<Exponent>().is_err());
    }

    #[test]
    fn dirichlet_scan_cap() {
        let big = GroundSet::integers(0..64);
        let err = dirichlet_min(&big, 1 << 23, Exponent::Int(2), None).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { .. }));
        assert!(dirichlet_min(&big, 1 << 23, Exponent::Int(2), Some((1, 1000))).is_ok());
    }

    #[test]
    fn orbit_invariance() {
        for (p, t) in [(31u64, 5u64), (61, 4), (13, 3), (7, 3)] {
            let (_, g) = subgroup(p, t).unwrap();
            let base = dirichlet_min(&g, p, Exponent::Int(2), None).unwrap();
            for c in 2..p {
                let coset = g.dilate(c as i64).unwrap();
                let v = dirichlet_min(&coset, p, Exponent::Int(2), None).unwrap();
                assert_eq!(v.value, base.value);
            }
        }
    }

    #[test]
    fn dirichlet_dimension_examples() {
        let r = verify_dirichlet_dim(&GroundSet::integers([1]), 5, Exponent::Int(2), Budget::default()).unwrap();
        assert_eq!(r.dim.lower, 1);
        assert!((r.t_value.unwrap() - 25.0).abs() < 1e-9);
        assert_eq!(r.holds, Some(true));
        assert!((r.bound.unwrap() - 2.0 * 4f64.ln() / 25f64.ln()).abs() < 1e-12);
        let (_, g) = subgroup(31, 5).unwrap();
        let r = verify_dirichlet_dim(&g, 31, Exponent::Int(2), Budget::default()).unwrap();
        assert_eq!(r.holds, Some(true));
        assert_eq!(r.pigeonhole_holds, Some(true));
        let zero = verify_dirichlet_dim(&res(8, &[0, 4]), 8, Exponent::Int(1), Budget::default()).unwrap();
        assert!(zero.skipped.is_some());
    }

    #[test]
    fn int_root_is_exact() {
        for x in [1u64, 2, 7, 8, 9, 63, 64, 65, 1000, 1 << 40] {
            for d in 1..8 {
                let m = int_root(x, d);
                assert!((m as u128).pow(d as u32) <= x as u128);
                assert!(((m + 1) as u128).pow(d as u32) > x as u128);
            }
        }
    }

    #[test]
    fn fourier_examples() {
        let full = res(16, &(0..16).collect::<Vec<_>>());
        assert!(fourier_max(&full).unwrap().max_abs < 1e-9);
        let (n, m) = (101u64, 10i64);
        let f = fourier_max(&res(n, &(0..m).collect::<Vec<_>>())).unwrap();
        let closed = |r: u64| {
            let x = std::f64::consts::PI * r as f64 / n as f64;
            ((m as f64) * x).sin().abs() / x.sin().abs()
        };
        assert_eq!(f.argmax, 1);
        assert!((f.max_abs - closed(1)).abs() < 1e-9);
        assert!((1..n).all(|r| closed(r) <= f.max_abs + 1e-9));
    }

    #[test]
    fn cover_examples() {
        let (_, g) = subgroup(31, 6).unwrap();
        let all = random_cover(&g, &g, 1.0, 1, 0).unwrap();
        assert!(all.omega.is_empty());
        let none = random_cover(&g, &g, 0.0, 3, 0).unwrap();
        assert!(none.x.is_empty());
        assert_eq!(none.omega, g);
        let half = g.select(&[0, 1, 2]);
        let p = (all.doubling * g.len() as f64).ln() / half.len() as f64;
        let r = random_cover(&g, &half, p, 20, 7).unwrap();
        assert!(r.omega.is_subset(&g));
        assert!(r.predicted_omega > 0.0);
        let ints = random_cover(&GroundSet::integers([2, 3]), &GroundSet::integers([2, 3]), 1.0, 1, 0).unwrap();
        assert!(ints.omega.is_empty());
        assert!(random_cover(&g, &GroundSet::empty(g.ambient()), 0.5, 1, 0).is_err());
    }

    #[test]
    fn subgroup_growth_examples() {
        let r = subgroup_growth_experiment(7, 3, 3, 2, Budget::default()).unwrap();
        assert_eq!(r.energies[1], "15");
        assert_eq!(r.curve.sizes[..2], [3, 6]);
        let trivial = subgroup_growth_experiment(13, 1, 4, 2, Budget::default()).unwrap();
        assert_eq!(trivial.curve.sizes, vec![1, 1, 1, 1]);
        for t in divisors(1008) {
            let r = subgroup_growth_experiment(1009, t, 3, 1, Budget(1 << 16)).unwrap();
            assert!(r.curve.sizes.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    proptest! {
        #[test]
        fn dirichlet_matches_naive(n in 2u64..40, elems in proptest::collection::vec(0u64..40, 1..6), s in 1u32..4) {
            let set = GroundSet::residues(n, elems.iter().map(|&a| (a % n) as i64)).unwrap();
            let vals: Vec<u64> = set.iter().map(|v| v[0] as u64).collect();
            let got = dirichlet_min(&set, n, Exponent::Int(s), None).unwrap();
            let (want, q) = naive_dirichlet(&vals, n, s);
            prop_assert_eq!(got.rational().unwrap(), want);
            prop_assert_eq!(got.argmin_q, q);
        }

        #[test]
        fn cover_partitions(seed in 0u64..1000, prob in 0.0f64..1.0) {
            let (_, g) = subgroup(61, 12).unwrap();
            let s = g.select(&[0, 3, 5, 7]);
            let r = random_cover(&g, &s, prob, 2, seed).unwrap();
            let xs: HashSet<u64> = r.x.iter().map(|f| f.num).collect();
            for v in g.iter() {
                let a = v[0] as u64;
                let covered = s.iter().any(|t| xs.contains(&mul_mod(a, inv_mod(t[0] as u64, 61).unwrap(), 61)));
                prop_assert_eq!(covered, !r.omega.contains(v));
            }
        }
    }
}
