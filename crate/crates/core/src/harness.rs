//! Instance generators, the claim registry and the suite runner.
//!
//! Every claim is either `hard` (an exact inequality or a re-verification,
//! where a failure is a bug) or `fitted` (an asymptotic statement with an
//! unspecified constant, for which only the constant the instance needs is
//! recorded).

use std::cell::OnceCell;
use std::fmt;
use std::time::Instant;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::decompose::{bsg_asymmetric, dec_tk, dissociated_peeling, ratio_box, sidon_extract, verify_trace, SidonMode};
use crate::dissociation::{
    d_k_exact, d_star_bounds, dim_k_exact, greedy_dissociated, is_k_dissociated, log_lower_bound, spans,
    DimensionBounds, GreedyOrder,
};
use crate::energy::{additive_energy, dim_alpha_k, holder_check, rudin_ratio, t_k, to_f64, AlphaMode, Op};
use crate::error::{invalid, Error, Result};
use crate::groundset::{mult_embed, Ambient, GroundSet};
use crate::growth::{
    beta_hat, dim_shift_ratio, freiman_model, growth_sequence, polynomial_growth_fit, verify_growth_bounds,
    verify_isomorphism, GrowthReport,
};
use crate::modular::{fourier_max, random_cover, subgroup, subgroup_growth_experiment, verify_dirichlet_dim, Exponent, FOURIER_CAP};
use crate::numbers::{first_primes, next_prime};
use crate::Budget;

/// Report schema version.
pub const SCHEMA: u32 = 1;
/// Default per-search budget inside suites.
pub const SUITE_BUDGET: u64 = 1 << 22;

// ---------------------------------------------------------------------------
// Generators

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum Generator {
    /// `[n] = {1, ..., n}`.
    Interval { n: u64 },
    /// The combinatorial cube on `gens`.
    Cube { gens: Vec<i64> },
    /// Direct sum of progressions `d_j·{0, ..., len_j - 1}` with
    /// `d_1 = 1`, `d_{j+1} = 2 d_j len_j`.
    DisjointAps { lengths: Vec<u64> },
    /// `{Π p_i^{l_i} : l_i ∈ [h]}` over the first `s` primes.
    EsProduct { s: u32, h: u32 },
    Subgroup { p: u64, t: u64 },
    /// `size` distinct integers from `[1, max]`, drawn with the instance seed.
    Random { size: u64, max: u64 },
    /// `{base^i : 0 <= i < len}`.
    Geometric { base: i64, len: u32 },
    /// `{i + 1 : bit i of mask is set}` inside `[n]`.
    Subset { n: u32, mask: u64 },
    Explicit { set: GroundSet },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    #[serde(flatten)]
    pub generator: Generator,
    #[serde(default)]
    pub seed: u64,
}

impl InstanceSpec {
    pub fn new(generator: Generator) -> InstanceSpec {
        InstanceSpec { generator, seed: 0 }
    }

    pub fn seeded(generator: Generator, seed: u64) -> InstanceSpec {
        InstanceSpec { generator, seed }
    }

    pub fn from_json(bytes: &[u8]) -> Result<InstanceSpec> {
        serde_json::from_slice(bytes).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })
    }
}

impl fmt::Display for InstanceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.generator {
            Generator::Interval { n } => write!(f, "interval({n})"),
            Generator::Cube { gens } => write!(f, "cube({gens:?})"),
            Generator::DisjointAps { lengths } => write!(f, "disjoint_aps({lengths:?})"),
            Generator::EsProduct { s, h } => write!(f, "es_product(s={s}, h={h})"),
            Generator::Subgroup { p, t } => write!(f, "subgroup(p={p}, t={t})"),
            Generator::Random { size, max } => write!(f, "random(size={size}, max={max}, seed={})", self.seed),
            Generator::Geometric { base, len } => write!(f, "geometric(base={base}, len={len})"),
            Generator::Subset { n, mask } => write!(f, "subset(n={n}, mask={mask:#x})"),
            Generator::Explicit { set } => write!(f, "explicit({set})"),
        }
    }
}

/// Largest instance a generator may produce.
pub const GENERATOR_CAP: u64 = 1 << 20;

fn checked_pow(base: i64, e: u32) -> Result<i64> {
    base.checked_pow(e).ok_or(Error::Overflow("generator"))
}

pub fn generate(spec: &InstanceSpec) -> Result<GroundSet> {
    match &spec.generator {
        Generator::Interval { n } => {
            if *n > GENERATOR_CAP {
                return Err(Error::CapExceeded { what: "interval length".into(), cap: GENERATOR_CAP });
            }
            Ok(GroundSet::interval(*n as i64))
        }
        Generator::Cube { gens } => {
            if gens.len() > 20 {
                return Err(Error::CapExceeded { what: "cube generators".into(), cap: 20 });
            }
            Ok(GroundSet::integers(gens.iter().copied()).cube()?.0)
        }
        Generator::DisjointAps { lengths } => {
            if lengths.contains(&0) {
                return invalid("progression lengths must be positive");
            }
            let total = lengths.iter().try_fold(1u64, |acc, &l| acc.checked_mul(l));
            match total {
                Some(t) if t <= GENERATOR_CAP => {}
                _ => return Err(Error::CapExceeded { what: "disjoint AP sum size".into(), cap: GENERATOR_CAP }),
            }
            let mut acc = GroundSet::integers([0]);
            let mut step: i64 = 1;
            for &len in lengths {
                let ap = GroundSet::integers((0..len as i64).map(|i| i * step));
                acc = acc.sumset(&ap)?;
                step = step
                    .checked_mul(2)
                    .and_then(|x| x.checked_mul(len as i64))
                    .ok_or(Error::Overflow("generator"))?;
            }
            Ok(acc)
        }
        Generator::EsProduct { s, h } => {
            if *s == 0 || *h == 0 {
                return invalid("s and h must be positive");
            }
            let size = (*h as u64).checked_pow(*s);
            if size.map_or(true, |n| n > GENERATOR_CAP) {
                return Err(Error::CapExceeded { what: "product set size".into(), cap: GENERATOR_CAP });
            }
            let mut elems = vec![1i64];
            for p in first_primes(*s as usize) {
                let mut next = Vec::with_capacity(elems.len() * *h as usize);
                for &x in &elems {
                    for l in 1..=*h {
                        let f = checked_pow(p as i64, l)?;
                        next.push(x.checked_mul(f).ok_or(Error::Overflow("generator"))?);
                    }
                }
                elems = next;
            }
            Ok(GroundSet::integers(elems))
        }
        Generator::Subgroup { p, t } => {
            if *t > GENERATOR_CAP {
                return Err(Error::CapExceeded { what: "subgroup order".into(), cap: GENERATOR_CAP });
            }
            Ok(subgroup(*p, *t)?.1)
        }
        Generator::Random { size, max } => {
            if size > max || *size > GENERATOR_CAP || *max > i64::MAX as u64 / 2 {
                return invalid("need size <= max with both in range");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let elems = sample(&mut rng, *max as usize, *size as usize).into_iter().map(|i| i as i64 + 1);
            Ok(GroundSet::integers(elems))
        }
        Generator::Geometric { base, len } => {
            if base.abs() < 2 {
                return invalid("base must satisfy |base| >= 2");
            }
            let elems = (0..*len).map(|i| checked_pow(*base, i)).collect::<Result<Vec<_>>>()?;
            Ok(GroundSet::integers(elems))
        }
        Generator::Subset { n, mask } => {
            if *n > 64 || (*n < 64 && mask >> n != 0) {
                return invalid("mask has bits outside [n]");
            }
            Ok(GroundSet::integers((0..*n).filter(|i| mask >> i & 1 == 1).map(|i| i as i64 + 1)))
        }
        Generator::Explicit { set } => Ok(set.clone()),
    }
}

// ---------------------------------------------------------------------------
// Claims

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Hard,
    Fitted,
}

/// How a per-record constant aggregates: `upper` claims read
/// `quantity <= C` and fit the largest value, `lower` claims read
/// `quantity >= c` and fit the smallest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Upper,
    Lower,
}

#[derive(Clone, Copy, Debug)]
pub struct ClaimDef {
    pub id: &'static str,
    pub class: Class,
    pub direction: Direction,
    /// What the recorded constant measures.
    pub statement: &'static str,
    eval: fn(&Probe) -> Result<Vec<Outcome>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimInfo {
    pub id: String,
    pub class: Class,
    pub direction: Direction,
    pub statement: String,
}

impl From<&ClaimDef> for ClaimInfo {
    fn from(d: &ClaimDef) -> ClaimInfo {
        ClaimInfo { id: d.id.into(), class: d.class, direction: d.direction, statement: d.statement.into() }
    }
}

const fn hard(id: &'static str, statement: &'static str, eval: fn(&Probe) -> Result<Vec<Outcome>>) -> ClaimDef {
    ClaimDef { id, class: Class::Hard, direction: Direction::Upper, statement, eval }
}

const fn fitted(
    id: &'static str,
    direction: Direction,
    statement: &'static str,
    eval: fn(&Probe) -> Result<Vec<Outcome>>,
) -> ClaimDef {
    ClaimDef { id, class: Class::Fitted, direction, statement, eval }
}

pub const REGISTRY: &[ClaimDef] = &[
    hard("plunnecke", "max over n+m <= 4 of |nA-mA| / ((|2A|/|A|)^(n+m) |A|), at most 1", eval_plunnecke),
    hard("monotone_growth", "|nA| is nondecreasing in n", eval_monotone),
    hard("holder", "T_2(A,B,C,A)^4 <= T_2(A) T_2(B) T_2(C) T_2(A)", eval_holder),
    hard("dim_chain", "d*(A) <= d(A) <= dim(A) on certified bounds, with spanning witnesses", eval_dim_chain),
    hard("dim_log_lower", "dim_k(A) >= log_{2k+1} |A| for k = 1, 2, with verified witnesses", eval_dim_log_lower),
    hard("energy_dim_lower", "|A|^(2k) / (T_k(A) (2k+1)^dim(A)) for k = 2, 3, at most 1", eval_energy_dim_lower),
    hard("dirichlet_dimension", "d / (s log(N-1) / log(dT)), at least 1; pigeonhole form also checked", eval_dirichlet),
    hard("growth_bounds", "stage-two, span-containment and dissociated pair-sum bounds", eval_growth_bounds),
    hard("split_growth", "|nS| (2^n n!)^m >= Π k^n |Λ_j|^n for 4nm <= |Λ|", eval_split_growth),
    hard("certificates", "dissociativity certificates for A and its witness re-verify", eval_certificates),
    hard("peeling_partition", "dissociated peeling partitions A into dissociated blocks", eval_peeling),
    hard("shift_zero", "dim(A + 0) = dim(A)", eval_shift_zero),
    hard("freiman_isomorphism", "the l = 2 Freiman model passes the exhaustive tuple check", eval_freiman),
    hard("dec_trace", "the sum/product decomposition trace replays and partitions A", eval_dec_trace),
    hard("bsg_stats", "BSG statistics match recomputed |H+H| and max_x |B ∩ (H+x)|", eval_bsg),
    fitted("rudin", Direction::Upper, "T_k(Λ) / (k^k |Λ|^k) for dissociated Λ, k <= 4", eval_rudin),
    fitted("growth_stage1", Direction::Upper, "d / (log|A| (|nA|/|A|)^(1/(n-1)))", eval_stage1),
    fitted("growth_stage2", Direction::Upper, "d / (n |nA|^(1/(n-1))) for 4n <= d", eval_stage2),
    fitted("growth_stage3", Direction::Upper, "dim_k log dim_k / log |nA|", eval_stage3),
    fitted("dim_compare", Direction::Upper, "dim(A) / (dim_2(A) log2(2 dim_2(A)))", eval_dim_compare),
    fitted("beta_dimension", Direction::Upper, "β̂(A) / 2^dim(A)", eval_beta),
    fitted("shift_ratio", Direction::Upper, "max over x of dim(A+x)/dim(A) and its inverse", eval_shift_ratio),
    fitted("poly_growth", Direction::Upper, "fitted growth degree / dim(A)", eval_poly),
    fitted("fourier_dim", Direction::Lower, "dim(A) / log N when max |Â(r)| <= |A|/4", eval_fourier),
    fitted("cover_omega", Direction::Upper, "|Ω| / (D|A|(1-p)^|S|) for the random covering", eval_cover),
    fitted("subgroup_dim", Direction::Lower, "dim(Γ) / min{log p/log log p, log p/log t, φ(t)}", eval_subgroup_dim),
    fitted("subgroup_growth", Direction::Lower, "min_n |nΓ| / (t/(n log^3 t))^n", eval_subgroup_growth),
    fitted("subgroup_exponent", Direction::Lower, "log |nΓ| / log p at the largest n", eval_subgroup_exponent),
    fitted("alpha_dim", Direction::Lower, "dim_{1/2,2}(Γ) log t / (dim(Γ)/2) for t <= 12", eval_alpha_dim),
    fitted("ratio_box", Direction::Lower, "log n · log K / log |A| with K = |A-A|/|A|", eval_ratio_box),
    fitted("sidon", Direction::Lower, "2 log max(|B|, |C|) / log |A| for B_2[1] sets B (sum), C (product)", eval_sidon),
    fitted("dec_delta", Direction::Lower, "measured δ of the sum/product decomposition", eval_dec_delta),
    fitted(
        "sum_product_dim",
        Direction::Lower,
        "max(dim+, dimx) / (log|A| sqrt(log log|A| / log log log|A|)), recorded only",
        eval_sum_product,
    ),
];

pub fn claim(id: &str) -> Result<&'static ClaimDef> {
    REGISTRY.iter().find(|c| c.id == id).ok_or_else(|| Error::UnknownClaim(id.into()))
}

pub fn hard_claims() -> Vec<&'static str> {
    REGISTRY.iter().filter(|c| c.class == Class::Hard).map(|c| c.id).collect()
}

pub fn all_claims() -> Vec<&'static str> {
    REGISTRY.iter().map(|c| c.id).collect()
}

// ---------------------------------------------------------------------------
// Records

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub claim: String,
    pub class: Class,
    pub instance: String,
    pub spec: InstanceSpec,
    pub params: Value,
    pub lhs: Option<String>,
    pub rhs: Option<String>,
    pub fitted_constant: Option<f64>,
    pub violated: bool,
    pub witnesses: Value,
    pub note: Option<String>,
}

/// What an evaluator reports for one parameter choice.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    params: Value,
    lhs: Option<String>,
    rhs: Option<String>,
    constant: Option<f64>,
    violated: bool,
    witnesses: Value,
    note: Option<String>,
}

impl Outcome {
    fn new(params: Value) -> Outcome {
        Outcome { params, witnesses: Value::Null, ..Default::default() }
    }

    fn sides(mut self, lhs: impl ToString, rhs: impl ToString) -> Outcome {
        self.lhs = Some(lhs.to_string());
        self.rhs = Some(rhs.to_string());
        self
    }

    fn constant(mut self, c: f64) -> Outcome {
        if c.is_finite() {
            self.constant = Some(c);
        } else {
            self.note = Some(format!("non-finite constant {c}"));
        }
        self
    }

    fn violated(mut self, v: bool) -> Outcome {
        self.violated = v;
        self
    }

    fn witnesses(mut self, w: Value) -> Outcome {
        self.witnesses = w;
        self
    }
}

/// Per-instance state shared by the claims.
pub struct Probe {
    pub spec: InstanceSpec,
    pub label: String,
    pub set: GroundSet,
    pub budget: Budget,
    pub seed: u64,
    dim1: OnceCell<Result<DimensionBounds>>,
    growth: OnceCell<Result<GrowthReport>>,
}

impl Probe {
    pub fn new(spec: InstanceSpec, budget: Budget, seed: u64) -> Result<Probe> {
        let set = generate(&spec)?;
        Ok(Probe { label: spec.to_string(), spec, set, budget, seed, dim1: OnceCell::new(), growth: OnceCell::new() })
    }

    fn dim1(&self) -> Result<&DimensionBounds> {
        self.dim1.get_or_init(|| dim_k_exact(&self.set, 1, self.budget)).as_ref().map_err(Clone::clone)
    }

    fn growth(&self) -> Result<&GrowthReport> {
        self.growth
            .get_or_init(|| verify_growth_bounds(&self.set, 4, 2, self.budget))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// A maximal dissociated subset: the maximum when known, else greedy.
    fn maximal_dissociated(&self) -> Result<GroundSet> {
        let d = self.dim1()?;
        match (&d.witness_lower, d.exact) {
            (Some(w), true) => Ok(w.clone()),
            _ => greedy_dissociated(&self.set, 1, GreedyOrder::DescAbs),
        }
    }

    fn n(&self) -> usize {
        self.set.len()
    }

    fn is_int(&self) -> bool {
        self.set.ambient().is_integers()
    }

    fn positive_ints(&self) -> bool {
        self.is_int() && self.set.iter().all(|v| v[0] > 0)
    }

    fn subgroup(&self) -> Option<(u64, u64)> {
        match self.spec.generator {
            Generator::Subgroup { p, t } => Some((p, t)),
            _ => None,
        }
    }
}

fn big(x: usize) -> BigUint {
    BigUint::from(x)
}

fn ratio(num: &BigUint, den: &BigUint) -> f64 {
    to_f64(num) / to_f64(den)
}

const SUMSET_CAP: usize = 1 << 20;

fn eval_plunnecke(p: &Probe) -> Result<Vec<Outcome>> {
    let n = p.n();
    if n == 0 || n > 40 {
        return Ok(vec![]);
    }
    let s2 = p.set.sumset(&p.set)?.len();
    let mut worst = 0.0f64;
    let mut violated = false;
    let mut sizes = Vec::new();
    for total in 2..=4u32 {
        for m in 0..total {
            let k = total - m;
            let lhs = match p.set.n_minus_m(k, m) {
                Ok(s) => s.len(),
                Err(Error::CapExceeded { .. }) => continue,
                Err(e) => return Err(e),
            };
            let l = big(lhs) * big(n).pow(total - 1);
            let r = big(s2).pow(total);
            violated |= l > r;
            worst = worst.max(ratio(&l, &r));
            sizes.push(json!([k, m, lhs]));
        }
    }
    Ok(vec![Outcome::new(json!({"size_2a": s2}))
        .constant(worst)
        .violated(violated)
        .witnesses(json!({"n_m_size": sizes}))])
}

fn eval_monotone(p: &Probe) -> Result<Vec<Outcome>> {
    if p.set.is_empty() {
        return Ok(vec![]);
    }
    match growth_sequence(&p.set, 6, SUMSET_CAP) {
        Ok(c) => Ok(vec![Outcome::new(json!({"n_max": 6})).witnesses(json!({"sizes": c.sizes}))]),
        Err(Error::Verification(m)) => {
            let mut o = Outcome::new(json!({"n_max": 6})).violated(true);
            o.note = Some(m);
            Ok(vec![o])
        }
        Err(e) => Err(e),
    }
}

fn eval_holder(p: &Probe) -> Result<Vec<Outcome>> {
    let n = p.n();
    if n < 2 || n > 64 {
        return Ok(vec![]);
    }
    let half = n.div_ceil(2);
    let b = p.set.select(&(0..half).collect::<Vec<_>>());
    let c = p.set.select(&(n - half..n).collect::<Vec<_>>());
    let h = holder_check(&[p.set.clone(), b, c, p.set.clone()])?;
    let rhs: BigUint = h.factors.iter().product();
    let lhs = h.mixed.pow(4);
    Ok(vec![Outcome::new(json!({"k": 2}))
        .sides(&lhs, &rhs)
        .constant(ratio(&lhs, &rhs))
        .violated(!h.holds)])
}

fn eval_dim_chain(p: &Probe) -> Result<Vec<Outcome>> {
    let n = p.n();
    if n == 0 || n > 24 {
        return Ok(vec![]);
    }
    let dim = p.dim1()?;
    let d = d_k_exact(&p.set, 1, p.budget)?;
    let ds = d_star_bounds(&p.set, 1, p.budget)?;
    let mut bad = Vec::new();
    for (name, b) in [("dim", dim), ("d", &d), ("d*", &ds)] {
        if b.lower > b.upper {
            bad.push(format!("{name}: lower {} exceeds upper {}", b.lower, b.upper));
        }
    }
    if ds.lower > d.upper {
        bad.push(format!("d* >= {} but d <= {}", ds.lower, d.upper));
    }
    if d.lower > dim.upper {
        bad.push(format!("d >= {} but dim <= {}", d.lower, dim.upper));
    }
    if let Some(w) = &d.witness_upper {
        if !w.is_subset(&p.set) || !spans(w, &p.set, 1)? {
            bad.push("d spanning witness does not span A".into());
        }
    }
    let mut o = Outcome::new(json!({"k": 1}))
        .violated(!bad.is_empty())
        .witnesses(json!({
            "dim": [dim.lower, dim.upper],
            "d": [d.lower, d.upper],
            "d_star": [ds.lower, ds.upper],
        }));
    if !bad.is_empty() {
        o.note = Some(bad.join("; "));
    }
    Ok(vec![o])
}

/// `Σ_{ε=1}^{k} gcd(ε, N) (2k+1)^d`: how many `x` can satisfy `εx ∈ Span_k(Λ)`
/// for some `1 <= ε <= k` when `|Λ| = d`. Over `Z` every gcd is 1.
fn maximal_span_count(ambient: Ambient, k: u32, d: u64) -> BigUint {
    let mult: u64 = (1..=k as u64)
        .map(|e| ambient.modulus().map_or(1, |n| crate::numbers::gcd(e, n)))
        .sum();
    BigUint::from(mult) * BigUint::from(2 * k + 1).pow(d as u32)
}

fn eval_dim_log_lower(p: &Probe) -> Result<Vec<Outcome>> {
    let n = p.n();
    if n == 0 || n > 64 {
        return Ok(vec![]);
    }
    let mut out = Vec::new();
    for k in [1u32, 2] {
        let b = if k == 1 { p.dim1()?.clone() } else { dim_k_exact(&p.set, k, p.budget)? };
        let floor = log_lower_bound(n, k);
        let w = b.witness_lower.clone().unwrap_or_else(|| GroundSet::empty(p.set.ambient()));
        let witness_ok = w.len() as u64 == b.lower
            && w.is_subset(&p.set)
            && is_k_dissociated(&w, k, p.budget)?.is_dissociated();
        let verbatim = b.upper >= floor;
        // Over a group with torsion only the counting form is sound for k >= 2.
        let torsion = k >= 2 && !p.is_int();
        let counting = big(n) <= maximal_span_count(p.set.ambient(), k, b.upper);
        let holds = if torsion { counting } else { verbatim };
        let mut o = Outcome::new(json!({"k": k}))
            .sides(b.upper, floor)
            .constant(floor as f64 / b.upper.max(1) as f64)
            .violated(!holds || !witness_ok)
            .witnesses(json!({"lambda": w, "verbatim_holds": verbatim, "counting_holds": counting}));
        if torsion && !verbatim {
            o.note = Some(format!("log_{} |A| exceeds dim_{k} = {}; counting form holds", 2 * k + 1, b.upper));
        }
        out.push(o);
    }
    Ok(out)
}

fn eval_energy_dim_lower(p: &Probe) -> Result<Vec<Outcome>> {
    let n = p.n();
    if n == 0 || n > 64 {
        return Ok(vec![]);
    }
    let lambda = p.maximal_dissociated()?;
    let mut out = Vec::new();
    for k in [2u32, 3] {
        let tk = t_k(&p.set, k, Op::Add)?;
        let lhs = big(n).pow(2 * k);
        let rhs = &tk * BigUint::from(2 * k + 1).pow(lambda.len() as u32);
        out.push(
            Outcome::new(json!({"k": k, "dim_used": lambda.len()}))
                .sides(&lhs, &rhs)
                .constant(ratio(&lhs, &rhs))
                .violated(lhs > rhs),
        );
    }
    Ok(out)
}

/// Modulus for the Dirichlet check: the ambient modulus, or a prime above
/// the largest element while the scan stays small.
fn dirichlet_modulus(p: &Probe) -> Option<u64> {
    match p.set.ambient() {
        Ambient::Residues { modulus } => Some(modulus),
        a if a.is_integers() => {
            let m = p.set.iter().map(|v| v[0].unsigned_abs()).max()?;
            let n = next_prime(m + 1);
            Some(if (n - 1) * p.n() as u64 <= 1 << 22 { n } else { 10_007 })
        }
        _ => None,
    }
}

fn eval_dirichlet(p: &Probe) -> Result<Vec<Outcome>> {
    let Some(modulus) = dirichlet_modulus(p) else { return Ok(vec![]) };
    if p.set.is_empty() || p.n() > 64 || (modulus - 1) * p.n() as u64 > 1 << 24 {
        return Ok(vec![]);
    }
    let mut out = Vec::new();
    for s in [1u32, 2] {
        let r = verify_dirichlet_dim(&p.set, modulus, Exponent::Int(s), p.budget)?;
        let params = json!({"s": s, "modulus": modulus});
        if let Some(why) = r.skipped {
            let mut o = Outcome::new(params);
            o.note = Some(why);
            out.push(o);
            continue;
        }
        let d = r.dim.lower;
        let mut o = Outcome::new(params)
            .violated(r.holds == Some(false) || r.pigeonhole_holds == Some(false))
            .witnesses(json!({
                "dirichlet": r.dirichlet.value,
                "q": r.dirichlet.argmin_q,
                "dim": [r.dim.lower, r.dim.upper],
                "pigeonhole_m": r.pigeonhole_m,
            }));
        if let Some(b) = r.bound {
            o = o.sides(d, b).constant(d as f64 / b);
        }
        if r.holds.is_none() {
            o.note = Some("dimension bounds do not decide the inequality".into());
        }
        out.push(o);
    }
    Ok(out)
}

fn growth_applicable(p: &Probe) -> bool {
    !p.set.is_empty() && p.n() <= 40
}

fn eval_growth_bounds(p: &Probe) -> Result<Vec<Outcome>> {
    if !growth_applicable(p) {
        return Ok(vec![]);
    }
    let g = p.growth()?;
    let mut o = Outcome::new(json!({"n_max": 4, "k": 2}))
        .violated(!g.hard_violations.is_empty())
        .witnesses(json!({
            "sizes": g.curve.sizes,
            "dim_lower": g.dim.lower,
            "stage2_checks": g.stage2.len(),
            "span_lcm": g.span.as_ref().map(|s| s.multiplier_lcm),
            "dissociated_pairs": g.dissociated_pairs,
        }));
    if !g.hard_violations.is_empty() {
        o.note = Some(g.hard_violations.join("; "));
    }
    Ok(vec![o])
}

fn eval_split_growth(p: &Probe) -> Result<Vec<Outcome>> {
    if !growth_applicable(p) {
        return Ok(vec![]);
    }
    let g = p.growth()?;
    Ok(g.split_checks
        .iter()
        .map(|c| {
            Outcome::new(json!({"k": c.k, "n": c.n, "m": c.m}))
                .sides(c.ns_size.map_or("> cap".to_string(), |v| v.to_string()), &c.bound)
                .violated(!c.holds)
                .witnesses(json!({"part_sizes": c.part_sizes}))
        })
        .collect())
}

/// Re-verifies a certificate; `None` when the re-check ran out of budget.
fn recheck(cert: &crate::dissociation::Certificate, set: &GroundSet, budget: Budget) -> Result<Option<bool>> {
    match cert.verify(set, budget) {
        Ok(()) => Ok(Some(true)),
        Err(Error::Verification(_)) => Ok(Some(false)),
        Err(Error::BudgetExceeded { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn certificate_outcome(target: &str, ok: Option<bool>, witnesses: Value) -> Outcome {
    let mut o = Outcome::new(json!({"target": target})).violated(ok == Some(false)).witnesses(witnesses);
    if ok.is_none() {
        o.note = Some("re-verification exceeded the budget".into());
    }
    o
}

fn eval_certificates(p: &Probe) -> Result<Vec<Outcome>> {
    if p.set.is_empty() || p.n() > 64 {
        return Ok(vec![]);
    }
    let mut out = Vec::new();
    let cert = is_k_dissociated(&p.set, 1, p.budget)?;
    let ok = recheck(&cert, &p.set, p.budget)?;
    out.push(certificate_outcome("A", ok, json!({"verdict": cert.verdict, "method": cert.method})));
    if let Some(w) = &p.dim1()?.witness_lower {
        let c = is_k_dissociated(w, 1, p.budget)?;
        let ok = if c.is_dissociated() { recheck(&c, w, p.budget)? } else { Some(false) };
        out.push(certificate_outcome("dim witness", ok, json!({"lambda": w})));
    }
    Ok(out)
}

fn eval_peeling(p: &Probe) -> Result<Vec<Outcome>> {
    if p.set.is_empty() || p.n() > 40 {
        return Ok(vec![]);
    }
    let l = (p.dim1()?.lower as usize / 2).max(1);
    let r = dissociated_peeling(&p.set, l, p.budget)?;
    let mut union = r.remainder.clone();
    let mut total = r.remainder.len();
    let mut ok = true;
    for b in &r.blocks {
        ok &= b.len() == l && is_k_dissociated(b, 1, p.budget)?.is_dissociated();
        total += b.len();
        union = union.union(b)?;
    }
    ok &= total == p.n() && union == p.set;
    Ok(vec![Outcome::new(json!({"l": l}))
        .violated(!ok)
        .witnesses(json!({"blocks": r.blocks.len(), "remainder": r.remainder.len(), "certified": r.remainder_certified}))])
}

fn shifts() -> Vec<Vec<i64>> {
    [0i64, 1, -1, 5, -5, 20, -20].iter().map(|&x| vec![x]).collect()
}

fn eval_shift_zero(p: &Probe) -> Result<Vec<Outcome>> {
    if !p.is_int() || p.set.is_empty() || p.n() > 24 {
        return Ok(vec![]);
    }
    let r = dim_shift_ratio(&p.set, &[vec![0]], p.budget)?;
    let d0 = r.shifted[0].1;
    Ok(vec![Outcome::new(json!({"shift": 0})).sides(d0, r.dim).violated(d0 != r.dim)])
}

fn eval_freiman(p: &Probe) -> Result<Vec<Outcome>> {
    if !p.is_int() || p.n() < 2 || p.n() > 8 {
        return Ok(vec![]);
    }
    let m = match freiman_model(&p.set, 2, 50, p.seed, None) {
        Ok(m) => m,
        Err(Error::TrialsExhausted(t)) => {
            let mut o = Outcome::new(json!({"l": 2}));
            o.note = Some(format!("no model after {t} trials"));
            return Ok(vec![o]);
        }
        Err(e) => return Err(e),
    };
    let ok = m.verified && verify_isomorphism(&m.map, 2, m.modulus)?;
    Ok(vec![Outcome::new(json!({"l": 2}))
        .violated(!ok)
        .witnesses(json!({"modulus": m.modulus, "a_star": m.a_star.len(), "image": m.image}))])
}

fn eval_dec_trace(p: &Probe) -> Result<Vec<Outcome>> {
    if !p.positive_ints() || p.n() < 2 || p.n() > 16 {
        return Ok(vec![]);
    }
    let r = dec_tk(&p.set, 2, 2, None, 16, p.seed)?;
    let replay = verify_trace(&r);
    let below = r.iterations.last().is_some_and(|s| s.below_threshold);
    let ok = replay.is_ok() && (below || r.max_iter_hit);
    let mut o = Outcome::new(json!({"s": 2, "q": 2}))
        .sides(&r.t_mul_s_c, &r.threshold)
        .violated(!ok)
        .witnesses(json!({"b": r.b, "peels": r.peels()}));
    if let Err(e) = replay {
        o.note = Some(e.to_string());
    }
    Ok(vec![o])
}

fn eval_bsg(p: &Probe) -> Result<Vec<Outcome>> {
    if !p.is_int() || p.n() < 2 || p.n() > 40 {
        return Ok(vec![]);
    }
    let n = p.n();
    let e = additive_energy(&p.set, &p.set)?;
    let k = (n as f64).powi(3) / to_f64(&e) * (1.0 + 1e-9);
    let r = match bsg_asymmetric(&p.set, &p.set, k, 1, p.seed) {
        Ok(r) => r,
        Err(Error::Precondition(m)) => {
            let mut o = Outcome::new(json!({"k": k}));
            o.note = Some(m);
            return Ok(vec![o]);
        }
        Err(e) => return Err(e),
    };
    let hh = r.h.sumset(&r.h)?.len();
    let moved = r.h.translate(&r.x)?;
    let meet = p.set.intersection(&moved)?.len();
    let ok = !r.h.is_empty() && hh == r.stats.hh_size && meet == r.stats.intersection && r.h.len() == r.stats.h_size;
    Ok(vec![Outcome::new(json!({"k": k}))
        .violated(!ok)
        .witnesses(json!({"h": r.h.len(), "hh": hh, "intersection": meet}))])
}

fn eval_rudin(p: &Probe) -> Result<Vec<Outcome>> {
    if p.set.is_empty() || p.n() > 64 {
        return Ok(vec![]);
    }
    let lambda = p.maximal_dissociated()?;
    if lambda.len() < 2 {
        return Ok(vec![]);
    }
    let mut out = Vec::new();
    for k in 2..=4u32 {
        if lambda.len() > 16 && k == 4 {
            continue;
        }
        let r = rudin_ratio(&lambda, k)?;
        out.push(
            Outcome::new(json!({"k": k, "size": lambda.len()}))
                .sides(r.numer(), r.denom())
                .constant(r.to_f64().unwrap_or(f64::NAN)),
        );
    }
    Ok(out)
}

fn eval_stage1(p: &Probe) -> Result<Vec<Outcome>> {
    if !growth_applicable(p) {
        return Ok(vec![]);
    }
    Ok(p.growth()?
        .stage1
        .iter()
        .map(|s| Outcome::new(json!({"n": s.n})).sides(s.size, p.n()).constant(s.constant))
        .collect())
}

fn eval_stage2(p: &Probe) -> Result<Vec<Outcome>> {
    if !growth_applicable(p) {
        return Ok(vec![]);
    }
    Ok(p.growth()?
        .stage2
        .iter()
        .map(|s| Outcome::new(json!({"n": s.n})).constant(s.constant).witnesses(json!({"size": s.size})))
        .collect())
}

fn eval_stage3(p: &Probe) -> Result<Vec<Outcome>> {
    if !growth_applicable(p) {
        return Ok(vec![]);
    }
    Ok(p.growth()?
        .stage3
        .iter()
        .map(|s| {
            Outcome::new(json!({"k": s.k, "n": s.n}))
                .constant(s.constant)
                .witnesses(json!({"dim_k": s.dim_k, "size": s.size}))
        })
        .collect())
}

fn eval_dim_compare(p: &Probe) -> Result<Vec<Outcome>> {
    if p.set.is_empty() || p.n() > 24 {
        return Ok(vec![]);
    }
    let d1 = p.dim1()?;
    let d2 = dim_k_exact(&p.set, 2, p.budget)?;
    if !d1.exact || !d2.exact || d2.lower == 0 {
        return Ok(vec![]);
    }
    let denom = d2.lower as f64 * (2.0 * d2.lower as f64).log2();
    Ok(vec![Outcome::new(json!({"l": 1, "k": 2}))
        .sides(d1.lower, d2.lower)
        .constant(d1.lower as f64 / denom)])
}

fn eval_beta(p: &Probe) -> Result<Vec<Outcome>> {
    if p.set.is_empty() || p.n() > 24 {
        return Ok(vec![]);
    }
    let d = p.dim1()?;
    if !d.exact {
        return Ok(vec![]);
    }
    let b = beta_hat(&p.set, 32, &[])?;
    Ok(vec![Outcome::new(json!({"interval_max": 32}))
        .sides(b.value, format!("2^{}", d.lower))
        .constant(b.value / 2f64.powi(d.lower as i32))
        .witnesses(json!({"x": b.x.len(), "y": b.y.len(), "value_squared": b.value_squared}))])
}

fn eval_shift_ratio(p: &Probe) -> Result<Vec<Outcome>> {
    if !p.is_int() || p.set.is_empty() || p.n() > 16 {
        return Ok(vec![]);
    }
    let r = dim_shift_ratio(&p.set, &shifts(), p.budget)?;
    let dims: Vec<Value> = r.shifted.iter().map(|(x, d)| json!([x[0], d])).collect();
    Ok(vec![Outcome::new(json!({"shifts": shifts().len()}))
        .constant(r.max_ratio)
        .witnesses(json!({"dim": r.dim, "shifted": dims, "excluded": r.excluded, "exact": r.all_exact}))])
}

fn eval_poly(p: &Probe) -> Result<Vec<Outcome>> {
    if !growth_applicable(p) {
        return Ok(vec![]);
    }
    let d = p.dim1()?;
    if d.lower == 0 {
        return Ok(vec![]);
    }
    let f = polynomial_growth_fit(&p.set, 6, SUMSET_CAP)?;
    Ok(vec![Outcome::new(json!({"n_max": 6}))
        .sides(f.d_fit, d.lower)
        .constant(f.d_fit / d.lower as f64)])
}

fn eval_fourier(p: &Probe) -> Result<Vec<Outcome>> {
    let Some(n) = p.set.ambient().modulus() else { return Ok(vec![]) };
    if n > FOURIER_CAP || p.set.is_empty() || p.n() > 64 {
        return Ok(vec![]);
    }
    let f = fourier_max(&p.set)?;
    let eps = f.max_abs / p.n() as f64;
    let d = p.dim1()?;
    let mut o = Outcome::new(json!({"modulus": n}))
        .witnesses(json!({"epsilon": eps, "argmax": f.argmax, "parseval_rel_error": f.parseval_rel_error}));
    if eps <= 0.25 && d.exact {
        o = o.sides(d.lower, (n as f64).ln()).constant(d.lower as f64 / (n as f64).ln());
    } else {
        o.note = Some("implication not triggered".into());
    }
    Ok(vec![o])
}

fn eval_cover(p: &Probe) -> Result<Vec<Outcome>> {
    let Some((_, t)) = p.subgroup() else { return Ok(vec![]) };
    if t < 2 {
        return Ok(vec![]);
    }
    let s = p.set.select(&(0..(t as usize) / 2).collect::<Vec<_>>());
    let prob = ((t as f64).ln() / s.len() as f64).clamp(0.0, 1.0);
    let r = random_cover(&p.set, &s, prob, 8, p.seed)?;
    let mut o = Outcome::new(json!({"p": prob, "s_size": s.len(), "trials": 8}))
        .sides(r.omega.len(), r.predicted_omega)
        .witnesses(json!({"x": r.x.len(), "predicted_x": r.predicted_x, "doubling": r.doubling}));
    if r.predicted_omega > 0.0 {
        o = o.constant(r.omega.len() as f64 / r.predicted_omega);
    }
    Ok(vec![o])
}

fn subgroup_report(p: &Probe) -> Result<Option<crate::modular::SubgroupGrowthReport>> {
    let Some((prime, t)) = p.subgroup() else { return Ok(None) };
    Ok(Some(subgroup_growth_experiment(prime, t, 4, 2, p.budget)?))
}

fn eval_subgroup_dim(p: &Probe) -> Result<Vec<Outcome>> {
    let Some(r) = subgroup_report(p)? else { return Ok(vec![]) };
    let mut o = Outcome::new(json!({"p": r.spec.p, "t": r.spec.t})).witnesses(json!({"dim": [r.dim.lower, r.dim.upper]}));
    if let Some(c) = r.dim_constant {
        o = o.constant(c);
    }
    Ok(vec![o])
}

fn eval_subgroup_growth(p: &Probe) -> Result<Vec<Outcome>> {
    let Some(r) = subgroup_report(p)? else { return Ok(vec![]) };
    Ok(r.growth_constants
        .iter()
        .map(|g| Outcome::new(json!({"p": r.spec.p, "t": r.spec.t, "n": g.n})).sides(g.size, "").constant(g.constant))
        .collect())
}

fn eval_subgroup_exponent(p: &Probe) -> Result<Vec<Outcome>> {
    let Some(r) = subgroup_report(p)? else { return Ok(vec![]) };
    Ok(vec![Outcome::new(json!({"p": r.spec.p, "t": r.spec.t, "n": r.curve.sizes.len()}))
        .constant(r.sumset_exponent)
        .witnesses(json!({"sizes": r.curve.sizes, "energies": r.energies}))])
}

fn eval_alpha_dim(p: &Probe) -> Result<Vec<Outcome>> {
    let Some((_, t)) = p.subgroup() else { return Ok(vec![]) };
    if !(2..=12).contains(&t) {
        return Ok(vec![]);
    }
    let d = p.dim1()?;
    let a = dim_alpha_k(&p.set, 0.5, 2, AlphaMode::Exact, p.budget)?;
    if !d.exact || !a.exact || d.lower == 0 {
        return Ok(vec![]);
    }
    Ok(vec![Outcome::new(json!({"alpha": 0.5, "k": 2}))
        .sides(a.lower, d.lower)
        .constant(a.lower as f64 * (t as f64).ln() / (0.5 * d.lower as f64))])
}

fn eval_ratio_box(p: &Probe) -> Result<Vec<Outcome>> {
    if !p.is_int() || p.n() < 2 || p.n() > 400 {
        return Ok(vec![]);
    }
    let rb = ratio_box(&p.set)?;
    let k = p.set.difference(&p.set)?.len() as f64 / p.n() as f64;
    let mut o = Outcome::new(json!({}))
        .sides(rb.n, k)
        .witnesses(json!({"first_missing": [rb.first_missing.num, rb.first_missing.den]}));
    if k > 1.0 {
        o = o.constant((rb.n as f64).ln() * k.ln() / (p.n() as f64).ln());
    }
    Ok(vec![o])
}

fn eval_sidon(p: &Probe) -> Result<Vec<Outcome>> {
    if !p.positive_ints() || p.n() < 2 || p.n() > 64 {
        return Ok(vec![]);
    }
    let b = sidon_extract(&p.set, 2, Op::Add, SidonMode::Greedy, p.budget)?;
    let c = sidon_extract(&p.set, 2, Op::Mul, SidonMode::Greedy, p.budget)?;
    let best = b.len().max(c.len());
    Ok(vec![Outcome::new(json!({"h": 2, "mode": "greedy"}))
        .sides(b.len(), c.len())
        .constant(2.0 * (best as f64).ln() / (p.n() as f64).ln())])
}

fn eval_dec_delta(p: &Probe) -> Result<Vec<Outcome>> {
    if !p.positive_ints() || p.n() < 2 || p.n() > 16 {
        return Ok(vec![]);
    }
    let r = dec_tk(&p.set, 2, 2, None, 16, p.seed)?;
    Ok(vec![Outcome::new(json!({"s": 2, "q": 2, "k_param": r.k_param}))
        .constant(r.measured_delta)
        .witnesses(json!({"peels": r.peels()}))])
}

fn eval_sum_product(p: &Probe) -> Result<Vec<Outcome>> {
    if !p.positive_ints() || p.n() < 16 || p.n() > 24 {
        return Ok(vec![]);
    }
    let plus = p.dim1()?;
    let times = dim_k_exact(&mult_embed(&p.set)?.set, 1, p.budget)?;
    if !plus.exact || !times.exact {
        return Ok(vec![]);
    }
    let l = (p.n() as f64).ln();
    let scale = l * (l.ln() / l.ln().ln()).sqrt();
    let best = plus.lower.max(times.lower);
    Ok(vec![Outcome::new(json!({}))
        .sides(best, scale)
        .constant(best as f64 / scale)
        .witnesses(json!({"dim_add": plus.lower, "dim_mul": times.lower}))])
}

// ---------------------------------------------------------------------------
// Running

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub claim: String,
    pub direction: Direction,
    /// The family constant: largest value for `upper`, smallest for `lower`.
    pub value: f64,
    pub count: usize,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

/// Aggregate the recorded constants of one claim.
pub fn fit_constant(claim_id: &str, records: &[ClaimRecord]) -> Result<FitSummary> {
    let def = claim(claim_id)?;
    let mut xs: Vec<f64> = records
        .iter()
        .filter(|r| r.claim == claim_id)
        .filter_map(|r| r.fitted_constant)
        .filter(|c| c.is_finite())
        .collect();
    if xs.is_empty() {
        return invalid(format!("no constants recorded for {claim_id}"));
    }
    xs.sort_by(f64::total_cmp);
    let q = |f: f64| xs[((xs.len() - 1) as f64 * f).round() as usize];
    let (min, max) = (xs[0], xs[xs.len() - 1]);
    Ok(FitSummary {
        claim: claim_id.into(),
        direction: def.direction,
        value: match def.direction {
            Direction::Upper => max,
            Direction::Lower => min,
        },
        count: xs.len(),
        min,
        q25: q(0.25),
        median: q(0.5),
        q75: q(0.75),
        max,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimSummary {
    pub claim: String,
    pub class: Class,
    pub records: usize,
    pub violations: usize,
    pub skipped: usize,
    pub fit: Option<FitSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema: u32,
    pub suite: String,
    pub seed: u64,
    pub budget: u64,
    pub claims: Vec<ClaimInfo>,
    pub instances: usize,
    pub records: Vec<ClaimRecord>,
    pub summary: Vec<ClaimSummary>,
    pub hard_violations: usize,
    pub timing: Timing,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.hard_violations == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// The report without its timing fields.
    pub fn without_timing(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serialises");
        if let Some(o) = v.as_object_mut() {
            o.remove("timing");
        }
        v
    }

    pub fn violations(&self) -> impl Iterator<Item = &ClaimRecord> {
        self.records.iter().filter(|r| r.violated)
    }
}

fn run_instance(defs: &[&'static ClaimDef], spec: &InstanceSpec, budget: Budget, seed: u64) -> Vec<ClaimRecord> {
    let probe = match Probe::new(spec.clone(), budget, seed) {
        Ok(p) => p,
        Err(e) => {
            return defs
                .iter()
                .map(|d| ClaimRecord {
                    claim: d.id.into(),
                    class: d.class,
                    instance: spec.to_string(),
                    spec: spec.clone(),
                    params: Value::Null,
                    lhs: None,
                    rhs: None,
                    fitted_constant: None,
                    violated: false,
                    witnesses: Value::Null,
                    note: Some(format!("skipped: instance not generated: {e}")),
                })
                .collect()
        }
    };
    let mut out = Vec::new();
    for def in defs {
        let record = |o: Outcome| ClaimRecord {
            claim: def.id.into(),
            class: def.class,
            instance: probe.label.clone(),
            spec: spec.clone(),
            params: o.params,
            lhs: o.lhs,
            rhs: o.rhs,
            fitted_constant: o.constant,
            violated: o.violated && def.class == Class::Hard,
            witnesses: o.witnesses,
            note: o.note,
        };
        match (def.eval)(&probe) {
            Ok(outcomes) => out.extend(outcomes.into_iter().map(record)),
            Err(Error::Verification(m)) => {
                let mut o = Outcome::new(Value::Null).violated(true);
                o.note = Some(m);
                out.push(record(o));
            }
            Err(e) => {
                let mut o = Outcome::new(Value::Null);
                o.note = Some(format!("skipped: {e}"));
                out.push(record(o));
            }
        }
    }
    out
}

/// Evaluate `claims` on every instance. Instances run in parallel; records
/// come back in instance order, then claim order.
pub fn run_suite(name: &str, claims: &[&str], instances: &[InstanceSpec], budget: Budget, seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let defs = claims.iter().map(|c| claim(c)).collect::<Result<Vec<_>>>()?;
    let records: Vec<ClaimRecord> = instances
        .par_iter()
        .map(|spec| run_instance(&defs, spec, budget, seed))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let summary = defs
        .iter()
        .map(|d| {
            let mine: Vec<&ClaimRecord> = records.iter().filter(|r| r.claim == d.id).collect();
            let owned: Vec<ClaimRecord> = mine.iter().map(|r| (*r).clone()).collect();
            ClaimSummary {
                claim: d.id.into(),
                class: d.class,
                records: mine.len(),
                violations: mine.iter().filter(|r| r.violated).count(),
                skipped: mine.iter().filter(|r| r.note.as_deref().is_some_and(|n| n.starts_with("skipped"))).count(),
                fit: fit_constant(d.id, &owned).ok(),
            }
        })
        .collect();
    let hard_violations = records.iter().filter(|r| r.violated).count();
    Ok(SuiteReport {
        schema: SCHEMA,
        suite: name.into(),
        seed,
        budget: budget.0,
        claims: defs.iter().map(|d| ClaimInfo::from(*d)).collect(),
        instances: instances.len(),
        records,
        summary,
        hard_violations,
        timing: Timing { elapsed_ms: start.elapsed().as_millis() as u64 },
    })
}

// ---------------------------------------------------------------------------
// Suites

/// Per-instance seeds derived from the suite seed.
fn seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.gen()).collect()
}

fn divisors_of(n: u64) -> Vec<u64> {
    crate::numbers::divisors(n)
}

pub fn subgroup_instances(primes: &[u64]) -> Vec<InstanceSpec> {
    primes
        .iter()
        .flat_map(|&p| divisors_of(p - 1).into_iter().map(move |t| InstanceSpec::new(Generator::Subgroup { p, t })))
        .collect()
}

/// Every nonempty subset of `[n]`.
pub fn exhaustive_instances(n: u32) -> Vec<InstanceSpec> {
    (1..1u64 << n).map(|mask| InstanceSpec::new(Generator::Subset { n, mask })).collect()
}

/// `count` random sets of size in `[1, max_size]` inside `[1, max]`.
pub fn random_instances(seed: u64, count: usize, max_size: u64, max: u64) -> Vec<InstanceSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    seeds(seed, count)
        .into_iter()
        .map(|s| InstanceSpec::seeded(Generator::Random { size: rng.gen_range(1..=max_size), max }, s))
        .collect()
}

pub fn structured_instances() -> Vec<InstanceSpec> {
    let mut v: Vec<InstanceSpec> = (1..=16).map(|n| InstanceSpec::new(Generator::Interval { n })).collect();
    for gens in [vec![1, 10, 100], vec![1, 2, 4, 8], vec![3, 5, 9, 17]] {
        v.push(InstanceSpec::new(Generator::Cube { gens }));
    }
    for lengths in [vec![3, 4], vec![2, 2, 2], vec![5, 3]] {
        v.push(InstanceSpec::new(Generator::DisjointAps { lengths }));
    }
    for (s, h) in [(2, 2), (2, 3), (3, 2), (2, 4)] {
        v.push(InstanceSpec::new(Generator::EsProduct { s, h }));
    }
    for (base, len) in [(2, 12), (3, 8), (2, 16)] {
        v.push(InstanceSpec::new(Generator::Geometric { base, len }));
    }
    v
}

pub const SUITES: &[&str] = &["core", "unconditional", "exhaustive10"];

/// Claims and instances of a named suite.
pub fn suite(name: &str, seed: u64) -> Result<(Vec<&'static str>, Vec<InstanceSpec>)> {
    match name {
        "core" => {
            let mut inst = structured_instances();
            inst.extend(exhaustive_instances(6));
            inst.extend(subgroup_instances(&[7, 13, 31, 61]));
            inst.extend(random_instances(seed, 20, 16, 1000));
            inst.extend(random_instances(seed.wrapping_add(1), 8, 24, 1_000_000));
            Ok((all_claims(), inst))
        }
        "unconditional" => {
            let mut inst = exhaustive_instances(10);
            inst.extend(random_instances(seed, 200, 24, 1_000_000));
            inst.extend(subgroup_instances(&[7, 13, 31, 61]));
            Ok((
                vec!["plunnecke", "holder", "monotone_growth", "dim_chain", "dim_log_lower", "dirichlet_dimension", "energy_dim_lower"],
                inst,
            ))
        }
        "exhaustive10" => Ok((hard_claims(), exhaustive_instances(10))),
        other => invalid(format!("unknown suite {other:?}; known: {}", SUITES.join(", "))),
    }
}
