//! Acceptance gate. Runs every criterion, prints one line each and fails if
//! any criterion fails.

use std::collections::{HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use adlab::decompose::{bsg_asymmetric, dec_tk, ratio_box, verify_trace};
use adlab::dissociation::{dim_k_exact, is_k_dissociated};
use adlab::energy::{additive_energy, rudin_ratio, t_k, Op};
use adlab::growth::{dim_shift_ratio, freiman_model};
use adlab::harness::{self, run_suite, Generator, InstanceSpec};
use adlab::modular::{dirichlet_min, subgroup, Exponent};
use adlab::numbers::first_primes;
use adlab::{Budget, GroundSet};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn z(xs: &[i64]) -> GroundSet {
    GroundSet::integers(xs.iter().copied())
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let t = start.elapsed();
    if t > limit {
        Err(format!("took {t:.1?}, limit {limit:?}"))
    } else {
        Ok(t)
    }
}

/// All `ω·Λ` with `ω ∈ [0,k]^d` are distinct.
fn k_dissociated_oracle(xs: &[i64], k: i64) -> bool {
    let mut sums: Vec<i64> = vec![0];
    for &x in xs {
        sums = sums.iter().flat_map(|&s| (0..=k).map(move |w| s + w * x)).collect();
    }
    let n = sums.len();
    sums.sort_unstable();
    sums.dedup();
    sums.len() == n
}

/// Largest `k`-dissociated subset of `[n]` by trying every subset of each size.
fn dim_interval_oracle(n: i64, k: i64) -> u64 {
    let mut best = 0;
    let elems: Vec<i64> = (1..=n).collect();
    for mask in 1u32..1 << n {
        let size = mask.count_ones() as u64;
        if size <= best {
            continue;
        }
        let sub: Vec<i64> = elems.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &x)| x).collect();
        if k_dissociated_oracle(&sub, k) {
            best = size;
        }
    }
    best
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let budget = Budget::default();
    for n in 1..=16i64 {
        let b = dim_k_exact(&GroundSet::interval(n), 1, budget).map_err(|e| e.to_string())?;
        let oracle = dim_interval_oracle(n, 1);
        ensure!(b.exact && b.lower == oracle, "dim([{n}]) = {:?}, oracle {oracle}", (b.lower, b.upper));
    }
    for (n, k, want) in [(4, 1, 3), (8, 1, 4), (4, 2, 2), (9, 2, 3)] {
        let b = dim_k_exact(&GroundSet::interval(n), k, budget).map_err(|e| e.to_string())?;
        ensure!(b.value() == Some(want), "dim_{k}([{n}]) = {:?}, want {want}", b.value());
        ensure!(dim_interval_oracle(n, k as i64) == want, "oracle disagrees on dim_{k}([{n}])");
    }
    let t = within(start, Duration::from_secs(10))?;
    Ok(format!("n <= 16 match the subset oracle in {t:.1?}"))
}

/// Tuples `(a_1..a_k, b_1..b_k)` with equal sums, by direct enumeration.
fn energy_oracle(xs: &[i64], k: u32) -> u64 {
    let n = xs.len();
    let total = n.pow(2 * k);
    let mut count = 0u64;
    for code in 0..total {
        let mut c = code;
        let mut lhs = 0i64;
        let mut rhs = 0i64;
        for j in 0..2 * k {
            let x = xs[c % n];
            c /= n;
            if j < k {
                lhs += x;
            } else {
                rhs += x;
            }
        }
        count += u64::from(lhs == rhs);
    }
    count
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    for mask in 1u32..1 << 8 {
        let xs: Vec<i64> = (0..8).filter(|i| mask >> i & 1 == 1).map(|i| i as i64 + 1).collect();
        let set = z(&xs);
        for k in [2u32, 3] {
            let fast = t_k(&set, k, Op::Add).map_err(|e| e.to_string())?;
            let slow = energy_oracle(&xs, k);
            ensure!(fast == BigUint::from(slow), "T_{k}({xs:?}) = {fast}, oracle {slow}");
        }
    }
    for (xs, k, want) in [(&[0, 1][..], 2, 6u32), (&[0, 1][..], 3, 20), (&[1, 2, 3][..], 2, 19)] {
        let v = t_k(&z(xs), k, Op::Add).map_err(|e| e.to_string())?;
        ensure!(v == BigUint::from(want), "T_{k}({xs:?}) = {v}, want {want}");
    }
    let t = within(start, Duration::from_secs(60))?;
    Ok(format!("all A ⊆ [8], k = 2, 3 match tuple enumeration in {t:.1?}"))
}

fn criterion_3() -> Outcome {
    let (_, gamma) = subgroup(7, 3).map_err(|e| e.to_string())?;
    let want = GroundSet::residues(7, [1, 2, 4]).unwrap();
    ensure!(gamma == want, "Γ(7,3) = {gamma}");
    let e = t_k(&gamma, 2, Op::Add).map_err(|e| e.to_string())?;
    ensure!(e == BigUint::from(15u32), "T_2(Γ) = {e}");
    let d = dirichlet_min(&gamma, 7, Exponent::Int(2), None).map_err(|e| e.to_string())?;
    let r = d.rational().ok_or("value is not exact")?;
    ensure!(r == BigRational::from_str("2/7").unwrap(), "dirichlet_min = {r}");
    ensure!(d.exact, "flagged inexact");
    Ok("Γ = {1,2,4}, T_2 = 15, D = 2/7 exact".into())
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let (claims, instances) = harness::suite("unconditional", 0).map_err(|e| e.to_string())?;
    let random = instances.iter().filter(|s| matches!(s.generator, Generator::Random { .. })).count();
    let subsets = instances.iter().filter(|s| matches!(s.generator, Generator::Subset { .. })).count();
    ensure!(random == 200 && subsets == 1023, "family sizes {random}, {subsets}");
    let report = run_suite("unconditional", &claims, &instances, Budget(harness::SUITE_BUDGET), 0)
        .map_err(|e| e.to_string())?;
    let bad: Vec<String> = report.violations().take(5).map(|r| format!("{} on {}", r.claim, r.instance)).collect();
    ensure!(bad.is_empty(), "{} violations, e.g. {bad:?}", report.hard_violations);
    let skipped: Vec<String> = report
        .records
        .iter()
        .filter(|r| r.note.as_deref().is_some_and(|n| n.starts_with("skipped")))
        .take(5)
        .map(|r| format!("{} on {}", r.claim, r.instance))
        .collect();
    ensure!(skipped.is_empty(), "skipped records {skipped:?}");
    for c in &claims {
        ensure!(report.records.iter().any(|r| r.claim == *c), "no records for {c}");
    }
    let t = within(start, Duration::from_secs(600))?;
    Ok(format!("{} instances, {} records, 0 violations in {t:.1?}", report.instances, report.records.len()))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let budget = Budget::default();
    let mut verified = 0;
    let mut worst = 0.0f64;
    let mut seen = HashSet::new();
    while verified < 60 {
        let size = rng.gen_range(4..=12);
        let lambda = GroundSet::integers((0..size).map(|_| rng.gen_range(1..1_000_000i64)));
        if lambda.len() != size || !seen.insert(lambda.clone()) {
            continue;
        }
        let cert = is_k_dissociated(&lambda, 1, budget).map_err(|e| e.to_string())?;
        if !cert.is_dissociated() {
            continue;
        }
        cert.verify(&lambda, budget).map_err(|e| format!("certificate for {lambda}: {e}"))?;
        for k in 2..=4 {
            let r = rudin_ratio(&lambda, k).map_err(|e| e.to_string())?;
            let f = num_traits::ToPrimitive::to_f64(&r).ok_or("ratio not representable")?;
            ensure!(f.is_finite(), "non-finite ratio on {lambda}");
            worst = worst.max(f);
        }
        verified += 1;
    }
    Ok(format!("{verified} certified sets, max T_k/(k^k|Λ|^k) = {worst:.4}"))
}

fn criterion_6() -> Outcome {
    let mut instances = harness::exhaustive_instances(10);
    instances.extend(harness::random_instances(6, 30, 24, 1_000_000));
    instances.extend(harness::structured_instances());
    let report = run_suite("split", &["split_growth"], &instances, Budget(harness::SUITE_BUDGET), 6)
        .map_err(|e| e.to_string())?;
    let checks = report.records.iter().filter(|r| r.lhs.is_some()).count();
    ensure!(checks > 0, "no configurations with 4nm <= dim");
    let bad: Vec<String> = report.violations().take(5).map(|r| format!("{} {}", r.instance, r.params)).collect();
    ensure!(bad.is_empty(), "violations {bad:?}");
    Ok(format!("{checks} configurations hold exactly"))
}

/// Largest `n` with `[n]/[n] ⊆ D/D`, from the set of reduced ratios.
fn ratio_box_oracle(xs: &[i64]) -> u64 {
    let mut diffs = HashSet::new();
    for &x in xs {
        for &y in xs {
            if y > x {
                diffs.insert((y - x) as u64);
            }
        }
    }
    let mut ratios = HashSet::new();
    for &a in &diffs {
        for &b in &diffs {
            let g = adlab::numbers::gcd(a, b);
            ratios.insert((a / g, b / g));
        }
    }
    let mut n = 0u64;
    loop {
        let m = n + 1;
        let full = (1..=m).all(|a| {
            let g = adlab::numbers::gcd(a, m);
            ratios.contains(&(a / g, m / g)) && ratios.contains(&(m / g, a / g))
        });
        if !full {
            return n;
        }
        n = m;
    }
}

fn criterion_7() -> Outcome {
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let size = rng.gen_range(1..=40);
        let max = if seed % 2 == 0 { 120 } else { 10_000 };
        let spec = InstanceSpec::seeded(Generator::Random { size, max }, seed);
        let set = harness::generate(&spec).map_err(|e| e.to_string())?;
        let xs = set.as_integers().unwrap().to_vec();
        let got = ratio_box(&set).map_err(|e| e.to_string())?;
        let want = ratio_box_oracle(&xs);
        ensure!(got.n == want, "seed {seed}: n = {}, oracle {want}", got.n);
    }
    let ap = ratio_box(&z(&[4, 11, 18, 25, 32])).map_err(|e| e.to_string())?;
    ensure!(ap.n == 4, "AP of length 5 gives n = {}", ap.n);
    Ok("100 random instances match; AP of length 5 gives n = 4".into())
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let powers = GroundSet::integers((0..16).map(|i| 1i64 << i));
    let primes = GroundSet::integers(first_primes(16).into_iter().map(|p| p as i64));
    let mut lines = Vec::new();
    for (name, a) in [("powers of two", powers), ("first primes", primes), ("[16]", GroundSet::interval(16))] {
        let r = dec_tk(&a, 2, 2, None, 32, 8).map_err(|e| e.to_string())?;
        let inter = r.b.intersection(&r.c).unwrap();
        let union = r.b.union(&r.c).unwrap();
        ensure!(inter.is_empty() && union == a, "{name}: B and C do not partition A");
        verify_trace(&r).map_err(|e| format!("{name}: {e}"))?;
        let tb = t_k(&r.b, r.q, Op::Add).unwrap();
        let tbs = t_k(&r.b, r.s, Op::Add).unwrap();
        let tc = t_k(&r.c, r.s, Op::Mul).unwrap();
        ensure!(tb.to_string() == r.t_add_q_b, "{name}: T+_q(B) {tb} vs {}", r.t_add_q_b);
        ensure!(tbs.to_string() == r.t_add_s_b, "{name}: T+_s(B) {tbs} vs {}", r.t_add_s_b);
        ensure!(tc.to_string() == r.t_mul_s_c, "{name}: Tx_s(C) {tc} vs {}", r.t_mul_s_c);
        if r.peels() >= 1 {
            let threshold = BigRational::from_str(&r.threshold).map_err(|e| e.to_string())?;
            ensure!(BigRational::from_integer(tc.clone().into()) <= threshold, "{name}: Tx_s(C) above threshold");
            let trivial = BigUint::from(r.b.len()).pow(2 * r.q - 1);
            ensure!(tb < trivial, "{name}: T+_q(B) = {tb} not below |B|^(2q-1) = {trivial}");
        }
        lines.push(format!("{name}: {} peels", r.peels()));
    }
    let t = within(start, Duration::from_secs(300))?;
    Ok(format!("{} in {t:.1?}", lines.join(", ")))
}

fn criterion_9() -> Outcome {
    let mut nonempty = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
        // A: a progression with some noise; B: a chunk of A.
        let step = rng.gen_range(1..20i64);
        let len = rng.gen_range(20..40i64);
        let mut xs: Vec<i64> = (0..len).map(|i| i * step).collect();
        xs.extend((0..rng.gen_range(0..10)).map(|_| rng.gen_range(0..10_000i64)));
        let a = GroundSet::integers(xs);
        let take: Vec<usize> = (0..a.len()).filter(|_| rng.gen_bool(0.6)).collect();
        let b = a.select(&take);
        if b.is_empty() {
            continue;
        }
        let e = additive_energy(&a, &b).unwrap();
        let need = BigUint::from(a.len()) * BigUint::from(b.len()).pow(2);
        let k = (&need + &e - 1u32) / &e;
        ensure!(&e * &k >= need, "energy precondition not verified");
        let kf: f64 = k.to_string().parse().unwrap();
        let r = bsg_asymmetric(&a, &b, kf, 1, seed).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure!(!r.h.is_empty(), "seed {seed}: empty H");
        let hh = r.h.sumset(&r.h).unwrap().len();
        ensure!(hh == r.stats.hh_size, "seed {seed}: |H+H| {hh} vs {}", r.stats.hh_size);
        let doubling = hh as f64 / r.h.len() as f64;
        ensure!(doubling.to_bits() == r.stats.doubling.to_bits(), "seed {seed}: doubling differs");
        let mut counts: HashMap<i64, usize> = HashMap::new();
        for bv in b.iter() {
            for hv in r.h.iter() {
                *counts.entry(bv[0] - hv[0]).or_default() += 1;
            }
        }
        let best = counts.values().copied().max().unwrap_or(0);
        ensure!(best == r.stats.intersection, "seed {seed}: max intersection {best} vs {}", r.stats.intersection);
        let at_x = b.iter().filter(|v| r.h.contains(&[v[0] - r.x[0]])).count();
        ensure!(at_x == best, "seed {seed}: reported x is not a maximiser");
        nonempty += 1;
    }
    ensure!(nonempty == 20, "only {nonempty} instances ran");
    Ok("20 instances, stats recomputed bit-exactly".into())
}

fn criterion_10() -> Outcome {
    let budget = Budget::default();
    let shifts: Vec<Vec<i64>> = (-20..=20).map(|x| vec![x]).collect();
    let mut worst = 1.0f64;
    for mask in 1u32..1 << 10 {
        let set = GroundSet::integers((0..10).filter(|i| mask >> i & 1 == 1).map(|i| i as i64 + 1));
        let r = dim_shift_ratio(&set, &shifts, budget).map_err(|e| e.to_string())?;
        ensure!(r.all_exact, "inexact dimension on {set}");
        ensure!(r.max_ratio.is_finite(), "non-finite ratio on {set}");
        worst = worst.max(r.max_ratio);
        let zero = r.shifted.iter().find(|(x, _)| x == &vec![0]).map(|s| s.1);
        let plain = dim_k_exact(&set.translate(&[0]).unwrap(), 1, budget).unwrap().value();
        ensure!(zero == Some(r.dim) && plain == Some(r.dim), "dim(A+0) differs on {set}");
    }
    Ok(format!("1023 sets, max dimension ratio {worst:.4}"))
}

fn criterion_11() -> Outcome {
    let mut count = 0;
    for mask in 1u32..1 << 12 {
        if mask.count_ones() > 8 {
            continue;
        }
        let xs: Vec<i64> = (0..12).filter(|i| mask >> i & 1 == 1).map(|i| i as i64 + 1).collect();
        let set = z(&xs);
        let m = freiman_model(&set, 2, 64, u64::from(mask), None).map_err(|e| format!("{xs:?}: {e}"))?;
        ensure!(m.verified, "{xs:?}: model not verified");
        ensure!(m.a_star.is_subset(&set) && 2 * m.a_star.len() >= set.len(), "{xs:?}: A* too small");
        let span = set.n_minus_m(2, 2).unwrap().len() as u64;
        ensure!(m.modulus >= span, "{xs:?}: modulus {} below |2A-2A| = {span}", m.modulus);
        let n = m.map.len();
        let md = m.modulus as i64;
        for i in 0..n.pow(4) {
            let (a, b, c, d) = (m.map[i % n], m.map[i / n % n], m.map[i / n / n % n], m.map[i / n / n / n]);
            let src = a.0 + b.0 == c.0 + d.0;
            let img = (a.1 + b.1 - c.1 - d.1).rem_euclid(md) == 0;
            ensure!(src == img, "{xs:?}: 2-isomorphism fails on {a:?} {b:?} {c:?} {d:?}");
        }
        count += 1;
    }
    Ok(format!("{count} sets verified by exhaustive quadruple check"))
}

fn criterion_12() -> Outcome {
    let dir = std::env::temp_dir().join(format!("adlab-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut bodies = Vec::new();
    for run in 0..2 {
        let out = dir.join(format!("report{run}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_adlab"))
            .args(["verify", "--suite", "core", "--seed", "7", "--out"])
            .arg(&out)
            .env_remove("ADLAB_BUDGET")
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(status.status.success(), "run {run} exited with {}", status.status);
        let text = std::fs::read_to_string(&out).map_err(|e| e.to_string())?;
        let kept: Vec<&str> = text.lines().filter(|l| !l.contains("\"elapsed_ms\"")).collect();
        bodies.push(kept.join("\n"));
    }
    let _ = std::fs::remove_dir_all(&dir);
    ensure!(bodies[0] == bodies[1], "reports differ outside timing");
    Ok(format!("two runs identical ({} bytes without timing)", bodies[0].len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("exact dimension oracle", criterion_1),
        ("energy oracle equivalence", criterion_2),
        ("subgroup pipeline", criterion_3),
        ("unconditional inequality suite", criterion_4),
        ("Rudin fitted constant", criterion_5),
        ("constructive growth bound", criterion_6),
        ("ratio box", criterion_7),
        ("sum/product decomposition contract", criterion_8),
        ("BSG contract", criterion_9),
        ("shift experiment", criterion_10),
        ("Freiman model", criterion_11),
        ("determinism", criterion_12),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|x| id.contains(x.as_str()) || name.contains(x.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(msg) => println!("{id:<13} PASS  {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("{id:<13} FAIL  {name}: {msg}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
