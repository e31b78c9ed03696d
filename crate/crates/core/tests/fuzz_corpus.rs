//! Replays the fuzz corpus, plus seeded mutations of it, through the same
//! entry points as the fuzz targets. Runs on stable without libFuzzer.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use adlab::decompose::{verify_trace, DecompositionResult};
use adlab::dissociation::{relation_sums_to_zero, Certificate};
use adlab::harness::{generate, InstanceSpec};
use adlab::setfile::{format_set, parse_inline, parse_set, parse_set_bytes};
use adlab::{Ambient, Budget, GroundSet};

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert!(!files.is_empty(), "no seeds in {}", dir.display());
    files.into_iter().map(|p| std::fs::read(p).unwrap()).collect()
}

fn mutate(rng: &mut ChaCha8Rng, seed: &[u8]) -> Vec<u8> {
    let mut v = seed.to_vec();
    for _ in 0..rng.gen_range(1..4) {
        let at = if v.is_empty() { 0 } else { rng.gen_range(0..v.len()) };
        match rng.gen_range(0..5) {
            0 if !v.is_empty() => v[at] ^= 1 << rng.gen_range(0..8),
            1 if !v.is_empty() => {
                v.remove(at);
            }
            2 => v.insert(at, *b"0123456789-,;{}[]\":".get(rng.gen_range(0..19)).unwrap()),
            3 => v.truncate(at),
            _ => {
                let end = (at + rng.gen_range(1..8)).min(v.len());
                let chunk = v[at..end].to_vec();
                v.splice(at..at, chunk);
            }
        }
    }
    v
}

const EXTREMES: [i128; 10] = [0, 1, -1, 2, 63, 64, u32::MAX as i128, i64::MAX as i128, i64::MIN as i128, u64::MAX as i128];

/// Replace some numbers in a JSON document by edge values.
fn mutate_numbers(rng: &mut ChaCha8Rng, v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(_) if rng.gen_bool(0.3) => {
            let x = EXTREMES[rng.gen_range(0..EXTREMES.len())];
            *v = serde_json::from_str(&x.to_string()).unwrap();
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(|x| mutate_numbers(rng, x)),
        serde_json::Value::Object(map) => map.values_mut().for_each(|x| mutate_numbers(rng, x)),
        _ => {}
    }
}

fn inputs(target: &str) -> Vec<Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(target.len() as u64);
    let base = seeds(target);
    let mut out = base.clone();
    for s in &base {
        out.extend((0..2000).map(|_| mutate(&mut rng, s)));
        if let Ok(doc) = serde_json::from_slice::<serde_json::Value>(s) {
            for _ in 0..500 {
                let mut d = doc.clone();
                mutate_numbers(&mut rng, &mut d);
                out.push(serde_json::to_vec(&d).unwrap());
            }
        }
    }
    out
}

#[test]
fn set_file() {
    for data in inputs("set_file") {
        if let Ok(set) = parse_set_bytes(&data) {
            assert_eq!(parse_set(&format_set(&set)).unwrap(), set);
        }
    }
}

#[test]
fn inline_set() {
    for data in inputs("inline_set") {
        let Some((&tag, rest)) = data.split_first() else { continue };
        let Ok(text) = std::str::from_utf8(rest) else { continue };
        let ambient = match tag % 3 {
            0 => Ambient::Lattice { rank: 1 },
            1 => Ambient::Lattice { rank: 2 },
            _ => Ambient::Residues { modulus: u64::from(tag) + 2 },
        };
        let _ = parse_inline(text, ambient);
        let _ = text.parse::<adlab::energy::Op>();
        let _ = text.parse::<adlab::modular::Exponent>();
    }
}

#[test]
fn ground_set_json() {
    for data in inputs("ground_set_json") {
        if let Ok(set) = serde_json::from_slice::<GroundSet>(&data) {
            let text = serde_json::to_string(&set).unwrap();
            assert_eq!(serde_json::from_str::<GroundSet>(&text).unwrap(), set);
        }
    }
}

#[test]
fn certificate() {
    let set = GroundSet::integers([1, 2, 4, 8, 16, 31]);
    for data in inputs("certificate") {
        let Ok(cert) = Certificate::from_json(&data) else { continue };
        if cert.verify(&set, Budget(1 << 16)).is_ok() && !cert.is_dissociated() {
            assert!(relation_sums_to_zero(&set, &cert.relation));
        }
    }
}

#[test]
fn decomposition_trace() {
    let mut replayed = 0;
    for data in inputs("decomposition_trace") {
        let Ok(trace) = DecompositionResult::from_json(&data) else { continue };
        if trace.a.len() <= 24 && trace.s <= 3 && trace.q <= 3 && trace.iterations.len() <= 32 {
            replayed += usize::from(verify_trace(&trace).is_ok());
        }
    }
    assert!(replayed >= seeds("decomposition_trace").len());
}

#[test]
fn instance_spec() {
    for data in inputs("instance_spec") {
        if let Ok(spec) = InstanceSpec::from_json(&data) {
            let _ = generate(&spec);
        }
    }
}
