use proptest::prelude::*;

use adlab::decompose::{dec_tk, verify_trace, DecompositionResult};
use adlab::dissociation::{is_k_dissociated, Certificate};
use adlab::harness::{generate, Generator, InstanceSpec};
use adlab::setfile::{format_set, parse_set};
use adlab::{Ambient, Budget, GroundSet};

fn ambient() -> impl Strategy<Value = Ambient> {
    prop_oneof![
        (1usize..4).prop_map(|rank| Ambient::Lattice { rank }),
        (2u64..1000).prop_map(|modulus| Ambient::Residues { modulus }),
    ]
}

fn set() -> impl Strategy<Value = GroundSet> {
    ambient().prop_flat_map(|a| {
        prop::collection::vec(prop::collection::vec(-500i64..500, a.rank()), 0..20)
            .prop_map(move |v| GroundSet::from_vectors(a, v).unwrap())
    })
}

proptest! {
    #[test]
    fn set_file_roundtrip(s in set()) {
        prop_assert_eq!(parse_set(&format_set(&s)).unwrap(), s);
    }

    #[test]
    fn set_json_roundtrip(s in set()) {
        let json = serde_json::to_string(&s).unwrap();
        prop_assert_eq!(serde_json::from_str::<GroundSet>(&json).unwrap(), s);
    }

    #[test]
    fn certificate_roundtrip(xs in prop::collection::vec(1i64..200, 1..10)) {
        let s = GroundSet::integers(xs);
        let c = is_k_dissociated(&s, 1, Budget::default()).unwrap();
        let back = Certificate::from_json(c.to_json().as_bytes()).unwrap();
        prop_assert!(back.verify(&s, Budget::default()).is_ok());
        prop_assert_eq!(back, c);
    }

    #[test]
    fn instance_spec_roundtrip(n in 1u64..50, seed in any::<u64>()) {
        let spec = InstanceSpec::seeded(Generator::Random { size: n, max: 1000 }, seed);
        let json = serde_json::to_vec(&spec).unwrap();
        let back = InstanceSpec::from_json(&json).unwrap();
        prop_assert_eq!(generate(&back).unwrap(), generate(&spec).unwrap());
    }
}

#[test]
fn trace_roundtrip() {
    let a = GroundSet::integers((0..12).map(|i| 1i64 << i));
    let r = dec_tk(&a, 2, 2, None, 16, 1).unwrap();
    let back = DecompositionResult::from_json(r.to_json().as_bytes()).unwrap();
    verify_trace(&back).unwrap();
    assert_eq!(back, r);
}

#[test]
fn tampered_certificate_is_rejected() {
    let s = GroundSet::integers([1, 2, 3]);
    let c = is_k_dissociated(&s, 1, Budget::default()).unwrap();
    assert_eq!(c.relation.iter().map(|e| e.abs()).collect::<Vec<_>>(), vec![1, 1, 1]);
    let mut flipped = c.clone();
    flipped.relation[0] = -flipped.relation[0];
    assert!(flipped.verify(&s, Budget::default()).is_err());
    let mut zero = c;
    zero.relation = vec![0, 0, 0];
    assert!(zero.verify(&s, Budget::default()).is_err());
}
