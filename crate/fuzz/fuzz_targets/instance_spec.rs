#![no_main]
use adlab::harness::{generate, InstanceSpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(spec) = InstanceSpec::from_json(data) {
        let _ = generate(&spec);
    }
});
