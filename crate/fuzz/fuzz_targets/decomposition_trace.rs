#![no_main]
use adlab::decompose::{verify_trace, DecompositionResult};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(trace) = DecompositionResult::from_json(data) else { return };
    // Replay recomputes energies; keep it cheap.
    if trace.a.len() <= 24 && trace.s <= 3 && trace.q <= 3 && trace.iterations.len() <= 32 {
        let _ = verify_trace(&trace);
    }
});
