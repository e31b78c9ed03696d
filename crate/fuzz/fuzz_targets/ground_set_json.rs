#![no_main]
use adlab::GroundSet;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(set) = serde_json::from_slice::<GroundSet>(data) {
        let text = serde_json::to_string(&set).unwrap();
        assert_eq!(serde_json::from_str::<GroundSet>(&text).unwrap(), set);
    }
});
