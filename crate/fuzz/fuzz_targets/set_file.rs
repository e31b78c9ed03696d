#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(set) = adlab::setfile::parse_set_bytes(data) {
        // Whatever parses must survive a format/parse round trip.
        let again = adlab::setfile::parse_set(&adlab::setfile::format_set(&set)).unwrap();
        assert_eq!(again, set);
    }
});
