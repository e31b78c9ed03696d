#![no_main]
use adlab::dissociation::Certificate;
use adlab::{Budget, GroundSet};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(cert) = Certificate::from_json(data) else { return };
    let set = GroundSet::integers([1, 2, 4, 8, 16, 31]);
    // A relation certificate is accepted only if it really is one.
    if cert.verify(&set, Budget(1 << 16)).is_ok() && !cert.is_dissociated() {
        assert!(adlab::dissociation::relation_sums_to_zero(&set, &cert.relation));
    }
});
