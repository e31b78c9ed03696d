#![no_main]
use adlab::Ambient;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&tag, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let ambient = match tag % 3 {
        0 => Ambient::Lattice { rank: 1 },
        1 => Ambient::Lattice { rank: 2 },
        _ => Ambient::Residues { modulus: u64::from(tag) + 2 },
    };
    let _ = adlab::setfile::parse_inline(text, ambient);
    let _ = text.parse::<adlab::energy::Op>();
    let _ = text.parse::<adlab::modular::Exponent>();
});
