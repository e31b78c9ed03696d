//! Plain-text set files.
//!
//! ```text
//! # comment
//! @ambient z d=2
//! 1,2
//! -3,0
//! ```
//!
//! One element per line, coordinates separated by commas. The optional
//! `@ambient` header must precede the first element and is either
//! `z d=<rank>` or `mod <N>`; the default is `z d=1`.

use crate::error::{Error, Result};
use crate::groundset::{Ambient, GroundSet};

/// Maximum number of elements accepted from a single file.
pub const MAX_ELEMENTS: usize = 1 << 22;
const MAX_RANK: usize = 4096;

fn perr<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line, msg: msg.into() })
}

fn parse_header(rest: &str, line: usize) -> Result<Ambient> {
    let words: Vec<&str> = rest.split_whitespace().collect();
    match words.as_slice() {
        ["z"] => Ok(Ambient::INTEGERS),
        ["z", d] => {
            let Some(r) = d.strip_prefix("d=") else {
                return perr(line, format!("expected d=<rank>, got {d:?}"));
            };
            let rank: usize = r.parse().or_else(|_| perr(line, format!("bad rank {r:?}")))?;
            if rank == 0 || rank > MAX_RANK {
                return perr(line, format!("rank must be in 1..={MAX_RANK}"));
            }
            Ok(Ambient::Lattice { rank })
        }
        ["mod", n] => {
            let modulus: u64 = n.parse().or_else(|_| perr(line, format!("bad modulus {n:?}")))?;
            if !(2..=i64::MAX as u64).contains(&modulus) {
                return perr(line, "modulus must be at least 2 and fit in 63 bits");
            }
            Ok(Ambient::Residues { modulus })
        }
        _ => perr(line, format!("unrecognised ambient {rest:?}")),
    }
}

/// Parse the text of a set file.
pub fn parse_set(text: &str) -> Result<GroundSet> {
    let mut ambient: Option<Ambient> = None;
    let mut elems: Vec<Vec<i64>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        if let Some(rest) = s.strip_prefix("@ambient") {
            if ambient.is_some() || !elems.is_empty() {
                return perr(line, "the ambient header must come first and only once");
            }
            ambient = Some(parse_header(rest, line)?);
            continue;
        }
        let amb = *ambient.get_or_insert(Ambient::INTEGERS);
        let coords: Vec<i64> = s
            .split(',')
            .map(|c| c.trim().parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .or_else(|e| perr(line, format!("bad integer: {e}")))?;
        if coords.len() != amb.rank() {
            return perr(line, format!("expected {} coordinates, got {}", amb.rank(), coords.len()));
        }
        if elems.len() >= MAX_ELEMENTS {
            return perr(line, format!("more than {MAX_ELEMENTS} elements"));
        }
        elems.push(coords);
    }
    GroundSet::from_vectors(ambient.unwrap_or(Ambient::INTEGERS), elems)
}

/// Parse raw bytes, rejecting invalid UTF-8.
pub fn parse_set_bytes(bytes: &[u8]) -> Result<GroundSet> {
    let text = std::str::from_utf8(bytes).or_else(|e| perr(0, format!("invalid UTF-8: {e}")))?;
    parse_set(text)
}

pub fn read_set(path: &std::path::Path) -> Result<GroundSet> {
    let bytes = std::fs::read(path).or_else(|e| perr(0, format!("{}: {e}", path.display())))?;
    parse_set_bytes(&bytes)
}

/// Parse an inline list such as `1,2,5` (integers) or `1,2;3,4` (vectors).
pub fn parse_inline(s: &str, ambient: Ambient) -> Result<GroundSet> {
    let d = ambient.rank();
    let mut elems = Vec::new();
    let items: Vec<&str> = if d == 1 { s.split([',', ' ']).collect() } else { s.split(';').collect() };
    for item in items.into_iter().map(str::trim).filter(|x| !x.is_empty()) {
        let coords: Vec<i64> = item
            .split(',')
            .map(|c| c.trim().parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .or_else(|e| perr(1, format!("bad integer in {item:?}: {e}")))?;
        if coords.len() != d {
            return perr(1, format!("expected {d} coordinates in {item:?}"));
        }
        elems.push(coords);
    }
    GroundSet::from_vectors(ambient, elems)
}

/// Render a set in set-file syntax.
pub fn format_set(set: &GroundSet) -> String {
    let mut out = match set.ambient() {
        Ambient::Lattice { rank } => format!("@ambient z d={rank}\n"),
        Ambient::Residues { modulus } => format!("@ambient mod {modulus}\n"),
    };
    for v in set.iter() {
        let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        out.push_str(&parts.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_headers_and_comments() {
        let s = parse_set("# a set\n@ambient mod 7\n1\n  9\n\n4\n").unwrap();
        assert_eq!(s, GroundSet::residues(7, [1, 2, 4]).unwrap());
        let v = parse_set("@ambient z d=2\n1,2\n-3, 0\n1,2\n").unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(parse_set("3\n1\n").unwrap(), GroundSet::integers([1, 3]));
        assert_eq!(parse_set("").unwrap(), GroundSet::empty(Ambient::INTEGERS));
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(matches!(parse_set("1\n@ambient mod 5\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_set("@ambient z d=2\n1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(parse_set("@ambient mod 1\n").is_err());
        assert!(parse_set("@ambient q\n").is_err());
        assert!(parse_set("99999999999999999999\n").is_err());
        assert!(parse_set_bytes(&[0xff, 0x31]).is_err());
    }

    #[test]
    fn inline_lists() {
        assert_eq!(parse_inline("1, 2,5", Ambient::INTEGERS).unwrap(), GroundSet::integers([1, 2, 5]));
        let v = parse_inline("1,2;3,4", Ambient::Lattice { rank: 2 }).unwrap();
        assert_eq!(v.to_vectors(), vec![vec![1, 2], vec![3, 4]]);
    }

    proptest! {
        #[test]
        fn format_parse_roundtrip(xs in proptest::collection::vec(any::<i64>(), 0..20), m in 2u64..1000) {
            let z = GroundSet::integers(xs.clone());
            prop_assert_eq!(parse_set(&format_set(&z)).unwrap(), z);
            let r = GroundSet::residues(m, xs).unwrap();
            prop_assert_eq!(parse_set(&format_set(&r)).unwrap(), r);
        }

        #[test]
        fn arbitrary_text_never_panics(s in "\\PC*") {
            let _ = parse_set(&s);
        }
    }
}
