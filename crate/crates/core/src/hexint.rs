//! Lowercase, unprefixed hexadecimal encoding for big integers, as used by
//! key files, table serialization and the wire format.

use num_bigint::BigUint;

use crate::error::{Error, Result};

pub fn to_hex(v: &BigUint) -> String {
    v.to_str_radix(16)
}

/// Parses lowercase hex with no `0x` prefix. Uppercase digits are rejected so
/// that every integer has exactly one textual form.
pub fn from_hex(s: &str) -> Result<BigUint> {
    if s.is_empty() {
        return Err(Error::Framing("empty hex integer".into()));
    }
    if !s
        .bytes()
        .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
    {
        return Err(Error::Framing(format!("invalid hex integer {s:?}")));
    }
    BigUint::parse_bytes(s.as_bytes(), 16)
        .ok_or_else(|| Error::Framing(format!("invalid hex integer {s:?}")))
}
