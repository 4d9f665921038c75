//! Fixed-width bit strings, their 0- and 1-encodings, and Alice's encryption
//! table.
//!
//! Bit positions are numbered from 1 at the least significant bit up to `w`
//! at the most significant bit. Every prefix is anchored at position `w` and
//! read towards the LSB.
//!
//! For `x > y` exactly one prefix is shared between the 1-encoding of `x` and
//! the 0-encoding of `y`: the bits above their first difference followed by a
//! `1`. Bob multiplies the table cells addressed by each of his prefixes; a
//! product decrypts to zero precisely when every cell on the path was one of
//! Alice's zero encryptions, i.e. when the prefix lies in her 1-encoding.

use std::fmt;

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paillier::{Ciphertext, KeyPair, PublicKey};

/// Default bit width of an encoded integer.
pub const DEFAULT_WIDTH: u32 = 32;

/// Widest supported bit string.
pub const MAX_WIDTH: u32 = 64;

/// A non-negative integer together with the width of its bit string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EncodedValue {
    value: u64,
    width: u32,
}

impl EncodedValue {
    pub fn new(value: u64, width: u32) -> Result<Self> {
        check_width(width)?;
        if width < 64 && value >> width != 0 {
            return Err(Error::Domain(format!(
                "{value} does not fit in {width} bits"
            )));
        }
        Ok(EncodedValue { value, width })
    }

    /// Like [`EncodedValue::new`], but additionally requires `value ≥ 1`,
    /// as both protocol inputs must be.
    pub fn protocol_input(value: u64, width: u32) -> Result<Self> {
        if value == 0 {
            return Err(Error::Domain("protocol inputs must be at least 1".into()));
        }
        Self::new(value, width)
    }

    pub fn value(self) -> u64 {
        self.value
    }

    pub fn width(self) -> u32 {
        self.width
    }

    /// The largest value representable at `width` bits.
    pub fn max_value(width: u32) -> u64 {
        if width >= 64 {
            u64::MAX
        } else {
            (1u64 << width) - 1
        }
    }

    /// Bit at 1-based position `pos` (1 = LSB).
    pub fn bit(self, pos: u32) -> bool {
        debug_assert!((1..=self.width).contains(&pos));
        (self.value >> (pos - 1)) & 1 == 1
    }

    /// The value one less, used for Bob's `y − 1` operand.
    pub fn predecessor(self) -> Option<Self> {
        self.value
            .checked_sub(1)
            .map(|value| EncodedValue { value, ..self })
    }
}

pub(crate) fn check_width(width: u32) -> Result<()> {
    if width == 0 || width > MAX_WIDTH {
        return Err(Error::Config(format!(
            "width must be in 1..={MAX_WIDTH}, got {width}"
        )));
    }
    Ok(())
}

/// Binary expansion, most significant bit first, zero-padded to the width.
pub fn to_bits(v: EncodedValue) -> Vec<bool> {
    (1..=v.width).rev().map(|pos| v.bit(pos)).collect()
}

/// An MSB-anchored bit string of length `1..=64`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prefix {
    // bits right-aligned: the last symbol of the prefix is the LSB of `bits`
    len: u32,
    bits: u64,
}

impl Prefix {
    pub fn new(symbols: &[bool]) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::Domain("prefix must not be empty".into()));
        }
        if symbols.len() > MAX_WIDTH as usize {
            return Err(Error::Domain("prefix longer than 64 symbols".into()));
        }
        let bits = symbols.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
        Ok(Prefix {
            len: symbols.len() as u32,
            bits,
        })
    }

    /// The top `len` bits of `v`, with the last one forced to `last`.
    fn of(v: EncodedValue, len: u32, last: bool) -> Self {
        let shift = v.width - len;
        let top = if shift >= 64 { 0 } else { v.value >> shift };
        Prefix {
            len,
            bits: (top & !1) | last as u64,
        }
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Symbols from first (MSB side) to last.
    pub fn symbols(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).rev().map(move |i| (self.bits >> i) & 1 == 1)
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.symbols() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Prefix({self})")
    }
}

impl std::str::FromStr for Prefix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let symbols = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Domain(format!("invalid prefix symbol {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Prefix::new(&symbols)
    }
}

/// Every prefix ending at a 1-bit, shortest first. Empty for zero.
pub fn one_encode(v: EncodedValue) -> Vec<Prefix> {
    (1..=v.width)
        .filter(|&len| v.bit(v.width - len + 1))
        .map(|len| Prefix::of(v, len, true))
        .collect()
}

/// Every prefix ending at a 0-bit with that bit flipped to 1, shortest first.
/// Empty for the all-ones value.
pub fn zero_encode(v: EncodedValue) -> Vec<Prefix> {
    (1..=v.width)
        .filter(|&len| !v.bit(v.width - len + 1))
        .map(|len| Prefix::of(v, len, true))
        .collect()
}

/// Alice's `w × 2` grid. Column `i` (1-based from the LSB) holds an
/// encryption of zero on the row equal to her bit `b_i` and a random
/// ciphertext with nonzero plaintext on the other row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncryptionTable {
    // columns[i - 1] = [cell for bit 0, cell for bit 1] at position i
    columns: Vec<[Ciphertext; 2]>,
}

impl EncryptionTable {
    pub fn width(&self) -> u32 {
        self.columns.len() as u32
    }

    /// Cell at 1-based position `pos` on row `bit`.
    pub fn cell(&self, pos: u32, bit: bool) -> &Ciphertext {
        &self.columns[pos as usize - 1][bit as usize]
    }

    /// Total number of ciphertexts, always `2w`.
    pub fn len(&self) -> usize {
        self.columns.len() * 2
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn to_json(&self) -> Vec<TableColumn> {
        (1..=self.width())
            .rev()
            .map(|pos| TableColumn {
                pos,
                c0: self.cell(pos, false).to_hex(),
                c1: self.cell(pos, true).to_hex(),
            })
            .collect()
    }

    /// Parses the serialized column list, validating every cell against
    /// `pk` and requiring positions to run from `width` down to 1.
    pub fn from_json(pk: &PublicKey, cols: &[TableColumn], width: u32) -> Result<Self> {
        check_width(width)?;
        if cols.len() != width as usize {
            return Err(Error::Protocol(format!(
                "table has {} columns, expected {width}",
                cols.len()
            )));
        }
        let mut columns = Vec::with_capacity(cols.len());
        for (expected, col) in (1..=width).rev().zip(cols) {
            if col.pos != expected {
                return Err(Error::Protocol(format!(
                    "table column position {} where {expected} expected",
                    col.pos
                )));
            }
            columns.push([
                Ciphertext::from_hex(pk, &col.c0)?,
                Ciphertext::from_hex(pk, &col.c1)?,
            ]);
        }
        columns.reverse();
        Ok(EncryptionTable { columns })
    }
}

/// One serialized table column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableColumn {
    pub pos: u32,
    pub c0: String,
    pub c1: String,
}

/// Builds Alice's encryption table for `x`. Requires `x ≥ 1`: the
/// 1-encoding of zero is empty, so no comparison could ever succeed.
pub fn build_table<R: RngCore + CryptoRng>(
    keys: &KeyPair,
    x: EncodedValue,
    rng: &mut R,
) -> Result<EncryptionTable> {
    if x.value() == 0 {
        return Err(Error::Domain("cannot build a table for 0".into()));
    }
    let pk = keys.public();
    let columns = (1..=x.width())
        .map(|pos| {
            let zero = pk.encrypt_zero(rng);
            let other = keys.random_nonzero_ciphertext(rng);
            if x.bit(pos) {
                [other, zero]
            } else {
                [zero, other]
            }
        })
        .collect();
    Ok(EncryptionTable { columns })
}

/// Counts homomorphic combinations performed while building products.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct OpCount {
    pub multiplications: u64,
}

/// Homomorphically combines the cells addressed by `prefix`: position `w`
/// on row `t_1`, position `w − 1` on row `t_2`, and so on.
pub fn select_product_counted(
    pk: &PublicKey,
    table: &EncryptionTable,
    prefix: &Prefix,
    ops: &mut OpCount,
) -> Result<Ciphertext> {
    let w = table.width();
    if prefix.len() > w {
        return Err(Error::Domain(format!(
            "prefix of length {} exceeds table width {w}",
            prefix.len()
        )));
    }
    let mut cells = (0..)
        .zip(prefix.symbols())
        .map(|(k, bit)| table.cell(w - k, bit));
    let first = cells
        .next()
        .ok_or_else(|| Error::Domain("prefix must not be empty".into()))?
        .clone();
    Ok(cells.fold(first, |acc, c| {
        ops.multiplications += 1;
        pk.add(&acc, c)
    }))
}

pub fn select_product(
    pk: &PublicKey,
    table: &EncryptionTable,
    prefix: &Prefix,
) -> Result<Ciphertext> {
    select_product_counted(pk, table, prefix, &mut OpCount::default())
}
