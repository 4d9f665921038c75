//! Private equality testing between two parties, and record linkage built
//! on top of it.
//!
//! Alice encrypts the bits of her value `x` into a table of Paillier
//! ciphertexts. Bob combines table cells along the 0-encodings of `y − 1`
//! and `y` and returns the padded, shuffled products. Alice decrypts them and
//! learns whether `x = y` after two message flights; Bob learns the verdict
//! from a third.
//!
//! * [`paillier`]: key generation, encryption, homomorphic addition.
//! * [`encoding`]: bit strings, 0/1-encodings, encryption tables.
//! * [`protocol`]: the equality and greater-than protocols.
//! * [`linkage`]: keyed hashing and the sorted-merge linkage driver.
//! * [`transport`]: framed JSON wire format, TCP and in-process channels.
//! * [`datagen`]: seeded synthetic identity records.
//! * [`report`]: run reports and the loopback benchmark.
//!
//! Both parties are assumed semi-honest. With unhashed inputs Alice also
//! learns the order of `x` and `y`; linkage hashes identifiers under a shared
//! MAC key first so that order says nothing about the underlying data.

pub mod datagen;
pub mod encoding;
pub mod error;
pub mod hexint;
pub mod linkage;
pub mod paillier;
pub mod protocol;
pub mod report;
pub mod transport;

pub use error::{Error, Result};
