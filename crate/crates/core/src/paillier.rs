//! Paillier additively homomorphic encryption.
//!
//! Multiplying two ciphertexts modulo `n²` yields an encryption of the sum of
//! their plaintexts modulo `n`. The generator is fixed to `g = n + 1`, which
//! turns `g^m mod n²` into the cheap `1 + m·n`.

use std::fmt;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hexint::{from_hex, to_hex};

/// Smallest key size accepted by [`KeyPair::generate`].
pub const MIN_KEY_BITS: u64 = 64;

/// Default key size for operator-facing commands.
pub const DEFAULT_KEY_BITS: u64 = 2048;

#[derive(Clone, PartialEq, Eq)]
pub struct PublicKey {
    n: BigUint,
    g: BigUint,
    n_squared: BigUint,
}

#[derive(Clone, PartialEq, Eq)]
pub struct PrivateKey {
    lambda: BigUint,
    mu: BigUint,
}

/// A public key together with its private half. Alice holds one of these; Bob
/// only ever sees the [`PublicKey`].
#[derive(Clone, PartialEq, Eq)]
pub struct KeyPair {
    public: PublicKey,
    private: PrivateKey,
}

/// An element of the unit group modulo `n²`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Ciphertext(BigUint);

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PublicKey")
            .field("bits", &self.bits())
            .field("n", &to_hex(&self.n))
            .finish()
    }
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair")
            .field("public", &self.public)
            .finish_non_exhaustive()
    }
}

impl fmt::Debug for Ciphertext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ciphertext({})", to_hex(&self.0))
    }
}

impl Ciphertext {
    /// Wraps a raw group element, checking it lies in `[1, n²)` and is
    /// coprime to `n`.
    pub fn new(pk: &PublicKey, value: BigUint) -> Result<Self> {
        if !pk.is_unit(&value) {
            return Err(Error::Domain(
                "value is not a ciphertext under this key".into(),
            ));
        }
        Ok(Ciphertext(value))
    }

    pub fn from_hex(pk: &PublicKey, s: &str) -> Result<Self> {
        Self::new(pk, from_hex(s)?)
    }

    pub fn to_hex(&self) -> String {
        to_hex(&self.0)
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

impl PublicKey {
    /// Rebuilds a public key from its modulus. Only `g = n + 1` is supported.
    pub fn from_modulus(n: BigUint, g: BigUint) -> Result<Self> {
        if n.bits() < 4 || n.is_even() {
            return Err(Error::Config("modulus must be an odd integer".into()));
        }
        if g != &n + 1u32 {
            return Err(Error::Config("generator must equal n + 1".into()));
        }
        let n_squared = &n * &n;
        Ok(PublicKey { n, g, n_squared })
    }

    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn g(&self) -> &BigUint {
        &self.g
    }

    pub fn n_squared(&self) -> &BigUint {
        &self.n_squared
    }

    /// Bit length of the modulus.
    pub fn bits(&self) -> u64 {
        self.n.bits()
    }

    fn is_unit(&self, v: &BigUint) -> bool {
        !v.is_zero() && v < &self.n_squared && v.gcd(&self.n).is_one()
    }

    fn check_plaintext(&self, m: &BigUint) -> Result<()> {
        if m >= &self.n {
            return Err(Error::Domain("plaintext must be below the modulus".into()));
        }
        Ok(())
    }

    /// Uniform unit modulo `n`, used as an encryption randomizer.
    fn random_unit_mod_n<R: RngCore + CryptoRng>(&self, rng: &mut R) -> BigUint {
        loop {
            let r = rng.gen_biguint_below(&self.n);
            if !r.is_zero() && r.gcd(&self.n).is_one() {
                return r;
            }
        }
    }

    /// `c = g^m · r^n mod n²` with an explicit randomizer.
    pub fn encrypt_with(&self, m: &BigUint, r: &BigUint) -> Result<Ciphertext> {
        self.check_plaintext(m)?;
        if r.is_zero() || r >= &self.n || !r.gcd(&self.n).is_one() {
            return Err(Error::Domain("randomizer must be a unit modulo n".into()));
        }
        // g^m = (1 + n)^m = 1 + m·n (mod n²)
        let gm = (BigUint::one() + m * &self.n) % &self.n_squared;
        let rn = r.modpow(&self.n, &self.n_squared);
        Ok(Ciphertext((gm * rn) % &self.n_squared))
    }

    pub fn encrypt<R: RngCore + CryptoRng>(&self, m: &BigUint, rng: &mut R) -> Result<Ciphertext> {
        let r = self.random_unit_mod_n(rng);
        self.encrypt_with(m, &r)
    }

    /// A fresh encryption of zero.
    pub fn encrypt_zero<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Ciphertext {
        let r = self.random_unit_mod_n(rng);
        Ciphertext(r.modpow(&self.n, &self.n_squared))
    }

    /// Homomorphic addition: the product of the two ciphertexts modulo `n²`.
    pub fn add(&self, a: &Ciphertext, b: &Ciphertext) -> Ciphertext {
        Ciphertext((&a.0 * &b.0) % &self.n_squared)
    }

    /// Uniform element of the units modulo `n²`. Its plaintext is uniform on
    /// `[0, n)`, so it decrypts to zero with probability about `1/n`.
    pub fn random_ciphertext<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Ciphertext {
        loop {
            let c = rng.gen_biguint_below(&self.n_squared);
            if self.is_unit(&c) {
                return Ciphertext(c);
            }
        }
    }

    pub fn to_file(&self) -> PublicKeyFile {
        PublicKeyFile {
            bits: self.bits(),
            n: to_hex(&self.n),
            g: to_hex(&self.g),
        }
    }

    pub fn from_file(f: &PublicKeyFile) -> Result<Self> {
        let pk = PublicKey::from_modulus(from_hex(&f.n)?, from_hex(&f.g)?)?;
        if pk.bits().abs_diff(f.bits) > 1 {
            return Err(Error::Config(format!(
                "key file declares {} bits but modulus has {}",
                f.bits,
                pk.bits()
            )));
        }
        Ok(pk)
    }
}

fn random_prime<R: RngCore + CryptoRng>(bits: u64, rng: &mut R) -> BigUint {
    loop {
        let mut p = rng.gen_biguint(bits);
        // top two bits set so that p·q has exactly 2·bits bits
        p.set_bit(bits - 1, true);
        p.set_bit(bits - 2, true);
        p.set_bit(0, true);
        if glass_pumpkin::prime::check_with(&p, rng) {
            return p;
        }
    }
}

impl KeyPair {
    /// Generates a key whose modulus is the product of two distinct random
    /// primes of `bits / 2` bits each.
    pub fn generate<R: RngCore + CryptoRng>(bits: u64, rng: &mut R) -> Result<Self> {
        if bits < MIN_KEY_BITS {
            return Err(Error::Config(format!(
                "key size must be at least {MIN_KEY_BITS} bits"
            )));
        }
        if !bits.is_multiple_of(2) {
            return Err(Error::Config("key size must be even".into()));
        }
        loop {
            let p = random_prime(bits / 2, rng);
            let q = random_prime(bits / 2, rng);
            if p == q {
                continue;
            }
            if let Ok(kp) = Self::from_primes(&p, &q) {
                return Ok(kp);
            }
        }
    }

    /// Generates a key from the operating system's random source.
    pub fn keygen(bits: u64) -> Result<Self> {
        Self::generate(bits, &mut rand::rngs::OsRng)
    }

    /// Builds a key from explicit primes. Intended for tests and fixtures,
    /// where small or fixed moduli make results checkable by hand.
    pub fn from_primes(p: &BigUint, q: &BigUint) -> Result<Self> {
        let one = BigUint::one();
        if p == q || p <= &one || q <= &one {
            return Err(Error::Config("p and q must be distinct primes".into()));
        }
        let n = p * q;
        let p1 = p - &one;
        let q1 = q - &one;
        if !n.gcd(&(&p1 * &q1)).is_one() {
            return Err(Error::Config("gcd(n, (p-1)(q-1)) must be 1".into()));
        }
        let lambda = p1.lcm(&q1);
        let public = PublicKey::from_modulus(n.clone(), &n + 1u32)?;
        let u = public.g.modpow(&lambda, &public.n_squared);
        let mu = mod_inverse(&l_function(&u, &n), &n)
            .ok_or_else(|| Error::Config("L(g^lambda) is not invertible mod n".into()))?;
        Ok(KeyPair {
            public,
            private: PrivateKey { lambda, mu },
        })
    }

    pub fn public(&self) -> &PublicKey {
        &self.public
    }

    pub fn lambda(&self) -> &BigUint {
        &self.private.lambda
    }

    pub fn mu(&self) -> &BigUint {
        &self.private.mu
    }

    /// `m = L(c^λ mod n²) · μ mod n`
    pub fn decrypt(&self, c: &Ciphertext) -> Result<BigUint> {
        let pk = &self.public;
        if !pk.is_unit(&c.0) {
            return Err(Error::Domain("ciphertext is not a unit modulo n²".into()));
        }
        let u = c.0.modpow(&self.private.lambda, &pk.n_squared);
        Ok((l_function(&u, &pk.n) * &self.private.mu) % &pk.n)
    }

    /// Whether `c` decrypts to zero. Cheaper than a full decryption: `c`
    /// encrypts zero exactly when `c^λ ≡ 1 (mod n²)`.
    pub fn decrypts_to_zero(&self, c: &Ciphertext) -> Result<bool> {
        let pk = &self.public;
        if !pk.is_unit(&c.0) {
            return Err(Error::Domain("ciphertext is not a unit modulo n²".into()));
        }
        Ok(c.0.modpow(&self.private.lambda, &pk.n_squared).is_one())
    }

    /// Uniform unit modulo `n²`, resampled until its plaintext is nonzero.
    pub fn random_nonzero_ciphertext<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Ciphertext {
        loop {
            let c = self.public.random_ciphertext(rng);
            if !self.decrypts_to_zero(&c).expect("sampled value is a unit") {
                return c;
            }
        }
    }

    pub fn to_file(&self) -> PrivateKeyFile {
        let pk = self.public.to_file();
        PrivateKeyFile {
            bits: pk.bits,
            n: pk.n,
            g: pk.g,
            lambda: to_hex(&self.private.lambda),
            mu: to_hex(&self.private.mu),
        }
    }

    pub fn from_file(f: &PrivateKeyFile) -> Result<Self> {
        let public = PublicKey::from_file(&PublicKeyFile {
            bits: f.bits,
            n: f.n.clone(),
            g: f.g.clone(),
        })?;
        let kp = KeyPair {
            public,
            private: PrivateKey {
                lambda: from_hex(&f.lambda)?,
                mu: from_hex(&f.mu)?,
            },
        };
        // a mismatched lambda/mu pair would silently break every decryption
        let probe = kp
            .public
            .encrypt_with(&BigUint::from(1u8), &BigUint::one())?;
        if kp.decrypt(&probe)? != BigUint::one() {
            return Err(Error::Config("private key does not match modulus".into()));
        }
        Ok(kp)
    }
}

/// `L(u) = (u − 1) / n`
fn l_function(u: &BigUint, n: &BigUint) -> BigUint {
    (u - 1u32) / n
}

fn mod_inverse(a: &BigUint, m: &BigUint) -> Option<BigUint> {
    a.modinv(m)
}

/// JSON layout of a public key file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicKeyFile {
    pub bits: u64,
    pub n: String,
    pub g: String,
}

/// JSON layout of a private key file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivateKeyFile {
    pub bits: u64,
    pub n: String,
    pub g: String,
    pub lambda: String,
    pub mu: String,
}
