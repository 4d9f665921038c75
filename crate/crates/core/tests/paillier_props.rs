mod common;

use std::collections::HashSet;

use equilink::paillier::KeyPair;
use num_bigint::{BigUint, RandBigInt};
use num_traits::Zero;
use proptest::prelude::*;

fn key512() -> KeyPair {
    KeyPair::generate(512, &mut common::seeded(512)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn homomorphic_addition(a in any::<[u8; 64]>(), b in any::<[u8; 64]>(), seed in any::<u64>()) {
        // one key for all cases
        thread_local!(static KEY: KeyPair = key512());
        KEY.with(|kp| {
            let n = kp.public().n();
            let m1 = BigUint::from_bytes_be(&a) % n;
            let m2 = BigUint::from_bytes_be(&b) % n;
            let mut rng = common::seeded(seed);
            let c1 = kp.public().encrypt(&m1, &mut rng).unwrap();
            let c2 = kp.public().encrypt(&m2, &mut rng).unwrap();
            let sum = kp.decrypt(&kp.public().add(&c1, &c2)).unwrap();
            prop_assert_eq!(sum, (&m1 + &m2) % n);
            prop_assert_eq!(kp.decrypt(&c1).unwrap(), m1);
            Ok(())
        })?;
    }
}

#[test]
fn repeated_encryptions_are_distinct() {
    let kp = key512();
    let mut rng = common::seeded(1);
    let m = BigUint::from(42u32);
    let cs: HashSet<_> = (0..1000)
        .map(|_| kp.public().encrypt(&m, &mut rng).unwrap())
        .collect();
    assert_eq!(cs.len(), 1000);
    assert!(cs.iter().all(|c| kp.decrypt(c).unwrap() == m));
}

#[test]
fn random_ciphertexts_are_distinct() {
    let kp = key512();
    let mut rng = common::seeded(2);
    let a = kp.public().random_ciphertext(&mut rng);
    let b = kp.public().random_ciphertext(&mut rng);
    assert_ne!(a, b);
}

#[test]
fn uniform_ciphertext_decrypts_to_zero_about_one_in_n() {
    let kp = common::toy_key();
    let mut rng = common::seeded(3);
    let draws = 100_000u32;
    let zeros = (0..draws)
        .filter(|_| {
            kp.decrypt(&kp.public().random_ciphertext(&mut rng))
                .unwrap()
                .is_zero()
        })
        .count() as f64;
    // binomial(1e5, 1/143): mean ≈ 699.3, sd ≈ 26.3; allow 5 sd
    let mean = draws as f64 / 143.0;
    let sd = (draws as f64 * (1.0 / 143.0) * (142.0 / 143.0)).sqrt();
    assert!((zeros - mean).abs() < 5.0 * sd, "zeros={zeros} mean={mean}");
}

#[test]
fn nonzero_mode_never_decrypts_to_zero() {
    let kp = common::toy_key();
    let mut rng = common::seeded(4);
    for _ in 0..10_000 {
        let c = kp.random_nonzero_ciphertext(&mut rng);
        assert!(!kp.decrypt(&c).unwrap().is_zero());
    }
}

#[test]
fn random_plaintexts_cover_the_toy_range() {
    // plaintexts of uniform ciphertexts hit every residue mod 143
    let kp = common::toy_key();
    let mut rng = common::seeded(5);
    let seen: HashSet<BigUint> = (0..20_000)
        .map(|_| {
            kp.decrypt(&kp.public().random_ciphertext(&mut rng))
                .unwrap()
        })
        .collect();
    assert_eq!(seen.len(), 143);
}

#[test]
fn encrypt_with_explicit_randomizer_below_n() {
    let kp = key512();
    let mut rng = common::seeded(6);
    let r = rng.gen_biguint_below(kp.public().n());
    let m = BigUint::from(7u8);
    if let Ok(c) = kp.public().encrypt_with(&m, &r) {
        assert_eq!(kp.decrypt(&c).unwrap(), m);
        assert_eq!(kp.public().encrypt_with(&m, &r).unwrap(), c);
    }
}
