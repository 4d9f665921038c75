mod common;

use std::collections::HashSet;

use equilink::encoding::{
    build_table, one_encode, select_product, EncodedValue, EncryptionTable, Prefix,
};
use equilink::Error;

fn ev(v: u64, w: u32) -> EncodedValue {
    EncodedValue::new(v, w).unwrap()
}

/// Row index holding the encryption of zero at each position, MSB first.
fn zero_rows(table: &EncryptionTable) -> Vec<u8> {
    let keys = common::test_key();
    (1..=table.width())
        .rev()
        .map(|pos| {
            let z0 = keys.decrypts_to_zero(table.cell(pos, false)).unwrap();
            let z1 = keys.decrypts_to_zero(table.cell(pos, true)).unwrap();
            assert!(z0 != z1, "exactly one zero per column at position {pos}");
            z1 as u8
        })
        .collect()
}

#[test]
fn table_for_five_matches_worked_layout() {
    // columns 3,2,1: row 0 = (r, E(0), r), row 1 = (E(0), r, E(0))
    let keys = common::test_key();
    let t = build_table(&keys, ev(5, 3), &mut common::seeded(1)).unwrap();
    assert_eq!(zero_rows(&t), [1, 0, 1]);
}

#[test]
fn table_for_one_follows_the_bits() {
    let keys = common::test_key();
    let t = build_table(&keys, ev(1, 32), &mut common::seeded(2)).unwrap();
    let rows = zero_rows(&t);
    // position 1 on row 1, positions 2..=32 on row 0
    assert_eq!(rows[31], 1);
    assert!(rows[..31].iter().all(|&r| r == 0));
    // the cell that is not E(0) is a nonzero plaintext
    for pos in 2..=32 {
        assert_ne!(keys.decrypt(t.cell(pos, true)).unwrap(), 0u32.into());
    }
}

#[test]
fn all_cells_distinct() {
    let keys = common::test_key();
    for x in [1u64, 0x8000_0000, 0xffff_ffff, 123_456_789] {
        let t = build_table(&keys, ev(x, 32), &mut common::seeded(x)).unwrap();
        assert_eq!(t.len(), 64);
        let cells: HashSet<_> = (1..=32)
            .flat_map(|p| [t.cell(p, false), t.cell(p, true)])
            .collect();
        assert_eq!(cells.len(), 64);
    }
}

#[test]
fn zero_has_no_table() {
    let keys = common::test_key();
    let err = build_table(&keys, ev(0, 8), &mut common::seeded(3)).unwrap_err();
    assert!(matches!(err, Error::Domain(_)));
}

#[test]
fn worked_example_products() {
    let keys = common::test_key();
    let t = build_table(&keys, ev(5, 3), &mut common::seeded(4)).unwrap();
    let pk = keys.public();
    let p101: Prefix = "101".parse().unwrap();
    let p11: Prefix = "11".parse().unwrap();
    assert!(keys
        .decrypts_to_zero(&select_product(pk, &t, &p101).unwrap())
        .unwrap());
    assert!(!keys
        .decrypts_to_zero(&select_product(pk, &t, &p11).unwrap())
        .unwrap());
    let too_long: Prefix = "1010".parse().unwrap();
    assert!(matches!(
        select_product(pk, &t, &too_long),
        Err(Error::Domain(_))
    ));
}

/// Every prefix of length 1..=w, as strings of 0/1.
fn all_prefixes(w: u32) -> Vec<Prefix> {
    (1..=w)
        .flat_map(|len| {
            (0..(1u64 << len)).map(move |bits| {
                let s: Vec<bool> = (0..len).rev().map(|i| (bits >> i) & 1 == 1).collect();
                Prefix::new(&s).unwrap()
            })
        })
        .collect()
}

#[test]
fn product_is_zero_iff_prefix_of_alices_bits_exhaustive_w8() {
    let keys = common::test_key();
    let pk = keys.public();
    let prefixes = all_prefixes(8);
    assert_eq!(prefixes.len(), 510);
    let mut rng = common::seeded(5);
    for x in 1u64..=255 {
        let t = build_table(&keys, ev(x, 8), &mut rng).unwrap();
        let ones: HashSet<Prefix> = one_encode(ev(x, 8)).into_iter().collect();
        let bits = format!("{x:08b}");
        for p in &prefixes {
            let zero = keys
                .decrypts_to_zero(&select_product(pk, &t, p).unwrap())
                .unwrap();
            let s = p.to_string();
            assert_eq!(zero, bits.starts_with(&s), "x={x} prefix={p}");
            // Bob's prefixes all end in 1; for those, zero means 1-encoding membership
            if s.ends_with('1') {
                assert_eq!(zero, ones.contains(p), "x={x} prefix={p}");
            }
        }
    }
}

#[test]
fn full_width_self_prefix_is_zero() {
    let keys = common::test_key();
    for x in [1u64, 77, 0xffff_ffff] {
        let v = ev(x, 32);
        let t = build_table(&keys, v, &mut common::seeded(x + 9)).unwrap();
        let p = Prefix::new(&equilink::encoding::to_bits(v)).unwrap();
        assert!(keys
            .decrypts_to_zero(&select_product(keys.public(), &t, &p).unwrap())
            .unwrap());
    }
}

#[test]
fn serialized_table_round_trips_and_validates() {
    let keys = common::test_key();
    let t = build_table(&keys, ev(200, 8), &mut common::seeded(6)).unwrap();
    let cols = t.to_json();
    assert_eq!(
        cols.iter().map(|c| c.pos).collect::<Vec<_>>(),
        (1..=8).rev().collect::<Vec<_>>()
    );
    assert_eq!(
        EncryptionTable::from_json(keys.public(), &cols, 8).unwrap(),
        t
    );

    assert!(matches!(
        EncryptionTable::from_json(keys.public(), &cols, 7),
        Err(Error::Protocol(_))
    ));
    let mut swapped = cols.clone();
    swapped.swap(0, 1);
    assert!(matches!(
        EncryptionTable::from_json(keys.public(), &swapped, 8),
        Err(Error::Protocol(_))
    ));
    // a cell sharing a factor with n is not a ciphertext
    let mut bad = cols;
    bad[0].c0 = "fffffffb".into();
    assert!(EncryptionTable::from_json(keys.public(), &bad, 8).is_err());
}
