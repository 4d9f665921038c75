mod common;

use std::thread;
use std::time::Duration;

use equilink::encoding::{build_table, EncodedValue, TableColumn};
use equilink::protocol::{handshake_initiator, handshake_responder, SessionConfig};
use equilink::transport::{
    decode_frame, encode_frame, mem_pair, AdvanceAction, Channel, Hello, WireMessage,
    PROTOCOL_VERSION,
};
use equilink::Error;
use proptest::prelude::*;

#[test]
fn golden_frames_replay_byte_for_byte() {
    let n = common::check_golden_frames().unwrap();
    assert_eq!(n, common::golden_messages().len());
}

#[test]
fn golden_table_frame_layout() {
    let bytes = std::fs::read(common::fixture_dir().join("table.frame")).unwrap();
    let len = u32::from_be_bytes(bytes[..4].try_into().unwrap()) as usize;
    assert_eq!(len, bytes.len() - 4);
    let v: serde_json::Value = serde_json::from_slice(&bytes[4..]).unwrap();
    assert_eq!(v["kind"], "TABLE");
    let positions: Vec<u64> = v["body"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["pos"].as_u64().unwrap())
        .collect();
    assert_eq!(positions, [3, 2, 1]);
}

#[test]
fn full_width_table_frame_has_32_columns() {
    let keys = common::test_key();
    let table = build_table(
        &keys,
        EncodedValue::new(0xdead_beef, 32).unwrap(),
        &mut common::seeded(1),
    )
    .unwrap();
    let frame = encode_frame(&WireMessage::Table(table.to_json())).unwrap();
    match decode_frame(&frame).unwrap() {
        WireMessage::Table(cols) => {
            assert_eq!(cols.len(), 32);
            assert_eq!(WireMessage::Table(cols).ciphertext_count(), 64);
        }
        other => panic!("decoded {}", other.kind()),
    }
}

fn hello(width: u32, pad_to: u32) -> Hello {
    let pk = common::test_key().public().to_file();
    Hello {
        width,
        pad_to,
        n: pk.n,
        g: pk.g,
        protocol_version: PROTOCOL_VERSION,
        records: None,
    }
}

#[test]
fn width_mismatch_aborts() {
    let (mut a, mut b) = mem_pair(Duration::from_secs(5));
    let keys = common::test_key();
    let bob = thread::spawn(move || {
        handshake_responder(&mut b, &SessionConfig::raw(8), None, None).map(|_| ())
    });
    let err =
        handshake_initiator(&mut a, &SessionConfig::raw(16), keys.public(), None).unwrap_err();
    assert!(
        matches!(&err, Error::Aborted(r) if r == "width-mismatch"),
        "{err:?}"
    );
    let bob_err = bob.join().unwrap().unwrap_err();
    assert!(matches!(&bob_err, Error::Aborted(r) if r == "width-mismatch"));
}

#[test]
fn responder_reports_mismatch_to_initiator() {
    let (mut a, mut b) = mem_pair(Duration::from_secs(5));
    a.send(&WireMessage::Hello(hello(8, 9))).unwrap();
    let err = handshake_responder(&mut b, &SessionConfig::raw(8), None, None).unwrap_err();
    assert!(matches!(&err, Error::Aborted(r) if r == "pad-mismatch"));
    assert_eq!(a.receive().unwrap(), WireMessage::abort("pad-mismatch"));

    let mut h = hello(8, 8);
    h.protocol_version = 2;
    a.send(&WireMessage::Hello(h)).unwrap();
    assert!(handshake_responder(&mut b, &SessionConfig::raw(8), None, None).is_err());
    assert_eq!(a.receive().unwrap(), WireMessage::abort("version-mismatch"));
}

fn hex_int() -> impl Strategy<Value = String> {
    "[1-9a-f][0-9a-f]{0,40}"
}

fn arb_message() -> impl Strategy<Value = WireMessage> {
    let action = prop_oneof![
        Just(AdvanceAction::AdvanceAlice),
        Just(AdvanceAction::AdvanceBob),
        Just(AdvanceAction::Matched)
    ];
    prop_oneof![
        (
            1u32..=64,
            1u32..=128,
            hex_int(),
            hex_int(),
            proptest::option::of(any::<u64>())
        )
            .prop_map(|(width, pad_to, n, g, records)| WireMessage::Hello(Hello {
                width,
                pad_to,
                n,
                g,
                protocol_version: PROTOCOL_VERSION,
                records,
            })),
        proptest::collection::vec((hex_int(), hex_int()), 0..8).prop_map(|cells| {
            let w = cells.len() as u32;
            WireMessage::Table(
                cells
                    .into_iter()
                    .enumerate()
                    .map(|(i, (c0, c1))| TableColumn {
                        pos: w - i as u32,
                        c0,
                        c1,
                    })
                    .collect(),
            )
        }),
        (
            proptest::collection::vec(hex_int(), 0..10),
            proptest::collection::vec(hex_int(), 0..10)
        )
            .prop_map(|(set_a, set_b)| WireMessage::Products { set_a, set_b }),
        any::<bool>().prop_map(|equal| WireMessage::Result { equal }),
        (
            action,
            proptest::option::of(proptest::collection::vec(any::<u64>(), 0..5))
        )
            .prop_map(|(action, ids)| WireMessage::Advance { action, ids }),
        "[ -~]{0,30}".prop_map(WireMessage::abort),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn decode_inverts_encode(msg in arb_message()) {
        let frame = encode_frame(&msg).unwrap();
        prop_assert_eq!(decode_frame(&frame).unwrap(), msg);
    }
}
