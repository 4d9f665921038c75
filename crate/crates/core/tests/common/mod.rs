#![allow(dead_code)]

use std::path::PathBuf;
use std::thread;
use std::time::Duration;

use equilink::encoding::{build_table, EncodedValue};
use equilink::paillier::KeyPair;
use equilink::protocol::{
    bob_messages, run_equality_alice, run_equality_bob, ComparisonOutcome, SessionConfig,
    SessionStats,
};
use equilink::transport::{
    encode_frame, mem_pair, AdvanceAction, Direction, FrameRecord, Hello, TracedChannel,
    WireMessage, PROTOCOL_VERSION,
};
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// 64-bit modulus from the two largest 32-bit primes below 2^32 − 4.
pub fn test_key() -> KeyPair {
    KeyPair::from_primes(
        &BigUint::from(4_294_967_291u64),
        &BigUint::from(4_294_967_279u64),
    )
    .unwrap()
}

/// A second fixed 64-bit key, for protocols where Bob needs his own.
pub fn bob_test_key() -> KeyPair {
    KeyPair::from_primes(
        &BigUint::from(4_294_967_231u64),
        &BigUint::from(4_294_967_279u64),
    )
    .unwrap()
}

/// n = 143, the hand-checkable toy key.
pub fn toy_key() -> KeyPair {
    KeyPair::from_primes(&BigUint::from(11u32), &BigUint::from(13u32)).unwrap()
}

pub fn seeded(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
}

/// One message of every kind, built from the fixed key and seeded
/// randomness so that their frames are byte-stable.
pub fn golden_messages() -> Vec<(&'static str, WireMessage)> {
    let keys = test_key();
    let cfg = SessionConfig::raw(3);
    let mut rng = seeded(2024);
    let table = build_table(&keys, EncodedValue::new(5, 3).unwrap(), &mut rng).unwrap();
    let msgs = bob_messages(
        keys.public(),
        &table,
        EncodedValue::new(5, 3).unwrap(),
        &cfg,
        &mut rng,
    )
    .unwrap();
    let hexes =
        |s: &equilink::protocol::MessageSet| s.iter().map(|c| c.to_hex()).collect::<Vec<_>>();
    let pk = keys.public().to_file();
    vec![
        (
            "hello",
            WireMessage::Hello(Hello {
                width: 3,
                pad_to: 3,
                n: pk.n.clone(),
                g: pk.g.clone(),
                protocol_version: PROTOCOL_VERSION,
                records: None,
            }),
        ),
        (
            "hello_linkage",
            WireMessage::Hello(Hello {
                width: 64,
                pad_to: 64,
                n: pk.n,
                g: pk.g,
                protocol_version: PROTOCOL_VERSION,
                records: Some(1000),
            }),
        ),
        ("table", WireMessage::Table(table.to_json())),
        (
            "products",
            WireMessage::Products {
                set_a: hexes(&msgs.predecessor),
                set_b: hexes(&msgs.value),
            },
        ),
        ("result", WireMessage::Result { equal: true }),
        (
            "advance_matched",
            WireMessage::Advance {
                action: AdvanceAction::Matched,
                ids: Some(vec![17, 42]),
            },
        ),
        (
            "advance_alice",
            WireMessage::Advance {
                action: AdvanceAction::AdvanceAlice,
                ids: None,
            },
        ),
        (
            "advance_bob",
            WireMessage::Advance {
                action: AdvanceAction::AdvanceBob,
                ids: None,
            },
        ),
        ("abort", WireMessage::abort("width-mismatch")),
    ]
}

/// Compares each golden message's frame against its fixture file. With
/// `EQUILINK_BLESS=1` the fixtures are rewritten instead.
pub fn check_golden_frames() -> Result<usize, String> {
    let dir = fixture_dir();
    let bless = std::env::var("EQUILINK_BLESS").is_ok_and(|v| v == "1");
    let mut checked = 0;
    for (name, msg) in golden_messages() {
        let path = dir.join(format!("{name}.frame"));
        let frame = encode_frame(&msg).map_err(|e| e.to_string())?;
        if bless {
            std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
            std::fs::write(&path, &frame).map_err(|e| e.to_string())?;
        }
        let want = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        if frame != want {
            return Err(format!("{name}: encoded frame differs from fixture"));
        }
        let decoded = equilink::transport::decode_frame(&want).map_err(|e| e.to_string())?;
        if decoded != msg {
            return Err(format!("{name}: fixture decodes to a different message"));
        }
        checked += 1;
    }
    Ok(checked)
}

/// Outcome and both parties' frame logs from one traced equality session.
pub struct Traced {
    pub outcome: ComparisonOutcome,
    pub bob_equal: bool,
    pub alice_log: Vec<FrameRecord>,
    pub bob_log: Vec<FrameRecord>,
    pub bob_stats: SessionStats,
}

pub fn traced_run(keys: &KeyPair, x: u64, y: u64, cfg: SessionConfig) -> Traced {
    let (a, b) = mem_pair(Duration::from_secs(30));
    let bob = thread::spawn(move || {
        let mut ch = TracedChannel::new(b);
        let mut stats = SessionStats::default();
        let eq = run_equality_bob(&mut ch, y, &cfg, &mut rand::thread_rng(), &mut stats).unwrap();
        (eq, ch.into_parts().1, stats)
    });
    let mut ch = TracedChannel::new(a);
    let outcome = run_equality_alice(
        &mut ch,
        keys,
        x,
        &cfg,
        &mut rand::thread_rng(),
        &mut SessionStats::default(),
    )
    .unwrap();
    let (bob_equal, bob_log, bob_stats) = bob.join().unwrap();
    Traced {
        outcome,
        bob_equal,
        alice_log: ch.into_parts().1,
        bob_log,
        bob_stats,
    }
}

pub fn kinds(log: &[FrameRecord]) -> Vec<(Direction, &'static str)> {
    log.iter().map(|f| (f.direction, f.kind)).collect()
}
