mod common;

use std::thread;
use std::time::Duration;

use equilink::protocol::{
    run_equality, run_equality_alice, run_equality_bob, ComparisonOutcome, SessionConfig,
    SessionStats,
};
use equilink::transport::{dial, listen, mem_pair, Channel, Direction, Endpoint, WireMessage};
use equilink::Error;

#[test]
fn flights_and_ciphertext_budgets() {
    use Direction::*;
    let keys = common::test_key();
    for (w, pad) in [(3u32, 3u32), (8, 8), (16, 20), (32, 32)] {
        let mut cfg = SessionConfig::raw(w);
        cfg.pad_to = pad;
        let max = if w == 64 { u64::MAX } else { (1 << w) - 1 };
        for (x, y) in [(1, 1), (max, max), (5, 4), (2, 3), (max, 1)] {
            let t = common::traced_run(&keys, x, y, cfg);
            assert_eq!(t.outcome, ComparisonOutcome::of(x, y));
            assert_eq!(t.bob_equal, x == y);
            assert_eq!(
                common::kinds(&t.alice_log),
                [
                    (Sent, "HELLO"),
                    (Received, "HELLO"),
                    (Sent, "TABLE"),
                    (Received, "PRODUCTS"),
                    (Sent, "RESULT")
                ]
            );
            assert_eq!(
                common::kinds(&t.bob_log),
                [
                    (Received, "HELLO"),
                    (Sent, "HELLO"),
                    (Received, "TABLE"),
                    (Sent, "PRODUCTS"),
                    (Received, "RESULT")
                ]
            );
            assert_eq!(t.alice_log[2].ciphertexts, 2 * w as usize);
            assert_eq!(t.bob_log[3].ciphertexts, 2 * pad as usize);
            assert!(t.bob_stats.multiplications <= 2 * (w as u64).pow(2));
        }
    }
}

#[test]
fn set_sizes_do_not_depend_on_bobs_value() {
    let keys = common::test_key();
    let cfg = SessionConfig::raw(6);
    let sizes: Vec<usize> = (1..64)
        .map(|y| common::traced_run(&keys, 37, y, cfg).bob_log[3].ciphertexts)
        .collect();
    assert!(sizes.iter().all(|&s| s == 12));
}

#[test]
fn both_pair_orders_occur_and_agree() {
    // with order randomization on, equal inputs still give EQUAL every time
    let keys = common::test_key();
    let cfg = SessionConfig::raw(8);
    for _ in 0..40 {
        assert!(run_equality(&keys, 200, 200, &cfg).unwrap().equal());
        assert_eq!(
            run_equality(&keys, 200, 100, &cfg).unwrap().outcome,
            ComparisonOutcome::AliceGreater
        );
    }
}

#[test]
fn dropped_peer_aborts_without_a_verdict() {
    let keys = common::test_key();
    let cfg = SessionConfig::raw(8);
    let (mut a, mut b) = mem_pair(Duration::from_secs(5));
    let bob = thread::spawn(move || {
        // handshake, read the table, then vanish
        let _ = b.receive().unwrap();
        let hello = WireMessage::Hello(equilink::transport::Hello {
            width: 8,
            pad_to: 8,
            n: common::test_key().public().to_file().n,
            g: common::test_key().public().to_file().g,
            protocol_version: 1,
            records: None,
        });
        b.send(&hello).unwrap();
        let _ = b.receive().unwrap();
    });
    let err = run_equality_alice(
        &mut a,
        &keys,
        9,
        &cfg,
        &mut rand::thread_rng(),
        &mut SessionStats::default(),
    )
    .unwrap_err();
    bob.join().unwrap();
    assert!(matches!(err, Error::Closed), "{err:?}");
}

#[test]
fn silent_peer_times_out() {
    let keys = common::test_key();
    let cfg = SessionConfig::raw(8);
    let (mut a, _b) = mem_pair(Duration::from_millis(100));
    let err = run_equality_alice(
        &mut a,
        &keys,
        9,
        &cfg,
        &mut rand::thread_rng(),
        &mut SessionStats::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::Timeout));
}

#[test]
fn bob_input_error_is_sent_as_abort() {
    let keys = common::test_key();
    let cfg = SessionConfig::raw(8);
    let (mut a, mut b) = mem_pair(Duration::from_secs(5));
    let bob = thread::spawn(move || {
        run_equality_bob(
            &mut b,
            0,
            &cfg,
            &mut rand::thread_rng(),
            &mut SessionStats::default(),
        )
        .unwrap_err()
    });
    let err = run_equality_alice(
        &mut a,
        &keys,
        9,
        &cfg,
        &mut rand::thread_rng(),
        &mut SessionStats::default(),
    )
    .unwrap_err();
    assert!(matches!(bob.join().unwrap(), Error::Domain(_)));
    assert!(
        matches!(&err, Error::Aborted(r) if r == "domain"),
        "{err:?}"
    );
}

#[test]
fn equality_over_tcp() {
    let keys = common::test_key();
    let cfg = SessionConfig::raw(16);
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let ep = Endpoint::Tcp(format!("127.0.0.1:{port}"));
    let ep2 = ep.clone();
    let bob = thread::spawn(move || {
        let mut ch = dial(&ep2, Duration::from_secs(10)).unwrap();
        run_equality_bob(
            &mut ch,
            4242,
            &cfg,
            &mut rand::thread_rng(),
            &mut SessionStats::default(),
        )
        .unwrap()
    });
    let mut ch = listen(&ep, Duration::from_secs(10)).unwrap();
    let outcome = run_equality_alice(
        &mut ch,
        &keys,
        4242,
        &cfg,
        &mut rand::thread_rng(),
        &mut SessionStats::default(),
    )
    .unwrap();
    assert_eq!(outcome, ComparisonOutcome::Equal);
    assert!(bob.join().unwrap());
}

#[test]
fn concurrent_sessions_are_independent() {
    let keys = common::test_key();
    let cfg = SessionConfig::raw(12);
    thread::scope(|s| {
        let handles: Vec<_> = (1..=8u64)
            .map(|i| {
                let keys = &keys;
                s.spawn(move || {
                    let ep: Endpoint = format!("mem:concurrent-{i}").parse().unwrap();
                    let ep2 = ep.clone();
                    let bob = thread::spawn(move || {
                        let mut ch = dial(&ep2, Duration::from_secs(10)).unwrap();
                        run_equality_bob(
                            &mut ch,
                            100 + i % 2,
                            &cfg,
                            &mut rand::thread_rng(),
                            &mut SessionStats::default(),
                        )
                        .unwrap()
                    });
                    let mut ch = listen(&ep, Duration::from_secs(10)).unwrap();
                    let out = run_equality_alice(
                        &mut ch,
                        keys,
                        100,
                        &cfg,
                        &mut rand::thread_rng(),
                        &mut SessionStats::default(),
                    )
                    .unwrap();
                    (i, out, bob.join().unwrap())
                })
            })
            .collect();
        for h in handles {
            let (i, out, bob_eq) = h.join().unwrap();
            assert_eq!(out.is_equal(), i % 2 == 0);
            assert_eq!(bob_eq, i % 2 == 0);
        }
    });
}
