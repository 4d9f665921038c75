//! The two-round private equality protocol and the greater-than primitive it
//! is built from.
//!
//! Alice sends her encryption table for `x`. Bob answers with two padded,
//! shuffled sets of table products, one built from the 0-encoding of `y − 1`
//! and one from the 0-encoding of `y`. A product decrypts to zero exactly when
//! its prefix is shared with Alice's 1-encoding, i.e. when `x` exceeds the
//! corresponding operand. `x = y` holds iff `x > y − 1` and not `x > y`, so
//! Alice declares equality when exactly one of the two sets holds a zero.
//!
//! With unhashed inputs the same decryptions also reveal which of `x` and `y`
//! is larger; [`ComparisonOutcome`] makes that visible instead of hiding it.

use std::fmt;
use std::thread;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{CryptoRng, Rng, RngCore};

use crate::encoding::{
    build_table, check_width, select_product_counted, zero_encode, EncodedValue, EncryptionTable,
    OpCount,
};
use crate::error::{Error, Result};
use crate::hexint::{from_hex, to_hex};
use crate::paillier::{Ciphertext, KeyPair, PublicKey, DEFAULT_KEY_BITS, MIN_KEY_BITS};
use crate::transport::{mem_pair, Channel, Hello, WireMessage, DEFAULT_TIMEOUT, PROTOCOL_VERSION};

/// Whether protocol inputs went through keyed hashing first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeakMode {
    #[default]
    Hashed,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct SessionConfig {
    pub width: u32,
    /// Messages per set; at least `width`.
    pub pad_to: u32,
    pub leak_mode: LeakMode,
    pub key_bits: u64,
    /// Send Bob's two sets in a random order.
    pub randomize_order: bool,
}

impl SessionConfig {
    pub fn new(width: u32) -> Self {
        SessionConfig {
            width,
            pad_to: width,
            leak_mode: LeakMode::Hashed,
            key_bits: DEFAULT_KEY_BITS,
            randomize_order: true,
        }
    }

    pub fn raw(width: u32) -> Self {
        SessionConfig {
            leak_mode: LeakMode::Raw,
            ..Self::new(width)
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_width(self.width)?;
        if self.pad_to < self.width {
            return Err(Error::Config(format!(
                "pad_to ({}) must be at least the width ({})",
                self.pad_to, self.width
            )));
        }
        if self.key_bits < MIN_KEY_BITS {
            return Err(Error::Config(format!(
                "key size must be at least {MIN_KEY_BITS} bits"
            )));
        }
        Ok(())
    }

    fn input(&self, v: u64) -> Result<EncodedValue> {
        EncodedValue::protocol_input(v, self.width)
    }
}

/// One padded, shuffled set of Bob's products.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageSet(Vec<Ciphertext>);

impl MessageSet {
    pub fn new(items: Vec<Ciphertext>) -> Self {
        MessageSet(items)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Ciphertext> {
        self.0.iter()
    }

    fn to_hex(&self) -> Vec<String> {
        self.0.iter().map(Ciphertext::to_hex).collect()
    }

    fn from_hex(pk: &PublicKey, items: &[String]) -> Result<Self> {
        items
            .iter()
            .map(|s| Ciphertext::from_hex(pk, s))
            .collect::<Result<_>>()
            .map(MessageSet)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ComparisonOutcome {
    Equal,
    AliceGreater,
    BobGreater,
}

impl ComparisonOutcome {
    pub fn is_equal(self) -> bool {
        self == ComparisonOutcome::Equal
    }

    /// The outcome a plaintext comparison of `x` against `y` would give.
    pub fn of(x: u64, y: u64) -> Self {
        match x.cmp(&y) {
            std::cmp::Ordering::Equal => ComparisonOutcome::Equal,
            std::cmp::Ordering::Greater => ComparisonOutcome::AliceGreater,
            std::cmp::Ordering::Less => ComparisonOutcome::BobGreater,
        }
    }
}

impl fmt::Display for ComparisonOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComparisonOutcome::Equal => "EQUAL",
            ComparisonOutcome::AliceGreater => "ALICE_GREATER",
            ComparisonOutcome::BobGreater => "BOB_GREATER",
        })
    }
}

/// Bob's reply, in canonical order: the `y − 1` set first.
#[derive(Debug, Clone)]
pub struct BobMessages {
    pub predecessor: MessageSet,
    pub value: MessageSet,
    pub multiplications: u64,
}

fn padded_set<R: RngCore + CryptoRng>(
    pk: &PublicKey,
    table: &EncryptionTable,
    v: EncodedValue,
    pad_to: u32,
    rng: &mut R,
    ops: &mut OpCount,
) -> Result<MessageSet> {
    let prefixes = zero_encode(v);
    if prefixes.len() > pad_to as usize {
        return Err(Error::Config("pad_to is smaller than a 0-encoding".into()));
    }
    let mut items = prefixes
        .iter()
        .map(|p| select_product_counted(pk, table, p, ops))
        .collect::<Result<Vec<_>>>()?;
    // Bob holds no key, so fillers are plain uniform draws
    while items.len() < pad_to as usize {
        items.push(pk.random_ciphertext(rng));
    }
    items.shuffle(rng);
    Ok(MessageSet(items))
}

fn check_table(table: &EncryptionTable, cfg: &SessionConfig) -> Result<()> {
    if table.width() != cfg.width {
        return Err(Error::Protocol(format!(
            "table width {} does not match session width {}",
            table.width(),
            cfg.width
        )));
    }
    Ok(())
}

/// Builds Bob's two product sets for `y`.
pub fn bob_messages<R: RngCore + CryptoRng>(
    pk: &PublicKey,
    table: &EncryptionTable,
    y: EncodedValue,
    cfg: &SessionConfig,
    rng: &mut R,
) -> Result<BobMessages> {
    check_table(table, cfg)?;
    let prev = y
        .predecessor()
        .ok_or_else(|| Error::Domain("Bob's value must be at least 1".into()))?;
    let mut ops = OpCount::default();
    let predecessor = padded_set(pk, table, prev, cfg.pad_to, rng, &mut ops)?;
    let value = padded_set(pk, table, y, cfg.pad_to, rng, &mut ops)?;
    Ok(BobMessages {
        predecessor,
        value,
        multiplications: ops.multiplications,
    })
}

/// Bob's single set for the greater-than protocol: the 0-encoding of `y`.
pub fn greater_than_messages<R: RngCore + CryptoRng>(
    pk: &PublicKey,
    table: &EncryptionTable,
    y: EncodedValue,
    cfg: &SessionConfig,
    rng: &mut R,
) -> Result<MessageSet> {
    check_table(table, cfg)?;
    padded_set(pk, table, y, cfg.pad_to, rng, &mut OpCount::default())
}

fn check_set(set: &MessageSet, cfg: &SessionConfig) -> Result<()> {
    if set.len() != cfg.pad_to as usize {
        return Err(Error::Protocol(format!(
            "message set has {} entries, expected {}",
            set.len(),
            cfg.pad_to
        )));
    }
    Ok(())
}

/// Decrypts every entry and reports whether any was zero.
pub fn contains_zero(keys: &KeyPair, set: &MessageSet) -> Result<bool> {
    let flags = set
        .iter()
        .map(|c| keys.decrypts_to_zero(c))
        .collect::<Result<Vec<_>>>()?;
    Ok(flags.into_iter().any(|z| z))
}

fn outcome_from(zero_a: bool, zero_b: bool) -> ComparisonOutcome {
    match (zero_a, zero_b) {
        (true, true) => ComparisonOutcome::AliceGreater,
        (false, false) => ComparisonOutcome::BobGreater,
        _ => ComparisonOutcome::Equal,
    }
}

/// Alice's decision for two sets received in either order.
pub fn alice_decide(
    keys: &KeyPair,
    set_a: &MessageSet,
    set_b: &MessageSet,
    cfg: &SessionConfig,
) -> Result<ComparisonOutcome> {
    check_set(set_a, cfg)?;
    check_set(set_b, cfg)?;
    Ok(outcome_from(
        contains_zero(keys, set_a)?,
        contains_zero(keys, set_b)?,
    ))
}

/// Alice's decision when the sets are known to be in canonical order. A zero
/// in the `y` set alone cannot happen for honest inputs (`x > y` implies
/// `x > y − 1`) and is reported as a protocol error.
pub fn alice_decide_ordered(
    keys: &KeyPair,
    predecessor: &MessageSet,
    value: &MessageSet,
    cfg: &SessionConfig,
) -> Result<ComparisonOutcome> {
    check_set(predecessor, cfg)?;
    check_set(value, cfg)?;
    let zp = contains_zero(keys, predecessor)?;
    let zv = contains_zero(keys, value)?;
    if zv && !zp {
        return Err(Error::Protocol("zero found only in the y set".into()));
    }
    Ok(outcome_from(zp, zv))
}

/// Time and work spent by one party over a session.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SessionStats {
    pub table_build: Duration,
    pub message_gen: Duration,
    pub decrypt_decide: Duration,
    pub multiplications: u64,
    pub comparisons: u64,
}

impl SessionStats {
    pub fn merge(&mut self, other: &SessionStats) {
        self.table_build += other.table_build;
        self.message_gen += other.message_gen;
        self.decrypt_decide += other.decrypt_decide;
        self.multiplications += other.multiplications;
        self.comparisons += other.comparisons;
    }
}

fn timed<T>(slot: &mut Duration, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    *slot += start.elapsed();
    out
}

/// Receives the next message, turning a peer ABORT into an error.
pub fn recv<C: Channel>(ch: &mut C) -> Result<WireMessage> {
    match ch.receive()? {
        WireMessage::Abort { reason } => Err(Error::Aborted(reason)),
        m => Ok(m),
    }
}

fn unexpected(expected: &str, got: &WireMessage) -> Error {
    Error::Protocol(format!("expected {expected}, received {}", got.kind()))
}

/// Runs a session body; on a local failure the peer is told to abort.
pub fn guarded<C: Channel, T>(ch: &mut C, f: impl FnOnce(&mut C) -> Result<T>) -> Result<T> {
    let out = f(ch);
    if let Err(e) = &out {
        if !matches!(e, Error::Aborted(_) | Error::Closed) {
            let _ = ch.send(&WireMessage::abort(e.kind()));
        }
    }
    out
}

fn hello_mismatch(cfg: &SessionConfig, h: &Hello) -> Option<&'static str> {
    if h.protocol_version != PROTOCOL_VERSION {
        Some("version-mismatch")
    } else if h.width != cfg.width {
        Some("width-mismatch")
    } else if h.pad_to != cfg.pad_to {
        Some("pad-mismatch")
    } else {
        None
    }
}

fn hello_for(cfg: &SessionConfig, pk: &PublicKey, records: Option<u64>) -> Hello {
    Hello {
        width: cfg.width,
        pad_to: cfg.pad_to,
        n: to_hex(pk.n()),
        g: to_hex(pk.g()),
        protocol_version: PROTOCOL_VERSION,
        records,
    }
}

fn key_from_hello(h: &Hello) -> Result<PublicKey> {
    let pk = PublicKey::from_modulus(from_hex(&h.n)?, from_hex(&h.g)?)?;
    if pk.bits() < MIN_KEY_BITS {
        return Err(Error::Protocol("peer key is too small".into()));
    }
    Ok(pk)
}

/// Opens a session as the party that speaks first. Returns the peer's HELLO.
pub fn handshake_initiator<C: Channel>(
    ch: &mut C,
    cfg: &SessionConfig,
    own: &PublicKey,
    records: Option<u64>,
) -> Result<Hello> {
    cfg.validate()?;
    ch.send(&WireMessage::Hello(hello_for(cfg, own, records)))?;
    match recv(ch)? {
        WireMessage::Hello(h) => {
            if let Some(reason) = hello_mismatch(cfg, &h) {
                let _ = ch.send(&WireMessage::abort(reason));
                return Err(Error::Aborted(reason.into()));
            }
            Ok(h)
        }
        other => Err(unexpected("HELLO", &other)),
    }
}

/// Accepts a session opened by the peer. Replies with `own` key if given,
/// otherwise echoes the peer's. Returns the peer's HELLO and public key.
pub fn handshake_responder<C: Channel>(
    ch: &mut C,
    cfg: &SessionConfig,
    own: Option<&PublicKey>,
    records: Option<u64>,
) -> Result<(Hello, PublicKey)> {
    cfg.validate()?;
    let hello = match recv(ch)? {
        WireMessage::Hello(h) => h,
        other => return Err(unexpected("HELLO", &other)),
    };
    if let Some(reason) = hello_mismatch(cfg, &hello) {
        let _ = ch.send(&WireMessage::abort(reason));
        return Err(Error::Aborted(reason.into()));
    }
    let peer_pk = match key_from_hello(&hello) {
        Ok(pk) => pk,
        Err(e) => {
            let _ = ch.send(&WireMessage::abort("bad-key"));
            return Err(e);
        }
    };
    let reply = hello_for(cfg, own.unwrap_or(&peer_pk), records);
    ch.send(&WireMessage::Hello(reply))?;
    Ok((hello, peer_pk))
}

/// One equality comparison from Alice's side, after the handshake. Sends
/// the table, decides on Bob's products, and tells Bob the boolean verdict.
pub fn alice_compare<C: Channel>(
    ch: &mut C,
    keys: &KeyPair,
    table: &EncryptionTable,
    cfg: &SessionConfig,
    stats: &mut SessionStats,
) -> Result<ComparisonOutcome> {
    check_table(table, cfg)?;
    ch.send(&WireMessage::Table(table.to_json()))?;
    let (set_a, set_b) = match recv(ch)? {
        WireMessage::Products { set_a, set_b } => (
            MessageSet::from_hex(keys.public(), &set_a)?,
            MessageSet::from_hex(keys.public(), &set_b)?,
        ),
        other => return Err(unexpected("PRODUCTS", &other)),
    };
    let outcome = timed(&mut stats.decrypt_decide, || {
        alice_decide(keys, &set_a, &set_b, cfg)
    })?;
    ch.send(&WireMessage::Result {
        equal: outcome.is_equal(),
    })?;
    stats.comparisons += 1;
    Ok(outcome)
}

/// One equality comparison from Bob's side, after the handshake.
pub fn bob_compare<C: Channel, R: RngCore + CryptoRng>(
    ch: &mut C,
    pk: &PublicKey,
    y: EncodedValue,
    cfg: &SessionConfig,
    rng: &mut R,
    stats: &mut SessionStats,
) -> Result<bool> {
    let table = match recv(ch)? {
        WireMessage::Table(cols) => EncryptionTable::from_json(pk, &cols, cfg.width)?,
        other => return Err(unexpected("TABLE", &other)),
    };
    let msgs = timed(&mut stats.message_gen, || {
        bob_messages(pk, &table, y, cfg, rng)
    })?;
    stats.multiplications += msgs.multiplications;
    let (mut first, mut second) = (msgs.predecessor, msgs.value);
    if cfg.randomize_order && rng.gen::<bool>() {
        std::mem::swap(&mut first, &mut second);
    }
    ch.send(&WireMessage::Products {
        set_a: first.to_hex(),
        set_b: second.to_hex(),
    })?;
    stats.comparisons += 1;
    match recv(ch)? {
        WireMessage::Result { equal } => Ok(equal),
        other => Err(unexpected("RESULT", &other)),
    }
}

/// Alice's whole equality session: handshake, table, decision.
pub fn run_equality_alice<C: Channel, R: RngCore + CryptoRng>(
    ch: &mut C,
    keys: &KeyPair,
    x: u64,
    cfg: &SessionConfig,
    rng: &mut R,
    stats: &mut SessionStats,
) -> Result<ComparisonOutcome> {
    guarded(ch, |ch| {
        let x = cfg.input(x)?;
        handshake_initiator(ch, cfg, keys.public(), None)?;
        let table = timed(&mut stats.table_build, || build_table(keys, x, rng))?;
        alice_compare(ch, keys, &table, cfg, stats)
    })
}

/// Bob's whole equality session. Bob learns only the boolean.
pub fn run_equality_bob<C: Channel, R: RngCore + CryptoRng>(
    ch: &mut C,
    y: u64,
    cfg: &SessionConfig,
    rng: &mut R,
    stats: &mut SessionStats,
) -> Result<bool> {
    guarded(ch, |ch| {
        let y = cfg.input(y)?;
        let (_, pk) = handshake_responder(ch, cfg, None, None)?;
        bob_compare(ch, &pk, y, cfg, rng, stats)
    })
}

/// Result of a local two-party equality run.
#[derive(Debug, Clone, Copy)]
pub struct EqualityRun {
    pub outcome: ComparisonOutcome,
    pub bob_equal: bool,
    pub alice_stats: SessionStats,
    pub bob_stats: SessionStats,
}

impl EqualityRun {
    pub fn equal(&self) -> bool {
        self.outcome.is_equal()
    }
}

/// Runs both parties over an in-process channel, Bob on a helper thread.
pub fn run_equality(keys: &KeyPair, x: u64, y: u64, cfg: &SessionConfig) -> Result<EqualityRun> {
    let (mut a, mut b) = mem_pair(DEFAULT_TIMEOUT);
    let bob_cfg = *cfg;
    thread::scope(|s| {
        let bob = s.spawn(move || {
            let mut stats = SessionStats::default();
            let r = run_equality_bob(&mut b, y, &bob_cfg, &mut rand::thread_rng(), &mut stats);
            r.map(|eq| (eq, stats))
        });
        let mut alice_stats = SessionStats::default();
        let alice = run_equality_alice(
            &mut a,
            keys,
            x,
            cfg,
            &mut rand::thread_rng(),
            &mut alice_stats,
        );
        drop(a);
        let bob = bob.join().expect("bob thread panicked");
        let outcome = alice?;
        let (bob_equal, bob_stats) = bob?;
        Ok(EqualityRun {
            outcome,
            bob_equal,
            alice_stats,
            bob_stats,
        })
    })
}

/// Greater-than from the table holder's side: learns whether `x > y`.
pub fn greater_than_holder<C: Channel, R: RngCore + CryptoRng>(
    ch: &mut C,
    keys: &KeyPair,
    x: EncodedValue,
    cfg: &SessionConfig,
    rng: &mut R,
) -> Result<bool> {
    let table = build_table(keys, x, rng)?;
    ch.send(&WireMessage::Table(table.to_json()))?;
    match recv(ch)? {
        WireMessage::Products { set_a, set_b } => {
            if !set_b.is_empty() {
                return Err(Error::Protocol(
                    "greater-than reply must hold a single set".into(),
                ));
            }
            let set = MessageSet::from_hex(keys.public(), &set_a)?;
            check_set(&set, cfg)?;
            contains_zero(keys, &set)
        }
        other => Err(unexpected("PRODUCTS", &other)),
    }
}

/// Greater-than from the encoder's side. Learns nothing.
pub fn greater_than_encoder<C: Channel, R: RngCore + CryptoRng>(
    ch: &mut C,
    peer: &PublicKey,
    y: EncodedValue,
    cfg: &SessionConfig,
    rng: &mut R,
) -> Result<()> {
    let table = match recv(ch)? {
        WireMessage::Table(cols) => EncryptionTable::from_json(peer, &cols, cfg.width)?,
        other => return Err(unexpected("TABLE", &other)),
    };
    let set = greater_than_messages(peer, &table, y, cfg, rng)?;
    ch.send(&WireMessage::Products {
        set_a: set.to_hex(),
        set_b: Vec::new(),
    })
}

/// Local greater-than run: does `x > y`? `x ≥ 1`, `y ≥ 0`.
pub fn greater_than(keys: &KeyPair, x: u64, y: u64, cfg: &SessionConfig) -> Result<bool> {
    cfg.validate()?;
    let x = cfg.input(x)?;
    let y = EncodedValue::new(y, cfg.width)?;
    let (mut a, mut b) = mem_pair(DEFAULT_TIMEOUT);
    let bob_cfg = *cfg;
    thread::scope(|s| {
        let bob = s.spawn(move || {
            guarded(&mut b, |b| {
                let (_, pk) = handshake_responder(b, &bob_cfg, None, None)?;
                greater_than_encoder(b, &pk, y, &bob_cfg, &mut rand::thread_rng())
            })
        });
        let out = guarded(&mut a, |a| {
            handshake_initiator(a, cfg, keys.public(), None)?;
            greater_than_holder(a, keys, x, cfg, &mut rand::thread_rng())
        });
        drop(a);
        bob.join().expect("bob thread panicked")?;
        out
    })
}

/// Alice's side of the four-round equality: two greater-than runs with the
/// roles swapped, then an exchange of the two "not greater" verdicts.
pub fn equality_four_round_alice<C: Channel, R: RngCore + CryptoRng>(
    ch: &mut C,
    keys: &KeyPair,
    x: u64,
    cfg: &SessionConfig,
    rng: &mut R,
) -> Result<bool> {
    guarded(ch, |ch| {
        let x = cfg.input(x)?;
        let peer_hello = handshake_initiator(ch, cfg, keys.public(), None)?;
        let bob_pk = key_from_hello(&peer_hello)?;
        let x_gt_y = greater_than_holder(ch, keys, x, cfg, rng)?;
        greater_than_encoder(ch, &bob_pk, x, cfg, rng)?;
        // Bob reports whether y > x was ruled out on his side
        let bob_not_greater = match recv(ch)? {
            WireMessage::Result { equal } => equal,
            other => return Err(unexpected("RESULT", &other)),
        };
        let equal = !x_gt_y && bob_not_greater;
        ch.send(&WireMessage::Result { equal })?;
        Ok(equal)
    })
}

pub fn equality_four_round_bob<C: Channel, R: RngCore + CryptoRng>(
    ch: &mut C,
    keys: &KeyPair,
    y: u64,
    cfg: &SessionConfig,
    rng: &mut R,
) -> Result<bool> {
    guarded(ch, |ch| {
        let y = cfg.input(y)?;
        let (_, alice_pk) = handshake_responder(ch, cfg, Some(keys.public()), None)?;
        greater_than_encoder(ch, &alice_pk, y, cfg, rng)?;
        let y_gt_x = greater_than_holder(ch, keys, y, cfg, rng)?;
        ch.send(&WireMessage::Result { equal: !y_gt_x })?;
        match recv(ch)? {
            WireMessage::Result { equal } => Ok(equal),
            other => Err(unexpected("RESULT", &other)),
        }
    })
}

/// Local four-round equality run; each party uses its own key.
pub fn equality_four_round(
    alice_keys: &KeyPair,
    bob_keys: &KeyPair,
    x: u64,
    y: u64,
    cfg: &SessionConfig,
) -> Result<bool> {
    let (mut a, mut b) = mem_pair(DEFAULT_TIMEOUT);
    let bob_cfg = *cfg;
    thread::scope(|s| {
        let bob = s.spawn(move || {
            equality_four_round_bob(&mut b, bob_keys, y, &bob_cfg, &mut rand::thread_rng())
        });
        let alice = equality_four_round_alice(&mut a, alice_keys, x, cfg, &mut rand::thread_rng());
        drop(a);
        let bob = bob.join().expect("bob thread panicked");
        let equal = alice?;
        if bob? != equal {
            return Err(Error::Protocol("parties disagree on the verdict".into()));
        }
        Ok(equal)
    })
}
