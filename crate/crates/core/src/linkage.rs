//! Record linkage over the equality protocol.
//!
//! Both parties MAC their identifiers under a shared key, sort and
//! deduplicate the hashes, and then walk the two lists like the merge step
//! of merge sort. Each step runs one equality comparison; Alice reads the
//! order relation off the outcome and tells Bob which pointer to advance.
//! At most `|A| + |B|` comparisons are needed.

use std::thread;
use std::time::Instant;

use hmac::{Hmac, Mac};
use rand::{CryptoRng, RngCore};
use sha2::Sha256;

use crate::encoding::{build_table, EncodedValue, EncryptionTable};
use crate::error::{Error, Result};
use crate::paillier::KeyPair;
use crate::protocol::{
    alice_compare, bob_compare, guarded, handshake_initiator, handshake_responder, recv,
    ComparisonOutcome, LeakMode, SessionConfig, SessionStats,
};
use crate::transport::{mem_pair, AdvanceAction, Channel, WireMessage, DEFAULT_TIMEOUT};

/// Minimum MAC key length in bytes.
pub const MIN_MAC_KEY_BYTES: usize = 16;

/// Default hash width for linkage.
pub const DEFAULT_LINK_WIDTH: u32 = 64;

/// Probability above which hash collisions are flagged in a [`LinkResult`].
pub const COLLISION_FLAG_THRESHOLD: f64 = 1e-6;

/// HMAC-SHA256 of `field`, reduced into `[1, 2^w − 1]`.
pub fn keyed_hash(key: &[u8], field: &[u8], width: u32) -> Result<EncodedValue> {
    if key.is_empty() {
        return Err(Error::Config("MAC key must not be empty".into()));
    }
    if key.len() < MIN_MAC_KEY_BYTES {
        return Err(Error::Config(format!(
            "MAC key must be at least {MIN_MAC_KEY_BYTES} bytes"
        )));
    }
    let max = EncodedValue::max_value(width);
    let mut mac = Hmac::<Sha256>::new_from_slice(key).expect("HMAC accepts any key length");
    mac.update(field);
    let digest = mac.finalize().into_bytes();
    let head = u64::from_be_bytes(digest[..8].try_into().unwrap());
    let value = (head as u128 % max as u128) as u64 + 1;
    EncodedValue::new(value, width)
}

/// One distinct hash value and the records that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashedId {
    pub value: EncodedValue,
    /// Owner's record identifiers sharing this value.
    pub source_ids: Vec<u64>,
}

/// Sorts `(value, record id)` pairs and groups equal values. Ties are kept
/// in the `source_ids` back-map.
pub fn group_sorted(
    entries: impl IntoIterator<Item = (EncodedValue, u64)>,
) -> Result<Vec<HashedId>> {
    let mut entries: Vec<_> = entries.into_iter().collect();
    if let Some(w) = entries.first().map(|(v, _)| v.width()) {
        if entries.iter().any(|(v, _)| v.width() != w) {
            return Err(Error::Config("mixed widths in one id list".into()));
        }
    }
    entries.sort_by_key(|&(v, id)| (v.value(), id));
    let mut out: Vec<HashedId> = Vec::new();
    for (value, id) in entries {
        if value.value() == 0 {
            return Err(Error::Domain("linkage values must be at least 1".into()));
        }
        match out.last_mut() {
            Some(last) if last.value == value => last.source_ids.push(id),
            _ => out.push(HashedId {
                value,
                source_ids: vec![id],
            }),
        }
    }
    Ok(out)
}

/// Hashes every `(record id, field bytes)` pair and groups the results.
pub fn hash_ids<'a>(
    key: &[u8],
    width: u32,
    fields: impl IntoIterator<Item = (u64, &'a [u8])>,
) -> Result<Vec<HashedId>> {
    let hashed = fields
        .into_iter()
        .map(|(id, field)| keyed_hash(key, field, width).map(|v| (v, id)))
        .collect::<Result<Vec<_>>>()?;
    group_sorted(hashed)
}

fn check_sorted(ids: &[HashedId], width: u32) -> Result<()> {
    for h in ids {
        if h.value.width() != width {
            return Err(Error::Precondition(
                "id width differs from session width".into(),
            ));
        }
        if h.value.value() == 0 || h.source_ids.is_empty() {
            return Err(Error::Precondition(
                "ids must be at least 1 with a source record".into(),
            ));
        }
    }
    if ids
        .windows(2)
        .any(|p| p[0].value.value() >= p[1].value.value())
    {
        return Err(Error::Precondition("ids must be strictly ascending".into()));
    }
    Ok(())
}

/// Probability that at least two of `items` uniformly hashed values collide
/// in `[1, 2^w − 1]`.
pub fn collision_probability(items: u64, width: u32) -> f64 {
    let space = EncodedValue::max_value(width) as f64;
    let pairs = items as f64 * (items.saturating_sub(1)) as f64 / 2.0;
    -(-pairs / space).exp_m1()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinkResult {
    /// `(alice record id, bob record id)`, in merge order.
    pub matches: Vec<(u64, u64)>,
    pub comparisons_used: u64,
    pub collisions_possible: bool,
    /// Distinct ids on each side, `(alice, bob)`.
    pub list_lengths: (u64, u64),
    pub stats: SessionStats,
}

fn crossing_pairs(alice: &[u64], bob: &[u64], out: &mut Vec<(u64, u64)>) {
    for &a in alice {
        for &b in bob {
            out.push((a, b));
        }
    }
}

fn collision_flag(cfg: &SessionConfig, a: u64, b: u64) -> bool {
    cfg.leak_mode == LeakMode::Hashed
        && collision_probability(a + b, cfg.width) > COLLISION_FLAG_THRESHOLD
}

fn action_for(outcome: ComparisonOutcome) -> AdvanceAction {
    match outcome {
        ComparisonOutcome::Equal => AdvanceAction::Matched,
        ComparisonOutcome::AliceGreater => AdvanceAction::AdvanceBob,
        ComparisonOutcome::BobGreater => AdvanceAction::AdvanceAlice,
    }
}

/// Alice's side of a linkage session.
pub fn link_alice<C: Channel, R: RngCore + CryptoRng>(
    ch: &mut C,
    keys: &KeyPair,
    ids: &[HashedId],
    cfg: &SessionConfig,
    rng: &mut R,
) -> Result<LinkResult> {
    guarded(ch, |ch| {
        check_sorted(ids, cfg.width)?;
        let peer = handshake_initiator(ch, cfg, keys.public(), Some(ids.len() as u64))?;
        let bob_len = peer
            .records
            .ok_or_else(|| Error::Protocol("peer did not announce its list length".into()))?;

        let mut result = LinkResult {
            collisions_possible: collision_flag(cfg, ids.len() as u64, bob_len),
            list_lengths: (ids.len() as u64, bob_len),
            ..Default::default()
        };
        let (mut i, mut j) = (0usize, 0u64);
        let mut table: Option<(usize, EncryptionTable)> = None;
        while i < ids.len() && j < bob_len {
            // Alice's value only changes when her pointer moves
            if table.as_ref().map(|(at, _)| *at) != Some(i) {
                let start = Instant::now();
                let t = build_table(keys, ids[i].value, rng)?;
                result.stats.table_build += start.elapsed();
                table = Some((i, t));
            }
            let (_, t) = table.as_ref().unwrap();
            let outcome = alice_compare(ch, keys, t, cfg, &mut result.stats)?;
            result.comparisons_used += 1;
            let action = action_for(outcome);
            match action {
                AdvanceAction::Matched => {
                    ch.send(&WireMessage::Advance {
                        action,
                        ids: Some(ids[i].source_ids.clone()),
                    })?;
                    let bob_ids = match recv(ch)? {
                        WireMessage::Advance {
                            action: AdvanceAction::Matched,
                            ids: Some(b),
                        } if !b.is_empty() => b,
                        other => {
                            return Err(Error::Protocol(format!(
                                "expected matched ids, got {}",
                                other.kind()
                            )))
                        }
                    };
                    crossing_pairs(&ids[i].source_ids, &bob_ids, &mut result.matches);
                    i += 1;
                    j += 1;
                }
                AdvanceAction::AdvanceAlice => {
                    ch.send(&WireMessage::Advance { action, ids: None })?;
                    i += 1;
                }
                AdvanceAction::AdvanceBob => {
                    ch.send(&WireMessage::Advance { action, ids: None })?;
                    j += 1;
                }
            }
        }
        Ok(result)
    })
}

/// Bob's side of a linkage session.
pub fn link_bob<C: Channel, R: RngCore + CryptoRng>(
    ch: &mut C,
    ids: &[HashedId],
    cfg: &SessionConfig,
    rng: &mut R,
) -> Result<LinkResult> {
    guarded(ch, |ch| {
        check_sorted(ids, cfg.width)?;
        let (hello, pk) = handshake_responder(ch, cfg, None, Some(ids.len() as u64))?;
        let alice_len = hello
            .records
            .ok_or_else(|| Error::Protocol("peer did not announce its list length".into()))?;

        let mut result = LinkResult {
            collisions_possible: collision_flag(cfg, alice_len, ids.len() as u64),
            list_lengths: (alice_len, ids.len() as u64),
            ..Default::default()
        };
        let (mut i, mut j) = (0u64, 0usize);
        while i < alice_len && j < ids.len() {
            let equal = bob_compare(ch, &pk, ids[j].value, cfg, rng, &mut result.stats)?;
            result.comparisons_used += 1;
            let (action, alice_ids) = match recv(ch)? {
                WireMessage::Advance { action, ids } => (action, ids),
                other => {
                    return Err(Error::Protocol(format!(
                        "expected ADVANCE, got {}",
                        other.kind()
                    )))
                }
            };
            if equal != (action == AdvanceAction::Matched) {
                return Err(Error::Protocol("ADVANCE contradicts RESULT".into()));
            }
            match action {
                AdvanceAction::Matched => {
                    let alice_ids = alice_ids
                        .filter(|a| !a.is_empty())
                        .ok_or_else(|| Error::Protocol("matched ADVANCE without ids".into()))?;
                    ch.send(&WireMessage::Advance {
                        action,
                        ids: Some(ids[j].source_ids.clone()),
                    })?;
                    crossing_pairs(&alice_ids, &ids[j].source_ids, &mut result.matches);
                    i += 1;
                    j += 1;
                }
                AdvanceAction::AdvanceAlice => i += 1,
                AdvanceAction::AdvanceBob => j += 1,
            }
        }
        Ok(result)
    })
}

/// Runs both sides of a linkage session over an in-process channel and
/// returns Alice's result with Bob's message-generation time folded in.
pub fn sorted_merge_link(
    keys: &KeyPair,
    alice_ids: &[HashedId],
    bob_ids: &[HashedId],
    cfg: &SessionConfig,
) -> Result<LinkResult> {
    let (mut a, mut b) = mem_pair(DEFAULT_TIMEOUT);
    let bob_cfg = *cfg;
    thread::scope(|s| {
        let bob = s.spawn(move || link_bob(&mut b, bob_ids, &bob_cfg, &mut rand::thread_rng()));
        let alice = link_alice(&mut a, keys, alice_ids, cfg, &mut rand::thread_rng());
        drop(a);
        let bob = bob.join().expect("bob thread panicked");
        let mut result = alice?;
        let bob = bob?;
        if bob.matches != result.matches
            || bob.comparisons_used != result.comparisons_used
            || bob.list_lengths != result.list_lengths
        {
            return Err(Error::Protocol("parties disagree on the linkage".into()));
        }
        result.stats.message_gen += bob.stats.message_gen;
        result.stats.multiplications += bob.stats.multiplications;
        Ok(result)
    })
}
