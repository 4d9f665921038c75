//! Run reports and the loopback benchmark.

use std::time::{Duration, Instant};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::datagen::{generate_pair, Field, Record};
use crate::error::{Error, Result};
use crate::linkage::{hash_ids, sorted_merge_link, LinkResult};
use crate::paillier::KeyPair;
use crate::protocol::{LeakMode, SessionConfig, SessionStats};

/// Phase timings in seconds. Phases are measured inclusively per party and
/// may overlap in wall-clock time, so they need not sum to `total`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub table_build: f64,
    pub message_gen: f64,
    pub decrypt_decide: f64,
    pub total: f64,
}

impl PhaseTimings {
    pub fn from_stats(stats: &SessionStats, total: Duration) -> Self {
        PhaseTimings {
            table_build: stats.table_build.as_secs_f64(),
            message_gen: stats.message_gen.as_secs_f64(),
            decrypt_decide: stats.decrypt_decide.as_secs_f64(),
            total: total.as_secs_f64(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    /// Records held by this party (both parties for a benchmark).
    pub records: u64,
    /// Distinct ids across both parties; bounds `comparisons`.
    pub ids: u64,
    pub comparisons: u64,
    pub matches: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub width: u32,
    pub pad_to: u32,
    pub leak_mode: LeakMode,
    pub key_bits: u64,
}

impl From<&SessionConfig> for ConfigEcho {
    fn from(c: &SessionConfig) -> Self {
        ConfigEcho {
            width: c.width,
            pad_to: c.pad_to,
            leak_mode: c.leak_mode,
            key_bits: c.key_bits,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub matches: u64,
    pub comparisons_used: u64,
    pub collisions_possible: bool,
    pub elapsed_per_phase: PhaseTimings,
    pub counts: Counts,
    pub config: ConfigEcho,
}

impl RunReport {
    pub fn new(result: &LinkResult, records: u64, cfg: &SessionConfig, total: Duration) -> Self {
        let matches = result.matches.len() as u64;
        RunReport {
            matches,
            comparisons_used: result.comparisons_used,
            collisions_possible: result.collisions_possible,
            elapsed_per_phase: PhaseTimings::from_stats(&result.stats, total),
            counts: Counts {
                records,
                ids: result.list_lengths.0 + result.list_lengths.1,
                comparisons: result.comparisons_used,
                matches,
            },
            config: cfg.into(),
        }
    }

    /// Checks internal consistency of a report, e.g. one read back from disk.
    pub fn validate(&self) -> Result<()> {
        let t = &self.elapsed_per_phase;
        let times = [t.table_build, t.message_gen, t.decrypt_decide, t.total];
        if times.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config(
                "phase timings must be finite and non-negative".into(),
            ));
        }
        if self.counts.matches != self.matches || self.counts.comparisons != self.comparisons_used {
            return Err(Error::Config("counts disagree with the summary".into()));
        }
        if self.comparisons_used > self.counts.ids {
            return Err(Error::Config("more comparisons than distinct ids".into()));
        }
        Ok(())
    }
}

/// Parameters for [`run_bench`].
#[derive(Debug, Clone, Copy)]
pub struct BenchParams {
    pub records: usize,
    pub overlap: usize,
    pub width: u32,
    pub key_bits: u64,
    pub seed: u64,
}

/// Outcome of a benchmark run, with ground-truth verification.
#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub report: RunReport,
    pub result: LinkResult,
    /// Matched pairs that are not in the plaintext id intersection.
    pub false_pairs: usize,
    /// Plaintext id intersection pairs that were not recovered.
    pub missed_pairs: usize,
}

/// Expected `(alice id, bob id)` pairs: records that share the `id` field.
pub fn ground_truth(a: &[Record], b: &[Record]) -> Vec<(u64, u64)> {
    let ids_b: std::collections::HashSet<u64> = b.iter().map(|r| r.id).collect();
    let mut out: Vec<_> = a
        .iter()
        .filter(|r| ids_b.contains(&r.id))
        .map(|r| (r.id, r.id))
        .collect();
    out.sort_unstable();
    out
}

/// Generates two datasets, SSN-hashes them under a fresh random MAC key and
/// links them over an in-process channel.
pub fn run_bench(p: &BenchParams) -> Result<BenchOutcome> {
    let start = Instant::now();
    let (a, b) = generate_pair(p.records, p.records, p.overlap, p.seed)?;
    let mut cfg = SessionConfig::new(p.width);
    cfg.key_bits = p.key_bits;
    cfg.validate()?;

    let mut mac_key = [0u8; 32];
    rand::rngs::OsRng.fill_bytes(&mut mac_key);
    let hashed = |rs: &[Record]| {
        let fields: Vec<(u64, Vec<u8>)> = rs
            .iter()
            .map(|r| (r.id, r.field(Field::Ssn).into_bytes()))
            .collect();
        hash_ids(
            &mac_key,
            p.width,
            fields.iter().map(|(id, f)| (*id, f.as_slice())),
        )
    };
    let (ha, hb) = (hashed(&a)?, hashed(&b)?);

    let keys = KeyPair::keygen(p.key_bits)?;
    let result = sorted_merge_link(&keys, &ha, &hb, &cfg)?;
    let total = start.elapsed();

    let truth = ground_truth(&a, &b);
    let mut got = result.matches.clone();
    got.sort_unstable();
    let false_pairs = got
        .iter()
        .filter(|m| truth.binary_search(m).is_err())
        .count();
    let missed_pairs = truth
        .iter()
        .filter(|m| got.binary_search(m).is_err())
        .count();

    let report = RunReport::new(&result, (a.len() + b.len()) as u64, &cfg, total);
    Ok(BenchOutcome {
        report,
        result,
        false_pairs,
        missed_pairs,
    })
}
