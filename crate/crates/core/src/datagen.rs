//! Seeded synthetic identity records.
//!
//! Records shared by both datasets carry the same `id` and identical field
//! values; every other record, and every SSN, is globally unique, so the
//! plaintext `id` intersection is the ground truth for SSN-keyed linkage.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const FIRST_NAMES: &[&str] = &[
    "Aaliyah", "Abel", "Ada", "Adrian", "Aiko", "Alan", "Alma", "Amir", "Ana", "Andre", "Anika",
    "Arjun", "Beatriz", "Ben", "Bianca", "Boris", "Caleb", "Camila", "Carmen", "Chen", "Chloe",
    "Dara", "David", "Diego", "Elena", "Eli", "Emeka", "Emma", "Esther", "Fatima", "Felix",
    "Fiona", "Gabriel", "Grace", "Hana", "Hugo", "Ibrahim", "Ines", "Isaac", "Ivy", "Jamal",
    "Jana", "Jonah", "Julia", "Kai", "Keiko", "Lars", "Leila", "Liam", "Lina", "Lucia", "Malik",
    "Maria", "Mateo", "Maya", "Mei", "Nadia", "Noah", "Nora", "Omar", "Paula", "Priya", "Quinn",
    "Rafael", "Rosa", "Ruth", "Samir", "Sara", "Sofia", "Tariq", "Tess", "Theo", "Uma", "Victor",
    "Wen", "Yara", "Yusuf", "Zoe",
];

const LAST_NAMES: &[&str] = &[
    "Abara",
    "Almeida",
    "Andersen",
    "Baker",
    "Banerjee",
    "Becker",
    "Brown",
    "Castillo",
    "Chen",
    "Cohen",
    "Costa",
    "Dubois",
    "Edwards",
    "Fischer",
    "Garcia",
    "Gonzalez",
    "Gupta",
    "Haddad",
    "Hansen",
    "Hernandez",
    "Ibrahim",
    "Ito",
    "Jensen",
    "Johnson",
    "Kang",
    "Kaur",
    "Kim",
    "Kowalski",
    "Lee",
    "Lopez",
    "Martin",
    "Mensah",
    "Meyer",
    "Miller",
    "Moreau",
    "Nakamura",
    "Nguyen",
    "Novak",
    "Okafor",
    "Olsen",
    "Patel",
    "Perez",
    "Petrov",
    "Popescu",
    "Rahman",
    "Reyes",
    "Rossi",
    "Santos",
    "Schmidt",
    "Silva",
    "Smith",
    "Suzuki",
    "Tanaka",
    "Taylor",
    "Torres",
    "Wang",
    "Williams",
    "Wilson",
    "Yamamoto",
    "Zhang",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub id: u64,
    pub first_name: String,
    pub last_name: String,
    pub ssn: String,
    pub dob: NaiveDate,
}

/// Identifier fields a linkage run can key on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Id,
    FirstName,
    LastName,
    Ssn,
    Dob,
}

impl std::str::FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "id" => Field::Id,
            "first_name" => Field::FirstName,
            "last_name" => Field::LastName,
            "ssn" => Field::Ssn,
            "dob" => Field::Dob,
            _ => return Err(Error::Config(format!("unknown record field {s:?}"))),
        })
    }
}

impl Record {
    pub fn field(&self, f: Field) -> String {
        match f {
            Field::Id => self.id.to_string(),
            Field::FirstName => self.first_name.clone(),
            Field::LastName => self.last_name.clone(),
            Field::Ssn => self.ssn.clone(),
            Field::Dob => self.dob.to_string(),
        }
    }
}

fn dob_range() -> (NaiveDate, i64) {
    let first = NaiveDate::from_ymd_opt(1920, 1, 1).unwrap();
    let last = NaiveDate::from_ymd_opt(2010, 12, 31).unwrap();
    (first, (last - first).num_days())
}

/// Generates two datasets of `count_a` and `count_b` records sharing exactly
/// `overlap` records. Identical seeds give identical output.
pub fn generate_pair(
    count_a: usize,
    count_b: usize,
    overlap: usize,
    seed: u64,
) -> Result<(Vec<Record>, Vec<Record>)> {
    if overlap > count_a.min(count_b) {
        return Err(Error::Config(format!(
            "overlap {overlap} exceeds the smaller dataset ({})",
            count_a.min(count_b)
        )));
    }
    let total = count_a + count_b - overlap;
    if total > 900_000_000 {
        return Err(Error::Config("too many records for unique SSNs".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (first_day, span) = dob_range();

    let mut seen_ids = HashSet::with_capacity(total);
    let mut seen_ssns = HashSet::with_capacity(total);
    let mut records = Vec::with_capacity(total);
    while records.len() < total {
        let id = rng.gen_range(1_000_000..100_000_000u64);
        let area = rng.gen_range(1..900u32);
        let ssn = format!(
            "{area:03}{:02}{:04}",
            rng.gen_range(1..100u32),
            rng.gen_range(1..10_000u32)
        );
        if !seen_ids.insert(id) || !seen_ssns.insert(ssn.clone()) {
            continue;
        }
        records.push(Record {
            id,
            first_name: FIRST_NAMES.choose(&mut rng).unwrap().to_string(),
            last_name: LAST_NAMES.choose(&mut rng).unwrap().to_string(),
            ssn,
            dob: first_day + chrono::Duration::days(rng.gen_range(0..=span)),
        });
    }

    let (shared, rest) = records.split_at(overlap);
    let (only_a, only_b) = rest.split_at(count_a - overlap);
    let mut a: Vec<Record> = shared.iter().chain(only_a).cloned().collect();
    let mut b: Vec<Record> = shared.iter().chain(only_b).cloned().collect();
    a.shuffle(&mut rng);
    b.shuffle(&mut rng);
    Ok((a, b))
}

/// Writes one JSON object per line.
pub fn write_jsonl<W: Write>(mut w: W, records: &[Record]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line)
            .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(rs: &[Record]) -> HashSet<u64> {
        rs.iter().map(|r| r.id).collect()
    }

    #[test]
    fn overlap_is_exact() {
        for (a, b, o) in [(0, 0, 0), (5, 3, 0), (5, 3, 3), (10, 10, 10), (50, 70, 20)] {
            let (da, db) = generate_pair(a, b, o, 7).unwrap();
            assert_eq!(da.len(), a);
            assert_eq!(db.len(), b);
            assert_eq!(ids(&da).intersection(&ids(&db)).count(), o);
        }
    }

    #[test]
    fn full_overlap_gives_same_records() {
        let (mut a, mut b) = generate_pair(10, 10, 10, 3).unwrap();
        a.sort_by_key(|r| r.id);
        b.sort_by_key(|r| r.id);
        assert_eq!(a, b);
    }

    #[test]
    fn overlap_too_large() {
        assert!(matches!(generate_pair(5, 3, 4, 0), Err(Error::Config(_))));
    }

    #[test]
    fn field_shapes() {
        let (a, b) = generate_pair(300, 300, 100, 11).unwrap();
        let lo = NaiveDate::from_ymd_opt(1920, 1, 1).unwrap();
        let hi = NaiveDate::from_ymd_opt(2010, 12, 31).unwrap();
        for r in a.iter().chain(&b) {
            assert_eq!(r.ssn.len(), 9);
            assert!(r.ssn.bytes().all(|c| c.is_ascii_digit()));
            assert!(r.dob >= lo && r.dob <= hi);
        }
        assert_eq!(ids(&a).len(), 300);
    }

    #[test]
    fn ssns_only_shared_within_overlap() {
        let (a, b) = generate_pair(400, 400, 150, 5).unwrap();
        let sa: HashSet<_> = a.iter().map(|r| r.ssn.clone()).collect();
        let sb: HashSet<_> = b.iter().map(|r| r.ssn.clone()).collect();
        assert_eq!(sa.intersection(&sb).count(), 150);
    }

    #[test]
    fn deterministic_bytes() {
        let render = |seed| {
            let (a, b) = generate_pair(50, 40, 20, seed).unwrap();
            let mut buf = Vec::new();
            write_jsonl(&mut buf, &a).unwrap();
            write_jsonl(&mut buf, &b).unwrap();
            buf
        };
        assert_eq!(render(42), render(42));
        assert_ne!(render(42), render(43));
    }

    #[test]
    fn jsonl_field_names_and_round_trip() {
        let (a, _) = generate_pair(3, 3, 0, 1).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &a).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        let keys: Vec<_> = first.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys.len(), 5);
        for k in ["id", "first_name", "last_name", "ssn", "dob"] {
            assert!(first.get(k).is_some(), "{k}");
        }
        assert!(first["dob"].as_str().unwrap().len() == 10);
        assert_eq!(read_jsonl(&buf[..]).unwrap(), a);
    }
}
