use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use equilink::datagen::{self, Field, Record};
use equilink::encoding::EncodedValue;
use equilink::linkage::{
    group_sorted, hash_ids, link_alice, link_bob, HashedId, DEFAULT_LINK_WIDTH,
};
use equilink::paillier::{KeyPair, PrivateKeyFile, PublicKey, PublicKeyFile, DEFAULT_KEY_BITS};
use equilink::protocol::{
    bob_compare, guarded, handshake_responder, run_equality_alice, SessionConfig, SessionStats,
};
use equilink::report::{run_bench, BenchParams, RunReport};
use equilink::transport::{dial, listen, Channel, Endpoint, WireMessage};
use equilink::{Error, Result};

const MAC_KEY_ENV: &str = "EQUILINK_MAC_KEY";

#[derive(Parser)]
#[command(
    name = "equilink",
    version,
    about = "Private equality testing and record linkage"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Role {
    Alice,
    Bob,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Paillier key pair; writes FILE (private) and FILE.pub.
    Keygen {
        #[arg(long, default_value_t = DEFAULT_KEY_BITS)]
        bits: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate two synthetic datasets with a known overlap.
    GenData {
        #[arg(long)]
        count_a: usize,
        #[arg(long)]
        count_b: usize,
        #[arg(long)]
        overlap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_a: PathBuf,
        #[arg(long)]
        out_b: PathBuf,
    },
    /// Compare one private integer with a peer. Alice listens, Bob dials.
    Compare {
        #[arg(long, value_enum)]
        role: Role,
        #[arg(long)]
        value: u64,
        #[arg(long, default_value_t = 32)]
        width: u32,
        #[arg(long)]
        pad_to: Option<u32>,
        #[arg(long)]
        endpoint: String,
        /// Alice: private key file. Bob: optional key file to pin Alice's key.
        #[arg(long)]
        key: Option<PathBuf>,
        /// Per-flight timeout in seconds.
        #[arg(long, default_value_t = 30)]
        timeout: u64,
    },
    /// Link a record file with a peer's. Alice listens, Bob dials.
    Link {
        #[arg(long, value_enum)]
        role: Role,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "ssn")]
        field: String,
        /// File holding the shared MAC key as hex (at least 16 bytes).
        #[arg(long)]
        mac_key_file: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_LINK_WIDTH)]
        width: u32,
        #[arg(long)]
        pad_to: Option<u32>,
        #[arg(long)]
        endpoint: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Alice's private key file; a fresh key is generated if omitted.
        #[arg(long)]
        key: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_KEY_BITS)]
        key_bits: u64,
        /// Compare raw integer field values without keyed hashing. Leaks the
        /// order of non-matching values to Alice.
        #[arg(long)]
        unsafe_raw: bool,
        #[arg(long, default_value_t = 30)]
        timeout: u64,
    },
    /// End-to-end linkage of generated data over an in-process channel.
    Bench {
        #[arg(long)]
        records: usize,
        #[arg(long)]
        overlap: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_LINK_WIDTH)]
        width: u32,
        #[arg(long, default_value_t = 512)]
        key_bits: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn pub_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".pub");
    PathBuf::from(s)
}

fn load_private(path: &Path) -> Result<KeyPair> {
    KeyPair::from_file(&read_json::<PrivateKeyFile>(path)?)
}

/// Accepts either key file layout and returns the public half.
fn load_public(path: &Path) -> Result<PublicKey> {
    let v: serde_json::Value = read_json(path)?;
    let f: PublicKeyFile = serde_json::from_value(v)?;
    PublicKey::from_file(&f)
}

fn config(width: u32, pad_to: Option<u32>) -> Result<SessionConfig> {
    let mut cfg = SessionConfig::new(width);
    if let Some(p) = pad_to {
        cfg.pad_to = p;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn connect(role: Role, endpoint: &str, timeout: Duration) -> Result<Box<dyn Channel + Send>> {
    let ep: Endpoint = endpoint.parse()?;
    match role {
        Role::Alice => listen(&ep, timeout),
        Role::Bob => dial(&ep, timeout),
    }
}

fn cmd_keygen(bits: u64, out: &Path) -> Result<()> {
    let kp = KeyPair::keygen(bits)?;
    write_json(out, &kp.to_file())?;
    write_json(&pub_path(out), &kp.public().to_file())?;
    println!("wrote {} and {}", out.display(), pub_path(out).display());
    Ok(())
}

fn write_records(path: &Path, records: &[Record]) -> Result<()> {
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    datagen::write_jsonl(BufWriter::new(f), records)
}

fn cmd_compare(
    role: Role,
    value: u64,
    cfg: SessionConfig,
    endpoint: &str,
    key: Option<&Path>,
    timeout: Duration,
) -> Result<()> {
    let cfg = SessionConfig {
        leak_mode: equilink::protocol::LeakMode::Raw,
        ..cfg
    };
    match role {
        Role::Alice => {
            let key = key
                .ok_or_else(|| Error::Config("alice needs --key with a private key file".into()))?;
            let keys = load_private(key)?;
            let mut ch = connect(role, endpoint, timeout)?;
            let mut stats = SessionStats::default();
            let outcome = run_equality_alice(
                &mut ch,
                &keys,
                value,
                &cfg,
                &mut rand::thread_rng(),
                &mut stats,
            )?;
            println!("{}", outcome.is_equal());
            // without hashing Alice also learns the order of the two values
            println!("outcome: {outcome}");
        }
        Role::Bob => {
            let y = EncodedValue::protocol_input(value, cfg.width)?;
            let pinned = key.map(load_public).transpose()?;
            let mut ch = connect(role, endpoint, timeout)?;
            let equal = guarded(&mut ch, |ch| {
                let (_, pk) = handshake_responder(ch, &cfg, None, None)?;
                if pinned.as_ref().is_some_and(|p| p != &pk) {
                    return Err(Error::Aborted("key-mismatch".into()));
                }
                bob_compare(
                    ch,
                    &pk,
                    y,
                    &cfg,
                    &mut rand::thread_rng(),
                    &mut SessionStats::default(),
                )
            });
            if let Err(Error::Aborted(reason)) = &equal {
                if reason == "key-mismatch" {
                    let _ = ch.send(&WireMessage::abort("key-mismatch"));
                }
            }
            println!("{}", equal?);
        }
    }
    Ok(())
}

fn mac_key(file: Option<&Path>) -> Result<Option<Vec<u8>>> {
    let text = match file {
        Some(p) => fs::read_to_string(p).map_err(|e| io_err(p, e))?,
        None => match std::env::var(MAC_KEY_ENV) {
            Ok(v) => v,
            Err(_) => return Ok(None),
        },
    };
    let key =
        hex::decode(text.trim()).map_err(|e| Error::Config(format!("MAC key is not hex: {e}")))?;
    Ok(Some(key))
}

fn prepare_ids(
    records: &[Record],
    field: Field,
    width: u32,
    key: Option<&[u8]>,
    unsafe_raw: bool,
) -> Result<Vec<HashedId>> {
    if unsafe_raw {
        let raw = records
            .iter()
            .map(|r| {
                let text = r.field(field);
                let v: u64 = text.parse().map_err(|_| {
                    Error::Domain(format!("field value {text:?} is not an integer"))
                })?;
                Ok((EncodedValue::protocol_input(v, width)?, r.id))
            })
            .collect::<Result<Vec<_>>>()?;
        return group_sorted(raw);
    }
    let key = key.ok_or_else(|| {
        Error::Config(format!(
            "linkage requires a MAC key (--mac-key-file or {MAC_KEY_ENV}); --unsafe-raw skips hashing"
        ))
    })?;
    let fields: Vec<(u64, Vec<u8>)> = records
        .iter()
        .map(|r| (r.id, r.field(field).into_bytes()))
        .collect();
    hash_ids(key, width, fields.iter().map(|(id, f)| (*id, f.as_slice())))
}

struct LinkArgs {
    role: Role,
    input: PathBuf,
    field: String,
    mac_key_file: Option<PathBuf>,
    cfg: SessionConfig,
    endpoint: String,
    out: PathBuf,
    report: Option<PathBuf>,
    key: Option<PathBuf>,
    key_bits: u64,
    unsafe_raw: bool,
    timeout: Duration,
}

fn cmd_link(a: LinkArgs) -> Result<()> {
    let start = Instant::now();
    let field: Field = a.field.parse()?;
    let mut cfg = a.cfg;
    if a.unsafe_raw {
        cfg.leak_mode = equilink::protocol::LeakMode::Raw;
    }
    let file = File::open(&a.input).map_err(|e| io_err(&a.input, e))?;
    let records = datagen::read_jsonl(BufReader::new(file))?;
    let key = mac_key(a.mac_key_file.as_deref())?;
    let ids = prepare_ids(&records, field, cfg.width, key.as_deref(), a.unsafe_raw)?;

    let result = match a.role {
        Role::Alice => {
            let keys = match &a.key {
                Some(p) => load_private(p)?,
                None => KeyPair::keygen(a.key_bits)?,
            };
            cfg.key_bits = keys.public().bits();
            let mut ch = connect(a.role, &a.endpoint, a.timeout)?;
            link_alice(&mut ch, &keys, &ids, &cfg, &mut rand::thread_rng())?
        }
        Role::Bob => {
            let mut ch = connect(a.role, &a.endpoint, a.timeout)?;
            link_bob(&mut ch, &ids, &cfg, &mut rand::thread_rng())?
        }
    };

    let f = File::create(&a.out).map_err(|e| io_err(&a.out, e))?;
    let mut w = BufWriter::new(f);
    writeln!(w, "alice_id,bob_id")?;
    for (x, y) in &result.matches {
        writeln!(w, "{x},{y}")?;
    }
    w.flush()?;

    let report = RunReport::new(&result, records.len() as u64, &cfg, start.elapsed());
    if let Some(p) = &a.report {
        write_json(p, &report)?;
    }
    println!(
        "{} matches in {} comparisons; wrote {}",
        result.matches.len(),
        result.comparisons_used,
        a.out.display()
    );
    Ok(())
}

fn cmd_bench(p: BenchParams, report: Option<&Path>) -> Result<()> {
    let out = run_bench(&p)?;
    if out.false_pairs != 0 || out.missed_pairs != 0 {
        return Err(Error::Protocol(format!(
            "linkage disagrees with ground truth: {} false, {} missed",
            out.false_pairs, out.missed_pairs
        )));
    }
    match report {
        Some(path) => write_json(path, &out.report)?,
        None => println!("{}", serde_json::to_string_pretty(&out.report)?),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Keygen { bits, out } => cmd_keygen(bits, &out),
        Command::GenData {
            count_a,
            count_b,
            overlap,
            seed,
            out_a,
            out_b,
        } => {
            let (a, b) = datagen::generate_pair(count_a, count_b, overlap, seed)?;
            write_records(&out_a, &a)?;
            write_records(&out_b, &b)
        }
        Command::Compare {
            role,
            value,
            width,
            pad_to,
            endpoint,
            key,
            timeout,
        } => cmd_compare(
            role,
            value,
            config(width, pad_to)?,
            &endpoint,
            key.as_deref(),
            Duration::from_secs(timeout),
        ),
        Command::Link {
            role,
            input,
            field,
            mac_key_file,
            width,
            pad_to,
            endpoint,
            out,
            report,
            key,
            key_bits,
            unsafe_raw,
            timeout,
        } => cmd_link(LinkArgs {
            role,
            input,
            field,
            mac_key_file,
            cfg: config(width, pad_to)?,
            endpoint,
            out,
            report,
            key,
            key_bits,
            unsafe_raw,
            timeout: Duration::from_secs(timeout),
        }),
        Command::Bench {
            records,
            overlap,
            width,
            key_bits,
            seed,
            report,
        } => cmd_bench(
            BenchParams {
                records,
                overlap: overlap.unwrap_or(records * 3 / 5),
                width,
                key_bits,
                seed,
            },
            report.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!(
                "{}",
                json!({ "error": "usage", "message": e.to_string().trim() })
            );
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
