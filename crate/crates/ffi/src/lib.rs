//! C ABI for `equilink`.
//!
//! Every fallible function returns an [`EquilinkStatus`]; on failure the
//! message is available from [`equilink_last_error_message`] on the same
//! thread. Handles are opaque and must be released with their `_free`
//! function. Strings returned through `char **` are owned by the caller and
//! released with [`equilink_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use equilink::encoding::EncodedValue;
use equilink::linkage::{group_sorted, keyed_hash, sorted_merge_link, LinkResult};
use equilink::paillier::{KeyPair, PrivateKeyFile};
use equilink::protocol::{greater_than, run_equality, ComparisonOutcome, SessionConfig};
use equilink::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilinkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Domain = 3,
    Config = 4,
    Protocol = 5,
    Precondition = 6,
    Framing = 7,
    Aborted = 8,
    Timeout = 9,
    Closed = 10,
    Io = 11,
    Json = 12,
    OutOfRange = 13,
    Panic = 14,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilinkOutcome {
    Equal = 0,
    AliceGreater = 1,
    BobGreater = 2,
}

impl From<ComparisonOutcome> for EquilinkOutcome {
    fn from(o: ComparisonOutcome) -> Self {
        match o {
            ComparisonOutcome::Equal => EquilinkOutcome::Equal,
            ComparisonOutcome::AliceGreater => EquilinkOutcome::AliceGreater,
            ComparisonOutcome::BobGreater => EquilinkOutcome::BobGreater,
        }
    }
}

/// A Paillier key pair.
pub struct EquilinkKeyPair(KeyPair);

/// Matches and counters from a local linkage run.
pub struct EquilinkLinkResult(LinkResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> EquilinkStatus {
    match e {
        Error::Domain(_) => EquilinkStatus::Domain,
        Error::Config(_) => EquilinkStatus::Config,
        Error::Protocol(_) => EquilinkStatus::Protocol,
        Error::Precondition(_) => EquilinkStatus::Precondition,
        Error::Framing(_) => EquilinkStatus::Framing,
        Error::Aborted(_) => EquilinkStatus::Aborted,
        Error::Timeout => EquilinkStatus::Timeout,
        Error::Closed => EquilinkStatus::Closed,
        Error::Io(_) => EquilinkStatus::Io,
        Error::Json(_) => EquilinkStatus::Json,
    }
}

struct Failure(EquilinkStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(EquilinkStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EquilinkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EquilinkStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            EquilinkStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn keys_ref<'a>(p: *const EquilinkKeyPair) -> Result<&'a KeyPair, Failure> {
    p.as_ref().map(|k| &k.0).ok_or_else(|| null("key pair"))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(EquilinkStatus::Json, "string contains NUL".into()))
}

/// Message for the last failure on this thread, or null if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn equilink_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn equilink_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Generates a key pair with a `bits`-bit modulus from the OS RNG.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn equilink_keypair_generate(
    bits: u64,
    out: *mut *mut EquilinkKeyPair,
) -> EquilinkStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let kp = KeyPair::keygen(bits)?;
        *out = Box::into_raw(Box::new(EquilinkKeyPair(kp)));
        Ok(())
    })
}

/// Loads a key pair from the JSON private key file format.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn equilink_keypair_from_json(
    json: *const c_char,
    out: *mut *mut EquilinkKeyPair,
) -> EquilinkStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Failure(EquilinkStatus::InvalidUtf8, e.to_string()))?;
        let file: PrivateKeyFile = serde_json::from_str(text).map_err(Error::from)?;
        *out = Box::into_raw(Box::new(EquilinkKeyPair(KeyPair::from_file(&file)?)));
        Ok(())
    })
}

/// Writes the private key file JSON to `*out`.
///
/// # Safety
/// `keys` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn equilink_keypair_private_json(
    keys: *const EquilinkKeyPair,
    out: *mut *mut c_char,
) -> EquilinkStatus {
    guard(|| {
        let kp = keys_ref(keys)?;
        let out = out_ref(out, "out")?;
        *out = into_c_string(serde_json::to_string(&kp.to_file()).map_err(Error::from)?)?;
        Ok(())
    })
}

/// Writes the public key file JSON (`bits`, `n`, `g`) to `*out`.
///
/// # Safety
/// `keys` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn equilink_keypair_public_json(
    keys: *const EquilinkKeyPair,
    out: *mut *mut c_char,
) -> EquilinkStatus {
    guard(|| {
        let kp = keys_ref(keys)?;
        let out = out_ref(out, "out")?;
        *out = into_c_string(serde_json::to_string(&kp.public().to_file()).map_err(Error::from)?)?;
        Ok(())
    })
}

/// Modulus size in bits, or 0 for a null handle.
///
/// # Safety
/// `keys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn equilink_keypair_bits(keys: *const EquilinkKeyPair) -> u64 {
    keys.as_ref().map_or(0, |k| k.0.public().bits())
}

/// # Safety
/// `keys` must be null or a handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn equilink_keypair_free(keys: *mut EquilinkKeyPair) {
    if !keys.is_null() {
        drop(Box::from_raw(keys));
    }
}

/// Runs the two-round equality protocol between two in-process parties
/// holding `x` (Alice, owner of `keys`) and `y`.
///
/// # Safety
/// `keys` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn equilink_equality(
    keys: *const EquilinkKeyPair,
    x: u64,
    y: u64,
    width: u32,
    out: *mut EquilinkOutcome,
) -> EquilinkStatus {
    guard(|| {
        let kp = keys_ref(keys)?;
        let out = out_ref(out, "out")?;
        let run = run_equality(kp, x, y, &SessionConfig::raw(width))?;
        *out = run.outcome.into();
        Ok(())
    })
}

/// Runs the greater-than protocol; `*out` is true iff `x > y`.
///
/// # Safety
/// `keys` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn equilink_greater_than(
    keys: *const EquilinkKeyPair,
    x: u64,
    y: u64,
    width: u32,
    out: *mut bool,
) -> EquilinkStatus {
    guard(|| {
        let kp = keys_ref(keys)?;
        let out = out_ref(out, "out")?;
        *out = greater_than(kp, x, y, &SessionConfig::raw(width))?;
        Ok(())
    })
}

/// HMAC-SHA256 of `field` under `key`, reduced into `[1, 2^width − 1]`.
///
/// # Safety
/// `key` and `field` must point to `key_len` and `field_len` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn equilink_keyed_hash(
    key: *const u8,
    key_len: usize,
    field: *const u8,
    field_len: usize,
    width: u32,
    out: *mut u64,
) -> EquilinkStatus {
    guard(|| {
        let key = slice(key, key_len, "key")?;
        let field = slice(field, field_len, "field")?;
        let out = out_ref(out, "out")?;
        *out = keyed_hash(key, field, width)?.value();
        Ok(())
    })
}

fn grouped(
    values: &[u64],
    ids: &[u64],
    width: u32,
) -> Result<Vec<equilink::linkage::HashedId>, Failure> {
    let entries = values
        .iter()
        .zip(ids)
        .map(|(&v, &id)| EncodedValue::protocol_input(v, width).map(|e| (e, id)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(group_sorted(entries)?)
}

/// Links two lists of keyed-hash values between two in-process parties.
/// `*_values[i]` is the hash of record `*_ids[i]`; the lists need not be
/// sorted or distinct.
///
/// # Safety
/// Each value/id array must hold the stated number of elements and `out`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn equilink_link_local(
    keys: *const EquilinkKeyPair,
    alice_values: *const u64,
    alice_ids: *const u64,
    alice_len: usize,
    bob_values: *const u64,
    bob_ids: *const u64,
    bob_len: usize,
    width: u32,
    out: *mut *mut EquilinkLinkResult,
) -> EquilinkStatus {
    guard(|| {
        let kp = keys_ref(keys)?;
        let out = out_ref(out, "out")?;
        let a = grouped(
            slice(alice_values, alice_len, "alice_values")?,
            slice(alice_ids, alice_len, "alice_ids")?,
            width,
        )?;
        let b = grouped(
            slice(bob_values, bob_len, "bob_values")?,
            slice(bob_ids, bob_len, "bob_ids")?,
            width,
        )?;
        let mut cfg = SessionConfig::new(width);
        cfg.key_bits = kp.public().bits();
        let result = sorted_merge_link(kp, &a, &b, &cfg)?;
        *out = Box::into_raw(Box::new(EquilinkLinkResult(result)));
        Ok(())
    })
}

/// Number of matched `(alice id, bob id)` pairs; 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn equilink_link_result_match_count(
    result: *const EquilinkLinkResult,
) -> usize {
    result.as_ref().map_or(0, |r| r.0.matches.len())
}

/// Reads matched pair `index`.
///
/// # Safety
/// `result` must be a live handle; `alice_id` and `bob_id` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn equilink_link_result_match(
    result: *const EquilinkLinkResult,
    index: usize,
    alice_id: *mut u64,
    bob_id: *mut u64,
) -> EquilinkStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let a = out_ref(alice_id, "alice_id")?;
        let b = out_ref(bob_id, "bob_id")?;
        let &(x, y) = r.0.matches.get(index).ok_or_else(|| {
            Failure(
                EquilinkStatus::OutOfRange,
                format!("match {index} of {}", r.0.matches.len()),
            )
        })?;
        *a = x;
        *b = y;
        Ok(())
    })
}

/// Comparisons used by the merge; 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn equilink_link_result_comparisons(
    result: *const EquilinkLinkResult,
) -> u64 {
    result.as_ref().map_or(0, |r| r.0.comparisons_used)
}

/// Whether the hash width leaves a non-negligible collision probability.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn equilink_link_result_collisions_possible(
    result: *const EquilinkLinkResult,
) -> bool {
    result.as_ref().is_some_and(|r| r.0.collisions_possible)
}

/// # Safety
/// `result` must be null or a handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn equilink_link_result_free(result: *mut EquilinkLinkResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
