//! C interface to the predfuzz fuzzer.
//!
//! Contracts and campaign results are opaque handles owned by the caller
//! and released with the matching `*_free` function. Every fallible call
//! returns a [`PfStatus`]; on failure [`pf_last_error`] describes the
//! problem for the calling thread. Strings returned through out-parameters
//! are allocated here and must be released with [`pf_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use predfuzz::cli::stats::events_to_string;
use predfuzz::cli::witness::{replay, Witness};
use predfuzz::cli::CliError;
use predfuzz::fuzzcore::{Campaign, CampaignConfig, CampaignResult, Configuration, DEFAULT_ATTACK_SLOT};
use predfuzz::metrics::{self, CmpOp, Signedness};
use predfuzz::minivm::{parse_contract, Contract};
use predfuzz::oracles::SwcKind;
use predfuzz::predictor::{self, DataPoint};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    DeployError = 4,
    InvalidArgument = 5,
    NotReproduced = 6,
    VersionMismatch = 7,
    InvalidWitness = 8,
    Panic = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: PfStatus, msg: impl Into<String>) -> PfStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> PfStatus) -> PfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == PfStatus::Ok {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            s
        }
        Err(_) => fail(PfStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, PfStatus> {
    if p.is_null() {
        return Err(fail(PfStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(PfStatus::InvalidUtf8, "string argument is not UTF-8"))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("no interior NUL").into_raw()
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn pf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn pf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// A parsed contract together with its source text.
pub struct PfContract {
    source: String,
    contract: Contract,
}

/// Parses contract source text into a new handle.
///
/// # Safety
/// `source` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_contract_parse(source: *const c_char, out: *mut *mut PfContract) -> PfStatus {
    guard(|| {
        if out.is_null() {
            return fail(PfStatus::NullPointer, "null out pointer");
        }
        let src = match read_str(source) {
            Ok(s) => s,
            Err(e) => return e,
        };
        match parse_contract(src) {
            Ok(contract) => {
                *out = Box::into_raw(Box::new(PfContract {
                    source: src.to_owned(),
                    contract,
                }));
                PfStatus::Ok
            }
            Err(e) => fail(PfStatus::ParseError, e.to_string()),
        }
    })
}

/// # Safety
/// `c` must be null or a handle from [`pf_contract_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pf_contract_free(c: *mut PfContract) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Number of functions in the contract, or 0 for a null handle.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pf_contract_function_count(c: *const PfContract) -> usize {
    c.as_ref().map_or(0, |c| c.contract.functions.len())
}

/// Campaign settings. `configuration` is 0..=3 for A..D.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PfConfig {
    pub configuration: u32,
    pub seed: u64,
    pub max_execs: u64,
    pub max_seq_len: u32,
    pub aggressive_prob: f64,
    pub attack_slot: u64,
    pub literal_harvest: bool,
    pub secant_iters: u32,
    pub logical_clock: bool,
}

/// Fills `out` with the default settings.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_config_default(out: *mut PfConfig) -> PfStatus {
    guard(|| {
        let Some(out) = out.as_mut() else {
            return fail(PfStatus::NullPointer, "null out pointer");
        };
        let d = CampaignConfig::default();
        *out = PfConfig {
            configuration: 1,
            seed: d.seed,
            max_execs: d.max_execs.unwrap_or(0),
            max_seq_len: d.max_seq_len as u32,
            aggressive_prob: d.aggressive_prob,
            attack_slot: DEFAULT_ATTACK_SLOT,
            literal_harvest: d.literal_harvest,
            secant_iters: d.secant_iters,
            logical_clock: d.logical_clock,
        };
        PfStatus::Ok
    })
}

fn to_config(c: &PfConfig) -> Result<CampaignConfig, PfStatus> {
    let configuration = match c.configuration {
        0 => Configuration::A,
        1 => Configuration::B,
        2 => Configuration::C,
        3 => Configuration::D,
        n => {
            return Err(fail(
                PfStatus::InvalidArgument,
                format!("configuration {n} out of range"),
            ))
        }
    };
    if !(0.0..=1.0).contains(&c.aggressive_prob) {
        return Err(fail(PfStatus::InvalidArgument, "aggressive_prob must lie in [0, 1]"));
    }
    if c.max_execs == 0 {
        return Err(fail(PfStatus::InvalidArgument, "max_execs must be positive"));
    }
    Ok(CampaignConfig {
        max_seq_len: c.max_seq_len as usize,
        aggressive_prob: c.aggressive_prob,
        attack_slot: c.attack_slot,
        literal_harvest: c.literal_harvest,
        secant_iters: c.secant_iters,
        logical_clock: c.logical_clock,
        ..CampaignConfig::new(configuration, c.seed, c.max_execs)
    })
}

/// The outcome of one campaign.
pub struct PfCampaignResult {
    source: String,
    result: CampaignResult,
}

/// Runs a campaign to completion.
///
/// # Safety
/// `contract` must be a live handle, `config` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_campaign_run(
    contract: *const PfContract,
    config: *const PfConfig,
    out: *mut *mut PfCampaignResult,
) -> PfStatus {
    guard(|| {
        let (Some(c), Some(cfg)) = (contract.as_ref(), config.as_ref()) else {
            return fail(PfStatus::NullPointer, "null contract or config");
        };
        if out.is_null() {
            return fail(PfStatus::NullPointer, "null out pointer");
        }
        let config = match to_config(cfg) {
            Ok(c) => c,
            Err(e) => return e,
        };
        match Campaign::new(c.contract.clone(), config) {
            Ok(campaign) => {
                *out = Box::into_raw(Box::new(PfCampaignResult {
                    source: c.source.clone(),
                    result: campaign.run(),
                }));
                PfStatus::Ok
            }
            Err(e) => fail(PfStatus::DeployError, e.to_string()),
        }
    })
}

/// # Safety
/// `r` must be null or a handle from [`pf_campaign_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pf_result_free(r: *mut PfCampaignResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pf_result_executions(r: *const PfCampaignResult) -> u64 {
    r.as_ref().map_or(0, |r| r.result.executions)
}

/// Number of distinct path ids in the corpus.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pf_result_paths(r: *const PfCampaignResult) -> usize {
    r.as_ref().map_or(0, |r| r.result.paths())
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pf_result_bug_count(r: *const PfCampaignResult) -> usize {
    r.as_ref().map_or(0, |r| r.result.bugs.len())
}

/// First-step prediction successes and attempts.
///
/// # Safety
/// `r` must be a live handle; both out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_result_one_shot(
    r: *const PfCampaignResult,
    successes: *mut u64,
    attempts: *mut u64,
) -> PfStatus {
    guard(|| {
        let (Some(r), false, false) = (r.as_ref(), successes.is_null(), attempts.is_null()) else {
            return fail(PfStatus::NullPointer, "null argument");
        };
        let (s, a) = r.result.one_shot();
        *successes = s;
        *attempts = a;
        PfStatus::Ok
    })
}

/// One reported bug. `swc` is 110 or 124.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PfBug {
    pub swc: u32,
    pub line: u32,
    pub col: u32,
    pub witness_len: u32,
    pub exec_index: u64,
}

/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_result_bug(r: *const PfCampaignResult, index: usize, out: *mut PfBug) -> PfStatus {
    guard(|| {
        let (Some(r), Some(out)) = (r.as_ref(), out.as_mut()) else {
            return fail(PfStatus::NullPointer, "null argument");
        };
        let Some(b) = r.result.bugs.get(index) else {
            return fail(PfStatus::InvalidArgument, format!("bug index {index} out of range"));
        };
        *out = PfBug {
            swc: match b.kind {
                SwcKind::Swc110 => 110,
                SwcKind::Swc124 => 124,
            },
            line: b.loc.line,
            col: b.loc.col,
            witness_len: b.witness.len() as u32,
            exec_index: b.exec_index,
        };
        PfStatus::Ok
    })
}

/// The statistics stream as JSON lines.
///
/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_result_stats_jsonl(r: *const PfCampaignResult, out: *mut *mut c_char) -> PfStatus {
    guard(|| {
        let Some(r) = r.as_ref() else {
            return fail(PfStatus::NullPointer, "null result");
        };
        if out.is_null() {
            return fail(PfStatus::NullPointer, "null out pointer");
        }
        *out = into_c_string(events_to_string(&r.result.events));
        PfStatus::Ok
    })
}

/// A self-contained witness file for bug `index`, as JSON.
///
/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_result_witness_json(
    r: *const PfCampaignResult,
    index: usize,
    out: *mut *mut c_char,
) -> PfStatus {
    guard(|| {
        let Some(r) = r.as_ref() else {
            return fail(PfStatus::NullPointer, "null result");
        };
        if out.is_null() {
            return fail(PfStatus::NullPointer, "null out pointer");
        }
        let Some(bug) = r.result.bugs.get(index) else {
            return fail(PfStatus::InvalidArgument, format!("bug index {index} out of range"));
        };
        *out = into_c_string(Witness::new(&r.source, &r.result.config, bug).to_json());
        PfStatus::Ok
    })
}

/// Replays a witness. Returns `Ok` when the bug reproduces and
/// `NotReproduced` when the sequence runs but raises no matching finding.
///
/// # Safety
/// `witness_json` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pf_replay_witness(witness_json: *const c_char) -> PfStatus {
    guard(|| {
        let text = match read_str(witness_json) {
            Ok(s) => s,
            Err(e) => return e,
        };
        let w = match Witness::from_json(text) {
            Ok(w) => w,
            Err(e) => return fail(PfStatus::InvalidWitness, e.to_string()),
        };
        match replay(&w) {
            Ok(r) if r.reproduced => PfStatus::Ok,
            Ok(_) => fail(
                PfStatus::NotReproduced,
                format!("{} at {} not reproduced", w.swc, w.loc),
            ),
            Err(e @ CliError::VersionMismatch { .. }) => fail(PfStatus::VersionMismatch, e.to_string()),
            Err(e @ CliError::Parse(_)) => fail(PfStatus::ParseError, e.to_string()),
            Err(e @ CliError::Deploy(_)) => fail(PfStatus::DeployError, e.to_string()),
            Err(e) => fail(PfStatus::InvalidWitness, e.to_string()),
        }
    })
}

/// Branch-flip costs of `l OP r`. `op` is 0..=5 for `==`, `!=`, `<`, `<=`,
/// `>`, `>=`.
///
/// # Safety
/// Both out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_branch_costs(
    op: u32,
    is_unsigned: bool,
    l: i64,
    r: i64,
    to_false: *mut u64,
    to_true: *mut u64,
) -> PfStatus {
    guard(|| {
        if to_false.is_null() || to_true.is_null() {
            return fail(PfStatus::NullPointer, "null out pointer");
        }
        let Some(&op) = CmpOp::ALL.get(op as usize) else {
            return fail(PfStatus::InvalidArgument, format!("comparison code {op} out of range"));
        };
        let s = if is_unsigned {
            Signedness::Unsigned
        } else {
            Signedness::Signed
        };
        (*to_false, *to_true) = metrics::branch_costs(op, l, r, s);
        PfStatus::Ok
    })
}

/// Ring distance between a store target and the attack slot.
#[no_mangle]
pub extern "C" fn pf_store_cost(target: u64, attack: u64) -> u64 {
    metrics::store_cost(target, attack)
}

/// Secant root through two (input, cost) points. Returns false when no
/// prediction exists (flat line, or the root is one of the inputs).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_secant_root(i0: i64, c0: u64, i1: i64, c1: u64, out: *mut i64) -> bool {
    let p0 = DataPoint { input: i0, cost: c0 };
    let p1 = DataPoint { input: i1, cost: c1 };
    match (predictor::secant_root(p0, p1), out.as_mut()) {
        (Some(v), Some(o)) => {
            *o = v;
            true
        }
        _ => false,
    }
}
