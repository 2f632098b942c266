//! C ABI for the wardlog reasoner.
//!
//! Programs are opaque `WlProgram` handles created by [`wl_program_parse`] or
//! [`wl_program_load`] and released with [`wl_program_free`]. Every fallible
//! function returns a [`WlStatus`]; on anything but `WL_STATUS_OK` a message is
//! available from [`wl_last_error`] until the next call on the same thread.
//! Strings handed out by the library must be released with
//! [`wl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use wardlog::analysis::{analyze, AnalysisReport};
use wardlog::chase::{ChaseConfig, ChaseStatus};
use wardlog::egd::EgdConfig;
use wardlog::model::Atom;
use wardlog::reason::{answer, chase_h, materialize, ReasonOptions, Status};
use wardlog::syntax::{load_csv_dir, merge_facts, parse_file, parse_program, validate, Program};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WlStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The program text does not parse or is ill-formed.
    Parse = 3,
    Io = 4,
    /// The program is not warded and safely tainted.
    NotCertified = 5,
    /// The chase reached the step limit.
    StepLimit = 6,
    /// The query text is not a single query.
    InvalidQuery = 7,
    /// A Rust panic was caught at the boundary.
    Internal = 99,
}

/// A parsed program together with its database.
pub struct WlProgram {
    program: Program,
    db: Vec<Atom>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Runs `f` with panics turned into `WL_STATUS_INTERNAL`.
fn guard(f: impl FnOnce() -> Result<(), (WlStatus, String)>) -> WlStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WlStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(e) => {
            let msg = e
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| e.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            WlStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, (WlStatus, String)> {
    if p.is_null() {
        return Err((WlStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|e| (WlStatus::InvalidUtf8, format!("{name}: {e}")))
}

unsafe fn program_arg<'a>(p: *const WlProgram) -> Result<&'a WlProgram, (WlStatus, String)> {
    p.as_ref().ok_or((WlStatus::NullArgument, "program is null".to_string()))
}

fn out_arg<T>(p: *mut T, name: &str) -> Result<(), (WlStatus, String)> {
    if p.is_null() {
        Err((WlStatus::NullArgument, format!("{name} is null")))
    } else {
        Ok(())
    }
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

fn checked(program: Program) -> Result<Box<WlProgram>, (WlStatus, String)> {
    let diags = validate(&program);
    if let Some(d) = diags.first() {
        let msg = match d.rule {
            Some(r) => format!("{r}: {}", d.message),
            None => d.message.clone(),
        };
        return Err((WlStatus::Parse, msg));
    }
    let db = program.facts.clone();
    Ok(Box::new(WlProgram { program, db }))
}

fn limit(max_steps: usize) -> ChaseConfig {
    if max_steps == 0 {
        ChaseConfig::default()
    } else {
        ChaseConfig::with_limit(max_steps)
    }
}

/// Parses program text. On success `*out` owns a new handle.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wl_program_parse(text: *const c_char, out: *mut *mut WlProgram) -> WlStatus {
    guard(|| {
        out_arg(out, "out")?;
        let text = str_arg(text, "text")?;
        let p = parse_program(text).map_err(|e| (WlStatus::Parse, e.to_string()))?;
        *out = Box::into_raw(checked(p)?);
        Ok(())
    })
}

/// Reads and parses a program file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wl_program_load(path: *const c_char, out: *mut *mut WlProgram) -> WlStatus {
    guard(|| {
        out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let p = parse_file(Path::new(path)).map_err(|e| match e {
            wardlog::syntax::SyntaxError::Io { .. } => (WlStatus::Io, e.to_string()),
            _ => (WlStatus::Parse, e.to_string()),
        })?;
        *out = Box::into_raw(checked(p)?);
        Ok(())
    })
}

/// Adds the facts of every `<predicate>.csv` file in `dir` to the database,
/// skipping duplicates.
///
/// # Safety
/// `program` must come from this library; `dir` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wl_program_add_csv_facts(program: *mut WlProgram, dir: *const c_char) -> WlStatus {
    guard(|| {
        let p = program.as_mut().ok_or((WlStatus::NullArgument, "program is null".to_string()))?;
        let dir = str_arg(dir, "dir")?;
        let facts = load_csv_dir(Path::new(dir)).map_err(|e| (WlStatus::Io, e.to_string()))?;
        merge_facts(&mut p.db, facts);
        Ok(())
    })
}

/// Number of facts in the database.
///
/// # Safety
/// `program` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn wl_program_fact_count(program: *const WlProgram) -> usize {
    program.as_ref().map_or(0, |p| p.db.len())
}

/// Releases a program. Null is ignored.
///
/// # Safety
/// `program` must be null or come from this library, and not be used again.
#[no_mangle]
pub unsafe extern "C" fn wl_program_free(program: *mut WlProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// Sets `*certified` to whether the program is warded and safely tainted,
/// and, when `report_json` is not null, `*report_json` to the analysis
/// report as JSON.
///
/// # Safety
/// Pointers must be valid; `report_json` may be null.
#[no_mangle]
pub unsafe extern "C" fn wl_analyze(
    program: *const WlProgram,
    certified: *mut bool,
    report_json: *mut *mut c_char,
) -> WlStatus {
    guard(|| {
        let p = program_arg(program)?;
        out_arg(certified, "certified")?;
        let a = analyze(&p.program);
        *certified = a.is_warded() && a.is_safe();
        if !report_json.is_null() {
            let r = AnalysisReport::new(&p.program, &a);
            let json = serde_json::to_string(&r).map_err(|e| (WlStatus::Internal, e.to_string()))?;
            *report_json = to_c_string(json);
        }
        Ok(())
    })
}

fn require_certified(p: &Program) -> Result<(), (WlStatus, String)> {
    let a = analyze(p);
    if a.is_warded() && a.is_safe() {
        return Ok(());
    }
    let mut why: Vec<String> = a.safety.witnesses().iter().map(|w| w.to_string()).collect();
    why.extend(a.wardedness.violations.iter().map(|v| format!("{} is not warded", v.rule)));
    Err((WlStatus::NotCertified, format!("program is not certified harmless: {}", why.join("; "))))
}

/// Decides satisfiability with the EGD fixpoint over the relaxed chase. A
/// `max_steps` of 0 selects the default limit.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wl_check_satisfiable(
    program: *const WlProgram,
    max_steps: usize,
    satisfiable: *mut bool,
) -> WlStatus {
    guard(|| {
        let p = program_arg(program)?;
        out_arg(satisfiable, "satisfiable")?;
        require_certified(&p.program)?;
        let cfg = limit(max_steps);
        let direct = chase_h(&p.db, &p.program, &cfg, &EgdConfig::default());
        let verdict = match direct.status {
            ChaseStatus::Saturated => true,
            ChaseStatus::Failed(_) => false,
            ChaseStatus::StepLimitExceeded => return Err((WlStatus::StepLimit, "step limit reached".into())),
        };
        *satisfiable = verdict;
        Ok(())
    })
}

/// Answers one Boolean query given as text, e.g. `"? p(a, X)."`. An
/// unsatisfiable program entails every query. A `max_steps` of 0 selects
/// the default limit.
///
/// # Safety
/// Pointers must be valid; `query` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wl_query_bcq(
    program: *const WlProgram,
    query: *const c_char,
    max_steps: usize,
    answer_out: *mut bool,
) -> WlStatus {
    guard(|| {
        let p = program_arg(program)?;
        out_arg(answer_out, "answer")?;
        let text = str_arg(query, "query")?;
        let parsed = parse_program(text).map_err(|e| (WlStatus::InvalidQuery, e.to_string()))?;
        let [q] = parsed.queries.as_slice() else {
            return Err((WlStatus::InvalidQuery, format!("expected one query, found {}", parsed.queries.len())));
        };
        if !q.is_boolean() {
            return Err((WlStatus::InvalidQuery, "query has output variables".into()));
        }
        let opts = ReasonOptions { chase: limit(max_steps), ..Default::default() };
        let m = materialize(&p.db, &p.program, &opts);
        match &m.status {
            Status::NotCertified { .. } => require_certified(&p.program)?,
            Status::StepLimit => return Err((WlStatus::StepLimit, "step limit reached".into())),
            Status::Answered | Status::Unsatisfiable => {}
        }
        *answer_out = answer(&m, q, false).bcq_answer.unwrap_or(false);
        Ok(())
    })
}

/// Answers every query of the program and sets `*results_json` to
/// `{"results": [...]}`, one object per query.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wl_query_all_json(
    program: *const WlProgram,
    max_steps: usize,
    results_json: *mut *mut c_char,
) -> WlStatus {
    guard(|| {
        let p = program_arg(program)?;
        out_arg(results_json, "results_json")?;
        let opts = ReasonOptions { chase: limit(max_steps), ..Default::default() };
        let m = materialize(&p.db, &p.program, &opts);
        match &m.status {
            Status::NotCertified { .. } => require_certified(&p.program)?,
            Status::StepLimit => return Err((WlStatus::StepLimit, "step limit reached".into())),
            Status::Answered | Status::Unsatisfiable => {}
        }
        let results: Vec<serde_json::Value> = p
            .program
            .queries
            .iter()
            .map(|q| {
                let mut v = answer(&m, q, false).to_json();
                v["query"] = serde_json::Value::String(q.to_string());
                v
            })
            .collect();
        *results_json = to_c_string(serde_json::json!({ "results": results }).to_string());
        Ok(())
    })
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn wl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string returned by this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn wl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn wl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
