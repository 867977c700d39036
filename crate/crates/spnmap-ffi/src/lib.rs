//! C ABI for the spnmap toolkit.
//!
//! Conventions:
//! * SPNs travel as opaque `SpnHandle` pointers; free them with [`spn_free`].
//! * Every fallible call returns an [`SpnStatus`]; on failure a
//!   human-readable message is available from [`spn_last_error_message`]
//!   until the next call on the same thread.
//! * Strings returned by the library must be released with
//!   [`spn_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;
use std::time::Duration;

use spnmap::bench::SolverSpec;
use spnmap::{
    evaluate, map_to_max, parse_problem, parse_spn, serialize_spn, max_exact, PartialEvidence,
    SearchConfig, SolveResult, Spn,
};

/// Opaque sum-product network.
pub struct SpnHandle(Spn);

/// Result codes for every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpnStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Input text was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The SPN or problem text failed to parse or validate.
    ParseFailed = 3,
    /// An argument was out of range (variable index, value, solver token).
    InvalidArgument = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let cstring = CString::new(message).unwrap_or_else(|_| CString::new("invalid error").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstring));
}

fn fail(status: SpnStatus, message: impl Into<String>) -> SpnStatus {
    set_error(message.into());
    status
}

/// Message describing the most recent failure on this thread, or null.
/// Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn spn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |message| message.as_ptr())
    })
}

/// # Safety
/// `text` must be a valid NUL-terminated string.
unsafe fn text_arg<'a>(text: *const c_char) -> Result<&'a str, SpnStatus> {
    if text.is_null() {
        return Err(fail(SpnStatus::NullArgument, "text argument is null"));
    }
    CStr::from_ptr(text)
        .to_str()
        .map_err(|e| fail(SpnStatus::InvalidUtf8, e.to_string()))
}

/// Parse an SPN document into a new handle.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spn_parse(text: *const c_char, out: *mut *mut SpnHandle) -> SpnStatus {
    if out.is_null() {
        return fail(SpnStatus::NullArgument, "out argument is null");
    }
    let text = match text_arg(text) {
        Ok(text) => text,
        Err(status) => return status,
    };
    match parse_spn(text) {
        Ok(spn) => {
            *out = Box::into_raw(Box::new(SpnHandle(spn)));
            SpnStatus::Ok
        }
        Err(e) => fail(SpnStatus::ParseFailed, e.to_string()),
    }
}

/// Release a handle. Null is allowed.
///
/// # Safety
/// `handle` must have come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn spn_free(handle: *mut SpnHandle) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn spn_num_vars(handle: *const SpnHandle) -> usize {
    handle.as_ref().map_or(0, |h| h.0.num_vars())
}

/// # Safety
/// `handle` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn spn_num_nodes(handle: *const SpnHandle) -> usize {
    handle.as_ref().map_or(0, |h| h.0.num_nodes())
}

/// # Safety
/// `handle` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn spn_num_arcs(handle: *const SpnHandle) -> usize {
    handle.as_ref().map_or(0, |h| h.0.num_arcs())
}

/// Evaluate the network. `assignment` holds one entry per variable; a value
/// of -1 marginalizes that variable.
///
/// # Safety
/// `assignment` must point to `len` readable entries; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn spn_evaluate(
    handle: *const SpnHandle,
    assignment: *const i32,
    len: usize,
    out: *mut f64,
) -> SpnStatus {
    let Some(handle) = handle.as_ref() else {
        return fail(SpnStatus::NullArgument, "handle is null");
    };
    if assignment.is_null() || out.is_null() {
        return fail(SpnStatus::NullArgument, "assignment/out is null");
    }
    let spn = &handle.0;
    if len != spn.num_vars() {
        return fail(
            SpnStatus::InvalidArgument,
            format!("assignment has {len} entries, SPN has {} variables", spn.num_vars()),
        );
    }
    let values = std::slice::from_raw_parts(assignment, len);
    let mut x = PartialEvidence::full(spn.vars());
    for (var, &value) in values.iter().enumerate() {
        if value < 0 {
            continue;
        }
        let value = value as usize;
        if value >= spn.vars().card(var) {
            return fail(
                SpnStatus::InvalidArgument,
                format!("value {value} out of range for variable {var}"),
            );
        }
        x = x.fix(var, value);
    }
    match evaluate(spn, &x) {
        Ok(score) => {
            *out = score;
            SpnStatus::Ok
        }
        Err(e) => fail(SpnStatus::InvalidArgument, e.to_string()),
    }
}

/// Serialize the network back to its text format. The returned string must
/// be released with `spn_string_free`.
///
/// # Safety
/// `handle` must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn spn_serialize(handle: *const SpnHandle, out: *mut *mut c_char) -> SpnStatus {
    let Some(handle) = handle.as_ref() else {
        return fail(SpnStatus::NullArgument, "handle is null");
    };
    if out.is_null() {
        return fail(SpnStatus::NullArgument, "out argument is null");
    }
    let text = serialize_spn(&handle.0);
    match CString::new(text) {
        Ok(cstring) => {
            *out = cstring.into_raw();
            SpnStatus::Ok
        }
        Err(e) => fail(SpnStatus::InvalidArgument, e.to_string()),
    }
}

/// Release a string returned by this library. Null is allowed.
///
/// # Safety
/// `text` must have come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn spn_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

/// Reduce a MAP problem (`q:<list|-> e:<var>=<val>,...|- h:<list|->`) to a
/// MAX problem over the query variables; returns a new handle.
///
/// # Safety
/// `handle` must be live; `problem` NUL-terminated; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn spn_reduce(
    handle: *const SpnHandle,
    problem: *const c_char,
    out: *mut *mut SpnHandle,
) -> SpnStatus {
    let Some(handle) = handle.as_ref() else {
        return fail(SpnStatus::NullArgument, "handle is null");
    };
    if out.is_null() {
        return fail(SpnStatus::NullArgument, "out argument is null");
    }
    let problem = match text_arg(problem) {
        Ok(problem) => problem,
        Err(status) => return status,
    };
    let problem = match parse_problem(problem, handle.0.vars()) {
        Ok(problem) => problem,
        Err(e) => return fail(SpnStatus::ParseFailed, e.to_string()),
    };
    let reduced = map_to_max(&handle.0, &problem);
    *out = Box::into_raw(Box::new(SpnHandle(reduced)));
    SpnStatus::Ok
}

fn run_solver(spn: &Spn, token: &str, budget_ms: f64) -> Result<SolveResult, String> {
    let spec = SolverSpec::parse(token).map_err(|e| e.to_string())?;
    if let SolverSpec::Exact(config) = spec {
        let config = SearchConfig {
            time_budget: (budget_ms >= 0.0).then(|| Duration::from_secs_f64(budget_ms / 1e3)),
            ..config
        };
        return Ok(max_exact(spn, &config));
    }
    Ok(match spec {
        SolverSpec::BestTree => spnmap::best_tree(spn),
        SolverSpec::NormalizedGreedy => spnmap::normalized_greedy(spn),
        SolverSpec::BeamSearch { k, seed } => {
            spnmap::beam_search(spn, k, seed, spnmap::BeamInit::Random)
        }
        SolverSpec::ArgmaxProduct => spnmap::argmax_product(spn),
        SolverSpec::KBestTrees { k } => spnmap::k_best_trees(spn, k),
        SolverSpec::Exact(_) => unreachable!("handled above"),
    })
}

/// Run a MAX solver. `solver` takes the same tokens as the CLI (`bt`, `ng`,
/// `amap`, `bs<K>`, `kbt<K>`, `mc`, `fc`, `fc+o`, `fc+o+s`). A negative
/// `budget_ms` means no time budget (exact solvers only). On success
/// `out_assignment` receives one value per variable and `out_score` the
/// score of that assignment.
///
/// # Safety
/// `handle` must be live; `solver` NUL-terminated; `out_assignment` must
/// point to `assignment_len` writable entries; `out_score` must be valid.
#[no_mangle]
pub unsafe extern "C" fn spn_max(
    handle: *const SpnHandle,
    solver: *const c_char,
    budget_ms: f64,
    out_assignment: *mut i32,
    assignment_len: usize,
    out_score: *mut f64,
) -> SpnStatus {
    let Some(handle) = handle.as_ref() else {
        return fail(SpnStatus::NullArgument, "handle is null");
    };
    if out_assignment.is_null() || out_score.is_null() {
        return fail(SpnStatus::NullArgument, "output argument is null");
    }
    let token = match text_arg(solver) {
        Ok(token) => token,
        Err(status) => return status,
    };
    let spn = &handle.0;
    if assignment_len != spn.num_vars() {
        return fail(
            SpnStatus::InvalidArgument,
            format!("assignment buffer has {assignment_len} entries, SPN has {} variables", spn.num_vars()),
        );
    }
    let result = match run_solver(spn, token, budget_ms) {
        Ok(result) => result,
        Err(message) => return fail(SpnStatus::InvalidArgument, message),
    };
    let out = std::slice::from_raw_parts_mut(out_assignment, assignment_len);
    for (slot, &value) in out.iter_mut().zip(&result.assignment) {
        *slot = value as i32;
    }
    *out_score = result.score;
    SpnStatus::Ok
}
