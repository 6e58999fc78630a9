//! C ABI over `fmpc`.
//!
//! Every fallible entry point returns an [`FmpcStatus`] and writes its result
//! through an out-pointer. On failure a message is kept per thread and can be
//! fetched with [`fmpc_last_error`]. Objects cross the boundary as opaque
//! handles that the caller releases with the matching `_free` function.
//! Strings returned by the library are released with [`fmpc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fmpc::chebyshev::{cheb_nodes, error_bound, MAX_DEGREE};
use fmpc::cli::{identity_error, random_dense_set};
use fmpc::protocol::NodeId;
use fmpc::sim::{self, MessageLog, Report, Scenario, SimError};
use fmpc::theta::ThetaExpr;
use fmpc::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FmpcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    Config = 4,
    Protocol = 5,
    Algebra = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// A parsed scenario.
pub struct FmpcScenario {
    inner: Scenario,
}

/// The outcome of running a scenario.
pub struct FmpcRun {
    display: Complex64,
    report: Report,
    log: MessageLog,
}

/// A Θ-expression.
pub struct FmpcTheta {
    inner: ThetaExpr,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    let c = CString::new(msg).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: FmpcStatus, msg: impl Into<String>) -> FmpcStatus {
    set_error(msg);
    status
}

fn sim_status(e: &SimError) -> FmpcStatus {
    match e {
        SimError::ConfigInvalid(_) => FmpcStatus::Config,
        _ => FmpcStatus::Protocol,
    }
}

/// Runs `f`, turning panics into [`FmpcStatus::Panic`].
fn guard(f: impl FnOnce() -> FmpcStatus) -> FmpcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(FmpcStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, FmpcStatus> {
    if p.is_null() {
        return Err(fail(FmpcStatus::NullPointer, "string argument is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(FmpcStatus::InvalidUtf8, "string argument is not UTF-8"))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(FmpcStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn fmpc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or null. Free with
/// [`fmpc_string_free`].
#[no_mangle]
pub extern "C" fn fmpc_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map_or(ptr::null_mut(), |c| c.clone().into_raw())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn fmpc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a TOML scenario.
///
/// # Safety
/// `toml` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fmpc_scenario_from_toml(
    toml: *const c_char,
    out: *mut *mut FmpcScenario,
) -> FmpcStatus {
    non_null!(out);
    guard(|| {
        let text = match read_str(toml) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match Scenario::from_toml(text).and_then(|s| s.validate().map(|_| s)) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(FmpcScenario { inner }));
                FmpcStatus::Ok
            }
            Err(e) => fail(sim_status(&e), e.to_string()),
        }
    })
}

/// The shipped two-party worked example.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fmpc_scenario_worked_example(out: *mut *mut FmpcScenario) -> FmpcStatus {
    non_null!(out);
    guard(|| match Scenario::from_toml(sim::WORKED_EXAMPLE) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(FmpcScenario { inner }));
            FmpcStatus::Ok
        }
        Err(e) => fail(sim_status(&e), e.to_string()),
    })
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fmpc_scenario_set_seed(scenario: *mut FmpcScenario, seed: u64) -> FmpcStatus {
    non_null!(scenario);
    (*scenario).inner.seed = seed;
    FmpcStatus::Ok
}

/// Marks a node (`N2`, `B1`, `L3`, ...) as corrupted for the privacy check.
///
/// # Safety
/// `scenario` must be a live handle and `node` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fmpc_scenario_corrupt(
    scenario: *mut FmpcScenario,
    node: *const c_char,
) -> FmpcStatus {
    non_null!(scenario);
    let name = match read_str(node) {
        Ok(n) => n,
        Err(s) => return s,
    };
    match name.parse::<NodeId>() {
        Ok(id) => {
            (*scenario).inner.corrupted.push(id);
            FmpcStatus::Ok
        }
        Err(e) => fail(FmpcStatus::InvalidArgument, e),
    }
}

/// # Safety
/// `scenario` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fmpc_scenario_free(scenario: *mut FmpcScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs a scenario through the harness.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fmpc_run(scenario: *const FmpcScenario, out: *mut *mut FmpcRun) -> FmpcStatus {
    non_null!(scenario, out);
    guard(|| match sim::run(&(*scenario).inner) {
        Ok((t, log, report)) => {
            *out = Box::into_raw(Box::new(FmpcRun { display: t.display, report, log }));
            FmpcStatus::Ok
        }
        Err(e) => fail(sim_status(&e), e.to_string()),
    })
}

/// # Safety
/// `run` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fmpc_run_display(run: *const FmpcRun, re: *mut f64, im: *mut f64) -> FmpcStatus {
    non_null!(run, re, im);
    *re = (*run).display.re;
    *im = (*run).display.im;
    FmpcStatus::Ok
}

/// `Σ x_j a_j + y Π a_j` for the scenario inputs.
///
/// # Safety
/// `run` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fmpc_run_expected(run: *const FmpcRun, out: *mut f64) -> FmpcStatus {
    non_null!(run, out);
    *out = (*run).report.expected;
    FmpcStatus::Ok
}

/// Overall verdict of the run.
///
/// # Safety
/// `run` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fmpc_run_passed(run: *const FmpcRun, out: *mut bool) -> FmpcStatus {
    non_null!(run, out);
    *out = (*run).report.passed();
    FmpcStatus::Ok
}

/// Number of node-to-node messages in the log (always 0 for a healthy run).
///
/// # Safety
/// `run` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fmpc_run_internode_messages(run: *const FmpcRun, out: *mut usize) -> FmpcStatus {
    non_null!(run, out);
    *out = (*run).log.counts().node_to_node;
    FmpcStatus::Ok
}

/// The run report as JSON. Free with [`fmpc_string_free`].
///
/// # Safety
/// `run` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fmpc_run_report_json(run: *const FmpcRun, out: *mut *mut c_char) -> FmpcStatus {
    non_null!(run, out);
    match (*run).report.to_json() {
        Ok(s) => {
            *out = into_c_string(s);
            FmpcStatus::Ok
        }
        Err(e) => fail(sim_status(&e), e.to_string()),
    }
}

/// # Safety
/// `run` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fmpc_run_free(run: *mut FmpcRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Builds `Σ (re[k] + i·im[k]) Θ^grades[k]`.
///
/// # Safety
/// The three arrays must hold `len` readable elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fmpc_theta_new(
    grades: *const u32,
    re: *const f64,
    im: *const f64,
    len: usize,
    out: *mut *mut FmpcTheta,
) -> FmpcStatus {
    non_null!(out);
    if len > 0 {
        non_null!(grades, re, im);
    }
    let terms: Vec<(u32, Complex64)> = if len == 0 {
        Vec::new()
    } else {
        let g = std::slice::from_raw_parts(grades, len);
        let r = std::slice::from_raw_parts(re, len);
        let i = std::slice::from_raw_parts(im, len);
        (0..len).map(|k| (g[k], Complex64::new(r[k], i[k]))).collect()
    };
    if terms.iter().any(|(_, c)| !c.re.is_finite() || !c.im.is_finite()) {
        return fail(FmpcStatus::InvalidArgument, "coefficients must be finite");
    }
    *out = Box::into_raw(Box::new(FmpcTheta { inner: ThetaExpr::from_terms(terms) }));
    FmpcStatus::Ok
}

/// `a ∗ b`.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fmpc_theta_star(
    a: *const FmpcTheta,
    b: *const FmpcTheta,
    out: *mut *mut FmpcTheta,
) -> FmpcStatus {
    non_null!(a, b, out);
    guard(|| match (*a).inner.star_mul(&(*b).inner) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(FmpcTheta { inner }));
            FmpcStatus::Ok
        }
        Err(e) => fail(FmpcStatus::Algebra, e.to_string()),
    })
}

/// `a + b`.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fmpc_theta_add(
    a: *const FmpcTheta,
    b: *const FmpcTheta,
    out: *mut *mut FmpcTheta,
) -> FmpcStatus {
    non_null!(a, b, out);
    guard(|| match (*a).inner.add(&(*b).inner) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(FmpcTheta { inner }));
            FmpcStatus::Ok
        }
        Err(e) => fail(FmpcStatus::Algebra, e.to_string()),
    })
}

/// EvalT of the expression.
///
/// # Safety
/// `t` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fmpc_theta_eval(t: *const FmpcTheta, re: *mut f64, im: *mut f64) -> FmpcStatus {
    non_null!(t, re, im);
    match (*t).inner.eval_t() {
        Ok(z) => {
            *re = z.re;
            *im = z.im;
            FmpcStatus::Ok
        }
        Err(e) => fail(FmpcStatus::Algebra, e.to_string()),
    }
}

/// # Safety
/// `t` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fmpc_theta_free(t: *mut FmpcTheta) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Checks the generalized Parseval identity on `trials` random dense sets of
/// `n` inputs and writes the largest relative disagreement of the two paths.
///
/// # Safety
/// `worst` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fmpc_verify_identity(
    n: usize,
    trials: usize,
    truncation: usize,
    seed: u64,
    worst: *mut f64,
) -> FmpcStatus {
    non_null!(worst);
    if n < 2 || trials == 0 || truncation == 0 {
        return fail(FmpcStatus::InvalidArgument, "need n ≥ 2 and positive trials and truncation");
    }
    guard(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut acc = 0.0f64;
        for _ in 0..trials {
            let sets: Vec<_> = (0..n).map(|_| random_dense_set(&mut rng, truncation)).collect();
            match identity_error(&sets) {
                Ok(e) => acc = acc.max(e),
                Err(e) => return fail(FmpcStatus::Protocol, e.to_string()),
            }
        }
        *worst = acc;
        FmpcStatus::Ok
    })
}

/// Writes the `m + 1` Chebyshev nodes of degree `m` into `out`.
///
/// # Safety
/// `out` must hold `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fmpc_cheb_nodes(m: usize, out: *mut f64, cap: usize) -> FmpcStatus {
    non_null!(out);
    if m > MAX_DEGREE {
        return fail(FmpcStatus::InvalidArgument, format!("degree {m} exceeds {MAX_DEGREE}"));
    }
    if cap < m + 1 {
        return fail(FmpcStatus::BufferTooSmall, format!("need room for {} nodes", m + 1));
    }
    let dst = std::slice::from_raw_parts_mut(out, m + 1);
    dst.copy_from_slice(&cheb_nodes(m));
    FmpcStatus::Ok
}

/// `max_deriv / (2^m (m+1)!)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fmpc_cheb_error_bound(max_deriv: f64, m: usize, out: *mut f64) -> FmpcStatus {
    non_null!(out);
    if !(max_deriv >= 0.0) {
        return fail(FmpcStatus::InvalidArgument, "derivative bound must be non-negative");
    }
    *out = error_bound(max_deriv, m);
    FmpcStatus::Ok
}
