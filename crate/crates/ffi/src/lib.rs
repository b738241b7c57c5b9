//! C ABI for storage-cfa.
//!
//! Scenarios and policies are opaque heap handles created and released
//! through this interface. Every fallible call returns a [`ScfaStatus`];
//! on failure the message is kept per thread and can be copied out with
//! [`scfa_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use storage_cfa::sim::{estimate_objective, improvement, rollout};
use storage_cfa::{Error, PolicyFamily, PolicySpec, Scenario};

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScfaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    Solver = 5,
    Panic = 6,
}

/// Opaque problem instance.
pub struct ScfaScenario {
    inner: Scenario,
}

/// Opaque policy: family plus parameters.
pub struct ScfaPolicy {
    inner: PolicySpec,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> ScfaStatus {
    match err {
        Error::Io { .. } => ScfaStatus::Io,
        Error::Parse { .. } | Error::Json(_) | Error::Csv(_) => ScfaStatus::Parse,
        Error::LpFailure { .. } | Error::InfeasibleDecision { .. } => ScfaStatus::Solver,
        _ => ScfaStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (ScfaStatus, String)>) -> ScfaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ScfaStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ScfaStatus::Panic
        }
    }
}

fn lift(err: Error) -> (ScfaStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (ScfaStatus, String) {
    (ScfaStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (ScfaStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (ScfaStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to fit. Returns the full message
/// length in bytes, excluding the terminator; pass a null `buf` to query it.
///
/// # Safety
/// `buf` must be null or valid for writes of `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn scfa_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// The built-in synthetic scenario (72 hourly periods, 23-period lookahead,
/// noiseless forecasts). Never null.
#[no_mangle]
pub extern "C" fn scfa_scenario_default() -> *mut ScfaScenario {
    Box::into_raw(Box::new(ScfaScenario {
        inner: Scenario::default(),
    }))
}

/// Parses a scenario from JSON text.
///
/// # Safety
/// `json` must be null or a NUL-terminated string; `out` must be null or
/// valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn scfa_scenario_from_json(json: *const c_char, out: *mut *mut ScfaScenario) -> ScfaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(json, "json")?;
        let inner = Scenario::from_json(text).map_err(lift)?;
        *out = Box::into_raw(Box::new(ScfaScenario { inner }));
        Ok(())
    })
}

/// Sets the forecast noise level of a scenario.
///
/// # Safety
/// `scenario` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn scfa_scenario_set_rho(scenario: *mut ScfaScenario, rho_e: f64) -> ScfaStatus {
    guard(|| {
        let sc = scenario.as_mut().ok_or_else(|| null("scenario"))?;
        if !(rho_e >= 0.0 && rho_e.is_finite()) {
            return Err((ScfaStatus::InvalidArgument, format!("rho_e must be nonnegative, got {rho_e}")));
        }
        sc.inner.forecast.rho_e = rho_e;
        Ok(())
    })
}

/// Lookahead length `H`, i.e. the lookup-table dimension.
///
/// # Safety
/// `scenario` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn scfa_scenario_lookahead(scenario: *const ScfaScenario, out: *mut usize) -> ScfaStatus {
    guard(|| {
        let sc = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = sc.inner.params.lookahead_h;
        Ok(())
    })
}

/// Releases a scenario; null is ignored.
///
/// # Safety
/// `scenario` must be null or a live handle, and is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn scfa_scenario_free(scenario: *mut ScfaScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Builds a policy from a family name (`benchmark`, `const`, `lkup`, `exp`)
/// and `len` parameters. `theta` may be null when `len` is zero. The
/// dimension is checked when the policy is evaluated.
///
/// # Safety
/// `family` must be null or NUL-terminated; `theta` must be null or valid
/// for `len` reads; `out` must be null or valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn scfa_policy_new(
    family: *const c_char,
    theta: *const f64,
    len: usize,
    out: *mut *mut ScfaPolicy,
) -> ScfaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let fam: PolicyFamily = read_str(family, "family")?.parse().map_err(lift)?;
        let params = if len == 0 {
            Vec::new()
        } else if theta.is_null() {
            return Err(null("theta"));
        } else {
            std::slice::from_raw_parts(theta, len).to_vec()
        };
        if params.iter().any(|v| !v.is_finite()) {
            return Err((ScfaStatus::InvalidArgument, "theta must be finite".into()));
        }
        *out = Box::into_raw(Box::new(ScfaPolicy {
            inner: PolicySpec { family: fam, theta: params },
        }));
        Ok(())
    })
}

/// Releases a policy; null is ignored.
///
/// # Safety
/// `policy` must be null or a live handle, and is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn scfa_policy_free(policy: *mut ScfaPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Total cost of one rollout over the forecast path identified by `seed`.
///
/// # Safety
/// Handles must be null or live; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn scfa_rollout_cost(
    scenario: *const ScfaScenario,
    policy: *const ScfaPolicy,
    seed: u64,
    out: *mut f64,
) -> ScfaStatus {
    guard(|| {
        let sc = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        let pol = policy.as_ref().ok_or_else(|| null("policy"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = rollout(&pol.inner, &sc.inner, seed).map_err(lift)?.total_cost;
        Ok(())
    })
}

/// Mean cost and standard error over paths `seed_base..seed_base+n_paths`.
/// `stderr_out` may be null.
///
/// # Safety
/// Handles must be null or live; the outputs must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn scfa_estimate_objective(
    scenario: *const ScfaScenario,
    policy: *const ScfaPolicy,
    n_paths: usize,
    seed_base: u64,
    mean_out: *mut f64,
    stderr_out: *mut f64,
) -> ScfaStatus {
    guard(|| {
        let sc = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        let pol = policy.as_ref().ok_or_else(|| null("policy"))?;
        let mean_out = mean_out.as_mut().ok_or_else(|| null("mean_out"))?;
        let est = estimate_objective(&pol.inner, &sc.inner, n_paths, seed_base).map_err(lift)?;
        *mean_out = est.mean;
        if let Some(se) = stderr_out.as_mut() {
            *se = est.stderr;
        }
        Ok(())
    })
}

/// Relative change `(policy - benchmark) / |benchmark|`; negative is better.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn scfa_improvement(policy_mean: f64, benchmark_mean: f64, out: *mut f64) -> ScfaStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = improvement(policy_mean, benchmark_mean).map_err(lift)?;
        Ok(())
    })
}
