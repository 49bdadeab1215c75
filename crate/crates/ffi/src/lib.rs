//! C interface to the scheduler simulator.
//!
//! Scenarios and run reports are opaque handles created and freed through
//! this API. Every fallible call returns an [`AoischedStatus`]; on failure
//! [`aoisched_last_error`] describes what went wrong on the calling thread.
//! Absent floating-point values are reported as NaN.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use aoisched::metrics::RunReport;
use aoisched::model::{Scenario, UeClass, UeId};
use aoisched::scenario_file::{parse_scenario, parse_scenario_str, ScenarioFileError};
use aoisched::sim::{self, Policy, RunConfig, SimError};
use aoisched::{output, solver, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AoischedStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// The scenario text is not well-formed.
    ParseError = 3,
    /// The scenario is well-formed but violates a parameter rule.
    InvalidScenario = 4,
    /// The scenario's load leaves no room for the requested computation.
    Infeasible = 5,
    SolverError = 6,
    SimulationError = 7,
    /// An index or id does not exist.
    OutOfRange = 8,
    IoError = 9,
    /// A panic was caught at the boundary.
    Internal = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AoischedPolicy {
    Hierarchical = 0,
    VirtualWeights = 1,
    Randomized = 2,
    CMu = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AoischedClass {
    Aoi = 0,
    Latency = 1,
    Throughput = 2,
}

/// Opaque scenario handle.
pub struct AoischedScenario(Scenario);

/// Opaque run report handle.
pub struct AoischedReport(RunReport);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoischedFeasibility {
    pub load: f64,
    pub zeta: f64,
    pub feasible: bool,
    /// NaN unless the scenario is latency-constrained.
    pub theta_sum: f64,
    /// -1 when not applicable, otherwise 0 or 1.
    pub randomized_feasible: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoischedRunOptions {
    pub policy: AoischedPolicy,
    pub horizon: u64,
    pub seed: u64,
    pub warmup: u64,
    /// Slots between virtual-weight updates.
    pub vw_period: u64,
    /// Virtual-weight step size.
    pub vw_step: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoischedUeMetrics {
    pub ue_id: u32,
    pub class_: AoischedClass,
    pub arrivals: u64,
    pub deliveries: u64,
    pub attempts: u64,
    pub avg_aoi: f64,
    pub avg_latency: f64,
    pub throughput: f64,
    pub t_bar: f64,
    pub delta_sq: f64,
    pub attempts_share: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoischedCost {
    pub cost_objective: f64,
    pub f1: f64,
    pub f2: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoischedLowerBound {
    pub lb_f1: f64,
    pub lb_f2: f64,
    pub lb: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

type Failure = (AoischedStatus, String);

fn fail<T>(status: AoischedStatus, message: impl Into<String>) -> Result<T, Failure> {
    Err((status, message.into()))
}

fn status_of(e: &Error) -> AoischedStatus {
    match e {
        Error::ScenarioFile(ScenarioFileError::Io { .. }) | Error::Io(_) => AoischedStatus::IoError,
        Error::ScenarioFile(ScenarioFileError::Syntax(_)) => AoischedStatus::ParseError,
        Error::ScenarioFile(_) | Error::Model(_) => AoischedStatus::InvalidScenario,
        Error::Sim(SimError::Infeasible { .. }) | Error::Solver(solver::SolverError::Infeasible(_)) => {
            AoischedStatus::Infeasible
        }
        Error::Solver(_) => AoischedStatus::SolverError,
        Error::Sim(_) | Error::Policy(_) => AoischedStatus::SimulationError,
        Error::Csv(_) => AoischedStatus::IoError,
    }
}

fn lift<T>(r: Result<T, impl Into<Error>>) -> Result<T, Failure> {
    r.map_err(|e| {
        let e = e.into();
        (status_of(&e), e.to_string())
    })
}

/// Runs `body` with panics and errors mapped to a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> AoischedStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            AoischedStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_error(&message);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_error(&format!("internal error: {msg}"));
            AoischedStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(AoischedStatus::NullPointer, format!("{what} is null"));
    }
    CStr::from_ptr(p).to_str().or_else(|_| fail(AoischedStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| (AoischedStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| (AoischedStatus::NullPointer, format!("{what} is null")))
}

fn opt(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next API call on the same thread.
#[no_mangle]
pub extern "C" fn aoisched_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn aoisched_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a scenario from TOML text.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aoisched_scenario_from_str(text: *const c_char, out: *mut *mut AoischedScenario) -> AoischedStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let scenario = lift(parse_scenario_str(str_arg(text, "text")?))?;
        *out = Box::into_raw(Box::new(AoischedScenario(scenario)));
        Ok(())
    })
}

/// Reads and parses a scenario file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aoisched_scenario_from_file(path: *const c_char, out: *mut *mut AoischedScenario) -> AoischedStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let scenario = lift(parse_scenario(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(AoischedScenario(scenario)));
        Ok(())
    })
}

/// Frees a scenario. Null is ignored.
///
/// # Safety
/// `scenario` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn aoisched_scenario_free(scenario: *mut AoischedScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Number of users in the scenario, 0 for null.
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aoisched_scenario_ue_count(scenario: *const AoischedScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.0.ues().len())
}

/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aoisched_scenario_validate(
    scenario: *const AoischedScenario,
    out: *mut AoischedFeasibility,
) -> AoischedStatus {
    guard(|| {
        let s = &ref_arg(scenario, "scenario")?.0;
        let r = s.validate();
        *out_arg(out, "out")? = AoischedFeasibility {
            load: r.load,
            zeta: r.zeta,
            feasible: r.feasible,
            theta_sum: opt(r.theta_sum),
            randomized_feasible: r.rd_feasible.map_or(-1, i32::from),
        };
        Ok(())
    })
}

/// Target spacing and counter threshold for AoI user `ue_id`.
///
/// # Safety
/// `scenario` must be a live handle; `t_star` and `threshold` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aoisched_tstar(
    scenario: *const AoischedScenario,
    ue_id: u32,
    t_star: *mut f64,
    threshold: *mut u64,
) -> AoischedStatus {
    guard(|| {
        let s = &ref_arg(scenario, "scenario")?.0;
        let t_out = out_arg(t_star, "t_star")?;
        let thr_out = out_arg(threshold, "threshold")?;
        let ue = match s.ue(UeId(ue_id)) {
            Some(u) if u.class() == UeClass::AoiSensitive => u,
            _ => return fail(AoischedStatus::OutOfRange, format!("no AoI user with id {ue_id}")),
        };
        let sol = lift(solver::compute_t_star(s))?;
        let t = sol.get(UeId(ue_id)).expect("solution covers every AoI user");
        *t_out = t;
        *thr_out = solver::hier_threshold(t, ue.q());
        Ok(())
    })
}

/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aoisched_lower_bound(
    scenario: *const AoischedScenario,
    horizon: u64,
    seed: u64,
    out: *mut AoischedLowerBound,
) -> AoischedStatus {
    guard(|| {
        let s = &ref_arg(scenario, "scenario")?.0;
        let out = out_arg(out, "out")?;
        let lb = lift(solver::lower_bound(s, horizon, seed))?;
        *out = AoischedLowerBound { lb_f1: lb.lb_f1, lb_f2: lb.lb_f2, lb: lb.lb };
        Ok(())
    })
}

/// Defaults: hierarchical policy, 10^6 slots, seed 0, no warm-up,
/// virtual-weight period 10000 and step 0.1.
#[no_mangle]
pub extern "C" fn aoisched_run_options_default() -> AoischedRunOptions {
    AoischedRunOptions {
        policy: AoischedPolicy::Hierarchical,
        horizon: 1_000_000,
        seed: 0,
        warmup: 0,
        vw_period: sim::DEFAULT_VW_PERIOD,
        vw_step: sim::DEFAULT_VW_STEP,
    }
}

/// Simulates one run. `options` may be null for the defaults.
///
/// # Safety
/// `scenario` must be a live handle, `options` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn aoisched_run(
    scenario: *const AoischedScenario,
    options: *const AoischedRunOptions,
    out: *mut *mut AoischedReport,
) -> AoischedStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let s = &ref_arg(scenario, "scenario")?.0;
        let o = options.as_ref().copied().unwrap_or_else(|| aoisched_run_options_default());
        let policy = match o.policy {
            AoischedPolicy::Hierarchical => Policy::Hierarchical,
            AoischedPolicy::VirtualWeights => Policy::VirtualWeights { period: o.vw_period, step: o.vw_step },
            AoischedPolicy::Randomized => Policy::Randomized,
            AoischedPolicy::CMu => Policy::CMu,
        };
        let config = RunConfig { scenario: s.clone(), policy, horizon: o.horizon, seed: o.seed, warmup: o.warmup };
        let report = lift(sim::run(&config))?;
        *out = Box::into_raw(Box::new(AoischedReport(report)));
        Ok(())
    })
}

/// Frees a report. Null is ignored.
///
/// # Safety
/// `report` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn aoisched_report_free(report: *mut AoischedReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Number of users in the report, 0 for null.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aoisched_report_ue_count(report: *const AoischedReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.per_ue.len())
}

/// Metrics of the `index`-th user, in ascending id order.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aoisched_report_ue(
    report: *const AoischedReport,
    index: usize,
    out: *mut AoischedUeMetrics,
) -> AoischedStatus {
    guard(|| {
        let r = &ref_arg(report, "report")?.0;
        let out = out_arg(out, "out")?;
        let Some(u) = r.per_ue.get(index) else {
            return fail(AoischedStatus::OutOfRange, format!("user index {index} >= {}", r.per_ue.len()));
        };
        *out = AoischedUeMetrics {
            ue_id: u.id.0,
            class_: match u.class {
                UeClass::AoiSensitive => AoischedClass::Aoi,
                UeClass::LatencySensitive => AoischedClass::Latency,
                UeClass::ThroughputSensitive => AoischedClass::Throughput,
            },
            arrivals: u.arrivals,
            deliveries: u.deliveries,
            attempts: u.attempts,
            avg_aoi: opt(u.avg_aoi),
            avg_latency: opt(u.avg_latency),
            throughput: u.throughput,
            t_bar: opt(u.t_bar),
            delta_sq: opt(u.delta_sq),
            attempts_share: u.attempts_share,
        };
        Ok(())
    })
}

/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aoisched_report_cost(report: *const AoischedReport, out: *mut AoischedCost) -> AoischedStatus {
    guard(|| {
        let c = ref_arg(report, "report")?.0.cost;
        *out_arg(out, "out")? = AoischedCost { cost_objective: c.cost_objective, f1: c.f1, f2: c.f2 };
        Ok(())
    })
}

/// The report as CSV text; release it with [`aoisched_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aoisched_report_to_csv(report: *const AoischedReport, out: *mut *mut c_char) -> AoischedStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let r = &ref_arg(report, "report")?.0;
        let text = lift(output::csv_string(&output::run_rows("r0", r, None)))?;
        *out = CString::new(text).expect("csv has no NUL bytes").into_raw();
        Ok(())
    })
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn aoisched_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> String {
        unsafe { CStr::from_ptr(aoisched_last_error()) }.to_str().unwrap().to_string()
    }

    #[test]
    fn guard_turns_panics_into_internal_status() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, AoischedStatus::Internal);
        assert!(last_error().contains("boom"));
    }

    #[test]
    fn guard_clears_message_on_success() {
        assert_eq!(guard(|| fail(AoischedStatus::OutOfRange, "index 9")), AoischedStatus::OutOfRange);
        assert_eq!(last_error(), "index 9");
        assert_eq!(guard(|| Ok(())), AoischedStatus::Ok);
        assert_eq!(last_error(), "");
    }

    #[test]
    fn errors_map_to_distinct_statuses() {
        let syntax = parse_scenario_str("variant = ").unwrap_err();
        assert_eq!(status_of(&syntax.into()), AoischedStatus::ParseError);
        let infeasible: Error = SimError::Infeasible { load: 1.2 }.into();
        assert_eq!(status_of(&infeasible), AoischedStatus::Infeasible);
        let solver: Error = solver::SolverError::NoConvergence(200).into();
        assert_eq!(status_of(&solver), AoischedStatus::SolverError);
    }

    #[test]
    fn interior_nul_does_not_lose_the_message() {
        set_error("a\0b");
        assert_eq!(last_error(), "a b");
    }
}
