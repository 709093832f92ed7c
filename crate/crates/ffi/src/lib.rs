//! C ABI for the planning library: opaque handles, integer error codes,
//! and JSON bridges. The header `include/vcst_ffi.h` is generated by
//! cbindgen at build time.
//!
//! Ownership: every `*_new`/`*_generate`/`*_create` output must be released
//! with the matching `*_free`; strings returned through `char**` must be
//! released with `vcst_string_free`.

use std::ffi::{c_char, CStr, CString};
use vcst::coordination::Plan;
use vcst::experiment::{plan_with, Planner};
use vcst::scenarios::{generate, Family, Scenario, ScenarioSpec};
use vcst::simulation_metrics::{compute_metrics, validate};

/// Success.
pub const VCST_OK: i32 = 0;
/// Null pointer or unparsable argument.
pub const VCST_ERR_INVALID_ARG: i32 = 1;
/// Scenario generation failed (e.g. separation infeasible).
pub const VCST_ERR_GENERATION: i32 = 2;
/// Planning failed.
pub const VCST_ERR_PLANNING: i32 = 3;
/// The produced plan failed validation.
pub const VCST_ERR_VALIDATION: i32 = 4;
/// JSON (de)serialization failed.
pub const VCST_ERR_JSON: i32 = 5;

/// Opaque scenario handle.
pub struct VcstScenario(Scenario);

/// Opaque plan handle.
pub struct VcstPlan(Plan);

/// Flat metrics record, mirroring the library's PlanMetrics.
#[repr(C)]
#[derive(Default)]
pub struct VcstMetrics {
    pub total_distance_km: f64,
    pub packages_per_km: f64,
    pub makespan_min: f64,
    pub active_makespan_min: f64,
    pub wait_time_s: f64,
    pub n_waits: u64,
    pub n_relays_used: u64,
}

fn parse_cstr<'a>(s: *const c_char) -> Option<&'a str> {
    if s.is_null() {
        return None;
    }
    unsafe { CStr::from_ptr(s) }.to_str().ok()
}

fn return_string(s: String, out: *mut *mut c_char) -> i32 {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            VCST_OK
        }
        Err(_) => VCST_ERR_JSON,
    }
}

/// Generates a preset scenario. `family` is one of the preset names
/// (e.g. "small_dense"); `capacity` overrides the preset when > 0.
///
/// # Safety
/// `family` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vcst_scenario_generate(
    family: *const c_char,
    seed: u64,
    capacity: u32,
    out: *mut *mut VcstScenario,
) -> i32 {
    if out.is_null() {
        return VCST_ERR_INVALID_ARG;
    }
    let Some(name) = parse_cstr(family) else {
        return VCST_ERR_INVALID_ARG;
    };
    let Some(family) = Family::parse(name) else {
        return VCST_ERR_INVALID_ARG;
    };
    let mut spec = ScenarioSpec::preset(family, seed);
    if capacity > 0 {
        spec.capacity = capacity;
    }
    match generate(&spec) {
        Ok(s) => {
            *out = Box::into_raw(Box::new(VcstScenario(s)));
            VCST_OK
        }
        Err(_) => VCST_ERR_GENERATION,
    }
}

/// Parses a scenario from its JSON form.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vcst_scenario_from_json(
    json: *const c_char,
    out: *mut *mut VcstScenario,
) -> i32 {
    if out.is_null() {
        return VCST_ERR_INVALID_ARG;
    }
    let Some(text) = parse_cstr(json) else {
        return VCST_ERR_INVALID_ARG;
    };
    match serde_json::from_str::<Scenario>(text) {
        Ok(s) => {
            *out = Box::into_raw(Box::new(VcstScenario(s)));
            VCST_OK
        }
        Err(_) => VCST_ERR_JSON,
    }
}

/// Serializes a scenario to JSON. The string must be freed with
/// `vcst_string_free`.
///
/// # Safety
/// `scenario` must be a live handle from this library; `out` non-null.
#[no_mangle]
pub unsafe extern "C" fn vcst_scenario_to_json(
    scenario: *const VcstScenario,
    out: *mut *mut c_char,
) -> i32 {
    if scenario.is_null() || out.is_null() {
        return VCST_ERR_INVALID_ARG;
    }
    match serde_json::to_string(&(*scenario).0) {
        Ok(s) => return_string(s, out),
        Err(_) => VCST_ERR_JSON,
    }
}

/// Plans a scenario with the named planner ("vcst", "hungarian", "cvrp")
/// and validates the result before returning it.
///
/// # Safety
/// `scenario` must be a live handle; `planner` a valid string; `out` non-null.
#[no_mangle]
pub unsafe extern "C" fn vcst_plan_create(
    scenario: *const VcstScenario,
    planner: *const c_char,
    lambda_svc: f64,
    out: *mut *mut VcstPlan,
) -> i32 {
    if scenario.is_null() || out.is_null() {
        return VCST_ERR_INVALID_ARG;
    }
    let Some(name) = parse_cstr(planner) else {
        return VCST_ERR_INVALID_ARG;
    };
    let Some(planner) = Planner::parse(name) else {
        return VCST_ERR_INVALID_ARG;
    };
    let scenario = &(*scenario).0;
    let plan = match plan_with(planner, scenario, lambda_svc) {
        Ok(p) => p,
        Err(_) => return VCST_ERR_PLANNING,
    };
    if !validate(&plan, scenario).is_empty() {
        return VCST_ERR_VALIDATION;
    }
    *out = Box::into_raw(Box::new(VcstPlan(plan)));
    VCST_OK
}

/// Computes the benchmark metrics for a plan.
///
/// # Safety
/// Both handles must be live and belong together; `out` non-null.
#[no_mangle]
pub unsafe extern "C" fn vcst_plan_metrics(
    plan: *const VcstPlan,
    scenario: *const VcstScenario,
    out: *mut VcstMetrics,
) -> i32 {
    if plan.is_null() || scenario.is_null() || out.is_null() {
        return VCST_ERR_INVALID_ARG;
    }
    match compute_metrics(&(*plan).0, &(*scenario).0) {
        Ok(m) => {
            *out = VcstMetrics {
                total_distance_km: m.total_distance,
                packages_per_km: m.packages_per_km,
                makespan_min: m.makespan,
                active_makespan_min: m.active_makespan,
                wait_time_s: m.wait_time,
                n_waits: m.n_waits as u64,
                n_relays_used: m.n_relays_used as u64,
            };
            VCST_OK
        }
        Err(_) => VCST_ERR_VALIDATION,
    }
}

/// Serializes a plan to JSON. The string must be freed with
/// `vcst_string_free`.
///
/// # Safety
/// `plan` must be a live handle; `out` non-null.
#[no_mangle]
pub unsafe extern "C" fn vcst_plan_to_json(plan: *const VcstPlan, out: *mut *mut c_char) -> i32 {
    if plan.is_null() || out.is_null() {
        return VCST_ERR_INVALID_ARG;
    }
    match serde_json::to_string(&(*plan).0) {
        Ok(s) => return_string(s, out),
        Err(_) => VCST_ERR_JSON,
    }
}

/// # Safety
/// `scenario` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn vcst_scenario_free(scenario: *mut VcstScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `plan` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn vcst_plan_free(plan: *mut VcstPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// # Safety
/// `s` must be a string returned by this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn vcst_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;
    use std::ptr;

    #[test]
    fn generate_plan_metrics_round_trip() {
        unsafe {
            let family = CString::new("small_dense").unwrap();
            let mut scenario: *mut VcstScenario = ptr::null_mut();
            assert_eq!(vcst_scenario_generate(family.as_ptr(), 7, 0, &mut scenario), VCST_OK);

            let planner = CString::new("vcst").unwrap();
            let mut plan: *mut VcstPlan = ptr::null_mut();
            assert_eq!(vcst_plan_create(scenario, planner.as_ptr(), 5.0, &mut plan), VCST_OK);

            let mut metrics = VcstMetrics::default();
            assert_eq!(vcst_plan_metrics(plan, scenario, &mut metrics), VCST_OK);
            assert!(metrics.total_distance_km > 0.0);
            assert!(metrics.active_makespan_min <= metrics.makespan_min + 1e-12);

            let mut json: *mut c_char = ptr::null_mut();
            assert_eq!(vcst_scenario_to_json(scenario, &mut json), VCST_OK);
            let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
            vcst_string_free(json);

            let c_text = CString::new(text).unwrap();
            let mut scenario2: *mut VcstScenario = ptr::null_mut();
            assert_eq!(vcst_scenario_from_json(c_text.as_ptr(), &mut scenario2), VCST_OK);

            let mut plan_json: *mut c_char = ptr::null_mut();
            assert_eq!(vcst_plan_to_json(plan, &mut plan_json), VCST_OK);
            assert!(CStr::from_ptr(plan_json).to_bytes().starts_with(b"{"));
            vcst_string_free(plan_json);

            vcst_plan_free(plan);
            vcst_scenario_free(scenario);
            vcst_scenario_free(scenario2);
        }
    }

    #[test]
    fn error_codes_on_bad_input() {
        unsafe {
            let mut scenario: *mut VcstScenario = ptr::null_mut();
            let bogus = CString::new("no_such_family").unwrap();
            assert_eq!(
                vcst_scenario_generate(bogus.as_ptr(), 1, 0, &mut scenario),
                VCST_ERR_INVALID_ARG
            );
            assert_eq!(
                vcst_scenario_generate(ptr::null(), 1, 0, &mut scenario),
                VCST_ERR_INVALID_ARG
            );
            let garbage = CString::new("not json").unwrap();
            assert_eq!(
                vcst_scenario_from_json(garbage.as_ptr(), &mut scenario),
                VCST_ERR_JSON
            );

            let family = CString::new("small_dense").unwrap();
            assert_eq!(vcst_scenario_generate(family.as_ptr(), 3, 0, &mut scenario), VCST_OK);
            let bogus_planner = CString::new("dijkstra").unwrap();
            let mut plan: *mut VcstPlan = ptr::null_mut();
            assert_eq!(
                vcst_plan_create(scenario, bogus_planner.as_ptr(), 5.0, &mut plan),
                VCST_ERR_INVALID_ARG
            );
            vcst_scenario_free(scenario);
        }
    }

    #[test]
    fn header_is_generated_with_exports() {
        let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("include")
            .join("vcst_ffi.h");
        let text = std::fs::read_to_string(header).unwrap();
        for symbol in [
            "vcst_scenario_generate",
            "vcst_plan_create",
            "vcst_plan_metrics",
            "vcst_plan_to_json",
            "vcst_string_free",
            "VcstMetrics",
        ] {
            assert!(text.contains(symbol), "header missing {symbol}");
        }
    }
}
