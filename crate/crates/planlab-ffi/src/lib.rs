#![allow(non_camel_case_types)]

//! C ABI for planlab: opaque handles, integer error codes, and a small
//! surface covering instance loading, scoring, enumeration, and the exact
//! optimizer, so other languages can bind without reimplementing anything.
//!
//! The matching header lives at `include/planlab.h` and is maintained by
//! hand alongside this file.
//!
//! Conventions:
//! - Handles (`plab_graph`, `plab_plan`) are created and freed by this
//!   library; passing null is reported as `PLAB_ERR_ARGUMENT`.
//! - Functions return `plab_status` codes; results land in out-params.
//! - `plab_last_error_message` returns a thread-local description of the
//!   most recent failure, valid until the next failing call on the same
//!   thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, c_int, CStr, CString};
use std::path::Path;
use std::time::Duration;

use planlab::constraints::Constraints;
use planlab::enumerate::{enumerate_plans, EnumerateError, EnumerateOptions};
use planlab::graph::UnitGraph;
use planlab::instances::{load_instance, load_plan, make_grid, save_plan, GridSpec, Instance};
use planlab::optimize::{exact_min_cut_edges, ExactOptions, SolveStatus};
use planlab::plan::Plan;
use planlab::score::validate;

pub const PLAB_OK: c_int = 0;
pub const PLAB_ERR_ARGUMENT: c_int = 1;
pub const PLAB_ERR_DATA: c_int = 2;
pub const PLAB_ERR_BUDGET: c_int = 3;
pub const PLAB_ERR_INCOMPLETE: c_int = 4;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: impl Into<String>) {
    let message = message.into();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(message.replace('\0', " ")).unwrap_or_default();
    });
}

/// Opaque graph handle: the immutable instance plus its reference plans.
pub struct plab_graph {
    instance: Instance,
}

/// Opaque plan handle.
pub struct plab_plan {
    plan: Plan,
}

#[repr(C)]
pub struct plab_score_report {
    /// Cut edges, or -1 when the plan is incomplete.
    pub cut_edges: i64,
    pub max_deviation: c_double,
    pub complete: u8,
    pub valid: u8,
    pub k: u32,
}

/// Pointer to a NUL-terminated static version string.
#[no_mangle]
pub extern "C" fn plab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent error on this thread.
#[no_mangle]
pub extern "C" fn plab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

unsafe fn cstr_arg<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, c_int> {
    if ptr.is_null() {
        set_error(format!("{what} is null"));
        return Err(PLAB_ERR_ARGUMENT);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        PLAB_ERR_ARGUMENT
    })
}

fn graph_ref<'a>(handle: *const plab_graph) -> Result<&'a plab_graph, c_int> {
    if handle.is_null() {
        set_error("graph handle is null");
        return Err(PLAB_ERR_ARGUMENT);
    }
    Ok(unsafe { &*handle })
}

fn plan_ref<'a>(handle: *const plab_plan) -> Result<&'a plab_plan, c_int> {
    if handle.is_null() {
        set_error("plan handle is null");
        return Err(PLAB_ERR_ARGUMENT);
    }
    Ok(unsafe { &*handle })
}

/// Load an instance file. Returns null on failure.
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn plab_graph_load(path: *const c_char) -> *mut plab_graph {
    let Ok(path) = cstr_arg(path, "path") else {
        return std::ptr::null_mut();
    };
    match load_instance(Path::new(path)) {
        Ok(instance) => Box::into_raw(Box::new(plab_graph { instance })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Build a uniform-population rook grid (queen adjacency when `queen` is
/// nonzero). Returns null on failure.
#[no_mangle]
pub extern "C" fn plab_graph_grid(rows: usize, cols: usize, queen: c_int) -> *mut plab_graph {
    let mut spec = GridSpec::uniform(rows, cols);
    if queen != 0 {
        spec = spec.queen();
    }
    match make_grid(&spec) {
        Ok(graph) => Box::into_raw(Box::new(plab_graph {
            instance: Instance {
                graph,
                reference_plans: Default::default(),
            },
        })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// # Safety
/// `handle` must come from a `plab_graph_*` constructor, freed once.
#[no_mangle]
pub unsafe extern "C" fn plab_graph_free(handle: *mut plab_graph) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

///
/// # Safety
/// Handles must be live pointers from this library; out-pointers must be
/// valid for writes (null pointers are reported as argument errors).
#[no_mangle]
pub unsafe extern "C" fn plab_graph_num_units(handle: *const plab_graph, out: *mut usize) -> c_int {
    let g = match graph_ref(handle) {
        Ok(g) => g,
        Err(c) => return c,
    };
    if out.is_null() {
        set_error("out pointer is null");
        return PLAB_ERR_ARGUMENT;
    }
    unsafe { *out = g.instance.graph.num_units() };
    PLAB_OK
}

///
/// # Safety
/// Handles must be live pointers from this library; out-pointers must be
/// valid for writes (null pointers are reported as argument errors).
#[no_mangle]
pub unsafe extern "C" fn plab_graph_num_edges(handle: *const plab_graph, out: *mut usize) -> c_int {
    let g = match graph_ref(handle) {
        Ok(g) => g,
        Err(c) => return c,
    };
    if out.is_null() {
        set_error("out pointer is null");
        return PLAB_ERR_ARGUMENT;
    }
    unsafe { *out = g.instance.graph.num_edges() };
    PLAB_OK
}

///
/// # Safety
/// Handles must be live pointers from this library; out-pointers must be
/// valid for writes (null pointers are reported as argument errors).
#[no_mangle]
pub unsafe extern "C" fn plab_graph_total_population(
    handle: *const plab_graph,
    out: *mut u64,
) -> c_int {
    let g = match graph_ref(handle) {
        Ok(g) => g,
        Err(c) => return c,
    };
    if out.is_null() {
        set_error("out pointer is null");
        return PLAB_ERR_ARGUMENT;
    }
    unsafe { *out = g.instance.graph.total_population() };
    PLAB_OK
}

/// Fetch a reference plan stored in the instance file (e.g. `enacted`).
/// Returns null when the name is unknown.
///
/// # Safety
/// `name` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn plab_graph_reference_plan(
    handle: *const plab_graph,
    name: *const c_char,
) -> *mut plab_plan {
    let Ok(g) = graph_ref(handle) else {
        return std::ptr::null_mut();
    };
    let Ok(name) = cstr_arg(name, "name") else {
        return std::ptr::null_mut();
    };
    match g.instance.reference_plans.get(name) {
        Some(plan) => Box::into_raw(Box::new(plab_plan { plan: plan.clone() })),
        None => {
            set_error(format!("no reference plan named `{name}`"));
            std::ptr::null_mut()
        }
    }
}

/// Load a plan file sized to `graph`.
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn plab_plan_load(
    graph: *const plab_graph,
    path: *const c_char,
) -> *mut plab_plan {
    let Ok(g) = graph_ref(graph) else {
        return std::ptr::null_mut();
    };
    let Ok(path) = cstr_arg(path, "path") else {
        return std::ptr::null_mut();
    };
    match load_plan(Path::new(path), Some(g.instance.graph.num_units())) {
        Ok(plan) => Box::into_raw(Box::new(plab_plan { plan })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Write a plan to a file in the plan CSV format.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `plan` a live handle.
#[no_mangle]
pub unsafe extern "C" fn plab_plan_save(plan: *const plab_plan, path: *const c_char) -> c_int {
    let p = match plan_ref(plan) {
        Ok(p) => p,
        Err(c) => return c,
    };
    let path = match cstr_arg(path, "path") {
        Ok(s) => s,
        Err(c) => return c,
    };
    match save_plan(Path::new(path), &p.plan, &[]) {
        Ok(()) => PLAB_OK,
        Err(e) => {
            set_error(e.to_string());
            PLAB_ERR_DATA
        }
    }
}

/// # Safety
/// `handle` must come from a plan constructor, freed once.
#[no_mangle]
pub unsafe extern "C" fn plab_plan_free(handle: *mut plab_plan) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

fn constraints_from(k: u16, deviation: c_double, require_contiguity: c_int) -> Result<Constraints, c_int> {
    Constraints::new(k, deviation, require_contiguity != 0).map_err(|e| {
        set_error(e.to_string());
        PLAB_ERR_ARGUMENT
    })
}

/// Score `plan` against `graph` under (k, deviation, contiguity).
///
/// # Safety
/// Handles must be live pointers from this library; out-pointers must be
/// valid for writes (null pointers are reported as argument errors).
#[no_mangle]
pub unsafe extern "C" fn plab_validate(
    graph: *const plab_graph,
    plan: *const plab_plan,
    k: u16,
    deviation: c_double,
    require_contiguity: c_int,
    out: *mut plab_score_report,
) -> c_int {
    let g = match graph_ref(graph) {
        Ok(g) => g,
        Err(c) => return c,
    };
    let p = match plan_ref(plan) {
        Ok(p) => p,
        Err(c) => return c,
    };
    if out.is_null() {
        set_error("out pointer is null");
        return PLAB_ERR_ARGUMENT;
    }
    let constraints = match constraints_from(k, deviation, require_contiguity) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let report = validate(&p.plan, &g.instance.graph, &constraints);
    unsafe {
        (*out).cut_edges = report.cut_edges.map_or(-1, |c| c as i64);
        (*out).max_deviation = report.max_deviation.unwrap_or(f64::NAN);
        (*out).complete = report.complete as u8;
        (*out).valid = report.valid as u8;
        (*out).k = p.plan.k() as u32;
    }
    PLAB_OK
}

/// Cut edges of a complete plan. `PLAB_ERR_INCOMPLETE` when the plan has
/// unassigned units.
///
/// # Safety
/// Handles must be live pointers from this library; out-pointers must be
/// valid for writes (null pointers are reported as argument errors).
#[no_mangle]
pub unsafe extern "C" fn plab_cut_edges(
    graph: *const plab_graph,
    plan: *const plab_plan,
    out: *mut u64,
) -> c_int {
    let g = match graph_ref(graph) {
        Ok(g) => g,
        Err(c) => return c,
    };
    let p = match plan_ref(plan) {
        Ok(p) => p,
        Err(c) => return c,
    };
    if out.is_null() {
        set_error("out pointer is null");
        return PLAB_ERR_ARGUMENT;
    }
    match planlab::score::cut_edges(&p.plan, &g.instance.graph) {
        Ok(c) => {
            unsafe { *out = c as u64 };
            PLAB_OK
        }
        Err(e) => {
            set_error(e.to_string());
            PLAB_ERR_INCOMPLETE
        }
    }
}

/// Count all valid plans (k districts, deviation window, contiguous).
/// `PLAB_ERR_BUDGET` when the node budget guard fires; the partial count
/// is still written to `out_count`.
///
/// # Safety
/// Handles must be live pointers from this library; out-pointers must be
/// valid for writes (null pointers are reported as argument errors).
#[no_mangle]
pub unsafe extern "C" fn plab_enumerate_count(
    graph: *const plab_graph,
    k: u16,
    deviation: c_double,
    node_budget: u64,
    out_count: *mut u64,
) -> c_int {
    let g = match graph_ref(graph) {
        Ok(g) => g,
        Err(c) => return c,
    };
    if out_count.is_null() {
        set_error("out pointer is null");
        return PLAB_ERR_ARGUMENT;
    }
    let constraints = match constraints_from(k, deviation, 1) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let options = EnumerateOptions {
        node_budget: if node_budget == 0 {
            planlab::enumerate::DEFAULT_NODE_BUDGET
        } else {
            node_budget
        },
        ..Default::default()
    };
    match enumerate_plans(&g.instance.graph, &constraints, &options) {
        Ok(result) => {
            unsafe { *out_count = result.count };
            PLAB_OK
        }
        Err(EnumerateError::BudgetExceeded { partial, .. }) => {
            unsafe { *out_count = partial.count };
            set_error("combinatorial explosion guard: node budget exceeded");
            PLAB_ERR_BUDGET
        }
        Err(e) => {
            set_error(e.to_string());
            PLAB_ERR_DATA
        }
    }
}

/// Exact minimum cut edges within a time budget. `out_proven` is 1 when
/// the search proved optimality. Returns the best plan through `out_plan`
/// (caller frees) when any feasible plan was found.
///
/// # Safety
/// Handles must be live pointers from this library; out-pointers must be
/// valid for writes (null pointers are reported as argument errors).
#[no_mangle]
pub unsafe extern "C" fn plab_exact_min_cut_edges(
    graph: *const plab_graph,
    k: u16,
    deviation: c_double,
    budget_seconds: u64,
    allow_discontiguous: c_int,
    out_cut: *mut u64,
    out_proven: *mut u8,
    out_plan: *mut *mut plab_plan,
) -> c_int {
    let g = match graph_ref(graph) {
        Ok(g) => g,
        Err(c) => return c,
    };
    if out_cut.is_null() || out_proven.is_null() {
        set_error("out pointer is null");
        return PLAB_ERR_ARGUMENT;
    }
    let constraints = match constraints_from(k, deviation, 1) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let options = ExactOptions {
        time_budget: Duration::from_secs(budget_seconds),
        allow_discontiguous: allow_discontiguous != 0,
        ..Default::default()
    };
    match exact_min_cut_edges(&g.instance.graph, &constraints, &options) {
        Ok(result) => {
            let Some(cut) = result.cut_edges else {
                set_error(format!("no feasible plan found ({})", result.status.name()));
                return PLAB_ERR_BUDGET;
            };
            unsafe {
                *out_cut = cut as u64;
                *out_proven = (result.status == SolveStatus::ProvenOptimal) as u8;
                if !out_plan.is_null() {
                    *out_plan = match result.plan {
                        Some(plan) => Box::into_raw(Box::new(plab_plan { plan })),
                        None => std::ptr::null_mut(),
                    };
                }
            }
            PLAB_OK
        }
        Err(e) => {
            set_error(e.to_string());
            PLAB_ERR_DATA
        }
    }
}

// Keep UnitGraph referenced so the doc link in the header stays honest.
#[allow(dead_code)]
fn _types_used(_: &UnitGraph) {}
