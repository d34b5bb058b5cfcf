//! C ABI for the `esfl` latency model, optimizer and simulator.
//!
//! Objects cross the boundary as opaque handles that the caller releases with
//! the matching `*_free` function. Every fallible call returns an
//! [`EsflStatus`]; on failure a description is available from
//! [`esfl_last_error_message`] on the same thread until the next failing call.
//! Panics never unwind into C: they are caught and reported as
//! `ESFL_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use esfl::cli::config::RunConfig;
use esfl::comm::{shannon_rate, LinkRates};
use esfl::optimizer::{alternate, OptimizerConfig, OptimizerOutcome};
use esfl::timing::{LatencyModel, UserProfile};
use esfl::workload::{builtin_architecture, load_architecture, ModelArchitecture};
use esfl::EsflError;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EsflStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    Infeasible = 5,
    Runtime = 6,
    Panic = 7,
}

/// Opaque layer profile of a network.
pub struct EsflArchitecture {
    inner: ModelArchitecture,
}

/// Opaque optimizer result.
pub struct EsflAllocation {
    inner: OptimizerOutcome,
}

/// Workload of one cut layer.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EsflCutWorkload {
    pub cut: usize,
    /// User-side training FLOPs per sample.
    pub user_compute: f64,
    /// Bytes of the cut activation per sample.
    pub act_bytes: f64,
    /// Bytes of the user-side model.
    pub model_bytes: f64,
    /// User-side training memory footprint in bytes.
    pub mem_bytes: f64,
}

/// One device. Storage and memory that are negative or not finite mean
/// unlimited.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsflUser {
    pub samples: u64,
    /// Device compute in FLOPs/s.
    pub compute_flops: f64,
    /// Uplink rate in bytes/s.
    pub uplink_bytes_per_sec: f64,
    /// Downlink rate in bytes/s.
    pub downlink_bytes_per_sec: f64,
    pub epochs: u32,
    pub storage_bytes: f64,
    pub memory_bytes: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Null(&'static str),
    Invalid(String),
    Esfl(EsflError),
}

impl From<EsflError> for Failure {
    fn from(e: EsflError) -> Self {
        Failure::Esfl(e)
    }
}

fn status_of(e: &EsflError) -> EsflStatus {
    match e {
        EsflError::Parse { .. } => EsflStatus::Parse,
        EsflError::Io { .. } => EsflStatus::Io,
        EsflError::InfeasibleUser { .. } | EsflError::InfeasibleLink(_) | EsflError::Allocation(_) => {
            EsflStatus::Infeasible
        }
        EsflError::Numeric(_) => EsflStatus::Runtime,
        _ => EsflStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into a status and a stored message.
fn guard<F>(f: F) -> EsflStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EsflStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer passed as {what}"));
            EsflStatus::NullPointer
        }
        Ok(Err(Failure::Invalid(message))) => {
            set_last_error(message);
            EsflStatus::InvalidArgument
        }
        Ok(Err(Failure::Esfl(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {message}"));
            EsflStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

fn limit(v: f64) -> Option<f64> {
    (v.is_finite() && v >= 0.0).then_some(v)
}

fn to_profile(id: usize, u: &EsflUser) -> UserProfile {
    UserProfile {
        id,
        samples: u.samples,
        compute: u.compute_flops,
        rates: LinkRates {
            up: u.uplink_bytes_per_sec,
            down: u.downlink_bytes_per_sec,
        },
        storage_bytes: limit(u.storage_bytes),
        memory_bytes: limit(u.memory_bytes),
        epochs: u.epochs,
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn esfl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn esfl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Looks up a shipped profile (`vgg13`, `vgg16`, `vgg19`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn esfl_architecture_builtin(name: *const c_char, out: *mut *mut EsflArchitecture) -> EsflStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let name = str_arg(name, "name")?;
        let inner = builtin_architecture(name)
            .ok_or_else(|| Failure::Invalid(format!("no builtin architecture named '{name}'")))?;
        *out = Box::into_raw(Box::new(EsflArchitecture { inner }));
        Ok(())
    })
}

/// Loads a profile document (columnar text or JSON) from disk.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn esfl_architecture_load(path: *const c_char, out: *mut *mut EsflArchitecture) -> EsflStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let inner = load_architecture(str_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(EsflArchitecture { inner }));
        Ok(())
    })
}

/// Releases an architecture handle. NULL is ignored.
///
/// # Safety
/// `arch` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn esfl_architecture_free(arch: *mut EsflArchitecture) {
    if !arch.is_null() {
        drop(Box::from_raw(arch));
    }
}

/// Number of layers, or 0 for NULL.
///
/// # Safety
/// `arch` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn esfl_architecture_num_layers(arch: *const EsflArchitecture) -> usize {
    arch.as_ref().map_or(0, |a| a.inner.num_layers())
}

/// Training FLOPs per sample of the whole network.
///
/// # Safety
/// `arch` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn esfl_architecture_total_compute(arch: *const EsflArchitecture, out: *mut f64) -> EsflStatus {
    guard(|| {
        let arch = ref_arg(arch, "arch")?;
        *out_arg(out, "out")? = arch.inner.total_compute();
        Ok(())
    })
}

/// Workload of cutting after layer `cut` (1-based); `batch` sizes the memory
/// estimate.
///
/// # Safety
/// `arch` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn esfl_cut_workload(
    arch: *const EsflArchitecture,
    cut: usize,
    batch: usize,
    out: *mut EsflCutWorkload,
) -> EsflStatus {
    guard(|| {
        let arch = ref_arg(arch, "arch")?;
        let out = out_arg(out, "out")?;
        let cw = arch.inner.cut_workload(cut, batch)?;
        *out = EsflCutWorkload {
            cut: cw.cut,
            user_compute: cw.user_compute,
            act_bytes: cw.act_bytes,
            model_bytes: cw.model_bytes,
            mem_bytes: cw.mem_bytes,
        };
        Ok(())
    })
}

/// Shannon capacity in bits/s.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn esfl_shannon_rate(
    bandwidth_hz: f64,
    power_w: f64,
    gain: f64,
    noise_density: f64,
    out: *mut f64,
) -> EsflStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = shannon_rate(bandwidth_hz, power_w, gain, noise_density)?;
        Ok(())
    })
}

/// Round latency of one user at a cut with `server_compute` FLOPs/s.
///
/// # Safety
/// `arch` and `user` must be valid pointers and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn esfl_round_time(
    arch: *const EsflArchitecture,
    user: *const EsflUser,
    cut: usize,
    server_compute: f64,
    t_agg: f64,
    out: *mut f64,
) -> EsflStatus {
    guard(|| {
        let arch = ref_arg(arch, "arch")?;
        let user = to_profile(0, ref_arg(user, "user")?);
        let out = out_arg(out, "out")?;
        *out = esfl::timing::round_time(&user, &arch.inner, cut, server_compute, t_agg)?.total;
        Ok(())
    })
}

/// Joint cut-layer and server-compute allocation for `n_users` users.
/// `max_iters = 0` keeps the default iteration cap.
///
/// # Safety
/// `users` must point to `n_users` records, `arch` must be a live handle and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn esfl_optimize(
    arch: *const EsflArchitecture,
    users: *const EsflUser,
    n_users: usize,
    server_compute: f64,
    t_agg: f64,
    max_iters: usize,
    out: *mut *mut EsflAllocation,
) -> EsflStatus {
    guard(|| {
        let arch = ref_arg(arch, "arch")?;
        let out = out_arg(out, "out")?;
        if users.is_null() {
            return Err(Failure::Null("users"));
        }
        let records = std::slice::from_raw_parts(users, n_users);
        let profiles: Vec<UserProfile> = records.iter().enumerate().map(|(i, u)| to_profile(i, u)).collect();
        let model = LatencyModel::new(&arch.inner, 0, t_agg);
        let mut cfg = OptimizerConfig::default();
        if max_iters > 0 {
            cfg.max_iters = max_iters;
        }
        let inner = alternate(&profiles, &model, server_compute, &cfg)?;
        *out = Box::into_raw(Box::new(EsflAllocation { inner }));
        Ok(())
    })
}

/// Number of users in an allocation, or 0 for NULL.
///
/// # Safety
/// `alloc` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn esfl_allocation_len(alloc: *const EsflAllocation) -> usize {
    alloc.as_ref().map_or(0, |a| a.inner.allocation.cuts.len())
}

/// Cut layer of user `index`.
///
/// # Safety
/// `alloc` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn esfl_allocation_cut(
    alloc: *const EsflAllocation,
    index: usize,
    out: *mut usize,
) -> EsflStatus {
    guard(|| {
        let alloc = ref_arg(alloc, "alloc")?;
        let out = out_arg(out, "out")?;
        *out = *alloc
            .inner
            .allocation
            .cuts
            .get(index)
            .ok_or_else(|| Failure::Invalid(format!("user index {index} out of range")))?;
        Ok(())
    })
}

/// Server compute (FLOPs/s) of user `index`.
///
/// # Safety
/// `alloc` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn esfl_allocation_server_compute(
    alloc: *const EsflAllocation,
    index: usize,
    out: *mut f64,
) -> EsflStatus {
    guard(|| {
        let alloc = ref_arg(alloc, "alloc")?;
        let out = out_arg(out, "out")?;
        *out = *alloc
            .inner
            .allocation
            .server_compute
            .get(index)
            .ok_or_else(|| Failure::Invalid(format!("user index {index} out of range")))?;
        Ok(())
    })
}

/// Straggler round time of the allocation in seconds; NaN for NULL.
///
/// # Safety
/// `alloc` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn esfl_allocation_objective(alloc: *const EsflAllocation) -> f64 {
    alloc.as_ref().map_or(f64::NAN, |a| a.inner.allocation.objective)
}

/// Optimizer iterations performed, or 0 for NULL.
///
/// # Safety
/// `alloc` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn esfl_allocation_iterations(alloc: *const EsflAllocation) -> usize {
    alloc.as_ref().map_or(0, |a| a.inner.iterations)
}

/// Whether the optimizer reached a fixed point; false for NULL.
///
/// # Safety
/// `alloc` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn esfl_allocation_converged(alloc: *const EsflAllocation) -> bool {
    alloc.as_ref().is_some_and(|a| a.inner.converged)
}

/// Releases an allocation handle. NULL is ignored.
///
/// # Safety
/// `alloc` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn esfl_allocation_free(alloc: *mut EsflAllocation) {
    if !alloc.is_null() {
        drop(Box::from_raw(alloc));
    }
}

/// Runs a simulation described by a TOML run configuration and returns the
/// JSON report. Release the string with [`esfl_string_free`].
///
/// # Safety
/// `config_toml` must be a NUL-terminated string and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn esfl_simulate_json(config_toml: *const c_char, out_json: *mut *mut c_char) -> EsflStatus {
    guard(|| {
        let out = out_arg(out_json, "out_json")?;
        let cfg = RunConfig::parse(str_arg(config_toml, "config_toml")?)?;
        let output = esfl::cli::simulate_with_config(&cfg)?;
        let json = output
            .files
            .get("simulate.json")
            .cloned()
            .ok_or_else(|| Failure::Invalid("simulation produced no report".into()))?;
        *out = CString::new(json)
            .map_err(|_| Failure::Invalid("report contains a NUL byte".into()))?
            .into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn esfl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
