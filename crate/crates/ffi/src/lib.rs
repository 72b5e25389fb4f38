//! C ABI over `ppinfo`.
//!
//! Models are opaque handles built from the same JSON documents the CLI
//! reads. Every call returns a [`PpStatus`]; on failure the message is
//! available from [`pp_last_error`] until the next call on the same thread.
//! Strings handed out by the library are released with [`pp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ppinfo::cli::{self, CliError, Command};
use ppinfo::config::RunConfig;
use ppinfo::estimator::map_estimate;
use ppinfo::info::{differential_entropy, kl_divergence};
use ppinfo::measure::{pdf, QuadratureGrid, ReferenceMeasure};
use ppinfo::models::{PointPattern, PointProcessModel};

/// Outcome of an FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PpStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The JSON configuration was rejected.
    Config = 3,
    /// The computation failed (invalid input or numerical failure).
    Numerical = 4,
    /// The caller's output buffer is too small; the needed length is reported.
    BufferTooSmall = 5,
    /// A command name was not recognized.
    UnknownCommand = 6,
    /// An output file or stream could not be written.
    Io = 7,
    /// Internal panic caught at the boundary.
    Panic = 8,
}

/// A model with its quadrature grid and, if configured, reference measure.
pub struct PpModel {
    model: PointProcessModel,
    grid: QuadratureGrid,
    reference: Option<ReferenceMeasure>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(PpStatus, String);

impl From<ppinfo::Error> for Failure {
    fn from(e: ppinfo::Error) -> Self {
        Failure(PpStatus::Numerical, e.to_string())
    }
}

impl From<ppinfo::config::ConfigError> for Failure {
    fn from(e: ppinfo::config::ConfigError) -> Self {
        Failure(PpStatus::Config, e.to_string())
    }
}

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        let status = match e {
            CliError::Config(_) => PpStatus::Config,
            CliError::Numerical(_) => PpStatus::Numerical,
            CliError::Io(_) => PpStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PpStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PpStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(PpStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(PpStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

unsafe fn model_arg<'a>(p: *const PpModel, what: &str) -> Result<&'a PpModel, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

/// `n_points` points of the model's dimension, row-major in `coords`.
unsafe fn pattern_arg(m: &PpModel, coords: *const f64, n_points: usize) -> Result<PointPattern, Failure> {
    let d = m.model.space().dimension();
    if n_points == 0 {
        return Ok(PointPattern::empty(d));
    }
    if coords.is_null() {
        return Err(null("coords"));
    }
    let flat = std::slice::from_raw_parts(coords, n_points * d);
    let points: Vec<Vec<f64>> = flat.chunks(d).map(<[f64]>::to_vec).collect();
    Ok(PointPattern::from_points(d, &points)?)
}

fn reference_of(m: &PpModel) -> Result<&ReferenceMeasure, Failure> {
    m.reference
        .as_ref()
        .ok_or_else(|| Failure(PpStatus::Config, "the configuration has no `reference` section".into()))
}

/// Builds a model handle from a JSON configuration (the CLI schema).
/// The handle must be released with [`pp_model_free`].
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pp_model_from_json(config_json: *const c_char, out: *mut *mut PpModel) -> PpStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let cfg = RunConfig::parse(str_arg(config_json, "config_json")?)?;
        let model = cfg.model()?;
        let grid = cfg.grid_for(&model)?;
        let reference = match cfg.reference {
            Some(_) => Some(cfg.reference()?),
            None => None,
        };
        *out = Box::into_raw(Box::new(PpModel { model, grid, reference }));
        Ok(())
    })
}

/// Releases a handle from [`pp_model_from_json`]. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pp_model_free(model: *mut PpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Dimension of the model's base space.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pp_model_dimension(model: *const PpModel, out: *mut usize) -> PpStatus {
    guard(|| {
        *out_arg(out, "out")? = model_arg(model, "model")?.model.space().dimension();
        Ok(())
    })
}

/// Janossy density `p^(n)` at a pattern. The value carries unit
/// `ι^(unit_numer/unit_denom)`.
///
/// # Safety
/// `coords` must hold `n_points × dimension` values (may be null when
/// `n_points` is 0); the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn pp_janossy(
    model: *const PpModel,
    coords: *const f64,
    n_points: usize,
    value: *mut f64,
    unit_numer: *mut i64,
    unit_denom: *mut i64,
) -> PpStatus {
    guard(|| {
        let m = model_arg(model, "model")?;
        let (value, numer, denom) = (out_arg(value, "value")?, out_arg(unit_numer, "unit_numer")?, out_arg(unit_denom, "unit_denom")?);
        let q = m.model.janossy(&pattern_arg(m, coords, n_points)?)?;
        *value = q.value();
        *numer = q.unit().numer();
        *denom = q.unit().denom();
        Ok(())
    })
}

/// Unitless density `f = c^n · p^(n)` against the configured reference.
///
/// # Safety
/// As for [`pp_janossy`].
#[no_mangle]
pub unsafe extern "C" fn pp_pdf(model: *const PpModel, coords: *const f64, n_points: usize, out: *mut f64) -> PpStatus {
    guard(|| {
        let m = model_arg(model, "model")?;
        let out = out_arg(out, "out")?;
        *out = pdf(&m.model, reference_of(m)?, &pattern_arg(m, coords, n_points)?)?;
        Ok(())
    })
}

/// `P(|Φ| = n)`.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pp_cardinality_pmf(model: *const PpModel, n: usize, out: *mut f64) -> PpStatus {
    guard(|| {
        *out_arg(out, "out")? = model_arg(model, "model")?.model.cardinality_pmf(n);
        Ok(())
    })
}

/// Differential entropy against the configured reference.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pp_differential_entropy(model: *const PpModel, out: *mut f64) -> PpStatus {
    guard(|| {
        let m = model_arg(model, "model")?;
        let out = out_arg(out, "out")?;
        *out = differential_entropy(&m.model, reference_of(m)?, &m.grid)?;
        Ok(())
    })
}

/// `KL(P_1 ‖ P_0)`; both models must share a grid. The truncation order is
/// the larger of the two.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pp_kl_divergence(model_1: *const PpModel, model_0: *const PpModel, out: *mut f64) -> PpStatus {
    guard(|| {
        let (m1, m0) = (model_arg(model_1, "model_1")?, model_arg(model_0, "model_0")?);
        let out = out_arg(out, "out")?;
        let grid = QuadratureGrid {
            n_max: m1.grid.n_max.max(m0.grid.n_max),
            ..m1.grid
        };
        *out = kl_divergence(&m1.model, &m0.model, &grid)?;
        Ok(())
    })
}

/// MAP estimate against the configured reference. Cell indices go to
/// `cells` (capacity `cells_cap`); `n_cells` always receives the count, and
/// `BufferTooSmall` is returned if it exceeds the capacity.
///
/// # Safety
/// `cells` must hold `cells_cap` values (may be null when `cells_cap` is 0);
/// the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn pp_map_estimate(
    model: *const PpModel,
    cells: *mut usize,
    cells_cap: usize,
    n_cells: *mut usize,
    score: *mut f64,
) -> PpStatus {
    guard(|| {
        let m = model_arg(model, "model")?;
        let (n_out, score_out) = (out_arg(n_cells, "n_cells")?, out_arg(score, "score")?);
        let e = map_estimate(&m.model, reference_of(m)?, &m.grid)?;
        *n_out = e.cells.len();
        *score_out = e.score;
        if e.cells.len() > cells_cap {
            return Err(Failure(
                PpStatus::BufferTooSmall,
                format!("{} cells do not fit in {cells_cap}", e.cells.len()),
            ));
        }
        if !e.cells.is_empty() {
            if cells.is_null() {
                return Err(null("cells"));
            }
            std::slice::from_raw_parts_mut(cells, e.cells.len()).copy_from_slice(&e.cells);
        }
        Ok(())
    })
}

/// Runs a CLI command (`entropy`, `kl`, `map`, `c-sweep`, `audit`,
/// `pgfl-check`, `sample`) and returns its JSON output in `*out_json`, to be
/// released with [`pp_string_free`]. `seed` overrides the configured seed
/// when `has_seed` is non-zero.
///
/// # Safety
/// String arguments must be NUL-terminated; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pp_run_command(
    command: *const c_char,
    config_json: *const c_char,
    seed: u64,
    has_seed: i32,
    out_json: *mut *mut c_char,
) -> PpStatus {
    guard(|| {
        let out = out_arg(out_json, "out_json")?;
        *out = ptr::null_mut();
        let name = str_arg(command, "command")?;
        let cmd = Command::from_name(name)
            .ok_or_else(|| Failure(PpStatus::UnknownCommand, format!("unknown command `{name}`")))?;
        let text = cli::run(cmd, str_arg(config_json, "config_json")?, (has_seed != 0).then_some(seed))?;
        *out = CString::new(text).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn pp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}
