//! C ABI for `pathsens`.
//!
//! Every function returns a [`PsStatus`]; results come back through out
//! pointers. Models and paths are opaque handles owned by the caller and
//! released with their `_free` function. After a non-OK status,
//! [`ps_last_error_message`] describes the failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;
use std::sync::Arc;

use pathsens::analysis::{
    estimate_strong_error, fit_rate, product_lemma_check, Atom, LemmaInstance, LevelRecord,
    McSettings, Quantity,
};
use pathsens::{
    lookup_model, sample_increments, simulate_path, Coefficient, Error, IncrementGrid, Order,
    PathResult, PathState, SdeModel, SeedSpec, SimConfig,
};

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownModel = 3,
    UnsupportedOrder = 4,
    Divergence = 5,
    InsufficientData = 6,
    TooLarge = 7,
    OutOfRange = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsCoefficient {
    Drift = 0,
    Diffusion = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsQuantity {
    State = 0,
    Tangent1 = 1,
    Tangent2 = 2,
}

/// Simulation settings. `order` is 0 (state only), 1 (first tangent) or 2.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsSimConfig {
    pub theta: f64,
    pub s0: f64,
    pub ds0: f64,
    pub dds0: f64,
    pub t_final: f64,
    pub steps: usize,
    pub order: u8,
}

/// Monte Carlo settings. `workers = 0` uses every core; results do not
/// depend on it.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PsMcSettings {
    pub n_paths: usize,
    pub base_seed: u64,
    pub workers: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PsPathState {
    pub s: f64,
    pub ds: f64,
    pub dds: f64,
}

/// Derivative bounds; a bound is meaningful only when its `has_` flag is set.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PsBounds {
    pub has_l_a: bool,
    pub l_a: f64,
    pub has_l_b: bool,
    pub l_b: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsLevelRecord {
    pub level: u32,
    pub h: f64,
    pub p: u32,
    pub quantity: PsQuantity,
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PsRateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_ci_halfwidth: f64,
    pub n_used: usize,
    pub n_excluded: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsAtom {
    pub prob: f64,
    pub u: f64,
    pub v: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PsLemmaCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub c_pk: f64,
    pub d_pk: f64,
    pub holds: bool,
}

/// Opaque model handle.
pub struct PsModel {
    inner: Arc<dyn SdeModel>,
    id: CString,
}

/// Opaque simulated path.
pub struct PsPath {
    inner: PathResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(PsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::UnknownModel(_) => PsStatus::UnknownModel,
            Error::UnsupportedOrder { .. } => PsStatus::UnsupportedOrder,
            Error::InvalidArgument(_) => PsStatus::InvalidArgument,
            Error::Divergence { .. } => PsStatus::Divergence,
            Error::InsufficientData { .. } => PsStatus::InsufficientData,
            Error::TooLarge { .. } => PsStatus::TooLarge,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(PsStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            PsStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(p: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

fn to_quantity(q: PsQuantity) -> Quantity {
    match q {
        PsQuantity::State => Quantity::State,
        PsQuantity::Tangent1 => Quantity::Tangent1,
        PsQuantity::Tangent2 => Quantity::Tangent2,
    }
}

fn from_quantity(q: Quantity) -> PsQuantity {
    match q {
        Quantity::State => PsQuantity::State,
        Quantity::Tangent1 => PsQuantity::Tangent1,
        Quantity::Tangent2 => PsQuantity::Tangent2,
    }
}

fn to_config(c: &PsSimConfig) -> Result<SimConfig, Failure> {
    let order = Order::from_u8(c.order)?;
    Ok(SimConfig {
        theta: c.theta,
        s0: c.s0,
        ds0: c.ds0,
        dds0: c.dds0,
        t_final: c.t_final,
        steps: c.steps,
        order,
    })
}

fn to_record(r: &PsLevelRecord) -> LevelRecord {
    LevelRecord {
        level: r.level,
        h: r.h,
        p: r.p,
        quantity: to_quantity(r.quantity),
        estimate: r.estimate,
        std_error: r.std_error,
        n_paths: r.n_paths,
    }
}

fn from_state(s: &PathState) -> PsPathState {
    PsPathState {
        s: s.s,
        ds: s.ds,
        dds: s.dds,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (truncated and
/// NUL-terminated to `len` bytes) and returns the full message length
/// without the terminator; 0 when there is none. `buf` may be null to query
/// the length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ps_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            0
        }
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Looks up a built-in model (`gbm`, `trig`, `additive`).
///
/// # Safety
/// `id` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_model_new(id: *const c_char, out: *mut *mut PsModel) -> PsStatus {
    guard(|| {
        if id.is_null() {
            return Err(null("id"));
        }
        let name = CStr::from_ptr(id)
            .to_str()
            .map_err(|_| Failure(PsStatus::InvalidArgument, "id is not UTF-8".into()))?;
        let inner = lookup_model(name)?;
        let id = CString::new(inner.id()).unwrap_or_default();
        write(out, Box::into_raw(Box::new(PsModel { inner, id })), "out")
    })
}

/// # Safety
/// `model` must be null or a handle from [`ps_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps_model_free(model: *mut PsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Model identifier, valid while the handle lives. Null for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_model_id(model: *const PsModel) -> *const c_char {
    model.as_ref().map_or(std::ptr::null(), |m| m.id.as_ptr())
}

/// `∂^i_θ ∂^j_S` of the drift or diffusion at `(theta, s)`, `i + j ≤ 2`.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_model_eval_partial(
    model: *const PsModel,
    coefficient: PsCoefficient,
    theta: f64,
    s: f64,
    i: u32,
    j: u32,
    out: *mut f64,
) -> PsStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let c = match coefficient {
            PsCoefficient::Drift => Coefficient::Drift,
            PsCoefficient::Diffusion => Coefficient::Diffusion,
        };
        let v = pathsens::eval_partial(m.inner.as_ref(), c, i, j, theta, s)?;
        write(out, v, "out")
    })
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_model_bounds(model: *const PsModel, out: *mut PsBounds) -> PsStatus {
    guard(|| {
        let b = pathsens::derivative_bounds(deref(model, "model")?.inner.as_ref());
        write(
            out,
            PsBounds {
                has_l_a: b.l_a.is_some(),
                l_a: b.l_a.unwrap_or(0.0),
                has_l_b: b.l_b.is_some(),
                l_b: b.l_b.unwrap_or(0.0),
            },
            "out",
        )
    })
}

/// Simulates one path on increments drawn from stream
/// `(base_seed, path_index)`.
///
/// # Safety
/// `model` and `config` must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_simulate_path(
    model: *const PsModel,
    config: *const PsSimConfig,
    base_seed: u64,
    path_index: u64,
    out: *mut *mut PsPath,
) -> PsStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let cfg = to_config(deref(config, "config")?)?;
        cfg.validate()?;
        let incs = sample_increments(SeedSpec::new(base_seed, path_index), cfg.steps, cfg.h())?;
        let inner = simulate_path(m.inner.as_ref(), &cfg, &incs)?;
        write(out, Box::into_raw(Box::new(PsPath { inner })), "out")
    })
}

/// Simulates one path on caller-supplied Brownian increments; `n` must equal
/// `config.steps`.
///
/// # Safety
/// `increments` must point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn ps_simulate_path_increments(
    model: *const PsModel,
    config: *const PsSimConfig,
    increments: *const f64,
    n: usize,
    out: *mut *mut PsPath,
) -> PsStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let cfg = to_config(deref(config, "config")?)?;
        cfg.validate()?;
        if increments.is_null() {
            return Err(null("increments"));
        }
        let incs = IncrementGrid::new(cfg.h(), slice::from_raw_parts(increments, n).to_vec())?;
        let inner = simulate_path(m.inner.as_ref(), &cfg, &incs)?;
        write(out, Box::into_raw(Box::new(PsPath { inner })), "out")
    })
}

/// Number of grid points (`steps + 1`); 0 for a null handle.
///
/// # Safety
/// `path` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_path_len(path: *const PsPath) -> usize {
    path.as_ref().map_or(0, |p| p.inner.states.len())
}

/// State at grid index `n`.
///
/// # Safety
/// `path` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_path_get(
    path: *const PsPath,
    n: usize,
    out: *mut PsPathState,
) -> PsStatus {
    guard(|| {
        let p = deref(path, "path")?;
        let st = p.inner.states.get(n).ok_or_else(|| {
            Failure(
                PsStatus::OutOfRange,
                format!("index {n} outside 0..{}", p.inner.states.len()),
            )
        })?;
        write(out, from_state(st), "out")
    })
}

/// Componentwise max of the absolute values over the grid.
///
/// # Safety
/// `path` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_path_sup_abs(path: *const PsPath, out: *mut PsPathState) -> PsStatus {
    guard(|| write(out, from_state(&deref(path, "path")?.inner.sup_abs), "out"))
}

/// # Safety
/// `path` must be null or a live handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps_path_free(path: *mut PsPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// Coupled fine/coarse estimate of `E[sup |fine - coarse|^p]` at `level`
/// (fine grid `config.steps · 2^level`).
///
/// # Safety
/// Pointers must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_strong_error(
    model: *const PsModel,
    config: *const PsSimConfig,
    quantity: PsQuantity,
    p: u32,
    level: u32,
    mc: *const PsMcSettings,
    out: *mut PsLevelRecord,
) -> PsStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let cfg = to_config(deref(config, "config")?)?;
        let mc = deref(mc, "mc")?;
        let settings = McSettings::new(mc.n_paths, mc.base_seed).with_workers(mc.workers);
        let r = estimate_strong_error(
            m.inner.as_ref(),
            &cfg,
            p,
            &settings,
            level,
            to_quantity(quantity),
        )?;
        write(
            out,
            PsLevelRecord {
                level: r.level,
                h: r.h,
                p: r.p,
                quantity: from_quantity(r.quantity),
                estimate: r.estimate,
                std_error: r.std_error,
                n_paths: r.n_paths,
            },
            "out",
        )
    })
}

/// Log2-log2 least-squares rate over `n` records sharing `p` and quantity.
///
/// # Safety
/// `records` must point to `n` records; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_fit_rate(
    records: *const PsLevelRecord,
    n: usize,
    out: *mut PsRateFit,
) -> PsStatus {
    guard(|| {
        if records.is_null() {
            return Err(null("records"));
        }
        let recs: Vec<LevelRecord> = slice::from_raw_parts(records, n)
            .iter()
            .map(to_record)
            .collect();
        let fit = fit_rate(&recs)?;
        write(
            out,
            PsRateFit {
                slope: fit.slope,
                intercept: fit.intercept,
                r_squared: fit.r_squared,
                slope_ci_halfwidth: fit.slope_ci_halfwidth,
                n_used: fit.records.len(),
                n_excluded: fit.excluded.len(),
            },
            "out",
        )
    })
}

/// Exact check of the product moment bound. Factor `i` has
/// `support_sizes[i]` atoms; `atoms` holds all factors' atoms back to back.
///
/// # Safety
/// `support_sizes` must point to `k` values and `atoms` to their sum.
#[no_mangle]
pub unsafe extern "C" fn ps_lemma_check(
    p: u32,
    k: usize,
    support_sizes: *const usize,
    atoms: *const PsAtom,
    out: *mut PsLemmaCheck,
) -> PsStatus {
    guard(|| {
        if support_sizes.is_null() {
            return Err(null("support_sizes"));
        }
        if atoms.is_null() {
            return Err(null("atoms"));
        }
        let sizes = slice::from_raw_parts(support_sizes, k);
        let total = sizes
            .iter()
            .try_fold(0usize, |acc, &s| acc.checked_add(s))
            .ok_or_else(|| Failure(PsStatus::InvalidArgument, "support sizes overflow".into()))?;
        let all = slice::from_raw_parts(atoms, total);
        let mut components = Vec::with_capacity(k);
        let mut start = 0;
        for &size in sizes {
            components.push(
                all[start..start + size]
                    .iter()
                    .map(|a| Atom {
                        prob: a.prob,
                        u: a.u,
                        v: a.v,
                    })
                    .collect(),
            );
            start += size;
        }
        let r = product_lemma_check(&LemmaInstance { p, components })?;
        write(
            out,
            PsLemmaCheck {
                lhs: r.lhs,
                rhs: r.rhs,
                c_pk: r.c_pk,
                d_pk: r.d_pk,
                holds: r.holds,
            },
            "out",
        )
    })
}
