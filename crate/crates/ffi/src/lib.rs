//! C ABI for `nhkrein`.
//!
//! Objects are opaque handles created by `nhk_*_new`/constructor functions
//! and released with the matching `nhk_*_free`. Every fallible call returns
//! an [`NhkStatus`]; on failure a message is kept per thread and can be
//! read with [`nhk_last_error_message`]. Panics never cross the boundary.
//!
//! Output arrays are caller-allocated. Functions that write a variable
//! number of items take a capacity and report the required length through
//! an out-pointer, returning `NHK_BUFFER_TOO_SMALL` when it does not fit.

#![allow(non_camel_case_types)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nhkrein::dynamics::{evolve, survival_probability, EvolutionResult, InnerProduct, SurvivalOptions};
use nhkrein::linalg::CMat;
use nhkrein::metric::{AlphaPolicy, MetricCase};
use nhkrein::observables::{expectation, uncertainty_check, SpinMoments, DEFAULT_BOUND_TOL, DEFAULT_INTELLIGENT_TOL};
use nhkrein::pipeline::{prepare, EpMode, MetricMode, Prepared};
use nhkrein::spectral::{count_real_on_family, locate_exceptional_points, Classification, Tolerances};
use nhkrein::spin::{build_hamiltonian, coherent_spin_state, oat_family, ModelParams, SpinSystem};
use nhkrein::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NhkStatus {
    NHK_OK = 0,
    NHK_NULL_POINTER = 1,
    /// Bad parameters or configuration.
    NHK_INVALID_ARGUMENT = 2,
    /// Singular metric, Jordan residual, non-convergence.
    NHK_NUMERICAL = 3,
    NHK_BUFFER_TOO_SMALL = 4,
    NHK_PANIC = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NhkClassification {
    NHK_ALL_REAL = 0,
    NHK_CONJUGATE_PAIRS = 1,
    NHK_GENERAL_COMPLEX = 2,
    NHK_DEFECTIVE = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NhkMetricCase {
    NHK_CASE_I = 1,
    NHK_CASE_II = 2,
    NHK_CASE_III = 3,
    NHK_CASE_IV = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NhkEpMode {
    NHK_EP_AUTO = 0,
    NHK_EP_FORCE_JORDAN = 1,
    NHK_EP_FORCE_DIAGONAL = 2,
}

/// `NHK_METRIC_AUTO` or one of the forced cases.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NhkMetricMode {
    NHK_METRIC_AUTO = 0,
    NHK_METRIC_CASE_I = 1,
    NHK_METRIC_CASE_II = 2,
    NHK_METRIC_CASE_III = 3,
    NHK_METRIC_CASE_IV = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NhkInnerProduct {
    NHK_INNER_EUCLIDEAN = 0,
    NHK_INNER_METRIC = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NhkModelKind {
    NHK_DISSIPATIVE_OAT = 0,
    NHK_NV_LIPKIN = 1,
}

/// Model parameters. For `NHK_DISSIPATIVE_OAT`, `a, b, c` are `ω, λ, κ`;
/// for `NHK_NV_LIPKIN`, `a, b, c, d` are `ε, γ, χ, V`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NhkModelParams {
    pub kind: NhkModelKind,
    pub particles: u32,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Tolerances; zero fields take the library defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NhkTolerances {
    pub tau_real: f64,
    pub tau_pair: f64,
    pub tau_defect: f64,
    pub tau_jordan: f64,
}

/// Squeezing data at one time sample.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NhkSqueezing {
    pub zeta2_x: f64,
    pub zeta2_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub mean_x: f64,
    pub mean_y: f64,
    pub mean_z: f64,
    pub uncertainty_product: f64,
    pub satisfies_bound: bool,
    pub is_intelligent: bool,
}

/// One exceptional point of the dissipative OAT family.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NhkExceptionalPoint {
    pub kappa_over_lambda: f64,
    pub eigenvalue_re: f64,
    pub eigenvalue_im: f64,
    pub index_a: usize,
    pub index_b: usize,
    pub block_size: usize,
}

/// A Hamiltonian together with its spectrum, metric and propagator.
pub struct NhkModel {
    system: SpinSystem,
    prepared: Prepared,
}

/// An evolved coherent state on a fixed time grid.
pub struct NhkEvolution {
    system: SpinSystem,
    prepared: Prepared,
    result: EvolutionResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Null(&'static str),
    Lib(Error),
    Buffer { needed: usize, given: usize },
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type FfiResult = Result<(), Failure>;

fn guard(f: impl FnOnce() -> FfiResult) -> NhkStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NhkStatus::NHK_OK,
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("null pointer passed for `{name}`"));
            NhkStatus::NHK_NULL_POINTER
        }
        Ok(Err(Failure::Buffer { needed, given })) => {
            set_error(format!("buffer holds {given} items, {needed} needed"));
            NhkStatus::NHK_BUFFER_TOO_SMALL
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            if e.is_numerical() {
                NhkStatus::NHK_NUMERICAL
            } else {
                NhkStatus::NHK_INVALID_ARGUMENT
            }
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            NhkStatus::NHK_PANIC
        }
    }
}

unsafe fn get<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &'static str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn check_len(needed: usize, given: usize) -> FfiResult {
    if given < needed {
        Err(Failure::Buffer { needed, given })
    } else {
        Ok(())
    }
}

fn tolerances(t: Option<&NhkTolerances>) -> Tolerances {
    let mut out = Tolerances::default();
    if let Some(t) = t {
        for (dst, src) in [
            (&mut out.tau_real, t.tau_real),
            (&mut out.tau_pair, t.tau_pair),
            (&mut out.tau_defect, t.tau_defect),
            (&mut out.tau_jordan, t.tau_jordan),
        ] {
            if src != 0.0 {
                *dst = src;
            }
        }
    }
    out
}

fn model_params(p: &NhkModelParams) -> ModelParams {
    match p.kind {
        NhkModelKind::NHK_DISSIPATIVE_OAT => ModelParams::DissipativeOat { omega: p.a, lambda: p.b, kappa: p.c },
        NhkModelKind::NHK_NV_LIPKIN => ModelParams::NvLipkin { epsilon: p.a, gamma: p.b, chi: p.c, v: p.d },
    }
}

fn invalid(msg: &str) -> Failure {
    Failure::Lib(Error::InvalidInput(msg.into()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nhk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next `nhk_*` call on the same thread.
#[no_mangle]
pub extern "C" fn nhk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a model and prepares its spectrum, metric and propagator.
/// `tol` may be NULL for defaults.
///
/// # Safety
/// `params` and `out_model` must be valid pointers; `tol` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn nhk_model_new(
    params: *const NhkModelParams,
    tol: *const NhkTolerances,
    ep_mode: NhkEpMode,
    metric_mode: NhkMetricMode,
    out_model: *mut *mut NhkModel,
) -> NhkStatus {
    guard(|| {
        let params = get(params, "params")?;
        let out_model = out(out_model, "out_model")?;
        *out_model = ptr::null_mut();
        if params.particles == 0 {
            return Err(invalid("particle number must be positive"));
        }
        let system = SpinSystem::from_particles(params.particles);
        let h = build_hamiltonian(&system, &model_params(params))?;
        let tol = tolerances(tol.as_ref());
        tol.validate()?;
        let ep = match ep_mode {
            NhkEpMode::NHK_EP_AUTO => EpMode::Auto,
            NhkEpMode::NHK_EP_FORCE_JORDAN => EpMode::ForceJordan,
            NhkEpMode::NHK_EP_FORCE_DIAGONAL => EpMode::ForceDiagonal,
        };
        let mm = match metric_mode {
            NhkMetricMode::NHK_METRIC_AUTO => MetricMode::Auto,
            NhkMetricMode::NHK_METRIC_CASE_I => MetricMode::CaseI,
            NhkMetricMode::NHK_METRIC_CASE_II => MetricMode::CaseII,
            NhkMetricMode::NHK_METRIC_CASE_III => MetricMode::CaseIII,
            NhkMetricMode::NHK_METRIC_CASE_IV => MetricMode::CaseIV,
        };
        let prepared = prepare(&h, &tol, ep, mm, &AlphaPolicy::default())?;
        *out_model = Box::into_raw(Box::new(NhkModel { system, prepared }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`nhk_model_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nhk_model_free(model: *mut NhkModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nhk_model_dim(model: *const NhkModel) -> usize {
    model.as_ref().map_or(0, |m| m.system.dim())
}

/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn nhk_model_classification(model: *const NhkModel, out_class: *mut NhkClassification) -> NhkStatus {
    guard(|| {
        let m = get(model, "model")?;
        *out(out_class, "out_class")? = match m.prepared.classification() {
            Classification::AllReal => NhkClassification::NHK_ALL_REAL,
            Classification::ConjugatePairs => NhkClassification::NHK_CONJUGATE_PAIRS,
            Classification::GeneralComplex => NhkClassification::NHK_GENERAL_COMPLEX,
            Classification::Defective => NhkClassification::NHK_DEFECTIVE,
        };
        Ok(())
    })
}

/// # Safety
/// `model` and `out_case` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn nhk_model_metric_case(model: *const NhkModel, out_case: *mut NhkMetricCase) -> NhkStatus {
    guard(|| {
        let m = get(model, "model")?;
        *out(out_case, "out_case")? = match m.prepared.case() {
            MetricCase::CaseI => NhkMetricCase::NHK_CASE_I,
            MetricCase::CaseII => NhkMetricCase::NHK_CASE_II,
            MetricCase::CaseIII => NhkMetricCase::NHK_CASE_III,
            MetricCase::CaseIV => NhkMetricCase::NHK_CASE_IV,
        };
        Ok(())
    })
}

/// Writes the `dim` eigenvalues into `re` and `im`.
///
/// # Safety
/// `re` and `im` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nhk_model_eigenvalues(model: *const NhkModel, re: *mut f64, im: *mut f64, len: usize) -> NhkStatus {
    guard(|| {
        let m = get(model, "model")?;
        let values = &m.prepared.spectral.eigenvalues;
        check_len(values.len(), len)?;
        let re = slice_mut(re, len, "re")?;
        let im = slice_mut(im, len, "im")?;
        for (k, v) in values.iter().enumerate() {
            re[k] = v.re;
            im[k] = v.im;
        }
        Ok(())
    })
}

/// Copies the Hamiltonian in row-major order as interleaved (re, im)
/// pairs; `out` holds `2·dim²` doubles.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nhk_model_hamiltonian(model: *const NhkModel, out_buf: *mut f64, len: usize) -> NhkStatus {
    guard(|| {
        let m = get(model, "model")?;
        write_matrix(&m.prepared.hamiltonian, out_buf, len)
    })
}

/// Copies the positive metric `S_K`, laid out as in [`nhk_model_hamiltonian`].
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nhk_model_metric(model: *const NhkModel, out_buf: *mut f64, len: usize) -> NhkStatus {
    guard(|| {
        let m = get(model, "model")?;
        write_matrix(&m.prepared.metric.s_k, out_buf, len)
    })
}

unsafe fn write_matrix(mat: &CMat, out_buf: *mut f64, len: usize) -> FfiResult {
    let n = mat.nrows();
    check_len(2 * n * n, len)?;
    let buf = slice_mut(out_buf, len, "out")?;
    for i in 0..n {
        for j in 0..n {
            buf[2 * (i * n + j)] = mat[(i, j)].re;
            buf[2 * (i * n + j) + 1] = mat[(i, j)].im;
        }
    }
    Ok(())
}

/// Real-eigenvalue counts of the dissipative OAT model at each `κ/λ` in
/// `ratios`.
///
/// # Safety
/// `ratios` and `counts` must each hold `len` items; `tol` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn nhk_count_real(
    particles: u32,
    omega: f64,
    lambda: f64,
    ratios: *const f64,
    counts: *mut usize,
    len: usize,
    tol: *const NhkTolerances,
) -> NhkStatus {
    guard(|| {
        if particles == 0 {
            return Err(invalid("particle number must be positive"));
        }
        let ratios = slice(ratios, len, "ratios")?;
        let counts = slice_mut(counts, len, "counts")?;
        let found = count_real_on_family(&oat_family(particles, omega, lambda), ratios, &tolerances(tol.as_ref()))?;
        counts.copy_from_slice(&found);
        Ok(())
    })
}

/// Exceptional points of the dissipative OAT model in `[lo, hi]`. The
/// number found is stored in `out_count` even when `capacity` is too small.
///
/// # Safety
/// `points` must hold `capacity` items; `out_count` must be valid; `tol`
/// may be NULL.
#[no_mangle]
pub unsafe extern "C" fn nhk_locate_eps(
    particles: u32,
    omega: f64,
    lambda: f64,
    lo: f64,
    hi: f64,
    grid: usize,
    tol: *const NhkTolerances,
    points: *mut NhkExceptionalPoint,
    capacity: usize,
    out_count: *mut usize,
) -> NhkStatus {
    guard(|| {
        let count = out(out_count, "out_count")?;
        *count = 0;
        if particles == 0 {
            return Err(invalid("particle number must be positive"));
        }
        let eps = locate_exceptional_points(&oat_family(particles, omega, lambda), lo, hi, grid, &tolerances(tol.as_ref()))?;
        *count = eps.len();
        check_len(eps.len(), capacity)?;
        let dst = slice_mut(points, capacity, "points")?;
        for (d, e) in dst.iter_mut().zip(&eps) {
            *d = NhkExceptionalPoint {
                kappa_over_lambda: e.ratio,
                eigenvalue_re: e.eigenvalue.re,
                eigenvalue_im: e.eigenvalue.im,
                index_a: e.colliding.0,
                index_b: e.colliding.1,
                block_size: e.block_size,
            };
        }
        Ok(())
    })
}

/// Evolves the coherent state `(θ₀, φ₀)` over the strictly ascending
/// `times`.
///
/// # Safety
/// `model` must be live, `times` must hold `len` doubles, `out_evolution`
/// must be valid.
#[no_mangle]
pub unsafe extern "C" fn nhk_evolve(
    model: *const NhkModel,
    theta0: f64,
    phi0: f64,
    times: *const f64,
    len: usize,
    out_evolution: *mut *mut NhkEvolution,
) -> NhkStatus {
    guard(|| {
        let m = get(model, "model")?;
        let out_evolution = out(out_evolution, "out_evolution")?;
        *out_evolution = ptr::null_mut();
        let times = slice(times, len, "times")?;
        let css = coherent_spin_state(&m.system, theta0, phi0)?;
        let result = evolve(&css.amplitudes, &m.prepared.propagator, &m.prepared.metric, times)?;
        *out_evolution = Box::into_raw(Box::new(NhkEvolution { system: m.system.clone(), prepared: m.prepared.clone(), result }));
        Ok(())
    })
}

/// # Safety
/// `evolution` must come from [`nhk_evolve`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nhk_evolution_free(evolution: *mut NhkEvolution) {
    if !evolution.is_null() {
        drop(Box::from_raw(evolution));
    }
}

/// # Safety
/// `evolution` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nhk_evolution_len(evolution: *const NhkEvolution) -> usize {
    evolution.as_ref().map_or(0, |e| e.result.len())
}

/// Survival probability at every sample.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nhk_evolution_survival(
    evolution: *const NhkEvolution,
    inner: NhkInnerProduct,
    normalize: bool,
    out_buf: *mut f64,
    len: usize,
) -> NhkStatus {
    guard(|| {
        let e = get(evolution, "evolution")?;
        check_len(e.result.len(), len)?;
        let opts = SurvivalOptions {
            inner: match inner {
                NhkInnerProduct::NHK_INNER_EUCLIDEAN => InnerProduct::Euclidean,
                NhkInnerProduct::NHK_INNER_METRIC => InnerProduct::Metric,
            },
            normalize,
        };
        let p = survival_probability(&e.result, &e.prepared.metric, opts);
        slice_mut(out_buf, len, "out")?[..p.len()].copy_from_slice(&p);
        Ok(())
    })
}

/// `⟨S_x⟩, ⟨S_y⟩, ⟨S_z⟩` at every sample, written as consecutive triples.
///
/// # Safety
/// `out` must hold `len` doubles (at least `3·samples`).
#[no_mangle]
pub unsafe extern "C" fn nhk_evolution_spin_means(
    evolution: *const NhkEvolution,
    normalize: bool,
    out_buf: *mut f64,
    len: usize,
) -> NhkStatus {
    guard(|| {
        let e = get(evolution, "evolution")?;
        check_len(3 * e.result.len(), len)?;
        let buf = slice_mut(out_buf, len, "out")?;
        let ops = e.system.components();
        for k in 0..e.result.len() {
            let state = if normalize { e.result.states[k].clone() } else { e.result.state(k) };
            for (a, op) in ops.iter().enumerate() {
                buf[3 * k + a] = expectation(&state, op, &e.prepared.metric, normalize)?;
            }
        }
        Ok(())
    })
}

/// Squeezing data at every sample.
///
/// # Safety
/// `out` must hold `len` records.
#[no_mangle]
pub unsafe extern "C" fn nhk_evolution_squeezing(evolution: *const NhkEvolution, out_buf: *mut NhkSqueezing, len: usize) -> NhkStatus {
    guard(|| {
        let e = get(evolution, "evolution")?;
        check_len(e.result.len(), len)?;
        let buf = slice_mut(out_buf, len, "out")?;
        let moments = SpinMoments::new(&e.system, &e.prepared.metric)?;
        for (k, state) in e.result.states.iter().enumerate() {
            let r = moments.report(state)?;
            let check = uncertainty_check(&r, DEFAULT_BOUND_TOL, DEFAULT_INTELLIGENT_TOL);
            buf[k] = NhkSqueezing {
                zeta2_x: r.zeta2_x,
                zeta2_y: r.zeta2_y,
                var_x: r.var_x,
                var_y: r.var_y,
                mean_x: r.mean_spin[0],
                mean_y: r.mean_spin[1],
                mean_z: r.mean_spin[2],
                uncertainty_product: r.uncertainty_product,
                satisfies_bound: check.satisfies_bound,
                is_intelligent: check.is_intelligent,
            };
        }
        Ok(())
    })
}

/// `⟨I(t)|I(t)⟩_S` at every sample. May overflow to infinity for long runs
/// with growing modes; use [`nhk_evolution_log_s_norms`] then.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nhk_evolution_s_norms(evolution: *const NhkEvolution, out_buf: *mut f64, len: usize) -> NhkStatus {
    guard(|| {
        let e = get(evolution, "evolution")?;
        check_len(e.result.len(), len)?;
        slice_mut(out_buf, len, "out")?[..e.result.len()].copy_from_slice(&e.result.s_norms);
        Ok(())
    })
}

/// `ln ⟨I(t)|I(t)⟩_S` at every sample, computed without overflow.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nhk_evolution_log_s_norms(evolution: *const NhkEvolution, out_buf: *mut f64, len: usize) -> NhkStatus {
    guard(|| {
        let e = get(evolution, "evolution")?;
        check_len(e.result.len(), len)?;
        let buf = slice_mut(out_buf, len, "out")?;
        let s_k = &e.prepared.metric.s_k;
        for (k, state) in e.result.states.iter().enumerate() {
            buf[k] = state.dotc(&(s_k * state)).re.ln() + 2.0 * e.result.log_scale[k];
        }
        Ok(())
    })
}
