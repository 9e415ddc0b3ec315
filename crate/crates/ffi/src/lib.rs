//! C ABI for the curved-qit toolkit.
//!
//! All functions return a `CqStatus` code; results come back through out
//! pointers. Handles are opaque and must be released with the matching
//! `_free` function. The last error message is kept in thread-local storage
//! and can be fetched with `cq_last_error`. The matching C declarations live
//! in `include/curved_qit.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::slice;

use num_complex::Complex64;

use curved_qit::channel::KrausChannel;
use curved_qit::fell::{certify, solve_fell};
use curved_qit::hilbert::{
    annihilation_op, expectation, number_op, trace_distance, CMatrix, DensityMatrix, FockSpace,
    Operator,
};
use curved_qit::io::{FellProblemJson, FellSolutionJson};
use curved_qit::povm::{neumark_dilate, OutcomeSet, POVM};
use curved_qit::unruh::{
    detector_povm, rindler_thermal_state, two_mode_squeezed_state, SqueezeMethod, SqueezingParams,
};
use curved_qit::QitError;

/// Status codes mirrored in the C header.
pub const CQ_OK: i32 = 0;
pub const CQ_ERR_NULL: i32 = 1;
pub const CQ_ERR_INVALID: i32 = 2;
pub const CQ_ERR_VALIDATION: i32 = 3;
pub const CQ_ERR_NUMERIC: i32 = 4;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap());
}

fn classify(e: &QitError) -> i32 {
    match e {
        QitError::NotPositive { .. }
        | QitError::Incomplete { .. }
        | QitError::NotHermitian { .. }
        | QitError::NotUnitary { .. }
        | QitError::NotAntihermitian { .. }
        | QitError::NotCompletelyPositive { .. }
        | QitError::BadNormalization { .. }
        | QitError::InvalidDensityMatrix { .. }
        | QitError::ProvablyInfeasible { .. } => CQ_ERR_VALIDATION,
        QitError::NegligibleOutcome { .. } | QitError::DualityMismatch { .. } => CQ_ERR_NUMERIC,
        _ => CQ_ERR_INVALID,
    }
}

fn fail(e: QitError) -> i32 {
    let code = classify(&e);
    set_error(&e.to_string());
    code
}

macro_rules! nonnull {
    ($ptr:expr) => {
        match unsafe { $ptr.as_ref() } {
            Some(r) => r,
            None => {
                set_error("null pointer argument");
                return CQ_ERR_NULL;
            }
        }
    };
}

macro_rules! out_ptr {
    ($ptr:expr) => {
        match unsafe { $ptr.as_mut() } {
            Some(r) => r,
            None => {
                set_error("null out pointer");
                return CQ_ERR_NULL;
            }
        }
    };
}

/// Opaque Fock space handle.
pub struct CqSpace(FockSpace);
/// Opaque operator handle.
pub struct CqOperator(Operator);
/// Opaque density matrix handle.
pub struct CqState(DensityMatrix);
/// Opaque POVM handle.
pub struct CqPovm(POVM);
/// Opaque channel handle.
pub struct CqChannel(KrausChannel);

/// Copies the last error message into `buf` (truncated to `cap` bytes
/// including the terminator). Returns the full message length.
#[no_mangle]
pub extern "C" fn cq_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n - 1) = 0;
            }
        }
        bytes.len() - 1
    })
}

#[no_mangle]
pub extern "C" fn cq_space_new(modes: usize, cutoff: usize, out: *mut *mut CqSpace) -> i32 {
    let slot = out_ptr!(out);
    match FockSpace::new(modes, cutoff) {
        Ok(s) => {
            *slot = Box::into_raw(Box::new(CqSpace(s)));
            CQ_OK
        }
        Err(e) => fail(e),
    }
}

#[no_mangle]
pub extern "C" fn cq_space_dim(space: *const CqSpace) -> usize {
    unsafe { space.as_ref() }.map_or(0, |s| s.0.dim())
}

#[no_mangle]
pub extern "C" fn cq_space_free(space: *mut CqSpace) {
    if !space.is_null() {
        drop(unsafe { Box::from_raw(space) });
    }
}

fn matrix_from_parts(dim: usize, re: *const f64, im: *const f64) -> Option<CMatrix> {
    if re.is_null() || im.is_null() {
        return None;
    }
    let re = unsafe { slice::from_raw_parts(re, dim * dim) };
    let im = unsafe { slice::from_raw_parts(im, dim * dim) };
    Some(CMatrix::from_fn(dim, dim, |i, j| {
        Complex64::new(re[i * dim + j], im[i * dim + j])
    }))
}

fn matrix_to_parts(m: &CMatrix, re: *mut f64, im: *mut f64) -> i32 {
    if re.is_null() || im.is_null() {
        set_error("null output buffer");
        return CQ_ERR_NULL;
    }
    let d = m.nrows();
    let re = unsafe { slice::from_raw_parts_mut(re, d * d) };
    let im = unsafe { slice::from_raw_parts_mut(im, d * d) };
    for i in 0..d {
        for j in 0..d {
            re[i * d + j] = m[(i, j)].re;
            im[i * d + j] = m[(i, j)].im;
        }
    }
    CQ_OK
}

/// Builds an operator from row-major `dim*dim` real and imaginary arrays.
#[no_mangle]
pub extern "C" fn cq_operator_new(
    space: *const CqSpace,
    re: *const f64,
    im: *const f64,
    out: *mut *mut CqOperator,
) -> i32 {
    let space = nonnull!(space);
    let slot = out_ptr!(out);
    let Some(m) = matrix_from_parts(space.0.dim(), re, im) else {
        set_error("null matrix data");
        return CQ_ERR_NULL;
    };
    match Operator::new(space.0, m) {
        Ok(op) => {
            *slot = Box::into_raw(Box::new(CqOperator(op)));
            CQ_OK
        }
        Err(e) => fail(e),
    }
}

#[no_mangle]
pub extern "C" fn cq_operator_free(op: *mut CqOperator) {
    if !op.is_null() {
        drop(unsafe { Box::from_raw(op) });
    }
}

#[no_mangle]
pub extern "C" fn cq_annihilation_op(
    space: *const CqSpace,
    mode: usize,
    out: *mut *mut CqOperator,
) -> i32 {
    let space = nonnull!(space);
    let slot = out_ptr!(out);
    match annihilation_op(space.0, mode) {
        Ok(op) => {
            *slot = Box::into_raw(Box::new(CqOperator(op)));
            CQ_OK
        }
        Err(e) => fail(e),
    }
}

#[no_mangle]
pub extern "C" fn cq_number_op(
    space: *const CqSpace,
    mode: usize,
    out: *mut *mut CqOperator,
) -> i32 {
    let space = nonnull!(space);
    let slot = out_ptr!(out);
    match number_op(space.0, mode) {
        Ok(op) => {
            *slot = Box::into_raw(Box::new(CqOperator(op)));
            CQ_OK
        }
        Err(e) => fail(e),
    }
}

/// Builds a density matrix, checking the structural invariants at `tol`.
#[no_mangle]
pub extern "C" fn cq_state_new(
    space: *const CqSpace,
    re: *const f64,
    im: *const f64,
    tol: f64,
    out: *mut *mut CqState,
) -> i32 {
    let space = nonnull!(space);
    let slot = out_ptr!(out);
    let Some(m) = matrix_from_parts(space.0.dim(), re, im) else {
        set_error("null matrix data");
        return CQ_ERR_NULL;
    };
    match DensityMatrix::new(space.0, m, tol) {
        Ok(rho) => {
            *slot = Box::into_raw(Box::new(CqState(rho)));
            CQ_OK
        }
        Err(e) => fail(e),
    }
}

#[no_mangle]
pub extern "C" fn cq_state_maximally_mixed(space: *const CqSpace, out: *mut *mut CqState) -> i32 {
    let space = nonnull!(space);
    let slot = out_ptr!(out);
    *slot = Box::into_raw(Box::new(CqState(DensityMatrix::maximally_mixed(space.0))));
    CQ_OK
}

/// Copies the state's entries into row-major `dim*dim` buffers.
#[no_mangle]
pub extern "C" fn cq_state_entries(state: *const CqState, re: *mut f64, im: *mut f64) -> i32 {
    let state = nonnull!(state);
    matrix_to_parts(state.0.entries(), re, im)
}

#[no_mangle]
pub extern "C" fn cq_state_free(state: *mut CqState) {
    if !state.is_null() {
        drop(unsafe { Box::from_raw(state) });
    }
}

/// Truncated Gibbs state of the accelerated observer at `kT = a / 2 pi`.
#[no_mangle]
pub extern "C" fn cq_thermal_state(
    space: *const CqSpace,
    acceleration: f64,
    omega: f64,
    out: *mut *mut CqState,
) -> i32 {
    let space = nonnull!(space);
    let slot = out_ptr!(out);
    let result = SqueezingParams::new(acceleration, omega)
        .and_then(|p| rindler_thermal_state(space.0, &p));
    match result {
        Ok(rho) => {
            *slot = Box::into_raw(Box::new(CqState(rho)));
            CQ_OK
        }
        Err(e) => fail(e),
    }
}

/// Two-mode squeezed vacuum; `method` 0 = series, 1 = generator.
#[no_mangle]
pub extern "C" fn cq_two_mode_squeezed_state(
    space: *const CqSpace,
    acceleration: f64,
    omega: f64,
    method: i32,
    out: *mut *mut CqState,
) -> i32 {
    let space = nonnull!(space);
    let slot = out_ptr!(out);
    let m = match method {
        0 => SqueezeMethod::Series,
        1 => SqueezeMethod::Generator,
        _ => {
            set_error("method must be 0 (series) or 1 (generator)");
            return CQ_ERR_INVALID;
        }
    };
    let result = SqueezingParams::new(acceleration, omega)
        .and_then(|p| two_mode_squeezed_state(space.0, &p, m));
    match result {
        Ok(rho) => {
            *slot = Box::into_raw(Box::new(CqState(rho)));
            CQ_OK
        }
        Err(e) => fail(e),
    }
}

#[no_mangle]
pub extern "C" fn cq_expectation(
    state: *const CqState,
    op: *const CqOperator,
    re: *mut f64,
    im: *mut f64,
) -> i32 {
    let state = nonnull!(state);
    let op = nonnull!(op);
    let re = out_ptr!(re);
    let im = out_ptr!(im);
    match expectation(&state.0, &op.0) {
        Ok(v) => {
            *re = v.re;
            *im = v.im;
            CQ_OK
        }
        Err(e) => fail(e),
    }
}

#[no_mangle]
pub extern "C" fn cq_trace_distance(
    a: *const CqState,
    b: *const CqState,
    out: *mut f64,
) -> i32 {
    let a = nonnull!(a);
    let b = nonnull!(b);
    let slot = out_ptr!(out);
    match trace_distance(&a.0, &b.0) {
        Ok(d) => {
            *slot = d;
            CQ_OK
        }
        Err(e) => fail(e),
    }
}

/// Validates the POVM axioms for `n` effects and returns the measure.
/// Outcome labels are the indices "0".."n-1".
#[no_mangle]
pub extern "C" fn cq_povm_new(
    effects: *const *const CqOperator,
    n: usize,
    tol: f64,
    out: *mut *mut CqPovm,
) -> i32 {
    let slot = out_ptr!(out);
    if effects.is_null() || n == 0 {
        set_error("effects must be a nonempty array");
        return CQ_ERR_NULL;
    }
    let handles = unsafe { slice::from_raw_parts(effects, n) };
    let mut ops = Vec::with_capacity(n);
    for &h in handles {
        match unsafe { h.as_ref() } {
            Some(op) => ops.push(op.0.clone()),
            None => {
                set_error("null effect handle");
                return CQ_ERR_NULL;
            }
        }
    }
    match POVM::new(OutcomeSet::indexed(n), ops, tol) {
        Ok(p) => {
            *slot = Box::into_raw(Box::new(CqPovm(p)));
            CQ_OK
        }
        Err(e) => fail(e),
    }
}

/// Detector POVM `{alpha a(chi)^dag a(chi), I - ...}`; outcome 0 is the click.
#[no_mangle]
pub extern "C" fn cq_detector_povm(
    space: *const CqSpace,
    alpha: f64,
    chi_re: *const f64,
    chi_im: *const f64,
    out: *mut *mut CqPovm,
) -> i32 {
    let space = nonnull!(space);
    let slot = out_ptr!(out);
    if chi_re.is_null() || chi_im.is_null() {
        set_error("null mode function");
        return CQ_ERR_NULL;
    }
    let m = space.0.modes();
    let re = unsafe { slice::from_raw_parts(chi_re, m) };
    let im = unsafe { slice::from_raw_parts(chi_im, m) };
    let chi: Vec<Complex64> = re
        .iter()
        .zip(im)
        .map(|(&r, &i)| Complex64::new(r, i))
        .collect();
    match detector_povm(space.0, alpha, &chi) {
        Ok(d) => {
            *slot = Box::into_raw(Box::new(CqPovm(d.povm().clone())));
            CQ_OK
        }
        Err(e) => fail(e),
    }
}

#[no_mangle]
pub extern "C" fn cq_povm_outcomes(povm: *const CqPovm) -> usize {
    unsafe { povm.as_ref() }.map_or(0, |p| p.0.outcomes().len())
}

/// Writes the outcome probabilities into `out` (length = outcome count).
#[no_mangle]
pub extern "C" fn cq_povm_probabilities(
    povm: *const CqPovm,
    state: *const CqState,
    out: *mut f64,
) -> i32 {
    let povm = nonnull!(povm);
    let state = nonnull!(state);
    if out.is_null() {
        set_error("null output buffer");
        return CQ_ERR_NULL;
    }
    match povm.0.probabilities(&state.0) {
        Ok(p) => {
            let buf = unsafe { slice::from_raw_parts_mut(out, p.len()) };
            buf.copy_from_slice(&p);
            CQ_OK
        }
        Err(e) => fail(e),
    }
}

/// Builds the Neumark dilation and reports the isometry residual and the
/// worst compression residual.
#[no_mangle]
pub extern "C" fn cq_neumark_check(
    povm: *const CqPovm,
    isometry_residual: *mut f64,
    compression_residual: *mut f64,
) -> i32 {
    let povm = nonnull!(povm);
    let iso = out_ptr!(isometry_residual);
    let comp = out_ptr!(compression_residual);
    match neumark_dilate(&povm.0) {
        Ok(dil) => {
            *iso = dil.isometry_residual();
            *comp = (0..povm.0.effects().len())
                .map(|k| dil.compression_residual(k))
                .fold(0f64, f64::max);
            CQ_OK
        }
        Err(e) => fail(e),
    }
}

#[no_mangle]
pub extern "C" fn cq_povm_free(povm: *mut CqPovm) {
    if !povm.is_null() {
        drop(unsafe { Box::from_raw(povm) });
    }
}

/// Builds a channel from `n` Kraus operator handles.
#[no_mangle]
pub extern "C" fn cq_channel_new(
    kraus: *const *const CqOperator,
    n: usize,
    selective: bool,
    tol: f64,
    out: *mut *mut CqChannel,
) -> i32 {
    let slot = out_ptr!(out);
    if kraus.is_null() || n == 0 {
        set_error("kraus must be a nonempty array");
        return CQ_ERR_NULL;
    }
    let handles = unsafe { slice::from_raw_parts(kraus, n) };
    let mut ops = Vec::with_capacity(n);
    for &h in handles {
        match unsafe { h.as_ref() } {
            Some(op) => ops.push(op.0.clone()),
            None => {
                set_error("null Kraus handle");
                return CQ_ERR_NULL;
            }
        }
    }
    match KrausChannel::new(ops, selective, tol) {
        Ok(t) => {
            *slot = Box::into_raw(Box::new(CqChannel(t)));
            CQ_OK
        }
        Err(e) => fail(e),
    }
}

/// Applies the channel; `weight` receives the outcome probability (1 for
/// non-selective channels).
#[no_mangle]
pub extern "C" fn cq_channel_apply(
    channel: *const CqChannel,
    state: *const CqState,
    out: *mut *mut CqState,
    weight: *mut f64,
) -> i32 {
    let channel = nonnull!(channel);
    let state = nonnull!(state);
    let slot = out_ptr!(out);
    let w = out_ptr!(weight);
    match channel.0.apply(&state.0) {
        Ok(o) => {
            *w = o.weight;
            *slot = Box::into_raw(Box::new(CqState(o.rho)));
            CQ_OK
        }
        Err(e) => fail(e),
    }
}

/// Minimum eigenvalue of the channel's Choi matrix (>= 0 for CP maps).
#[no_mangle]
pub extern "C" fn cq_channel_choi_min_eigenvalue(
    channel: *const CqChannel,
    out: *mut f64,
) -> i32 {
    let channel = nonnull!(channel);
    let slot = out_ptr!(out);
    *slot = channel.0.choi().min_eigenvalue();
    CQ_OK
}

#[no_mangle]
pub extern "C" fn cq_channel_free(channel: *mut CqChannel) {
    if !channel.is_null() {
        drop(unsafe { Box::from_raw(channel) });
    }
}

/// Solves an expectation-matching problem given as problem JSON and returns
/// the solution JSON (free with `cq_string_free`). Returns CQ_ERR_VALIDATION
/// when the best iterate misses a tolerance; the solution JSON is still
/// produced in that case.
#[no_mangle]
pub extern "C" fn cq_fell_solve_json(problem_json: *const c_char, out: *mut *mut c_char) -> i32 {
    let slot = out_ptr!(out);
    if problem_json.is_null() {
        set_error("null problem json");
        return CQ_ERR_NULL;
    }
    let text = match unsafe { CStr::from_ptr(problem_json) }.to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("problem json is not valid UTF-8");
            return CQ_ERR_INVALID;
        }
    };
    let parsed: FellProblemJson = match serde_json::from_str(text) {
        Ok(p) => p,
        Err(e) => {
            set_error(&format!("json error: {e}"));
            return CQ_ERR_INVALID;
        }
    };
    let problem = match parsed.to_problem(curved_qit::DEFAULT_TOL) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let solution = match solve_fell(&problem) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let report = match certify(&problem, &solution) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let out_json = serde_json::to_string(&FellSolutionJson::from_solution(&solution))
        .expect("serializable");
    *slot = CString::new(out_json).expect("no NUL in json").into_raw();
    if report.pass {
        CQ_OK
    } else {
        set_error("solution did not meet every tolerance");
        CQ_ERR_VALIDATION
    }
}

/// Frees a string returned by this library.
#[no_mangle]
pub extern "C" fn cq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_lifecycle_and_dim() {
        let mut space: *mut CqSpace = std::ptr::null_mut();
        assert_eq!(cq_space_new(1, 2, &mut space), CQ_OK);
        assert_eq!(cq_space_dim(space), 3);
        cq_space_free(space);
    }

    #[test]
    fn invalid_space_sets_error() {
        let mut space: *mut CqSpace = std::ptr::null_mut();
        assert_ne!(cq_space_new(0, 2, &mut space), CQ_OK);
        let mut buf = [0i8; 128];
        let n = cq_last_error(buf.as_mut_ptr() as *mut c_char, buf.len());
        assert!(n > 0);
    }

    #[test]
    fn detector_probabilities_through_ffi() {
        let mut space: *mut CqSpace = std::ptr::null_mut();
        assert_eq!(cq_space_new(1, 30, &mut space), CQ_OK);
        let mut povm: *mut CqPovm = std::ptr::null_mut();
        let chi_re = [1.0f64];
        let chi_im = [0.0f64];
        assert_eq!(
            cq_detector_povm(space, 0.01, chi_re.as_ptr(), chi_im.as_ptr(), &mut povm),
            CQ_OK
        );
        let mut state: *mut CqState = std::ptr::null_mut();
        assert_eq!(
            cq_thermal_state(space, std::f64::consts::TAU, 1.0, &mut state),
            CQ_OK
        );
        let mut probs = [0.0f64; 2];
        assert_eq!(cq_povm_probabilities(povm, state, probs.as_mut_ptr()), CQ_OK);
        let expect = 0.01 / (std::f64::consts::E - 1.0);
        assert!((probs[0] - expect).abs() < 1e-9);
        cq_state_free(state);
        cq_povm_free(povm);
        cq_space_free(space);
    }

    #[test]
    fn neumark_check_through_ffi() {
        let mut space: *mut CqSpace = std::ptr::null_mut();
        assert_eq!(cq_space_new(1, 1, &mut space), CQ_OK);
        let d = cq_space_dim(space);
        let re: Vec<f64> = (0..d * d)
            .map(|k| if k % (d + 1) == 0 { 0.5 } else { 0.0 })
            .collect();
        let im = vec![0.0; d * d];
        let mut e1: *mut CqOperator = std::ptr::null_mut();
        let mut e2: *mut CqOperator = std::ptr::null_mut();
        assert_eq!(cq_operator_new(space, re.as_ptr(), im.as_ptr(), &mut e1), CQ_OK);
        assert_eq!(cq_operator_new(space, re.as_ptr(), im.as_ptr(), &mut e2), CQ_OK);
        let effects = [e1 as *const CqOperator, e2 as *const CqOperator];
        let mut povm: *mut CqPovm = std::ptr::null_mut();
        assert_eq!(cq_povm_new(effects.as_ptr(), 2, 1e-9, &mut povm), CQ_OK);
        let (mut iso, mut comp) = (f64::NAN, f64::NAN);
        assert_eq!(cq_neumark_check(povm, &mut iso, &mut comp), CQ_OK);
        assert!(iso < 1e-12 && comp < 1e-10);
        cq_povm_free(povm);
        cq_operator_free(e1);
        cq_operator_free(e2);
        cq_space_free(space);
    }

    #[test]
    fn fell_solve_json_roundtrip() {
        let mut space: *mut CqSpace = std::ptr::null_mut();
        assert_eq!(cq_space_new(1, 2, &mut space), CQ_OK);
        cq_space_free(space);
        let problem = r#"{
            "space": {"modes": 1, "cutoff": 2},
            "constraints": [{
                "A": {"dim": 3,
                      "re": [[0.0,0.0,0.0],[0.0,1.0,0.0],[0.0,0.0,2.0]],
                      "im": [[0.0,0.0,0.0],[0.0,0.0,0.0],[0.0,0.0,0.0]]},
                "c": 0.5, "eps": 1e-6
            }],
            "max_iters": 10000, "seed": 1
        }"#;
        let c_problem = CString::new(problem).unwrap();
        let mut out: *mut c_char = std::ptr::null_mut();
        assert_eq!(cq_fell_solve_json(c_problem.as_ptr(), &mut out), CQ_OK);
        let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
        cq_string_free(out);
        assert!(text.contains("\"status\":\"Feasible\""));
    }
}
