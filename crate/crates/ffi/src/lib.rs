//! C ABI for the zerobit library.
//!
//! Every fallible function returns a [`ZbStatus`]; on failure a message is
//! available from [`zb_last_error_message`] on the calling thread. Handles
//! are opaque and must be released with the matching `_free` function.
//! Panics never cross the boundary; they surface as `ZB_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use zerobit::exponents::{efn_attack_free, efn_closed_form, efn_numeric_oracle, positivity_thresholds};
use zerobit::{
    derive_geometry, detect, embed_optimal, embed_sign, generate_watermark, simulate_fn,
    simulate_fp, EmbedBranch, EmbedResult, EmbedderKind, Error, ExponentMethod, ExponentReport,
    HostSignal, SystemParams, TrialConfig, WatermarkSequence, ZeroReason,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    LengthMismatch = 3,
    NonConvergence = 4,
    Panic = 5,
    Internal = 6,
}

/// Model parameters (σ_X², σ_Z², D, λ), validated on construction.
pub struct ZbParams {
    inner: SystemParams,
}

/// A ±1 watermark sequence.
pub struct ZbWatermark {
    inner: WatermarkSequence,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZbExponentMethod {
    ClosedForm = 0,
    AttackFree = 1,
    NumericOracle = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZbZeroReason {
    None = 0,
    GlobalMinFeasible = 1,
    InsufficientDistortion = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZbExponentReport {
    pub e_fn: f64,
    pub r_star: f64,
    pub q_star: f64,
    pub method: ZbExponentMethod,
    pub zero_reason: ZbZeroReason,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZbDetection {
    pub rho_abs: f64,
    pub empirical_mi: f64,
    pub threshold: f64,
    pub present: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZbBranch {
    Optimal = 0,
    DegenerateShrink = 1,
    Sign = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZbEmbedInfo {
    pub a: f64,
    pub b: f64,
    pub r: f64,
    pub alpha: f64,
    pub distortion_used: f64,
    pub branch: ZbBranch,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZbSimKind {
    FalseNegative = 0,
    FalsePositive = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZbEmbedder {
    Optimal = 0,
    Sign = 1,
    None = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZbBatchResult {
    pub n: usize,
    pub trials: u64,
    pub failures: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// NaN when no failure was observed.
    pub empirical_exponent: f64,
    pub master_seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> ZbStatus {
    match err {
        Error::InvalidParameter { .. } => ZbStatus::InvalidParameter,
        Error::LengthMismatch { .. } => ZbStatus::LengthMismatch,
        Error::NonConvergence { .. } => ZbStatus::NonConvergence,
        _ => ZbStatus::Internal,
    }
}

struct Fail(ZbStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(ZbStatus::NullPointer, format!("`{what}` is null"))
}

/// Runs `body`, recording any failure or panic as the thread's last error.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> ZbStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => ZbStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {msg}"));
            ZbStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(data: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

fn report(r: ExponentReport) -> ZbExponentReport {
    ZbExponentReport {
        e_fn: r.e_fn,
        r_star: r.r_star,
        q_star: r.q_star,
        method: match r.method {
            ExponentMethod::ClosedForm => ZbExponentMethod::ClosedForm,
            ExponentMethod::AttackFree => ZbExponentMethod::AttackFree,
            ExponentMethod::NumericOracle => ZbExponentMethod::NumericOracle,
        },
        zero_reason: match r.zero_reason {
            None => ZbZeroReason::None,
            Some(ZeroReason::GlobalMinFeasible) => ZbZeroReason::GlobalMinFeasible,
            Some(ZeroReason::InsufficientDistortion) => ZbZeroReason::InsufficientDistortion,
        },
    }
}

fn embed_info(r: &EmbedResult) -> ZbEmbedInfo {
    ZbEmbedInfo {
        a: r.a,
        b: r.b,
        r: r.coords.r,
        alpha: r.coords.alpha,
        distortion_used: r.distortion_used,
        branch: match r.branch {
            EmbedBranch::Optimal => ZbBranch::Optimal,
            EmbedBranch::DegenerateShrink => ZbBranch::DegenerateShrink,
            EmbedBranch::Sign => ZbBranch::Sign,
        },
    }
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn zb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn zb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn zb_params_new(
    host_variance: f64,
    attack_variance: f64,
    distortion: f64,
    fp_exponent: f64,
    out: *mut *mut ZbParams,
) -> ZbStatus {
    guard(|| {
        let slot = out_ptr(out)?;
        let inner = SystemParams::new(host_variance, attack_variance, distortion, fp_exponent)?;
        *slot = Box::into_raw(Box::new(ZbParams { inner }));
        Ok(())
    })
}

unsafe fn out_ptr<'a, T>(out: *mut *mut T) -> Result<&'a mut *mut T, Fail> {
    let slot = out.as_mut().ok_or_else(|| null("out"))?;
    *slot = ptr::null_mut();
    Ok(slot)
}

/// # Safety
/// `params` must come from `zb_params_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn zb_params_free(params: *mut ZbParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

unsafe fn params_ref<'a>(p: *const ZbParams) -> Result<&'a SystemParams, Fail> {
    p.as_ref().map(|p| &p.inner).ok_or_else(|| null("params"))
}

unsafe fn watermark_ref<'a>(w: *const ZbWatermark) -> Result<&'a WatermarkSequence, Fail> {
    w.as_ref().map(|w| &w.inner).ok_or_else(|| null("watermark"))
}

/// Optimum false-negative exponent (closed form, attack-free when σ_Z² = 0).
///
/// # Safety
/// `params` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn zb_exponent(params: *const ZbParams, out: *mut ZbExponentReport) -> ZbStatus {
    guard(|| {
        let p = params_ref(params)?;
        let dst = self::out(out, "out")?;
        *dst = report(efn_closed_form(p)?);
        Ok(())
    })
}

/// Brute-force minimization of the same objective, for cross-checking.
///
/// # Safety
/// As for [`zb_exponent`].
#[no_mangle]
pub unsafe extern "C" fn zb_exponent_oracle(
    params: *const ZbParams,
    tol: f64,
    out: *mut ZbExponentReport,
) -> ZbStatus {
    guard(|| {
        let p = params_ref(params)?;
        let dst = self::out(out, "out")?;
        *dst = report(efn_numeric_oracle(p, tol)?);
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn zb_exponent_attack_free(
    distortion: f64,
    host_variance: f64,
    fp_exponent: f64,
    out: *mut ZbExponentReport,
) -> ZbStatus {
    guard(|| {
        let dst = self::out(out, "out")?;
        *dst = report(efn_attack_free(distortion, host_variance, fp_exponent)?);
        Ok(())
    })
}

/// λ₁ (optimum embedder; +inf when D ≥ σ_X²) and λ₂ (sign embedder).
///
/// # Safety
/// Both output pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn zb_positivity_thresholds(
    distortion: f64,
    host_variance: f64,
    lambda1: *mut f64,
    lambda2: *mut f64,
) -> ZbStatus {
    guard(|| {
        let l1 = out(lambda1, "lambda1")?;
        let l2 = out(lambda2, "lambda2")?;
        (*l1, *l2) = positivity_thresholds(distortion, host_variance)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn zb_watermark_generate(n: usize, seed: u64, out: *mut *mut ZbWatermark) -> ZbStatus {
    guard(|| {
        let slot = out_ptr(out)?;
        let inner = generate_watermark(n, seed)?;
        *slot = Box::into_raw(Box::new(ZbWatermark { inner }));
        Ok(())
    })
}

/// Builds a watermark from `n` entries, each +1 or -1.
///
/// # Safety
/// `signs` must point to `n` readable bytes and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn zb_watermark_from_signs(
    signs: *const i8,
    n: usize,
    out: *mut *mut ZbWatermark,
) -> ZbStatus {
    guard(|| {
        let slot = out_ptr(out)?;
        let inner = WatermarkSequence::from_signs(slice(signs, n, "signs")?)?;
        *slot = Box::into_raw(Box::new(ZbWatermark { inner }));
        Ok(())
    })
}

/// Length of the watermark, 0 for NULL.
///
/// # Safety
/// `watermark` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zb_watermark_len(watermark: *const ZbWatermark) -> usize {
    watermark.as_ref().map_or(0, |w| w.inner.len())
}

/// Copies the ±1 entries into `buf`, which must hold exactly `len` values.
///
/// # Safety
/// `buf` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn zb_watermark_copy(watermark: *const ZbWatermark, buf: *mut f64, len: usize) -> ZbStatus {
    guard(|| {
        let u = watermark_ref(watermark)?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len != u.len() {
            return Err(Error::LengthMismatch {
                expected: u.len(),
                actual: len,
            }
            .into());
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(u.as_slice());
        Ok(())
    })
}

/// # Safety
/// `watermark` must come from a `zb_watermark_*` constructor and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn zb_watermark_free(watermark: *mut ZbWatermark) {
    if !watermark.is_null() {
        drop(Box::from_raw(watermark));
    }
}

/// Hypercone detection at false-positive exponent `fp_exponent`.
///
/// # Safety
/// `signal` must point to `len` readable values; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn zb_detect(
    signal: *const f64,
    len: usize,
    watermark: *const ZbWatermark,
    fp_exponent: f64,
    out: *mut ZbDetection,
) -> ZbStatus {
    guard(|| {
        let s = slice(signal, len, "signal")?;
        let u = watermark_ref(watermark)?;
        let dst = self::out(out, "out")?;
        let rep = detect(s, u, &derive_geometry(fp_exponent)?)?;
        *dst = ZbDetection {
            rho_abs: rep.rho_abs,
            empirical_mi: rep.empirical_mi,
            threshold: rep.threshold,
            present: rep.decision,
        };
        Ok(())
    })
}

unsafe fn finish_embed(
    result: EmbedResult,
    y: *mut f64,
    len: usize,
    info: *mut ZbEmbedInfo,
) -> Result<(), Fail> {
    std::slice::from_raw_parts_mut(y, len).copy_from_slice(&result.y);
    if let Some(dst) = info.as_mut() {
        *dst = embed_info(&result);
    }
    Ok(())
}

/// Optimum embedder. Writes `len` samples to `y`; `info` may be NULL.
///
/// # Safety
/// `host` must point to `len` readable values, `y` to `len` writable ones.
#[no_mangle]
pub unsafe extern "C" fn zb_embed_optimal(
    host: *const f64,
    len: usize,
    watermark: *const ZbWatermark,
    distortion: f64,
    fp_exponent: f64,
    y: *mut f64,
    info: *mut ZbEmbedInfo,
) -> ZbStatus {
    guard(|| {
        let x = HostSignal::new(slice(host, len, "host")?.to_vec())?;
        let u = watermark_ref(watermark)?;
        if y.is_null() {
            return Err(null("y"));
        }
        let result = embed_optimal(&x, u, distortion, &derive_geometry(fp_exponent)?)?;
        finish_embed(result, y, len, info)
    })
}

/// Sign embedder `y = x + sign(<x, u>) √D u`.
///
/// # Safety
/// As for [`zb_embed_optimal`].
#[no_mangle]
pub unsafe extern "C" fn zb_embed_sign(
    host: *const f64,
    len: usize,
    watermark: *const ZbWatermark,
    distortion: f64,
    y: *mut f64,
    info: *mut ZbEmbedInfo,
) -> ZbStatus {
    guard(|| {
        let x = HostSignal::new(slice(host, len, "host")?.to_vec())?;
        let u = watermark_ref(watermark)?;
        if y.is_null() {
            return Err(null("y"));
        }
        let result = embed_sign(&x, u, distortion)?;
        finish_embed(result, y, len, info)
    })
}

/// Seeded Monte Carlo batch. False-positive runs require `ZB_EMBEDDER_NONE`.
///
/// # Safety
/// `params` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn zb_simulate(
    params: *const ZbParams,
    kind: ZbSimKind,
    embedder: ZbEmbedder,
    n: usize,
    trials: u64,
    master_seed: u64,
    out: *mut ZbBatchResult,
) -> ZbStatus {
    guard(|| {
        let p = params_ref(params)?;
        let dst = self::out(out, "out")?;
        let config = TrialConfig {
            n,
            trials,
            params: *p,
            embedder: match embedder {
                ZbEmbedder::Optimal => EmbedderKind::Optimal,
                ZbEmbedder::Sign => EmbedderKind::Sign,
                ZbEmbedder::None => EmbedderKind::None,
            },
            master_seed,
            pinned_watermark: None,
        };
        let res = match kind {
            ZbSimKind::FalseNegative => simulate_fn(&config)?,
            ZbSimKind::FalsePositive => simulate_fp(&config)?,
        };
        *dst = ZbBatchResult {
            n: res.n,
            trials: res.trials,
            failures: res.failures,
            p_hat: res.p_hat,
            ci_low: res.ci_low,
            ci_high: res.ci_high,
            empirical_exponent: res.empirical_exponent.unwrap_or(f64::NAN),
            master_seed: res.master_seed,
        };
        Ok(())
    })
}
