use std::ffi::CStr;
use std::ptr;

use zerobit_ffi::*;

fn params(sx2: f64, sz2: f64, d: f64, lambda: f64) -> *mut ZbParams {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { zb_params_new(sx2, sz2, d, lambda, &mut p) }, ZbStatus::Ok);
    assert!(!p.is_null());
    p
}

fn empty_report() -> ZbExponentReport {
    ZbExponentReport {
        e_fn: f64::NAN,
        r_star: f64::NAN,
        q_star: f64::NAN,
        method: ZbExponentMethod::ClosedForm,
        zero_reason: ZbZeroReason::None,
    }
}

#[test]
fn exponent_round_trip() {
    let p = params(1.0, 0.0, 2.0, 0.6);
    let mut r = empty_report();
    assert_eq!(unsafe { zb_exponent(p, &mut r) }, ZbStatus::Ok);
    assert_eq!(r.method, ZbExponentMethod::AttackFree);
    assert!((r.e_fn - 0.405_247_961_483_143_6).abs() < 1e-12);

    let q = params(1.0, 0.5, 2.0, 0.6);
    let (mut cf, mut or) = (empty_report(), empty_report());
    unsafe {
        assert_eq!(zb_exponent(q, &mut cf), ZbStatus::Ok);
        assert_eq!(zb_exponent_oracle(q, 1e-10, &mut or), ZbStatus::Ok);
    }
    assert_eq!(or.method, ZbExponentMethod::NumericOracle);
    assert!((cf.e_fn - or.e_fn).abs() < 1e-6);

    // the oracle needs σ_Z² > 0
    assert_eq!(unsafe { zb_exponent_oracle(p, 1e-10, &mut or) }, ZbStatus::InvalidParameter);
    let msg = unsafe { CStr::from_ptr(zb_last_error_message()) }.to_str().unwrap().to_owned();
    assert!(msg.contains("attack_variance"), "{msg}");
    unsafe {
        zb_params_free(p);
        zb_params_free(q);
    }
}

#[test]
fn thresholds_and_attack_free() {
    let (mut l1, mut l2) = (0.0, 0.0);
    assert_eq!(unsafe { zb_positivity_thresholds(0.75, 1.0, &mut l1, &mut l2) }, ZbStatus::Ok);
    assert!((l1 - std::f64::consts::LN_2).abs() < 1e-12);
    assert!((l2 - 0.279_807_893_967_711_33).abs() < 1e-12);
    let mut r = empty_report();
    assert_eq!(unsafe { zb_exponent_attack_free(0.5, 1.0, 0.6, &mut r) }, ZbStatus::Ok);
    assert_eq!(r.zero_reason, ZbZeroReason::InsufficientDistortion);
    assert_eq!(unsafe { zb_positivity_thresholds(0.75, 1.0, ptr::null_mut(), &mut l2) }, ZbStatus::NullPointer);
}

#[test]
fn embed_then_detect() {
    let n = 256;
    let mut w = ptr::null_mut();
    assert_eq!(unsafe { zb_watermark_generate(n, 7, &mut w) }, ZbStatus::Ok);
    assert_eq!(unsafe { zb_watermark_len(w) }, n);
    let mut u = vec![0.0; n];
    assert_eq!(unsafe { zb_watermark_copy(w, u.as_mut_ptr(), n) }, ZbStatus::Ok);
    assert!(u.iter().all(|v| v.abs() == 1.0));
    assert_eq!(unsafe { zb_watermark_copy(w, u.as_mut_ptr(), n - 1) }, ZbStatus::LengthMismatch);

    // deterministic host with r ≈ 1
    let x: Vec<f64> = (0..n).map(|i| ((i * 37 % 101) as f64 / 50.0 - 1.0) * 1.7).collect();
    let mut y = vec![0.0; n];
    let mut info = ZbEmbedInfo {
        a: 0.0,
        b: 0.0,
        r: 0.0,
        alpha: 0.0,
        distortion_used: 0.0,
        branch: ZbBranch::Sign,
    };
    let st = unsafe { zb_embed_optimal(x.as_ptr(), n, w, 4.0, 0.6, y.as_mut_ptr(), &mut info) };
    assert_eq!(st, ZbStatus::Ok);
    assert_eq!(info.branch, ZbBranch::Optimal);
    assert!((info.distortion_used - 4.0).abs() < 1e-9);
    for i in 0..n {
        assert!((y[i] - (info.a * x[i] + info.b * u[i])).abs() < 1e-9);
    }
    let mut det = ZbDetection {
        rho_abs: 0.0,
        empirical_mi: 0.0,
        threshold: 0.0,
        present: false,
    };
    assert_eq!(unsafe { zb_detect(y.as_ptr(), n, w, 0.6, &mut det) }, ZbStatus::Ok);
    assert!(det.present && det.rho_abs >= det.threshold);

    let st = unsafe { zb_embed_sign(x.as_ptr(), n, w, 1.0, y.as_mut_ptr(), ptr::null_mut()) };
    assert_eq!(st, ZbStatus::Ok);
    let st = unsafe { zb_detect(y.as_ptr(), n, ptr::null(), 0.6, &mut det) };
    assert_eq!(st, ZbStatus::NullPointer);
    unsafe { zb_watermark_free(w) };
}

#[test]
fn watermark_from_signs_validates_entries() {
    let mut w = ptr::null_mut();
    let good: [i8; 4] = [1, -1, -1, 1];
    assert_eq!(unsafe { zb_watermark_from_signs(good.as_ptr(), 4, &mut w) }, ZbStatus::Ok);
    unsafe { zb_watermark_free(w) };
    let bad: [i8; 3] = [1, 0, -1];
    assert_eq!(unsafe { zb_watermark_from_signs(bad.as_ptr(), 3, &mut w) }, ZbStatus::InvalidParameter);
    assert!(w.is_null());
}

#[test]
fn simulation_is_reproducible() {
    let p = params(1.0, 0.5, 1.0, 0.3);
    let run = || {
        let mut r = ZbBatchResult {
            n: 0,
            trials: 0,
            failures: 0,
            p_hat: 0.0,
            ci_low: 0.0,
            ci_high: 0.0,
            empirical_exponent: 0.0,
            master_seed: 0,
        };
        let st = unsafe { zb_simulate(p, ZbSimKind::FalseNegative, ZbEmbedder::Optimal, 64, 2000, 11, &mut r) };
        assert_eq!(st, ZbStatus::Ok);
        r
    };
    let (a, b) = (run(), run());
    assert_eq!(a.failures, b.failures);
    assert_eq!(a.p_hat.to_bits(), b.p_hat.to_bits());
    assert!(a.ci_low <= a.p_hat && a.p_hat <= a.ci_high);

    let mut r = run();
    let st = unsafe { zb_simulate(p, ZbSimKind::FalsePositive, ZbEmbedder::Optimal, 64, 10, 1, &mut r) };
    assert_eq!(st, ZbStatus::InvalidParameter);
    let st = unsafe { zb_simulate(p, ZbSimKind::FalsePositive, ZbEmbedder::None, 64, 0, 1, &mut r) };
    assert_eq!(st, ZbStatus::InvalidParameter);
    unsafe { zb_params_free(p) };
}
