//! Hypercone detector: threshold the absolute normalized correlation between
//! the received signal and the watermark.

use serde::Serialize;

use crate::error::{check_len, Result};
use crate::linalg::Accumulator;
use crate::model::{DetectionGeometry, WatermarkSequence};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionReport {
    /// |⟨u, s⟩/n| / √(‖s‖²/n), in [0, 1].
    pub rho_abs: f64,
    /// Gaussian empirical mutual information −½ ln(1 − ρ̂²), nats.
    pub empirical_mi: f64,
    pub threshold: f64,
    /// `true` when the watermark is declared present.
    pub decision: bool,
}

/// Returns `(Σ u_i s_i, Σ s_i²)` accumulated in one pass.
fn sufficient_statistics(s: &[f64], u: &[f64]) -> (f64, f64) {
    let mut cross = Accumulator::default();
    let mut energy = Accumulator::default();
    for (si, ui) in s.iter().zip(u) {
        cross.add(si * ui);
        energy.add(si * si);
    }
    (cross.total(), energy.total())
}

pub(crate) fn rho_abs_from_stats(n: usize, cross: f64, energy: f64) -> f64 {
    if energy <= 0.0 {
        return 0.0;
    }
    let n = n as f64;
    // Σu_i² = n
    ((cross.abs() / n) / (energy / n).sqrt()).min(1.0)
}

fn mi_from_rho(rho: f64) -> f64 {
    if rho >= 1.0 {
        return f64::INFINITY;
    }
    -0.5 * (-rho * rho).ln_1p()
}

pub fn absolute_correlation(s: &[f64], u: &WatermarkSequence) -> Result<f64> {
    check_len(u.len(), s.len())?;
    let (cross, energy) = sufficient_statistics(s, u.as_slice());
    Ok(rho_abs_from_stats(u.len(), cross, energy))
}

/// −½ ln(1 − ρ̂²); zero for an all-zero signal, `+inf` when ρ̂ = 1.
pub fn empirical_mutual_information(s: &[f64], u: &WatermarkSequence) -> Result<f64> {
    Ok(mi_from_rho(absolute_correlation(s, u)?))
}

/// Decides "present" iff ρ̂ ≥ √(1 − e^{−2λ}) (closed region, ties count as
/// present). A zero signal is reported absent.
pub fn detect(
    s: &[f64],
    u: &WatermarkSequence,
    geometry: &DetectionGeometry,
) -> Result<DetectionReport> {
    let rho_abs = absolute_correlation(s, u)?;
    Ok(DetectionReport {
        rho_abs,
        empirical_mi: mi_from_rho(rho_abs),
        threshold: geometry.corr_threshold,
        decision: rho_abs >= geometry.corr_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_geometry, generate_watermark};
    use proptest::prelude::*;

    #[test]
    fn aligned_signal_is_detected() {
        let u = generate_watermark(64, 1).unwrap();
        for c in [3.0, -0.2] {
            let s: Vec<f64> = u.as_slice().iter().map(|v| c * v).collect();
            for lambda in [0.01, 0.6, 5.0, 30.0] {
                let rep = detect(&s, &u, &derive_geometry(lambda).unwrap()).unwrap();
                assert_eq!(rep.rho_abs, 1.0);
                assert!(rep.decision);
                assert_eq!(rep.empirical_mi, f64::INFINITY);
            }
        }
    }

    #[test]
    fn orthogonal_signal_is_rejected() {
        let u = WatermarkSequence::from_signs(&[1, 1, -1, -1]).unwrap();
        let s = [1.0, -1.0, 2.0, -2.0];
        let rep = detect(&s, &u, &derive_geometry(1e-4).unwrap()).unwrap();
        assert_eq!(rep.rho_abs, 0.0);
        assert!(!rep.decision);
        assert_eq!(rep.empirical_mi, 0.0);
    }

    #[test]
    fn four_dimensional_example() {
        let u = WatermarkSequence::from_signs(&[1, 1, 1, 1]).unwrap();
        let s = [2.0, 0.0, 0.0, 0.0];
        let g = derive_geometry(0.1).unwrap();
        let rep = detect(&s, &u, &g).unwrap();
        assert!((rep.rho_abs - 0.5).abs() < 1e-15);
        assert!(rep.decision);
        assert!((rep.empirical_mi - 0.143_841_036_225_890_45).abs() < 1e-12);
    }

    #[test]
    fn zero_signal_is_absent() {
        let u = generate_watermark(5, 2).unwrap();
        let rep = detect(&[0.0; 5], &u, &derive_geometry(0.1).unwrap()).unwrap();
        assert_eq!((rep.rho_abs, rep.empirical_mi, rep.decision), (0.0, 0.0, false));
    }

    #[test]
    fn threshold_mi_equals_lambda() {
        for lambda in [0.05, 0.6, 2.0] {
            let g = derive_geometry(lambda).unwrap();
            assert!((mi_from_rho(g.corr_threshold) - lambda).abs() < 1e-12);
        }
    }

    #[test]
    fn tie_decides_present() {
        let u = WatermarkSequence::from_signs(&[1, 1, 1, 1]).unwrap();
        let s = [2.0, 0.0, 0.0, 0.0];
        let rho = absolute_correlation(&s, &u).unwrap();
        let mut g = derive_geometry(0.1).unwrap();
        g.corr_threshold = rho;
        assert!(detect(&s, &u, &g).unwrap().decision);
    }

    #[test]
    fn length_mismatch() {
        let u = generate_watermark(3, 0).unwrap();
        assert!(detect(&[1.0, 2.0], &u, &derive_geometry(0.5).unwrap()).is_err());
    }

    fn signal() -> impl Strategy<Value = (Vec<f64>, u64)> {
        (prop::collection::vec(-10.0f64..10.0, 2..64), any::<u64>())
    }

    proptest! {
        #[test]
        fn scale_invariance((s, seed) in signal(), c in prop::sample::select(vec![-7.5, -1.0, 1e-3, 2.0, 1e3])) {
            let u = generate_watermark(s.len(), seed).unwrap();
            let g = derive_geometry(0.3).unwrap();
            let scaled: Vec<f64> = s.iter().map(|v| c * v).collect();
            let a = detect(&s, &u, &g).unwrap();
            let b = detect(&scaled, &u, &g).unwrap();
            prop_assert!((a.rho_abs - b.rho_abs).abs() < 1e-12);
            if (a.rho_abs - g.corr_threshold).abs() > 1e-12 {
                prop_assert_eq!(a.decision, b.decision);
            }
        }

        #[test]
        fn watermark_sign_symmetry((s, seed) in signal()) {
            let u = generate_watermark(s.len(), seed).unwrap();
            let a = absolute_correlation(&s, &u).unwrap();
            let b = absolute_correlation(&s, &u.negated()).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn correlation_and_mi_thresholds_agree((s, seed) in signal(), lambda in 0.01f64..3.0) {
            let u = generate_watermark(s.len(), seed).unwrap();
            let g = derive_geometry(lambda).unwrap();
            let rep = detect(&s, &u, &g).unwrap();
            prop_assert!(rep.rho_abs <= 1.0);
            if rep.rho_abs < 1.0 {
                prop_assert!((rep.empirical_mi + 0.5 * (1.0 - rep.rho_abs.powi(2)).ln()).abs() < 1e-9);
            }
            if (rep.empirical_mi - lambda).abs() > 1e-9 {
                prop_assert_eq!(rep.decision, rep.empirical_mi >= lambda);
            }
        }
    }
}
