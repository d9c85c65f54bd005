//! Hypersphere cap areas and the exact finite-n false-positive probability
//! of the hypercone detector.
//!
//! Everything is evaluated in the log domain so that dimensions of 10⁵ and
//! beyond stay finite.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::DetectionGeometry;
use crate::quad::integrate_panels;

const QUAD_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapAreaResult {
    pub n: usize,
    pub theta: f64,
    /// ln A_n(θ); `-inf` at θ = 0.
    pub log_area: f64,
}

fn check_dimension(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::invalid("n", format!("must be >= {min}, got {n}")));
    }
    Ok(())
}

/// ln of ∫₀^θ sin^{n-2}φ dφ.
///
/// The integrand is rescaled by its maximum on each monotone piece and the
/// interval is split into panels that widen geometrically away from the
/// peak, so the quadrature resolves the narrow spike that appears for large
/// n.
pub(crate) fn log_sine_power_integral(n: usize, theta: f64) -> f64 {
    if theta <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if n == 2 {
        return theta.ln();
    }
    let power = (n - 2) as f64;

    let rising_end = theta.min(FRAC_PI_2);
    let rising_scale = power * rising_end.sin().ln();
    let slope = power / rising_end.tan();
    let width = (1.0 / slope).min(rising_end.sin() / power.sqrt());
    let mut breaks = vec![rising_end];
    let mut offset = width;
    while rising_end - offset > 0.0 {
        breaks.push(rising_end - offset);
        offset *= 2.0;
    }
    breaks.push(0.0);
    breaks.reverse();
    let rising = integrate_panels(
        |phi| (power * phi.sin().ln() - rising_scale).exp(),
        &breaks,
        1e-15 * width,
        QUAD_REL_TOL,
    );
    let mut log_total = rising_scale + rising.ln();

    if theta > FRAC_PI_2 {
        let width = 1.0 / power.sqrt();
        let mut breaks = vec![FRAC_PI_2];
        let mut offset = width;
        while FRAC_PI_2 + offset < theta {
            breaks.push(FRAC_PI_2 + offset);
            offset *= 2.0;
        }
        breaks.push(theta);
        let falling = integrate_panels(
            |phi| (power * phi.sin().ln()).exp(),
            &breaks,
            1e-15 * width,
            QUAD_REL_TOL,
        );
        if falling > 0.0 {
            let log_falling = falling.ln();
            let hi = log_total.max(log_falling);
            log_total = hi + ((log_total - hi).exp() + (log_falling - hi).exp()).ln();
        }
    }
    log_total
}

/// ln A_n(θ): natural log of the surface area of the cap of half-angle θ on
/// the unit sphere in ℝⁿ.
pub fn cap_area_log(n: usize, theta: f64) -> Result<f64> {
    check_dimension(n, 2)?;
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::invalid(
            "theta",
            format!("must lie in [0, pi], got {theta}"),
        ));
    }
    let nf = n as f64;
    let prefactor = (nf - 1.0).ln() + 0.5 * (nf - 1.0) * PI.ln() - ln_gamma(0.5 * (nf + 1.0));
    Ok(prefactor + log_sine_power_integral(n, theta))
}

pub fn cap_area(n: usize, theta: f64) -> Result<CapAreaResult> {
    Ok(CapAreaResult {
        n,
        theta,
        log_area: cap_area_log(n, theta)?,
    })
}

/// ln P_fp = ln(2 A_n(β) / A_n(π)) for a signal whose direction is uniform
/// on the sphere.
pub fn exact_fp_probability_log(n: usize, geometry: &DetectionGeometry) -> Result<f64> {
    let log_cap = cap_area_log(n, geometry.beta)?;
    let log_sphere = cap_area_log(n, PI)?;
    Ok((LN_2 + log_cap - log_sphere).min(0.0))
}

/// Density of Ψ = arcsin(⟨X, u⟩ / (‖X‖‖u‖)) for isotropic X in ℝⁿ.
///
/// Normalized so that it integrates to one over [-π/2, π/2].
pub fn angle_pdf(n: usize, alpha: f64) -> Result<f64> {
    check_dimension(n, 3)?;
    if !(alpha.abs() <= FRAC_PI_2) {
        return Err(Error::invalid(
            "alpha",
            format!("must lie in [-pi/2, pi/2], got {alpha}"),
        ));
    }
    let nf = n as f64;
    let cos = alpha.abs().cos().max(0.0);
    if cos == 0.0 {
        return Ok(0.0);
    }
    Ok((angle_pdf_log_norm(nf) + (nf - 2.0) * cos.ln()).exp())
}

fn angle_pdf_log_norm(n: f64) -> f64 {
    ln_gamma(0.5 * n) - 0.5 * PI.ln() - ln_gamma(0.5 * (n - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::derive_geometry;
    use statrs::function::beta::beta_reg;

    // ∫₀^π sin^{n-2} = √π Γ((n-1)/2) / Γ(n/2)
    fn log_full_integral(n: usize) -> f64 {
        let nf = n as f64;
        0.5 * PI.ln() + ln_gamma(0.5 * (nf - 1.0)) - ln_gamma(0.5 * nf)
    }

    #[test]
    fn ln_gamma_reference_values() {
        // Γ(1/2) = √π, Γ(11) = 10!, Γ(3/2) = √π/2
        assert!((ln_gamma(0.5) - 0.5 * PI.ln()).abs() < 1e-13);
        assert!((ln_gamma(11.0) - 3_628_800f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(1.5) - (0.5 * PI.sqrt()).ln()).abs() < 1e-13);
        // Stirling series at 5e4: relative agreement
        let x: f64 = 5e4;
        let stirling = (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + 1.0 / (12.0 * x)
            - 1.0 / (360.0 * x.powi(3));
        assert!(((ln_gamma(x) - stirling) / stirling).abs() < 1e-12);
    }

    #[test]
    fn circle_circumference() {
        let log_a = cap_area_log(2, PI).unwrap();
        assert!((log_a.exp() - 2.0 * PI).abs() < 1e-12);
        let log_a = cap_area_log(2, 0.7).unwrap();
        assert!((log_a.exp() - 1.4).abs() < 1e-12);
    }

    #[test]
    fn sphere_cap_closed_form() {
        for theta in [0.1, 0.5, FRAC_PI_2, 2.0, 3.0, PI] {
            let log_a = cap_area_log(3, theta).unwrap();
            let expected = 2.0 * PI * (1.0 - theta.cos());
            assert!((log_a.exp() / expected - 1.0).abs() < 1e-10, "theta {theta}");
        }
    }

    #[test]
    fn zero_angle_is_empty_cap() {
        assert_eq!(cap_area_log(7, 0.0).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn argument_checks() {
        assert!(cap_area_log(1, 0.5).is_err());
        assert!(cap_area_log(4, -0.1).is_err());
        assert!(cap_area_log(4, 3.2).is_err());
        assert!(cap_area_log(4, f64::NAN).is_err());
        assert!(angle_pdf(2, 0.0).is_err());
        assert!(angle_pdf(5, 1.6).is_err());
    }

    #[test]
    fn full_sphere_matches_gamma_ratio() {
        for n in [2usize, 3, 5, 10, 57, 400, 5000, 100_000] {
            let q = log_sine_power_integral(n, PI);
            assert!((q - log_full_integral(n)).abs() < 1e-9, "n {n}: {q}");
        }
    }

    #[test]
    fn hemisphere_is_half_sphere() {
        for n in 2..=2000 {
            let half = cap_area_log(n, FRAC_PI_2).unwrap();
            let full = cap_area_log(n, PI).unwrap();
            assert!((half - (full - LN_2)).abs() < 1e-9, "n {n}");
        }
    }

    #[test]
    fn cap_integral_matches_incomplete_beta() {
        // ∫₀^θ sin^{n-2} = ½ B((n-1)/2, ½) I_{sin²θ}((n-1)/2, ½) for θ <= π/2
        for n in [3usize, 4, 10, 50, 200, 1000] {
            for theta in [0.2f64, 0.6, 1.0, 1.4] {
                let a = 0.5 * (n as f64 - 1.0);
                let reg = beta_reg(a, 0.5, theta.sin().powi(2));
                if reg < 1e-300 {
                    // the reference underflows; covered by the other cases
                    continue;
                }
                let expected = log_full_integral(n) - LN_2 + reg.ln();
                let got = log_sine_power_integral(n, theta);
                assert!(
                    (got - expected).abs() < 1e-8 * expected.abs().max(1.0),
                    "n {n} theta {theta}: {got} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn cap_area_monotone_in_theta() {
        for n in [4usize, 100, 3000] {
            let mut prev = f64::NEG_INFINITY;
            for k in 1..=64 {
                let v = cap_area_log(n, PI * k as f64 / 64.0).unwrap();
                assert!(v >= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn two_dimensional_fp_is_arc_fraction() {
        for lambda in [0.05, 0.3, 1.0, 2.0] {
            let g = derive_geometry(lambda).unwrap();
            let p = exact_fp_probability_log(2, &g).unwrap().exp();
            assert!((p - 2.0 * g.beta / PI).abs() < 1e-12);
        }
    }

    #[test]
    fn fp_is_one_without_threshold() {
        let g = derive_geometry(1e-300).unwrap();
        let lp = exact_fp_probability_log(50, &g).unwrap();
        assert!(lp.abs() < 1e-12);
    }

    #[test]
    fn fp_exponent_close_to_lambda() {
        let g = derive_geometry(0.6).unwrap();
        let lp = exact_fp_probability_log(1000, &g).unwrap();
        assert!((-lp / 1000.0 - 0.6).abs() < 0.02);
    }

    #[test]
    fn fp_non_increasing_in_lambda() {
        for n in [3usize, 30, 300] {
            let mut prev = 0.0;
            for k in 1..=50 {
                let g = derive_geometry(0.05 * k as f64).unwrap();
                let lp = exact_fp_probability_log(n, &g).unwrap();
                assert!(lp <= prev + 1e-12);
                prev = lp;
            }
        }
    }

    #[test]
    fn fp_exponent_gap_shrinks_with_n() {
        for lambda in [0.1, 0.6, 1.0] {
            let g = derive_geometry(lambda).unwrap();
            let gap = |n: usize| {
                (-exact_fp_probability_log(n, &g).unwrap() / n as f64 - lambda).abs()
            };
            let mut n = 100;
            while n < 3200 {
                assert!(gap(2 * n) < gap(n), "lambda {lambda} n {n}");
                n *= 2;
            }
        }
    }

    #[test]
    fn angle_pdf_normalized_and_even() {
        for n in [3usize, 10, 100] {
            let total = integrate_panels(
                |a| angle_pdf(n, a).unwrap(),
                &[-FRAC_PI_2, -0.5, 0.0, 0.5, FRAC_PI_2],
                1e-14,
                1e-12,
            );
            assert!((total - 1.0).abs() < 1e-8, "n {n}: {total}");
            for a in [0.01, 0.3, 1.2] {
                assert_eq!(angle_pdf(n, a).unwrap(), angle_pdf(n, -a).unwrap());
            }
        }
    }
}
