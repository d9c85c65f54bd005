//! Domain types shared by the embedder, detector, exponent calculators and
//! the simulation harness.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, norm_sq, remove_component};

/// Gaussian host / Gaussian attack system parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Host variance σ_X².
    pub host_variance: f64,
    /// Attack (additive noise) variance σ_Z²; zero means attack-free.
    pub attack_variance: f64,
    /// Embedding distortion budget per dimension.
    pub distortion: f64,
    /// Required false-positive exponent λ.
    pub fp_exponent: f64,
}

impl SystemParams {
    pub fn new(
        host_variance: f64,
        attack_variance: f64,
        distortion: f64,
        fp_exponent: f64,
    ) -> Result<Self> {
        let params = SystemParams {
            host_variance,
            attack_variance,
            distortion,
            fp_exponent,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        positive("host_variance", self.host_variance)?;
        if !self.attack_variance.is_finite() || self.attack_variance < 0.0 {
            return Err(Error::invalid(
                "attack_variance",
                format!("must be finite and >= 0, got {}", self.attack_variance),
            ));
        }
        positive("distortion", self.distortion)?;
        positive("fp_exponent", self.fp_exponent)?;
        Ok(())
    }

    pub fn geometry(&self) -> Result<DetectionGeometry> {
        derive_geometry(self.fp_exponent)
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::invalid(
            name,
            format!("must be finite and > 0, got {value}"),
        ));
    }
    Ok(())
}

/// Hypercone geometry implied by a false-positive exponent λ.
///
/// The detection region is the pair of cones of half-angle `beta` around
/// `u` and `-u`; equivalently `|ρ̂| >= cos β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionGeometry {
    pub fp_exponent: f64,
    /// Cone half-angle β = arcsin(e^{-λ}).
    pub beta: f64,
    /// cos²β = 1 - e^{-2λ}.
    pub cos2_beta: f64,
    /// sin²β = e^{-2λ}.
    pub sin2_beta: f64,
    /// Threshold on the absolute normalized correlation, √(1 - e^{-2λ}).
    pub corr_threshold: f64,
}

impl DetectionGeometry {
    /// tan²β = sin²β / cos²β.
    pub fn tan2_beta(&self) -> f64 {
        self.sin2_beta / self.cos2_beta
    }
}

pub fn derive_geometry(fp_exponent: f64) -> Result<DetectionGeometry> {
    positive("fp_exponent", fp_exponent)?;
    let sin2_beta = (-2.0 * fp_exponent).exp();
    // -expm1 keeps precision for small λ
    let cos2_beta = -(-2.0 * fp_exponent).exp_m1();
    Ok(DetectionGeometry {
        fp_exponent,
        beta: (-fp_exponent).exp().asin(),
        cos2_beta,
        sin2_beta,
        corr_threshold: cos2_beta.sqrt(),
    })
}

/// A ±1 watermark sequence, the shared secret of embedder and detector.
#[derive(Debug, Clone, PartialEq)]
pub struct WatermarkSequence {
    values: Vec<f64>,
    seed: Option<u64>,
}

impl WatermarkSequence {
    /// Builds a sequence from explicit ±1 values.
    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        if signs.is_empty() {
            return Err(Error::invalid("n", "watermark must have n >= 1"));
        }
        let values = signs
            .iter()
            .enumerate()
            .map(|(i, &s)| match s {
                1 => Ok(1.0),
                -1 => Ok(-1.0),
                other => Err(Error::invalid(
                    "watermark",
                    format!("component {i} is {other}, expected +1 or -1"),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(WatermarkSequence { values, seed: None })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Components as reals (each exactly ±1.0).
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn signs(&self) -> impl Iterator<Item = i8> + '_ {
        self.values.iter().map(|&v| if v > 0.0 { 1 } else { -1 })
    }

    /// The sequence `-u`.
    pub fn negated(&self) -> Self {
        WatermarkSequence {
            values: self.values.iter().map(|v| -v).collect(),
            seed: None,
        }
    }
}

/// Deterministic watermark from a seed.
///
/// The stream is ChaCha8 seeded through `SeedableRng::seed_from_u64`;
/// component `i` is +1 when bit `i % 64` (least significant first) of the
/// `i / 64`-th 64-bit output word is set, and -1 otherwise.
pub fn generate_watermark(n: usize, seed: u64) -> Result<WatermarkSequence> {
    if n == 0 {
        return Err(Error::invalid("n", "watermark must have n >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n);
    let mut word = 0u64;
    for i in 0..n {
        if i % 64 == 0 {
            word = rng.next_u64();
        }
        values.push(if (word >> (i % 64)) & 1 == 1 { 1.0 } else { -1.0 });
    }
    Ok(WatermarkSequence {
        values,
        seed: Some(seed),
    })
}

/// Host (cover) signal.
#[derive(Debug, Clone, PartialEq)]
pub struct HostSignal {
    samples: Vec<f64>,
}

impl HostSignal {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("n", "host signal must have n >= 1"));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "host",
                format!("sample {i} is not finite"),
            ));
        }
        Ok(HostSignal { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.samples
    }
}

/// Host and displacement expressed in the orthonormal frame built from
/// `u`, `x` and `w` (in that order), per-dimension normalized by √n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneCoordinates {
    /// ‖x‖² / n.
    pub r: f64,
    /// Angle between `x` and the hyperplane orthogonal to `u`.
    pub alpha: f64,
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
}

impl PlaneCoordinates {
    pub fn displacement_power(&self) -> f64 {
        self.v1 * self.v1 + self.v2 * self.v2 + self.v3 * self.v3
    }
}

/// `(r, α)` of a host relative to a watermark. `α = 0` when `x = 0`.
pub(crate) fn host_polar(x: &[f64], u: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let energy = norm_sq(x);
    let r = energy / n;
    let inner = dot(x, u);
    if energy == 0.0 {
        return (0.0, 0.0, inner);
    }
    let sin_alpha = (inner / (energy.sqrt() * n.sqrt())).clamp(-1.0, 1.0);
    (r, sin_alpha.asin(), inner)
}

// Relative size below which a Gram-Schmidt residual is treated as zero.
const HOST_RESIDUAL_EPS: f64 = 1e-12;
const DISPLACEMENT_RESIDUAL_EPS: f64 = 1e-10;

/// Orthonormal frame `(e1, e2, e3)` with `e1 = u/√n`, `e2` along the part of
/// `x` orthogonal to `u`, `e3` along the part of `w` orthogonal to both.
///
/// Missing directions (x parallel to u, w inside span{u, x}) are filled with
/// the first standard basis vector that has a usable residual, so the frame
/// is deterministic.
#[derive(Debug, Clone)]
pub struct GramSchmidtFrame {
    basis: Vec<Vec<f64>>,
    coords: PlaneCoordinates,
}

impl GramSchmidtFrame {
    pub fn new(x: &HostSignal, u: &WatermarkSequence, w: &[f64]) -> Result<Self> {
        let n = u.len();
        check_len(n, x.len())?;
        check_len(n, w.len())?;
        let root_n = (n as f64).sqrt();
        let x = x.as_slice();
        let (r, alpha, _) = host_polar(x, u.as_slice());

        let e1: Vec<f64> = u.as_slice().iter().map(|v| v / root_n).collect();
        let mut basis = vec![e1];

        let x_norm = norm_sq(x).sqrt();
        let mut x_perp = x.to_vec();
        remove_component(&mut x_perp, &basis[0]);
        let x_perp_norm = norm_sq(&x_perp).sqrt();
        if x_norm > 0.0 && x_perp_norm > HOST_RESIDUAL_EPS * x_norm {
            basis.push(x_perp.iter().map(|v| v / x_perp_norm).collect());
        } else if let Some(e) = fill_direction(&basis, n) {
            basis.push(e);
        }

        let v1 = dot(w, &basis[0]) / root_n;
        let v2 = basis.get(1).map_or(0.0, |e| dot(w, e) / root_n);

        let w_norm = norm_sq(w).sqrt();
        let mut w_perp = w.to_vec();
        for e in &basis {
            remove_component(&mut w_perp, e);
        }
        let w_perp_norm = norm_sq(&w_perp).sqrt();
        let v3 = if w_norm > 0.0 && w_perp_norm > DISPLACEMENT_RESIDUAL_EPS * w_norm {
            basis.push(w_perp.iter().map(|v| v / w_perp_norm).collect());
            w_perp_norm / root_n
        } else {
            if let Some(e) = fill_direction(&basis, n) {
                basis.push(e);
            }
            0.0
        };

        Ok(GramSchmidtFrame {
            basis,
            coords: PlaneCoordinates {
                r,
                alpha,
                v1,
                v2,
                v3,
            },
        })
    }

    pub fn coordinates(&self) -> PlaneCoordinates {
        self.coords
    }

    /// Maps per-dimension coordinates `(v1, v2, v3)` back to an n-vector.
    pub fn reconstruct(&self, v: [f64; 3]) -> Vec<f64> {
        let n = self.basis[0].len();
        let root_n = (n as f64).sqrt();
        let mut out = vec![0.0; n];
        for (e, c) in self.basis.iter().zip(v) {
            for (o, b) in out.iter_mut().zip(e) {
                *o += root_n * c * b;
            }
        }
        out
    }
}

fn fill_direction(basis: &[Vec<f64>], n: usize) -> Option<Vec<f64>> {
    if basis.len() >= n {
        return None;
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        for b in basis {
            remove_component(&mut e, b);
        }
        let norm2 = norm_sq(&e);
        let better = best.as_ref().is_none_or(|(b, _)| norm2 > *b);
        if better {
            best = Some((norm2, e));
        }
        if norm2 > 0.25 {
            break;
        }
    }
    best.and_then(|(norm2, e)| {
        (norm2 > 1e-12).then(|| {
            let norm = norm2.sqrt();
            e.into_iter().map(|v| v / norm).collect()
        })
    })
}

/// Plane coordinates of a displacement `w` relative to host `x` and
/// watermark `u`.
pub fn to_plane_coordinates(
    x: &HostSignal,
    u: &WatermarkSequence,
    w: &[f64],
) -> Result<PlaneCoordinates> {
    Ok(GramSchmidtFrame::new(x, u, w)?.coordinates())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn geometry_at_lambda_0_6() {
        let g = derive_geometry(0.6).unwrap();
        // arcsin(e^-0.6) and sqrt(1 - e^-1.2), evaluated independently
        assert!((g.beta - 0.580_941_994).abs() < 1e-8, "{}", g.beta);
        assert!((g.corr_threshold - 0.835_946_044).abs() < 1e-8);
        assert!((g.beta.cos().powi(2) - g.cos2_beta).abs() < 1e-12);
    }

    #[test]
    fn geometry_at_lambda_0_1() {
        let g = derive_geometry(0.1).unwrap();
        assert!((g.corr_threshold - 0.425_757_263).abs() < 1e-8);
    }

    #[test]
    fn geometry_small_lambda_limit() {
        let g = derive_geometry(1e-12).unwrap();
        assert!((g.beta - std::f64::consts::FRAC_PI_2).abs() < 1e-5);
        assert!(g.corr_threshold < 1e-5);
    }

    #[test]
    fn geometry_rejects_bad_lambda() {
        for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(derive_geometry(bad).is_err());
        }
    }

    #[test]
    fn geometry_identities_and_monotonicity() {
        let mut prev: Option<DetectionGeometry> = None;
        for k in 0..=400 {
            let lambda = 1e-3 * (1e4f64).powf(k as f64 / 400.0);
            let g = derive_geometry(lambda).unwrap();
            let (s, c) = (g.beta.sin(), g.beta.cos());
            assert!((s * s + c * c - 1.0).abs() < 1e-12);
            assert!((c * c - g.cos2_beta).abs() < 1e-12);
            if let Some(p) = prev {
                assert!(g.corr_threshold > p.corr_threshold || g.corr_threshold == 1.0);
                assert!(g.beta < p.beta);
            }
            prev = Some(g);
        }
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::new(1.0, 0.0, 2.0, 0.6).is_ok());
        assert!(SystemParams::new(0.0, 0.0, 2.0, 0.6).is_err());
        assert!(SystemParams::new(1.0, -0.1, 2.0, 0.6).is_err());
        assert!(SystemParams::new(1.0, 0.5, 0.0, 0.6).is_err());
        assert!(SystemParams::new(1.0, 0.5, 1.0, 0.0).is_err());
        assert!(SystemParams::new(1.0, f64::NAN, 1.0, 0.3).is_err());
    }

    #[test]
    fn watermark_is_deterministic() {
        let a = generate_watermark(8, 42).unwrap();
        let b = generate_watermark(8, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_watermark(8, 43).unwrap());
        assert!(generate_watermark(0, 1).is_err());
        let one = generate_watermark(1, 9).unwrap();
        assert!(one.as_slice()[0] == 1.0 || one.as_slice()[0] == -1.0);
    }

    #[test]
    fn watermark_is_balanced() {
        let n = 100_000;
        let u = generate_watermark(n, 0xDEAD_BEEF).unwrap();
        let mean = u.as_slice().iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "{mean}");
        assert_eq!(norm_sq(u.as_slice()), n as f64);
    }

    #[test]
    fn from_signs_rejects_zero() {
        assert!(WatermarkSequence::from_signs(&[1, 0, -1]).is_err());
        assert!(WatermarkSequence::from_signs(&[]).is_err());
        let u = WatermarkSequence::from_signs(&[1, -1]).unwrap();
        assert_eq!(u.signs().collect::<Vec<_>>(), vec![1, -1]);
    }

    #[test]
    fn aligned_and_zero_displacements() {
        let u = generate_watermark(16, 5).unwrap();
        let x = HostSignal::new(gaussian(16, 1)).unwrap();
        let w: Vec<f64> = u.as_slice().iter().map(|v| 0.7 * v).collect();
        let c = to_plane_coordinates(&x, &u, &w).unwrap();
        assert!((c.v1 - 0.7).abs() < 1e-12);
        assert!(c.v2.abs() < 1e-12 && c.v3 == 0.0);

        let c = to_plane_coordinates(&x, &u, &vec![0.0; 16]).unwrap();
        assert_eq!((c.v1, c.v2, c.v3), (0.0, 0.0, 0.0));
    }

    #[test]
    fn zero_host_has_zero_angle() {
        let u = generate_watermark(4, 5).unwrap();
        let x = HostSignal::new(vec![0.0; 4]).unwrap();
        let c = to_plane_coordinates(&x, &u, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!((c.r, c.alpha), (0.0, 0.0));
    }

    #[test]
    fn host_coordinates_match_definition() {
        let u = generate_watermark(32, 3).unwrap();
        let xs = gaussian(32, 2);
        let x = HostSignal::new(xs.clone()).unwrap();
        let c = to_plane_coordinates(&x, &u, &vec![0.0; 32]).unwrap();
        let r = xs.iter().map(|v| v * v).sum::<f64>() / 32.0;
        let ip: f64 = xs.iter().zip(u.as_slice()).map(|(a, b)| a * b).sum();
        assert!((c.r - r).abs() < 1e-12);
        assert!((c.alpha.sin() - ip / ((32.0 * r).sqrt() * 32f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn span_displacement_has_zero_v3() {
        let n = 16;
        let u = generate_watermark(n, 11).unwrap();
        let xs = gaussian(n, 12);
        let x = HostSignal::new(xs.clone()).unwrap();
        let w: Vec<f64> = xs
            .iter()
            .zip(u.as_slice())
            .map(|(a, b)| -0.3 * a + 0.8 * b)
            .collect();
        let c = to_plane_coordinates(&x, &u, &w).unwrap();
        assert_eq!(c.v3, 0.0);
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let u = generate_watermark(4, 1).unwrap();
        let x = HostSignal::new(vec![1.0; 5]).unwrap();
        assert!(matches!(
            to_plane_coordinates(&x, &u, &[0.0; 5]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    fn roundtrip_error(n: usize, seed: u64, parallel_host: bool) -> f64 {
        let u = generate_watermark(n, seed).unwrap();
        let xs = if parallel_host {
            u.as_slice().iter().map(|v| 2.5 * v).collect()
        } else {
            gaussian(n, seed.wrapping_add(1))
        };
        let w = gaussian(n, seed.wrapping_add(2));
        let frame = GramSchmidtFrame::new(&HostSignal::new(xs).unwrap(), &u, &w).unwrap();
        let c = frame.coordinates();
        assert!(c.v3 >= 0.0);
        let back = frame.reconstruct([c.v1, c.v2, c.v3]);
        let err: f64 = back
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        err / norm_sq(&w).sqrt()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn frame_roundtrip(seed in any::<u64>(), idx in 0usize..4, parallel in any::<bool>()) {
            let n = [3usize, 4, 16, 256][idx];
            prop_assert!(roundtrip_error(n, seed, parallel) < 1e-9);
        }
    }
}
