//! Embedding rules: the optimum planar embedder and the sign-embedder
//! baseline.
//!
//! The optimum rule only sees the host, the watermark, the distortion
//! budget and the detection geometry; it never needs the host or attack
//! variances.

use serde::Serialize;

use crate::error::{check_len, Result};
use crate::linalg::{dot, norm_sq, Accumulator};
use crate::model::{
    host_polar, positive, to_plane_coordinates, DetectionGeometry, HostSignal, PlaneCoordinates,
    WatermarkSequence,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbedBranch {
    /// Full-budget stationary point `v1 = ±√(D − r cos⁴β)`, `v2 = −√r cos²β`.
    Optimal,
    /// `D < r cos⁴β`: all of the budget shrinks the host's component
    /// orthogonal to the watermark.
    DegenerateShrink,
    /// `y = x + sign(⟨x, u⟩) √D u`.
    Sign,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbedResult {
    pub y: Vec<f64>,
    pub coords: PlaneCoordinates,
    /// Host coefficient in `y = a x + b u`.
    pub a: f64,
    /// Watermark coefficient in `y = a x + b u`.
    pub b: f64,
    /// ‖y − x‖² / n.
    pub distortion_used: f64,
    pub branch: EmbedBranch,
}

fn distortion_per_dim(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = Accumulator::default();
    for (a, b) in x.iter().zip(y) {
        acc.add((b - a) * (b - a));
    }
    acc.total() / x.len() as f64
}

// Hosts whose component orthogonal to u is below this fraction of ‖x‖ are
// treated as lying on the watermark axis.
const AXIS_EPS: f64 = 1e-12;

/// Optimum embedder.
///
/// With `r = ‖x‖²/n` and `α` the host's angle to the hyperplane orthogonal
/// to `u`, the displacement in the `(u, x⊥)` plane is
/// `v = (±√(D − r cos⁴β), −√r cos²β, 0)` whenever `D ≥ r cos⁴β`, the sign of
/// `v1` following `sin α` (+ at α = 0). Otherwise `v = (0, −√D, 0)`.
/// A zero host gives `y = √D u`; a host on the watermark axis gets
/// `v = (±√D, 0, 0)`.
pub fn embed_optimal(
    x: &HostSignal,
    u: &WatermarkSequence,
    distortion: f64,
    geometry: &DetectionGeometry,
) -> Result<EmbedResult> {
    check_len(u.len(), x.len())?;
    positive("distortion", distortion)?;
    let n = u.len() as f64;
    let xs = x.as_slice();
    let us = u.as_slice();
    let (r, alpha, inner) = host_polar(xs, us);
    let c = geometry.cos2_beta;
    let sign = if alpha < 0.0 { -1.0 } else { 1.0 };

    let x_perp: Vec<f64> = xs.iter().zip(us).map(|(xi, ui)| xi - inner / n * ui).collect();
    let x_perp_norm = norm_sq(&x_perp).sqrt();
    let on_axis = r == 0.0 || x_perp_norm <= AXIS_EPS * (n * r).sqrt();

    let (v1, v2, branch) = if on_axis {
        let branch = if distortion >= r * c * c {
            EmbedBranch::Optimal
        } else {
            EmbedBranch::DegenerateShrink
        };
        (sign * distortion.sqrt(), 0.0, branch)
    } else if distortion >= r * c * c {
        (
            sign * (distortion - r * c * c).sqrt(),
            -r.sqrt() * c,
            EmbedBranch::Optimal,
        )
    } else {
        (0.0, -distortion.sqrt(), EmbedBranch::DegenerateShrink)
    };

    // y = x + v1 u + √n v2 x⊥/‖x⊥‖ = a x + b u
    let k = if on_axis { 0.0 } else { n.sqrt() * v2 / x_perp_norm };
    let a = 1.0 + k;
    let b = v1 - k * inner / n;
    let y: Vec<f64> = xs
        .iter()
        .zip(us)
        .zip(&x_perp)
        .map(|((xi, ui), pi)| xi + v1 * ui + k * pi)
        .collect();

    Ok(EmbedResult {
        distortion_used: distortion_per_dim(xs, &y),
        y,
        coords: PlaneCoordinates {
            r,
            alpha,
            v1,
            v2,
            v3: 0.0,
        },
        a,
        b,
        branch,
    })
}

/// Sign embedder `y = x + sign(⟨x, u⟩) √D u`, with sign(0) = +1.
pub fn embed_sign(
    x: &HostSignal,
    u: &WatermarkSequence,
    distortion: f64,
) -> Result<EmbedResult> {
    check_len(u.len(), x.len())?;
    positive("distortion", distortion)?;
    let xs = x.as_slice();
    let us = u.as_slice();
    let b = if dot(xs, us) < 0.0 {
        -distortion.sqrt()
    } else {
        distortion.sqrt()
    };
    let w: Vec<f64> = us.iter().map(|ui| b * ui).collect();
    let y: Vec<f64> = xs.iter().zip(&w).map(|(xi, wi)| xi + wi).collect();
    Ok(EmbedResult {
        coords: to_plane_coordinates(x, u, &w)?,
        distortion_used: distortion_per_dim(xs, &y),
        y,
        a: 1.0,
        b,
        branch: EmbedBranch::Sign,
    })
}

/// T₁(r, α, v) = (√r sin α + v₁)² tan²β − (√r cos α + v₂)² − v₃².
///
/// The false-negative exponent is non-decreasing in this quantity.
pub fn embedding_t1(coords: &PlaneCoordinates, geometry: &DetectionGeometry) -> f64 {
    let root_r = coords.r.sqrt();
    let along = root_r * coords.alpha.sin() + coords.v1;
    let across = root_r * coords.alpha.cos() + coords.v2;
    along * along * geometry.tan2_beta() - across * across - coords.v3 * coords.v3
}
