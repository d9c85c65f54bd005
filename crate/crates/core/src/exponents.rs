//! False-negative error exponents of the optimum embedder/detector pair.
//!
//! Three routes are provided: the closed form for Gaussian attacks, the
//! attack-free closed form, and a numeric oracle that minimizes the
//! underlying objective directly. The closed forms are checked against the
//! oracle in tests and by `zerobit validate`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{derive_geometry, positive, DetectionGeometry, SystemParams};
use crate::optimize::{golden_section, scan_then_golden};

pub const DEFAULT_ORACLE_TOL: f64 = 1e-10;
pub const ORACLE_MAX_ITER: usize = 200;

// Relative distance of σ_Z² from σ_X² sin²β below which the closed-form r*
// is treated as singular.
const SINGULAR_REL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentMethod {
    ClosedForm,
    AttackFree,
    NumericOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroReason {
    /// The unconstrained minimizer (σ_X², σ_Z²) already satisfies q ≥ T₁(r).
    GlobalMinFeasible,
    /// Attack-free case with D / cos²β ≤ σ_X².
    InsufficientDistortion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    /// False-negative exponent, nats per dimension.
    pub e_fn: f64,
    pub r_star: f64,
    pub q_star: f64,
    pub method: ExponentMethod,
    pub zero_reason: Option<ZeroReason>,
}

/// ½(t − ln t − 1): divergence between Gaussians whose variance ratio is t.
pub fn variance_divergence(t: f64) -> f64 {
    if t <= 0.0 {
        return f64::INFINITY;
    }
    0.5 * (t - t.ln() - 1.0)
}

/// T₁ on the optimum-embedder boundary at α = 0: D tan²β − r sin²β.
pub fn boundary_t1(distortion: f64, geometry: &DetectionGeometry, r: f64) -> f64 {
    distortion * geometry.tan2_beta() - r * geometry.sin2_beta
}

fn boundary_objective(params: &SystemParams, geometry: &DetectionGeometry, r: f64) -> f64 {
    let q = boundary_t1(params.distortion, geometry, r).max(0.0);
    variance_divergence(q / params.attack_variance) + variance_divergence(r / params.host_variance)
}

fn global_min_is_feasible(params: &SystemParams, geometry: &DetectionGeometry) -> bool {
    boundary_t1(params.distortion, geometry, params.host_variance) <= params.attack_variance
}

fn zero_report(params: &SystemParams, method: ExponentMethod) -> ExponentReport {
    ExponentReport {
        e_fn: 0.0,
        r_star: params.host_variance,
        q_star: params.attack_variance,
        method,
        zero_reason: Some(ZeroReason::GlobalMinFeasible),
    }
}

/// Closed-form minimizer of the boundary objective on (0, D/cos²β).
///
/// The stationarity condition is the quadratic
/// `A r² − B r + C = 0` with `A = cos²β (σ_Z² − σ_X² sin²β)`,
/// `B = 2 σ_X² σ_Z² cos²β + D (σ_Z² − σ_X² sin²β)` and `C = D σ_X² σ_Z²`;
/// the root inside the interval is `(B − √(B² − 4AC)) / 2A`. For
/// `A > 0` it is evaluated as `2C / (B + √(B² − 4AC))`; for `A < 0` the
/// direct form is the one free of cancellation (`B + √…` collapses to
/// O(σ_Z²) as σ_Z² → 0).
pub fn closed_form_r_star(params: &SystemParams, geometry: &DetectionGeometry) -> f64 {
    let (sx, sz, d) = (
        params.host_variance,
        params.attack_variance,
        params.distortion,
    );
    let (c, s) = (geometry.cos2_beta, geometry.sin2_beta);
    let gap = sz - s * sx;
    let b = 2.0 * sx * sz * c + d * gap;
    let cc = d * sx * sz;
    // B² − 4AC = 4 c² σ_X⁴ σ_Z⁴ + D² (σ_Z² − σ_X² sin²β)²
    let disc = (2.0 * c * sx * sz).hypot(d * gap);
    if gap < 0.0 {
        (disc - b) / (-2.0 * c * gap)
    } else {
        2.0 * cc / (b + disc)
    }
}

/// False-negative exponent of the optimum embedder under an additive
/// Gaussian attack of variance σ_Z² > 0.
///
/// `σ_Z² = 0` is routed to [`efn_attack_free`]. Within relative 1e-8 of the
/// singular point σ_Z² = σ_X² sin²β the result comes from the numeric
/// oracle and is tagged accordingly.
pub fn efn_closed_form(params: &SystemParams) -> Result<ExponentReport> {
    params.validate()?;
    if params.attack_variance == 0.0 {
        return efn_attack_free(params.distortion, params.host_variance, params.fp_exponent);
    }
    let geometry = params.geometry()?;
    if global_min_is_feasible(params, &geometry) {
        return Ok(zero_report(params, ExponentMethod::ClosedForm));
    }
    let noise_floor = params.host_variance * geometry.sin2_beta;
    if (params.attack_variance - noise_floor).abs()
        <= SINGULAR_REL * params.attack_variance.max(noise_floor)
    {
        return efn_numeric_oracle(params, DEFAULT_ORACLE_TOL);
    }
    let r_star = closed_form_r_star(params, &geometry);
    let q_star = boundary_t1(params.distortion, &geometry, r_star);
    Ok(ExponentReport {
        e_fn: variance_divergence(q_star / params.attack_variance)
            + variance_divergence(r_star / params.host_variance),
        r_star,
        q_star,
        method: ExponentMethod::ClosedForm,
        zero_reason: None,
    })
}

/// Attack-free exponent: ½(t − ln t − 1) with t = D / (σ_X² (1 − e^{−2λ})),
/// or zero when t ≤ 1.
pub fn efn_attack_free(
    distortion: f64,
    host_variance: f64,
    fp_exponent: f64,
) -> Result<ExponentReport> {
    positive("distortion", distortion)?;
    positive("host_variance", host_variance)?;
    let geometry = derive_geometry(fp_exponent)?;
    let r_star = distortion / geometry.cos2_beta;
    let ratio = r_star / host_variance;
    let (e_fn, zero_reason) = if ratio <= 1.0 {
        (0.0, Some(ZeroReason::InsufficientDistortion))
    } else {
        (variance_divergence(ratio), None)
    };
    Ok(ExponentReport {
        e_fn,
        r_star,
        q_star: 0.0,
        method: ExponentMethod::AttackFree,
        zero_reason,
    })
}

/// Attack-free positivity thresholds `(λ₁, λ₂)`.
///
/// The optimum embedder has a positive exponent for λ < λ₁
/// (λ₁ = +inf when D ≥ σ_X²); the sign embedder only for λ < λ₂.
pub fn positivity_thresholds(distortion: f64, host_variance: f64) -> Result<(f64, f64)> {
    positive("distortion", distortion)?;
    positive("host_variance", host_variance)?;
    let ratio = distortion / host_variance;
    let lambda1 = if ratio >= 1.0 {
        f64::INFINITY
    } else {
        -0.5 * (-ratio).ln_1p()
    };
    Ok((lambda1, 0.5 * ratio.ln_1p()))
}

fn oracle_preconditions(params: &SystemParams, tol: f64) -> Result<DetectionGeometry> {
    params.validate()?;
    if params.attack_variance <= 0.0 {
        return Err(Error::invalid(
            "attack_variance",
            "the numeric oracle needs a positive attack variance; use efn_attack_free",
        ));
    }
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(Error::invalid("tol", format!("must lie in (0, 1e-3], got {tol}")));
    }
    params.geometry()
}

/// Brute-force oracle: golden-section minimization of
/// `½[q/σ_Z² − ln(q/σ_Z²) − 1] + ½[r/σ_X² − ln(r/σ_X²) − 1]` with
/// `q = max(0, D tan²β − r sin²β)` over `r ∈ (0, D/cos²β)`.
///
/// The objective is convex there and diverges at both ends, so the interval
/// itself is the bracket. Returns zero when (σ_X², σ_Z²) is feasible.
pub fn efn_numeric_oracle(params: &SystemParams, tol: f64) -> Result<ExponentReport> {
    let geometry = oracle_preconditions(params, tol)?;
    if global_min_is_feasible(params, &geometry) {
        return Ok(zero_report(params, ExponentMethod::NumericOracle));
    }
    let upper = params.distortion / geometry.cos2_beta;
    let min = golden_section(
        |r| boundary_objective(params, &geometry, r),
        0.0,
        upper,
        tol,
        ORACLE_MAX_ITER,
    )?;
    Ok(ExponentReport {
        e_fn: min.value,
        r_star: min.x,
        q_star: boundary_t1(params.distortion, &geometry, min.x),
        method: ExponentMethod::NumericOracle,
        zero_reason: None,
    })
}

/// Exhaustive grid over `(r, q)` of the two-variance objective subject to
/// `q ≥ max(0, T₁(r))`, with T₁ the optimum-embedder boundary.
///
/// Accuracy is limited by the grid; intended for cross-checking the 1D
/// oracle.
pub fn efn_oracle_grid_2d(params: &SystemParams, steps: usize) -> Result<ExponentReport> {
    let geometry = oracle_preconditions(params, 1e-3)?;
    let steps = steps.max(8);
    let r_max = 2.0 * params.host_variance.max(params.distortion / geometry.cos2_beta);
    let q_max = 2.0 * params.attack_variance.max(params.distortion * geometry.tan2_beta());
    let (hr, hq) = (r_max / steps as f64, q_max / steps as f64);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 1..=steps {
        let r = hr * i as f64;
        let q_floor = boundary_t1(params.distortion, &geometry, r).max(0.0);
        let rterm = variance_divergence(r / params.host_variance);
        // smallest admissible q on the grid plus every grid q above it
        let first = ((q_floor / hq).ceil() as usize).max(1);
        let candidates = std::iter::once(q_floor.max(hq * 1e-3))
            .chain((first..=steps).map(|j| hq * j as f64));
        for q in candidates {
            let value = variance_divergence(q / params.attack_variance) + rterm;
            if value < best.0 {
                best = (value, r, q);
            }
        }
    }
    let zero = global_min_is_feasible(params, &geometry);
    Ok(ExponentReport {
        e_fn: best.0,
        r_star: best.1,
        q_star: best.2,
        method: ExponentMethod::NumericOracle,
        zero_reason: zero.then_some(ZeroReason::GlobalMinFeasible),
    })
}

/// Per-α minimum of the full objective, used to confirm that the dominating
/// host angle is α = 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaScan {
    pub alpha_star: f64,
    pub e_fn: f64,
    pub r_star: f64,
    /// `(α, min_r objective(r, α))` for every grid angle.
    pub profile: Vec<(f64, f64)>,
}

/// Displacement chosen by the optimum embedder for a host at `(r, α)`.
pub fn optimum_displacement(
    distortion: f64,
    geometry: &DetectionGeometry,
    r: f64,
    alpha: f64,
) -> [f64; 3] {
    let c = geometry.cos2_beta;
    if distortion >= r * c * c {
        let sign = if alpha < 0.0 { -1.0 } else { 1.0 };
        [sign * (distortion - r * c * c).sqrt(), -r.sqrt() * c, 0.0]
    } else {
        [0.0, -distortion.sqrt(), 0.0]
    }
}

fn t1_general(geometry: &DetectionGeometry, r: f64, alpha: f64, v: [f64; 3]) -> f64 {
    let along = r.sqrt() * alpha.sin() + v[0];
    let across = r.sqrt() * alpha.cos() + v[1];
    along * along * geometry.tan2_beta() - across * across - v[2] * v[2]
}

fn full_objective(
    params: &SystemParams,
    geometry: &DetectionGeometry,
    r: f64,
    alpha: f64,
    v: [f64; 3],
) -> f64 {
    // inner minimum over q ≥ max(0, T₁) sits at max(T₁, σ_Z²)
    let q = t1_general(geometry, r, alpha, v).max(params.attack_variance);
    variance_divergence(q / params.attack_variance)
        + variance_divergence(r / params.host_variance)
        - alpha.cos().ln()
}

fn r_search_upper(params: &SystemParams, geometry: &DetectionGeometry) -> f64 {
    8.0 * params.host_variance.max(params.distortion / geometry.cos2_beta)
}

/// Three-variable mode: for each α on a symmetric grid over (−π/2, π/2)
/// (always containing 0), minimize over r with the displacement tied to
/// `(r, α)` through [`optimum_displacement`].
pub fn efn_oracle_alpha_scan(
    params: &SystemParams,
    alpha_steps: usize,
    tol: f64,
) -> Result<AlphaScan> {
    let geometry = oracle_preconditions(params, tol)?;
    let half = alpha_steps.max(2) / 2;
    let h = FRAC_PI_2 / (half + 1) as f64;
    let upper = r_search_upper(params, &geometry);
    let mut profile = Vec::with_capacity(2 * half + 1);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for k in -(half as i64)..=(half as i64) {
        let alpha = h * k as f64;
        let min = scan_then_golden(
            |r| {
                let v = optimum_displacement(params.distortion, &geometry, r, alpha);
                full_objective(params, &geometry, r, alpha, v)
            },
            0.0,
            upper,
            400,
            tol,
            ORACLE_MAX_ITER,
        )?;
        profile.push((alpha, min.value));
        if min.value < best.0 {
            best = (min.value, alpha, min.x);
        }
    }
    Ok(AlphaScan {
        alpha_star: best.1,
        e_fn: best.0,
        r_star: best.2,
        profile,
    })
}

/// Exponent for a fixed displacement `v` (not re-optimized per host):
/// minimum over `(r, α)` of the full objective.
pub fn efn_fixed_displacement(
    params: &SystemParams,
    v: [f64; 3],
    alpha_steps: usize,
    tol: f64,
) -> Result<ExponentReport> {
    let geometry = oracle_preconditions(params, tol)?;
    let half = alpha_steps.max(2) / 2;
    let h = FRAC_PI_2 / (half + 1) as f64;
    let upper = r_search_upper(params, &geometry);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for k in -(half as i64)..=(half as i64) {
        let alpha = h * k as f64;
        let min = scan_then_golden(
            |r| full_objective(params, &geometry, r, alpha, v),
            0.0,
            upper,
            400,
            tol,
            ORACLE_MAX_ITER,
        )?;
        if min.value < best.0 {
            best = (min.value, min.x, alpha);
        }
    }
    let q = t1_general(&geometry, best.1, best.2, v).max(params.attack_variance);
    Ok(ExponentReport {
        e_fn: best.0.max(0.0),
        r_star: best.1,
        q_star: q,
        method: ExponentMethod::NumericOracle,
        zero_reason: None,
    })
}

/// The fixed parameter grid used by `zerobit validate` and the acceptance
/// suite: λ ∈ {0.1, 0.3, 0.6, 1.0}, σ_Z² ∈ {0.1, 0.5, 1, 2}, D ∈ {0.5, 1, 2},
/// σ_X² = 1.
pub fn validation_grid() -> Vec<SystemParams> {
    let mut grid = Vec::new();
    for lambda in [0.1, 0.3, 0.6, 1.0] {
        for sz2 in [0.1, 0.5, 1.0, 2.0] {
            for d in [0.5, 1.0, 2.0] {
                grid.push(SystemParams {
                    host_variance: 1.0,
                    attack_variance: sz2,
                    distortion: d,
                    fp_exponent: lambda,
                });
            }
        }
    }
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleDeviation {
    pub params: SystemParams,
    pub closed_form: f64,
    pub oracle: f64,
    pub deviation: f64,
}

/// Largest |closed form − oracle| over `grid`, with the offending point.
pub fn max_oracle_deviation(grid: &[SystemParams], tol: f64) -> Result<Option<OracleDeviation>> {
    let mut worst: Option<OracleDeviation> = None;
    for params in grid {
        let closed_form = efn_closed_form(params)?.e_fn;
        let oracle = efn_numeric_oracle(params, tol)?.e_fn;
        let deviation = (closed_form - oracle).abs();
        if worst.is_none_or(|w| deviation > w.deviation) {
            worst = Some(OracleDeviation {
                params: *params,
                closed_form,
                oracle,
                deviation,
            });
        }
    }
    Ok(worst)
}
