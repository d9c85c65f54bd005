//! Optimum one-bit watermarking for Gaussian hosts under Gaussian attacks.
//!
//! The crate provides the hypercone detector, the optimum and sign
//! embedders, closed-form and numeric false-negative error exponents, exact
//! finite-n false-positive probabilities, and a seeded Monte Carlo harness.

pub mod cli;
pub mod detector;
pub mod embedder;
pub mod error;
pub mod exponents;
mod linalg;
pub mod model;
pub mod optimize;
mod quad;
pub mod simulate;
pub mod sphere;

pub use detector::{detect, empirical_mutual_information, DetectionReport};
pub use embedder::{embed_optimal, embed_sign, embedding_t1, EmbedBranch, EmbedResult};
pub use error::{Error, Result};
pub use exponents::{
    efn_attack_free, efn_closed_form, efn_numeric_oracle, positivity_thresholds, ExponentMethod,
    ExponentReport, ZeroReason,
};
pub use model::{
    derive_geometry, generate_watermark, to_plane_coordinates, DetectionGeometry, HostSignal,
    PlaneCoordinates, SystemParams, WatermarkSequence,
};
pub use simulate::{
    exponent_convergence_sweep, simulate_fn, simulate_fp, EmbedderKind, TrialBatchResult,
    TrialConfig,
};
pub use sphere::{angle_pdf, cap_area_log, exact_fp_probability_log};
