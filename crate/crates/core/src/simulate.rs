//! Seeded Monte Carlo estimation of false-negative and false-positive
//! probabilities at finite n.
//!
//! Trial `k` draws everything it needs from a ChaCha8 generator seeded with
//! `master_seed` (via `seed_from_u64`) and positioned on stream `k`. The
//! watermark comes first (from one 64-bit seed word), then the host, then the
//! attack noise. Gaussian samples use the ziggurat `StandardNormal` sampler.
//! Results therefore depend only on the configuration, never on how trials
//! are scheduled across threads.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::inv_beta_reg;

use crate::detector::detect;
use crate::embedder::{embed_optimal, embed_sign};
use crate::error::{Error, Result};
use crate::model::{generate_watermark, HostSignal, SystemParams, WatermarkSequence};

/// Upper bound on `trials × n` samples per batch.
pub const MAX_SAMPLES_PER_BATCH: u64 = 1 << 42;

const CI_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbedderKind {
    Optimal,
    Sign,
    /// No embedding: false-positive experiments only.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub n: usize,
    pub trials: u64,
    pub params: SystemParams,
    pub embedder: EmbedderKind,
    pub master_seed: u64,
    /// Use this watermark seed for every trial instead of a fresh key.
    pub pinned_watermark: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialBatchResult {
    pub n: usize,
    pub trials: u64,
    pub failures: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// −(1/n) ln p̂; `None` when no failure was observed.
    pub empirical_exponent: Option<f64>,
    pub master_seed: u64,
}

/// Two-sided Clopper–Pearson interval at the given confidence level.
pub fn clopper_pearson(failures: u64, trials: u64, level: f64) -> (f64, f64) {
    let tail = 0.5 * (1.0 - level);
    let (x, m) = (failures as f64, trials as f64);
    let low = if failures == 0 {
        0.0
    } else {
        inv_beta_reg(x, m - x + 1.0, tail)
    };
    let high = if failures >= trials {
        1.0
    } else {
        inv_beta_reg(x + 1.0, m - x, 1.0 - tail)
    };
    (low, high)
}

impl TrialBatchResult {
    pub fn from_counts(n: usize, trials: u64, failures: u64, master_seed: u64) -> Self {
        let p_hat = failures as f64 / trials as f64;
        let (ci_low, ci_high) = clopper_pearson(failures, trials, CI_LEVEL);
        TrialBatchResult {
            n,
            trials,
            failures,
            p_hat,
            ci_low: ci_low.min(p_hat),
            ci_high: ci_high.max(p_hat),
            empirical_exponent: (failures > 0).then(|| -p_hat.ln() / n as f64),
            master_seed,
        }
    }

    /// Whether `p` lies inside the confidence interval.
    pub fn covers(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

impl TrialConfig {
    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n", "must be >= 1"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be >= 1"));
        }
        self.params.validate()?;
        match (self.trials).checked_mul(self.n as u64) {
            Some(work) if work <= MAX_SAMPLES_PER_BATCH => Ok(()),
            _ => Err(Error::invalid(
                "trials",
                format!(
                    "trials * n exceeds the per-batch limit of {MAX_SAMPLES_PER_BATCH} samples"
                ),
            )),
        }
    }
}

fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize, std_dev: f64) -> Vec<f64> {
    (0..n)
        .map(|_| std_dev * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn watermark_for(
    config: &TrialConfig,
    pinned: Option<&WatermarkSequence>,
    rng: &mut ChaCha8Rng,
) -> Result<WatermarkSequence> {
    // the seed word is drawn even when pinned so that the host and noise
    // streams line up between pinned and unpinned runs
    let seed = rng.next_u64();
    match pinned {
        Some(u) => Ok(u.clone()),
        None => generate_watermark(config.n, seed),
    }
}

fn run_batch<F>(config: &TrialConfig, trial: F) -> Result<TrialBatchResult>
where
    F: Fn(u64, Option<&WatermarkSequence>) -> Result<bool> + Sync,
{
    let pinned = config
        .pinned_watermark
        .map(|seed| generate_watermark(config.n, seed))
        .transpose()?;
    let failures = (0..config.trials)
        .into_par_iter()
        .map(|k| trial(k, pinned.as_ref()).map(u64::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(TrialBatchResult::from_counts(
        config.n,
        config.trials,
        failures,
        config.master_seed,
    ))
}

/// Estimates P_fn: host `x ~ N(0, σ_X² I)`, `y = f(x, u)`,
/// `s = y + z` with `z ~ N(0, σ_Z² I)`; a failure is "absent".
pub fn simulate_fn(config: &TrialConfig) -> Result<TrialBatchResult> {
    config.validate()?;
    if config.embedder == EmbedderKind::None {
        return Err(Error::invalid(
            "embedder",
            "false-negative simulation needs an embedder",
        ));
    }
    let params = config.params;
    let geometry = params.geometry()?;
    let host_sd = params.host_variance.sqrt();
    let noise_sd = params.attack_variance.sqrt();
    run_batch(config, |k, pinned| {
        let mut rng = trial_rng(config.master_seed, k);
        let u = watermark_for(config, pinned, &mut rng)?;
        let x = HostSignal::new(gaussian_vec(&mut rng, config.n, host_sd))?;
        let mut s = match config.embedder {
            EmbedderKind::Optimal => embed_optimal(&x, &u, params.distortion, &geometry)?.y,
            EmbedderKind::Sign => embed_sign(&x, &u, params.distortion)?.y,
            EmbedderKind::None => unreachable!("rejected above"),
        };
        if noise_sd > 0.0 {
            for si in s.iter_mut() {
                *si += noise_sd * rng.sample::<f64, _>(StandardNormal);
            }
        }
        Ok(!detect(&s, &u, &geometry)?.decision)
    })
}

/// Estimates P_fp: `s ~ N(0, (σ_X² + σ_Z²) I)` carries no watermark; a
/// failure is "present".
pub fn simulate_fp(config: &TrialConfig) -> Result<TrialBatchResult> {
    config.validate()?;
    if config.embedder != EmbedderKind::None {
        return Err(Error::invalid(
            "embedder",
            "false-positive simulation takes embedder = none",
        ));
    }
    let geometry = config.params.geometry()?;
    let sd = (config.params.host_variance + config.params.attack_variance).sqrt();
    run_batch(config, |k, pinned| {
        let mut rng = trial_rng(config.master_seed, k);
        let u = watermark_for(config, pinned, &mut rng)?;
        let s = gaussian_vec(&mut rng, config.n, sd);
        Ok(detect(&s, &u, &geometry)?.decision)
    })
}

/// One false-negative batch per dimension in `n_list`, all sharing the base
/// configuration's master seed.
pub fn exponent_convergence_sweep(
    base: &TrialConfig,
    n_list: &[usize],
) -> Result<Vec<(usize, TrialBatchResult)>> {
    if let Some(&bad) = n_list.iter().find(|&&n| n < 4) {
        return Err(Error::invalid("n_list", format!("every n must be >= 4, got {bad}")));
    }
    n_list
        .iter()
        .map(|&n| Ok((n, simulate_fn(&TrialConfig { n, ..*base })?)))
        .collect()
}
