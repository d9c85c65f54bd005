//! Optional JSON configuration and figure presets.
//!
//! Resolution order for every setting: command-line flag, then `--config`
//! file, then preset, then built-in default.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::{usage, CliError, EmbedderArg, OutputFormat, ParamArgs, SweepAxis};
use crate::error::Error;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Values {
    One(f64),
    Many(Vec<f64>),
}

impl Values {
    fn into_vec(self) -> Vec<f64> {
        match self {
            Values::One(v) => vec![v],
            Values::Many(v) => v,
        }
    }
}

/// Keys mirror the long flag names, with `-` spelled `_`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(rename = "D")]
    pub distortion: Option<Values>,
    pub sx2: Option<Values>,
    pub sz2: Option<Values>,
    pub lambda: Option<Values>,
    pub axis: Option<SweepAxis>,
    pub start: Option<f64>,
    pub end: Option<f64>,
    pub points: Option<usize>,
    pub n: Option<usize>,
    pub n_list: Option<Vec<usize>>,
    pub trials: Option<u64>,
    pub master_seed: Option<u64>,
    pub threads: Option<usize>,
    pub embedder: Option<String>,
    pub pin_watermark: Option<u64>,
    pub format: Option<OutputFormat>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| usage(format!("{}: {e}", path.display())))
    }

    pub fn embedder(&self) -> Result<Option<EmbedderArg>, CliError> {
        use clap::ValueEnum;
        self.embedder
            .as_deref()
            .map(|s| EmbedderArg::from_str(s, true).map_err(|_| usage(format!("config: unknown embedder {s:?}"))))
            .transpose()
    }
}

/// Parameter lists after merging flags, config and preset. Empty means unset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamLists {
    pub distortion: Vec<f64>,
    pub sx2: Vec<f64>,
    pub sz2: Vec<f64>,
    pub lambda: Vec<f64>,
}

fn first_non_empty(flag: &[f64], cfg: Option<Values>, preset: &[f64]) -> Vec<f64> {
    if !flag.is_empty() {
        return flag.to_vec();
    }
    if let Some(v) = cfg {
        return v.into_vec();
    }
    preset.to_vec()
}

impl ParamLists {
    pub fn merge(flags: &ParamArgs, cfg: &ConfigFile, preset: &ParamLists) -> Self {
        ParamLists {
            distortion: first_non_empty(&flags.distortion, cfg.distortion.clone(), &preset.distortion),
            sx2: first_non_empty(&flags.sx2, cfg.sx2.clone(), &preset.sx2),
            sz2: first_non_empty(&flags.sz2, cfg.sz2.clone(), &preset.sz2),
            lambda: first_non_empty(&flags.lambda, cfg.lambda.clone(), &preset.lambda),
        }
    }
}

pub fn pick<T>(flag: Option<T>, cfg: Option<T>, preset: Option<T>) -> Option<T> {
    flag.or(cfg).or(preset)
}

/// Grid and series settings baked in for one-command figure reproduction.
#[derive(Debug, Clone, Default)]
pub struct Preset {
    pub params: ParamLists,
    pub axis: Option<SweepAxis>,
    pub start: Option<f64>,
    pub end: Option<f64>,
    pub points: Option<usize>,
    pub n: Option<usize>,
    pub n_list: Option<Vec<usize>>,
    pub trials: Option<u64>,
}

fn lists(d: &[f64], sx2: &[f64], sz2: &[f64], lambda: &[f64]) -> ParamLists {
    ParamLists {
        distortion: d.to_vec(),
        sx2: sx2.to_vec(),
        sz2: sz2.to_vec(),
        lambda: lambda.to_vec(),
    }
}

/// E_fn versus λ, σ_X² = 1, D = 2, one series per σ_Z².
pub fn fig2() -> Preset {
    Preset {
        params: lists(&[2.0], &[1.0], &[0.1, 0.25, 0.5, 1.0], &[]),
        axis: Some(SweepAxis::Lambda),
        start: Some(0.01),
        end: Some(1.5),
        points: Some(150),
        ..Preset::default()
    }
}

/// E_fn versus σ_Z, σ_X² = 1, λ = 0.1, one series per D.
pub fn fig3() -> Preset {
    Preset {
        params: lists(&[0.5, 1.0, 2.0], &[1.0], &[], &[0.1]),
        axis: Some(SweepAxis::Sz),
        start: Some(0.0),
        end: Some(3.0),
        points: Some(151),
        ..Preset::default()
    }
}

/// E_fn versus σ_X, σ_Z² = 1, λ = 0.1, one series per D.
pub fn fig4() -> Preset {
    Preset {
        params: lists(&[0.5, 1.0, 2.0], &[], &[1.0], &[0.1]),
        axis: Some(SweepAxis::Sx),
        start: Some(0.05),
        end: Some(3.0),
        points: Some(149),
        ..Preset::default()
    }
}

/// Convergence in n under noise: D = 2, σ_X² = 1, λ = 0.6.
pub fn fig5() -> Preset {
    Preset {
        params: lists(&[2.0], &[1.0], &[0.52, 0.53, 0.54, 0.55], &[0.6]),
        n_list: Some(vec![100, 200, 400, 800]),
        trials: Some(100_000),
        ..Preset::default()
    }
}

/// Convergence in n without noise: D = 0.75, σ_X² = 1, σ_Z² = 0.
pub fn fig6() -> Preset {
    Preset {
        params: lists(&[0.75], &[1.0], &[0.0], &[0.58, 0.6, 0.62, 0.64]),
        n_list: Some(vec![100, 200, 400, 800]),
        trials: Some(100_000),
        ..Preset::default()
    }
}

/// Optimum versus sign embedder, σ_X² = 1, D = 2, no attack.
pub fn fig7() -> Preset {
    Preset {
        params: lists(&[2.0], &[1.0], &[0.0], &[]),
        start: Some(0.05),
        end: Some(1.5),
        points: Some(30),
        n: Some(512),
        trials: Some(10_000),
        ..Preset::default()
    }
}
