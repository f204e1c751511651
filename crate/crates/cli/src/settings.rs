//! Solver settings shared by `run` and `sweep`.
//!
//! Values are resolved in order flags > config file > defaults. The resolved
//! settings are written back out in the same JSON shape, so a sidecar can be
//! passed to `--config` to replay a run.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use clap::Args;
use onred_core::forward::{estimate_lipschitz, flat_start};
use onred_core::red::default_step_size;
use onred_core::{Algorithm, DenoiserKind, DenoiserSpec, ImageGrid, MeasurementSet, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Step size: derived from the Lipschitz constant, or given explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSetting {
    Value(f64),
    Keyword(Auto),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Auto {
    Auto,
}

impl FromStr for GammaSetting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(GammaSetting::Keyword(Auto::Auto));
        }
        s.parse::<f64>()
            .map(GammaSetting::Value)
            .map_err(|_| format!("expected `auto` or a number, got `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    /// Constant image matching the measured energy.
    Flat,
    Zero,
}

impl FromStr for Init {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "flat" => Ok(Init::Flat),
            "zero" => Ok(Init::Zero),
            other => Err(format!("unknown init `{other}` (expected flat or zero)")),
        }
    }
}

/// Solver settings as they appear in a config file; every field optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingsFile {
    pub alg: Option<Algorithm>,
    #[serde(rename = "B")]
    pub minibatch: Option<usize>,
    pub tau: Option<f64>,
    pub sigma: Option<f64>,
    pub denoiser: Option<DenoiserKind>,
    pub tv_weight: Option<f64>,
    pub tv_iters: Option<usize>,
    pub kernel_alpha: Option<f64>,
    pub gamma: Option<GammaSetting>,
    pub gamma_mult: Option<f64>,
    pub iters: Option<usize>,
    pub seed: Option<u64>,
    pub subset: Option<usize>,
    pub log_stride: Option<usize>,
    pub record_time: Option<bool>,
    pub init: Option<Init>,
    /// Informational in sidecars; ignored on input.
    pub lipschitz: Option<f64>,
}

impl SettingsFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverFlags {
    /// Algorithm: gm-red, on-red or sgm.
    #[arg(long, value_parser = parse_algorithm)]
    pub alg: Option<Algorithm>,
    /// Minibatch size.
    #[arg(long = "B")]
    pub minibatch: Option<usize>,
    /// Regularization weight.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Denoiser strength in 8-bit intensity units.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Denoiser: tv, kernel or identity.
    #[arg(long, value_parser = parse_denoiser)]
    pub denoiser: Option<DenoiserKind>,
    /// Explicit TV prox weight, overriding the sigma mapping.
    #[arg(long)]
    pub tv_weight: Option<f64>,
    /// Inner iterations of the TV prox.
    #[arg(long)]
    pub tv_iters: Option<usize>,
    /// Input weight of the averaged kernel denoiser.
    #[arg(long)]
    pub kernel_alpha: Option<f64>,
    /// Step size, or `auto` for 1/(L + 2 tau).
    #[arg(long)]
    pub gamma: Option<GammaSetting>,
    /// Multiplier applied to the step size.
    #[arg(long)]
    pub gamma_mult: Option<f64>,
    /// Iteration budget.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Solver seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// GM-RED only: use the first m measurements.
    #[arg(long)]
    pub subset: Option<usize>,
    /// Log the full residual every k iterations.
    #[arg(long)]
    pub log_stride: Option<usize>,
    /// Record wall-clock time in traces (breaks byte reproducibility).
    #[arg(long)]
    pub record_time: bool,
    /// Starting image: flat or zero.
    #[arg(long)]
    pub init: Option<Init>,
    /// JSON settings file; flags take precedence over its values.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: onred_core::Error| e.to_string())
}

fn parse_denoiser(s: &str) -> Result<DenoiserKind, String> {
    s.parse().map_err(|e: onred_core::Error| e.to_string())
}

impl SolverFlags {
    /// Overlays flags onto the config file (if any).
    pub fn merged(&self) -> CliResult<SettingsFile> {
        let base = match &self.config {
            Some(path) => SettingsFile::load(path)?,
            None => SettingsFile::default(),
        };
        Ok(SettingsFile {
            alg: self.alg.or(base.alg),
            minibatch: self.minibatch.or(base.minibatch),
            tau: self.tau.or(base.tau),
            sigma: self.sigma.or(base.sigma),
            denoiser: self.denoiser.or(base.denoiser),
            tv_weight: self.tv_weight.or(base.tv_weight),
            tv_iters: self.tv_iters.or(base.tv_iters),
            kernel_alpha: self.kernel_alpha.or(base.kernel_alpha),
            gamma: self.gamma.or(base.gamma),
            gamma_mult: self.gamma_mult.or(base.gamma_mult),
            iters: self.iters.or(base.iters),
            seed: self.seed.or(base.seed),
            subset: self.subset.or(base.subset),
            log_stride: self.log_stride.or(base.log_stride),
            record_time: if self.record_time { Some(true) } else { base.record_time },
            init: self.init.or(base.init),
            lipschitz: None,
        })
    }
}

/// Fully resolved settings for one measurement set.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: SolverConfig,
    pub lipschitz: f64,
    pub init: Init,
    pub warnings: Vec<String>,
}

impl Resolved {
    pub fn start(&self, set: &MeasurementSet) -> ImageGrid {
        match self.init {
            Init::Flat => flat_start(set),
            Init::Zero => ImageGrid::zeros(set.height(), set.width()),
        }
    }

    /// Settings file that replays this run exactly.
    pub fn sidecar(&self) -> SettingsFile {
        let c = &self.config;
        SettingsFile {
            alg: Some(c.algorithm),
            minibatch: Some(c.minibatch),
            tau: Some(c.tau),
            sigma: Some(c.denoiser.sigma),
            denoiser: Some(c.denoiser.kind),
            tv_weight: c.denoiser.tv_weight,
            tv_iters: Some(c.denoiser.tv_inner_iters),
            kernel_alpha: Some(c.denoiser.kernel_alpha),
            gamma: Some(GammaSetting::Value(c.gamma)),
            gamma_mult: Some(1.0),
            iters: Some(c.iterations),
            seed: Some(c.seed),
            subset: c.subset,
            log_stride: Some(c.log_stride),
            record_time: Some(c.record_time),
            init: Some(self.init),
            lipschitz: Some(self.lipschitz),
        }
    }
}

impl SettingsFile {
    /// Fills defaults, derives `γ` and validates against `set`.
    pub fn resolve(&self, set: &MeasurementSet) -> CliResult<Resolved> {
        let algorithm = self.alg.unwrap_or(Algorithm::OnRed);
        let tau = self.tau.unwrap_or(0.2);
        let kind = self.denoiser.unwrap_or(DenoiserKind::TvProx);
        let mut denoiser = DenoiserSpec::new(kind, self.sigma.unwrap_or(5.0));
        denoiser.tv_weight = self.tv_weight;
        if let Some(it) = self.tv_iters {
            denoiser.tv_inner_iters = it;
        }
        if let Some(a) = self.kernel_alpha {
            denoiser.kernel_alpha = a;
        }
        let lipschitz = estimate_lipschitz(set)?;
        // SGM has no regularizer, so its step size ignores tau.
        let effective_tau = if algorithm == Algorithm::Sgm { 0.0 } else { tau };
        let base_gamma = match self.gamma.unwrap_or(GammaSetting::Keyword(Auto::Auto)) {
            GammaSetting::Value(g) => g,
            GammaSetting::Keyword(Auto::Auto) => {
                if !(effective_tau.is_finite() && effective_tau >= 0.0) {
                    return Err(CliError::Config(format!("tau must be nonnegative, got {tau}")));
                }
                default_step_size(lipschitz, effective_tau)?
            }
        };
        let gamma = base_gamma * self.gamma_mult.unwrap_or(1.0);
        let mut config = SolverConfig::new(algorithm, gamma, tau, denoiser)
            .with_minibatch(self.minibatch.unwrap_or(1))
            .with_iterations(self.iters.unwrap_or(200))
            .with_seed(self.seed.unwrap_or(0))
            .with_subset(self.subset);
        config.log_stride = self.log_stride.unwrap_or(1);
        config.record_time = self.record_time.unwrap_or(false);
        let warnings = config.validate(set.len(), Some(lipschitz))?;
        Ok(Resolved {
            config,
            lipschitz,
            init: self.init.unwrap_or(Init::Flat),
            warnings,
        })
    }
}
