use serde::{Deserialize, Serialize};

use crate::denoise::DenoiserSpec;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Full-gradient RED iteration.
    GmRed,
    /// Online RED with a fresh minibatch of component gradients each step.
    OnRed,
    /// Minibatch stochastic gradient without the denoiser term.
    Sgm,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::GmRed => "gm-red",
            Algorithm::OnRed => "on-red",
            Algorithm::Sgm => "sgm",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "gm-red" => Ok(Algorithm::GmRed),
            "on-red" => Ok(Algorithm::OnRed),
            "sgm" => Ok(Algorithm::Sgm),
            other => Err(invalid(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Hyperparameters for a single solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub tau: f64,
    pub denoiser: DenoiserSpec,
    pub minibatch: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Restrict the run to the first `m` measurements (GM-RED baselines).
    #[serde(default)]
    pub subset: Option<usize>,
    /// Evaluate the full residual every `log_stride` iterations; the first
    /// and last iterates are always logged.
    #[serde(default = "default_log_stride")]
    pub log_stride: usize,
    /// Record wall-clock time in the trace. Off by default so traces are
    /// byte-reproducible.
    #[serde(default)]
    pub record_time: bool,
}

fn default_log_stride() -> usize {
    1
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm, gamma: f64, tau: f64, denoiser: DenoiserSpec) -> Self {
        Self {
            algorithm,
            gamma,
            tau,
            denoiser,
            minibatch: 1,
            iterations: 100,
            seed: 0,
            subset: None,
            log_stride: 1,
            record_time: false,
        }
    }

    pub fn with_minibatch(mut self, minibatch: usize) -> Self {
        self.minibatch = minibatch;
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_subset(mut self, subset: Option<usize>) -> Self {
        self.subset = subset;
        self
    }

    /// Checks the configuration against a measurement set of `total` components.
    /// Returns non-fatal warnings, e.g. a step size above `1/(L + 2 tau)`.
    pub fn validate(&self, total: usize, lipschitz: Option<f64>) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(invalid(format!("step size must be positive, got {}", self.gamma)));
        }
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(invalid(format!("tau must be nonnegative, got {}", self.tau)));
        }
        if self.iterations == 0 {
            return Err(invalid("iteration budget must be positive"));
        }
        if self.log_stride == 0 {
            return Err(invalid("log stride must be positive"));
        }
        if total == 0 {
            return Err(invalid("measurement set is empty"));
        }
        self.denoiser.validate()?;
        match self.algorithm {
            Algorithm::OnRed | Algorithm::Sgm => {
                if self.minibatch == 0 {
                    return Err(invalid("minibatch size must be positive"));
                }
                if self.minibatch > total {
                    return Err(invalid(format!(
                        "minibatch size {} exceeds the {} available measurements",
                        self.minibatch, total
                    )));
                }
                if self.subset.is_some() {
                    warnings.push("subset applies to gm-red only; ignored".to_string());
                }
            }
            Algorithm::GmRed => {
                if let Some(m) = self.subset {
                    if m == 0 || m > total {
                        return Err(invalid(format!(
                            "subset size {m} must be in 1..={total}"
                        )));
                    }
                }
            }
        }
        if self.algorithm == Algorithm::Sgm && self.tau != 0.0 {
            warnings.push(format!("sgm has no regularizer; tau = {} ignored", self.tau));
        }
        if let Some(l) = lipschitz {
            let tau = if self.algorithm == Algorithm::Sgm { 0.0 } else { self.tau };
            let bound = 1.0 / (l + 2.0 * tau);
            if self.gamma > bound * (1.0 + 1e-12) {
                warnings.push(format!(
                    "step size {} exceeds 1/(L + 2 tau) = {bound}",
                    self.gamma
                ));
            }
        }
        Ok(warnings)
    }
}
