//! The RED operator `G(x) = ∇g(x) + τ(x − D(x))` and the solvers built on
//! it: batch GM-RED, online On-RED, and the SGM baseline.

use std::time::Instant;

use crate::config::{Algorithm, SolverConfig};
use crate::denoise::{residual_operator, DenoiserSpec};
use crate::error::{invalid, Error, Result};
use crate::forward::MeasurementSet;
use crate::grid::ImageGrid;
use crate::metrics::{image_snr_db, RunTrace, TraceRow};
use crate::rng::Rng;

/// The two parts of `G` (or its minibatch estimate `Ĝ`) and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct RedOperatorEval {
    pub g_grad: ImageGrid,
    pub h_val: ImageGrid,
    pub combined: ImageGrid,
}

impl RedOperatorEval {
    fn new(g_grad: ImageGrid, h_val: ImageGrid) -> Self {
        let combined = g_grad.add(&h_val);
        Self { g_grad, h_val, combined }
    }
}

/// `∇g(x) = (1/I) Σ_i ∇g_i(x)`, summed in index order.
pub fn full_gradient(set: &MeasurementSet, x: &ImageGrid) -> Result<ImageGrid> {
    let all: Vec<usize> = (0..set.len()).collect();
    set.mean_gradient(x, &all)
}

/// `(1/B) Σ_b ∇g_{i_b}(x)` over `B` indices drawn uniformly with replacement.
/// Returns the estimate and the indices in draw order.
pub fn minibatch_gradient(
    set: &MeasurementSet,
    x: &ImageGrid,
    minibatch: usize,
    rng: &mut Rng,
) -> Result<(ImageGrid, Vec<usize>)> {
    let indices = rng.uniform_indices(minibatch, set.len())?;
    let grad = set.mean_gradient(x, &indices)?;
    Ok((grad, indices))
}

fn regularizer_term(spec: &DenoiserSpec, tau: f64, x: &ImageGrid) -> Result<ImageGrid> {
    if tau == 0.0 {
        return Ok(ImageGrid::zeros(x.height(), x.width()));
    }
    residual_operator(spec, tau, x)
}

/// Evaluates the full operator `G(x)`.
pub fn red_operator(
    set: &MeasurementSet,
    spec: &DenoiserSpec,
    tau: f64,
    x: &ImageGrid,
) -> Result<RedOperatorEval> {
    Ok(RedOperatorEval::new(full_gradient(set, x)?, regularizer_term(spec, tau, x)?))
}

/// `x − γ (grad_est + τ (x − D(x)))`
pub fn red_step(
    x: &ImageGrid,
    grad_est: &ImageGrid,
    spec: &DenoiserSpec,
    tau: f64,
    gamma: f64,
) -> Result<ImageGrid> {
    if !(gamma > 0.0) {
        return Err(invalid(format!("step size must be positive, got {gamma}")));
    }
    let h = regularizer_term(spec, tau, x)?;
    let next = descend(x, &RedOperatorEval::new(grad_est.clone(), h).combined, gamma);
    if !next.is_finite() {
        return Err(Error::NumericalAbort { iteration: 0, reason: "non-finite step".into() });
    }
    Ok(next)
}

fn descend(x: &ImageGrid, direction: &ImageGrid, gamma: f64) -> ImageGrid {
    let mut next = x.clone();
    next.axpy(-gamma, direction);
    next
}

/// `1 / (L + 2τ)`, the largest step covered by the convergence theory.
pub fn default_step_size(lipschitz: f64, tau: f64) -> Result<f64> {
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(invalid(format!("Lipschitz constant must be positive, got {lipschitz}")));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(invalid(format!("tau must be nonnegative, got {tau}")));
    }
    Ok(1.0 / (lipschitz + 2.0 * tau))
}

/// Final iterate and per-iteration trace of a solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub reconstruction: ImageGrid,
    pub trace: RunTrace,
}

/// Runs the algorithm selected in `config`.
pub fn run(
    set: &MeasurementSet,
    x0: &ImageGrid,
    config: &SolverConfig,
    truth: Option<&ImageGrid>,
) -> Result<RunOutput> {
    match config.algorithm {
        Algorithm::GmRed => run_gm_red(set, x0, config, truth),
        Algorithm::OnRed => run_on_red(set, x0, config, truth),
        Algorithm::Sgm => run_sgm(set, x0, config, truth),
    }
}

/// Batch RED: `x^k = x^{k-1} − γ G(x^{k-1})` with the full gradient.
/// `config.subset = Some(m)` restricts the data to the first `m`
/// measurements.
pub fn run_gm_red(
    set: &MeasurementSet,
    x0: &ImageGrid,
    config: &SolverConfig,
    truth: Option<&ImageGrid>,
) -> Result<RunOutput> {
    expect_algorithm(config, Algorithm::GmRed)?;
    let restricted;
    let set = match config.subset {
        Some(m) => {
            restricted = set.subset(m)?;
            &restricted
        }
        None => set,
    };
    iterate(set, x0, config, config.tau, truth, Mode::Full)
}

/// Online RED: the gradient is replaced by a fresh minibatch average each
/// iteration. Logged residuals use the full operator.
pub fn run_on_red(
    set: &MeasurementSet,
    x0: &ImageGrid,
    config: &SolverConfig,
    truth: Option<&ImageGrid>,
) -> Result<RunOutput> {
    expect_algorithm(config, Algorithm::OnRed)?;
    iterate(set, x0, config, config.tau, truth, Mode::Minibatch)
}

/// Stochastic gradient baseline: On-RED without the denoiser term.
pub fn run_sgm(
    set: &MeasurementSet,
    x0: &ImageGrid,
    config: &SolverConfig,
    truth: Option<&ImageGrid>,
) -> Result<RunOutput> {
    expect_algorithm(config, Algorithm::Sgm)?;
    iterate(set, x0, config, 0.0, truth, Mode::Minibatch)
}

fn expect_algorithm(config: &SolverConfig, algorithm: Algorithm) -> Result<()> {
    if config.algorithm != algorithm {
        return Err(invalid(format!(
            "configuration selects {}, not {}",
            config.algorithm.name(),
            algorithm.name()
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Full,
    Minibatch,
}

fn iterate(
    set: &MeasurementSet,
    x0: &ImageGrid,
    config: &SolverConfig,
    tau: f64,
    truth: Option<&ImageGrid>,
    mode: Mode,
) -> Result<RunOutput> {
    config.validate(set.len(), None)?;
    x0.ensure_shape(set.height(), set.width())?;
    if !x0.is_finite() {
        return Err(Error::NonFinite("initial iterate"));
    }
    if let Some(t) = truth {
        t.ensure_shape(set.height(), set.width())?;
    }
    let spec = &config.denoiser;
    let start = Instant::now();
    let mut rng = Rng::new(config.seed);
    let mut trace = RunTrace::default();
    let mut x = x0.clone();
    let mut last_indices = Vec::new();

    let log = |trace: &mut RunTrace, k: usize, x: &ImageGrid, g: &ImageGrid, idx: Vec<usize>| {
        let grad_norm_sq = g.norm_sq();
        if !grad_norm_sq.is_finite() {
            return Err(Error::NumericalAbort {
                iteration: k,
                reason: "residual norm overflowed; reduce the step size".into(),
            });
        }
        let snr_db = truth.map(|t| image_snr_db(x, t)).transpose()?;
        let wall_ms = if config.record_time {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        trace.rows.push(TraceRow {
            k,
            grad_norm_sq,
            norm_acc: 0.0,
            snr_db,
            sampled_indices: idx,
            wall_ms,
        });
        Ok::<(), Error>(())
    };

    for k in 1..=config.iterations {
        let logged = (k - 1) % config.log_stride == 0;
        let h = regularizer_term(spec, tau, &x)?;
        let direction = match mode {
            Mode::Full => {
                let g = RedOperatorEval::new(full_gradient(set, &x)?, h).combined;
                if logged {
                    log(&mut trace, k - 1, &x, &g, std::mem::take(&mut last_indices))?;
                }
                g
            }
            Mode::Minibatch => {
                if logged {
                    let full = RedOperatorEval::new(full_gradient(set, &x)?, h.clone()).combined;
                    log(&mut trace, k - 1, &x, &full, std::mem::take(&mut last_indices))?;
                }
                let (estimate, indices) = minibatch_gradient(set, &x, config.minibatch, &mut rng)?;
                last_indices = indices;
                RedOperatorEval::new(estimate, h).combined
            }
        };
        x = descend(&x, &direction, config.gamma);
        if !(direction.is_finite() && x.is_finite()) {
            return Err(Error::NumericalAbort {
                iteration: k,
                reason: "iterate became non-finite; reduce the step size".into(),
            });
        }
    }
    let g = red_operator(set, spec, tau, &x)?.combined;
    log(&mut trace, config.iterations, &x, &g, last_indices)?;
    trace.normalize();
    Ok(RunOutput { reconstruction: x, trace })
}
