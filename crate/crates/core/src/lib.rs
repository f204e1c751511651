//! Regularization by denoising (RED) in batch and online form.
//!
//! The fixed-point operator `G(x) = ∇g(x) + τ(x − D_σ(x))` couples a data
//! fidelity `g = (1/I) Σ g_i` with a denoiser `D_σ`. [`red::run_gm_red`]
//! iterates `x ← x − γ G(x)` with the full gradient; [`red::run_on_red`]
//! replaces `∇g` with the mean of `B` randomly drawn component gradients.
//!
//! [`forward`] provides coded-diffraction phase retrieval and linear
//! least-squares components, [`denoise`] the nonexpansive denoisers, and
//! [`oracle`] the brute-force references used by the test suites.

pub mod config;
pub mod denoise;
pub mod error;
pub mod fft;
pub mod forward;
pub mod grid;
pub mod metrics;
pub mod oracle;
pub mod phantom;
pub mod red;
pub mod rng;

pub use config::{Algorithm, SolverConfig};
pub use denoise::{DenoiserKind, DenoiserSpec};
pub use error::{Error, Result};
pub use forward::{Measurement, MeasurementSet};
pub use grid::{Complex64, ComplexGrid, ImageGrid};
pub use metrics::{RunTrace, TraceRow};
pub use red::RunOutput;
pub use rng::Rng;
