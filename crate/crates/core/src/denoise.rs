//! Denoisers `D_σ` used as implicit priors.
//!
//! All kinds here are nonexpansive: the identity trivially, the averaged
//! box kernel because its matrix is doubly stochastic, and TV because it is a
//! proximal map (up to the truncated inner solve).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::ImageGrid;

/// Dual step for the anisotropic TV projection; `‖∇‖² ≤ 8` on a 2D grid.
const TV_DUAL_STEP: f64 = 1.0 / 8.0;

/// Default scale in `λ = scale · σ²` for the TV prox weight, with `σ` and
/// `λ` on the 8-bit intensity scale.
pub const TV_WEIGHT_PER_SIGMA_SQ: f64 = 0.1;

/// Images are handled in `[0, 1]` while `σ` is quoted in 8-bit levels. TV is
/// positively 1-homogeneous, so a weight `λ` on the 8-bit scale becomes
/// `λ / 255` on the unit scale.
pub const INTENSITY_LEVELS: f64 = 255.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DenoiserKind {
    Identity,
    TvProx,
    AveragedKernel,
}

impl std::str::FromStr for DenoiserKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "identity" => Ok(DenoiserKind::Identity),
            "tv" | "tv-prox" => Ok(DenoiserKind::TvProx),
            "kernel" | "averaged-kernel" => Ok(DenoiserKind::AveragedKernel),
            other => Err(invalid(format!("unknown denoiser `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiserSpec {
    pub kind: DenoiserKind,
    /// Denoising strength, as an input noise level in 8-bit intensity units.
    pub sigma: f64,
    #[serde(default = "default_tv_iters")]
    pub tv_inner_iters: usize,
    /// Weight on the input in the averaged kernel, in `[0, 1]`.
    #[serde(default = "default_alpha")]
    pub kernel_alpha: f64,
    /// Explicit TV prox weight; overrides the `0.1 σ²` mapping.
    #[serde(default)]
    pub tv_weight: Option<f64>,
}

fn default_tv_iters() -> usize {
    50
}

fn default_alpha() -> f64 {
    0.5
}

impl DenoiserSpec {
    pub fn identity() -> Self {
        Self::new(DenoiserKind::Identity, 0.0)
    }

    pub fn tv(sigma: f64) -> Self {
        Self::new(DenoiserKind::TvProx, sigma)
    }

    pub fn averaged_kernel(alpha: f64) -> Self {
        Self { kernel_alpha: alpha, ..Self::new(DenoiserKind::AveragedKernel, 0.0) }
    }

    pub fn new(kind: DenoiserKind, sigma: f64) -> Self {
        Self {
            kind,
            sigma,
            tv_inner_iters: default_tv_iters(),
            kernel_alpha: default_alpha(),
            tv_weight: None,
        }
    }

    pub fn with_tv_weight(mut self, weight: f64) -> Self {
        self.tv_weight = Some(weight);
        self
    }

    pub fn with_tv_iters(mut self, iters: usize) -> Self {
        self.tv_inner_iters = iters;
        self
    }

    /// TV prox weight `λ` for images in `[0, 1]`: `0.1 σ² / 255` unless
    /// overridden.
    pub fn tv_lambda(&self) -> f64 {
        self.tv_weight
            .unwrap_or(TV_WEIGHT_PER_SIGMA_SQ * self.sigma * self.sigma / INTENSITY_LEVELS)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(invalid(format!("sigma must be nonnegative, got {}", self.sigma)));
        }
        if !(0.0..=1.0).contains(&self.kernel_alpha) {
            return Err(invalid(format!("kernel_alpha must lie in [0,1], got {}", self.kernel_alpha)));
        }
        if self.tv_inner_iters == 0 {
            return Err(invalid("tv_inner_iters must be at least 1"));
        }
        if let Some(w) = self.tv_weight {
            if !(w.is_finite() && w >= 0.0) {
                return Err(invalid(format!("tv_weight must be nonnegative, got {w}")));
            }
        }
        Ok(())
    }
}

/// Applies the denoiser described by `spec` to `x`.
pub fn denoise(spec: &DenoiserSpec, x: &ImageGrid) -> Result<ImageGrid> {
    spec.validate()?;
    if !x.is_finite() {
        return Err(Error::NonFinite("denoiser input"));
    }
    Ok(match spec.kind {
        DenoiserKind::Identity => x.clone(),
        DenoiserKind::TvProx => tv_prox(x, spec.tv_lambda(), spec.tv_inner_iters),
        DenoiserKind::AveragedKernel => {
            let alpha = spec.kernel_alpha;
            x.zip_map(&box_blur(x), |a, b| alpha * a + (1.0 - alpha) * b)
        }
    })
}

/// `H(x) = τ (x − D(x))`
pub fn residual_operator(spec: &DenoiserSpec, tau: f64, x: &ImageGrid) -> Result<ImageGrid> {
    let d = denoise(spec, x)?;
    Ok(x.zip_map(&d, |a, b| tau * (a - b)))
}

/// `(τ/2) xᵀ(x − D(x))`. Diagnostic only: it is a valid regularizer only for
/// locally homogeneous denoisers with symmetric Jacobian.
pub fn red_regularizer_value(spec: &DenoiserSpec, tau: f64, x: &ImageGrid) -> Result<f64> {
    let d = denoise(spec, x)?;
    let quad: f64 = x.data().iter().zip(d.data()).map(|(a, b)| a * (a - b)).sum();
    Ok(0.5 * tau * quad)
}

/// Anisotropic TV prox `argmin_u ½‖u − x‖² + λ(‖∂_h u‖₁ + ‖∂_v u‖₁)` by
/// projected gradient on the dual, `iters` steps from a zero dual.
/// Differences are forward with a reflective (Neumann) boundary.
pub fn tv_prox(x: &ImageGrid, lambda: f64, iters: usize) -> ImageGrid {
    let (h, w) = (x.height(), x.width());
    let n = h * w;
    if lambda == 0.0 {
        return x.clone();
    }
    let mut ph = vec![0.0; n];
    let mut pv = vec![0.0; n];
    let mut u = x.data().to_vec();
    for _ in 0..iters {
        for r in 0..h {
            for c in 0..w {
                let j = r * w + c;
                if c + 1 < w {
                    ph[j] = (ph[j] + TV_DUAL_STEP * (u[j + 1] - u[j])).clamp(-lambda, lambda);
                }
                if r + 1 < h {
                    pv[j] = (pv[j] + TV_DUAL_STEP * (u[j + w] - u[j])).clamp(-lambda, lambda);
                }
            }
        }
        primal_from_dual(x.data(), &ph, &pv, h, w, &mut u);
    }
    ImageGrid::from_raw(h, w, u)
}

/// `u = x − ∇ᵀp = x + div p`
fn primal_from_dual(x: &[f64], ph: &[f64], pv: &[f64], h: usize, w: usize, u: &mut [f64]) {
    for r in 0..h {
        for c in 0..w {
            let j = r * w + c;
            let mut div = 0.0;
            if c + 1 < w {
                div += ph[j];
            }
            if c > 0 {
                div -= ph[j - 1];
            }
            if r + 1 < h {
                div += pv[j];
            }
            if r > 0 {
                div -= pv[j - w];
            }
            u[j] = x[j] + div;
        }
    }
}

/// Normalized 3x3 box filter; out-of-range pixels repeat the edge value.
fn box_blur(x: &ImageGrid) -> ImageGrid {
    let (h, w) = (x.height(), x.width());
    let clamp = |i: isize, len: usize| i.clamp(0, len as isize - 1) as usize;
    let mut rows = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let ci = c as isize;
            rows[r * w + c] = (-1..=1).map(|d| x.get(r, clamp(ci + d, w))).sum::<f64>() / 3.0;
        }
    }
    ImageGrid::from_fn(h, w, |r, c| {
        let ri = r as isize;
        (-1..=1).map(|d| rows[clamp(ri + d, h) * w + c]).sum::<f64>() / 3.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random_image(h: usize, w: usize, rng: &mut Rng) -> ImageGrid {
        ImageGrid::from_fn(h, w, |_, _| rng.standard_normal())
    }

    #[test]
    fn identity_returns_input() {
        let x = random_image(5, 4, &mut Rng::new(1));
        assert_eq!(denoise(&DenoiserSpec::identity(), &x).unwrap(), x);
    }

    #[test]
    fn tv_fixes_constant_images() {
        let x = ImageGrid::constant(6, 7, 0.37);
        let out = denoise(&DenoiserSpec::tv(5.0), &x).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn tv_with_tiny_weight_is_near_identity() {
        let x = random_image(16, 16, &mut Rng::new(2));
        let out = denoise(&DenoiserSpec::tv(0.0).with_tv_weight(1e-8), &x).unwrap();
        assert!(out.distance(&x) < 1e-4 * x.norm());
    }

    #[test]
    fn tv_preserves_mean() {
        let x = random_image(9, 11, &mut Rng::new(3));
        let out = tv_prox(&x, 0.3, 80);
        let mean = |g: &ImageGrid| g.data().iter().sum::<f64>() / g.len() as f64;
        assert!((mean(&out) - mean(&x)).abs() < 1e-12);
    }

    #[test]
    fn default_weight_mapping() {
        assert_eq!(DenoiserSpec::tv(5.0).tv_lambda(), 2.5 / 255.0);
        assert_eq!(DenoiserSpec::tv(5.0).with_tv_weight(0.01).tv_lambda(), 0.01);
    }

    #[test]
    fn kernel_keeps_constants_and_is_linear() {
        let spec = DenoiserSpec::averaged_kernel(0.3);
        let c = ImageGrid::constant(4, 5, 2.0);
        let out = denoise(&spec, &c).unwrap();
        assert!(out.distance(&c) < 1e-14);

        let mut rng = Rng::new(4);
        let x = random_image(7, 6, &mut rng);
        let y = random_image(7, 6, &mut rng);
        let (a, b) = (1.7, -0.4);
        let lhs = denoise(&spec, &x.scaled(a).add(&y.scaled(b))).unwrap();
        let rhs = denoise(&spec, &x).unwrap().scaled(a).add(&denoise(&spec, &y).unwrap().scaled(b));
        assert!(lhs.distance(&rhs) < 1e-12);
    }

    #[test]
    fn residual_operator_edge_cases() {
        let x = random_image(4, 4, &mut Rng::new(5));
        let zero = |g: &ImageGrid| g.data().iter().all(|&v| v == 0.0);
        assert!(zero(&residual_operator(&DenoiserSpec::identity(), 0.7, &x).unwrap()));
        assert!(zero(&residual_operator(&DenoiserSpec::tv(5.0), 0.0, &x).unwrap()));
        let c = ImageGrid::constant(4, 4, 0.8);
        assert!(zero(&residual_operator(&DenoiserSpec::tv(5.0), 0.2, &c).unwrap()));
    }

    #[test]
    fn regularizer_value_edge_cases() {
        let x = random_image(3, 3, &mut Rng::new(6));
        assert_eq!(red_regularizer_value(&DenoiserSpec::identity(), 0.5, &x).unwrap(), 0.0);
        assert_eq!(red_regularizer_value(&DenoiserSpec::tv(2.0), 0.0, &x).unwrap(), 0.0);
    }

    #[test]
    fn regularizer_value_on_2x2_kernel_matches_expansion() {
        // With edge repetition every 3x3 window on a 2x2 grid covers each
        // pixel: the own pixel 4 times, row/column neighbours 2 times, the
        // diagonal once, so (K*x)_j = (4 x_j + 2 x_row + 2 x_col + x_diag)/9.
        let x = ImageGrid::new(2, 2, vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let v = x.data();
        let blur = [
            (4.0 * v[0] + 2.0 * v[1] + 2.0 * v[2] + v[3]) / 9.0,
            (4.0 * v[1] + 2.0 * v[0] + 2.0 * v[3] + v[2]) / 9.0,
            (4.0 * v[2] + 2.0 * v[3] + 2.0 * v[0] + v[1]) / 9.0,
            (4.0 * v[3] + 2.0 * v[2] + 2.0 * v[1] + v[0]) / 9.0,
        ];
        let tau = 0.2;
        let expected: f64 = (0..4)
            .map(|j| v[j] * (v[j] - (0.5 * v[j] + 0.5 * blur[j])))
            .sum::<f64>()
            * tau
            / 2.0;
        let got = red_regularizer_value(&DenoiserSpec::averaged_kernel(0.5), tau, &x).unwrap();
        assert!((got - expected).abs() < 1e-14, "{got} vs {expected}");
    }

    #[test]
    fn invalid_specs_rejected() {
        let x = ImageGrid::zeros(2, 2);
        assert!(denoise(&DenoiserSpec::averaged_kernel(1.5), &x).is_err());
        assert!(denoise(&DenoiserSpec::tv(1.0).with_tv_iters(0), &x).is_err());
        assert!(denoise(&DenoiserSpec::tv(-1.0), &x).is_err());
        assert!("bm3d".parse::<DenoiserKind>().is_err());
    }
}
