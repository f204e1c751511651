//! Coded diffraction patterns: `y_i = |F (M_i ⊙ x)|` with unit-modulus masks.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::ImageGrid;
use crate::rng::Rng;

/// A random phase mask; entries lie on the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub struct CdpMask {
    seed: u64,
    height: usize,
    width: usize,
    phases: Vec<Complex64>,
}

impl CdpMask {
    /// Draws `exp(i 2π u)` per pixel, row-major, with `u ~ U[0,1)` from `rng`.
    /// The recorded seed is meaningful only when `rng` was freshly created
    /// from it; use [`CdpMask::from_seed`] for regenerable masks.
    pub fn generate(rng: &mut Rng, seed: u64, height: usize, width: usize) -> Self {
        let phases = (0..height * width)
            .map(|_| Complex64::from_polar(1.0, 2.0 * PI * rng.uniform()))
            .collect();
        Self { seed, height, width, phases }
    }

    pub fn from_seed(seed: u64, height: usize, width: usize) -> Self {
        Self::generate(&mut Rng::new(seed), seed, height, width)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn phases(&self) -> &[Complex64] {
        &self.phases
    }

    fn check(&self, x: &ImageGrid) -> Result<()> {
        x.ensure_shape(self.height, self.width)
    }

    /// `z = F (M ⊙ x)`
    pub(crate) fn field(&self, x: &ImageGrid) -> Vec<Complex64> {
        let mut z: Vec<Complex64> = self
            .phases
            .iter()
            .zip(x.data())
            .map(|(m, &v)| m * v)
            .collect();
        fft::forward_in_place(self.height, self.width, &mut z);
        z
    }
}

/// One coded-diffraction measurement: a mask and the recorded magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct CdpMeasurement {
    pub mask: CdpMask,
    pub magnitudes: Vec<f64>,
}

impl CdpMeasurement {
    pub fn new(mask: CdpMask, magnitudes: Vec<f64>) -> Result<Self> {
        fft::check_len(mask.height, mask.width, magnitudes.len())?;
        if magnitudes.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("measurement magnitudes"));
        }
        Ok(Self { mask, magnitudes })
    }
}

/// `|F (M ⊙ x)|` element-wise, with the unitary DFT.
pub fn cdp_forward(x: &ImageGrid, mask: &CdpMask) -> Result<Vec<f64>> {
    mask.check(x)?;
    Ok(mask.field(x).iter().map(|z| z.norm()).collect())
}

/// `½ ‖y − |F M x|‖²`
pub fn cdp_fidelity(x: &ImageGrid, m: &CdpMeasurement) -> Result<f64> {
    let fx = cdp_forward(x, &m.mask)?;
    Ok(0.5
        * fx.iter()
            .zip(&m.magnitudes)
            .map(|(a, y)| (y - a) * (y - a))
            .sum::<f64>())
}

/// Unit phase `z/|z|`, with `phase(0) = 0`.
///
/// The amplitude loss is not differentiable where `z = 0`; the zero
/// subgradient is used there. A consequence is that the all-zero image is a
/// stationary point of every coded-diffraction component, so solvers should
/// start from a nonzero image such as [`flat_start`](super::flat_start).
#[inline]
pub fn unit_phase(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        z / r
    }
}

/// `∇g_i(x) = Re{ conj(M) ⊙ F^H (z − y ⊙ phase(z)) }` with `z = F(M ⊙ x)`.
pub fn cdp_gradient(x: &ImageGrid, m: &CdpMeasurement) -> Result<ImageGrid> {
    m.mask.check(x)?;
    let (h, w) = (x.height(), x.width());
    let mut r = m.mask.field(x);
    for (z, &y) in r.iter_mut().zip(&m.magnitudes) {
        *z -= unit_phase(*z) * y;
    }
    fft::inverse_in_place(h, w, &mut r);
    let data = r
        .iter()
        .zip(m.mask.phases())
        .map(|(v, mk)| (mk.conj() * v).re)
        .collect();
    Ok(ImageGrid::from_raw(h, w, data))
}
