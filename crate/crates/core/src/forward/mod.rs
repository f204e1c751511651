//! Forward measurement models and their component data-fidelity terms.
//!
//! A [`MeasurementSet`] holds `I` components `g_i`; the overall fidelity is
//! their mean. Components are either coded diffraction patterns (nonconvex
//! amplitude loss) or linear least-squares terms.

mod cdp;
mod container;
mod linear;

pub use cdp::{cdp_fidelity, cdp_forward, cdp_gradient, unit_phase, CdpMask, CdpMeasurement};
pub use container::{read_measurement_set, write_measurement_set, FORMAT_VERSION};
pub use linear::{linear_fidelity, linear_gradient, LinearMeasurement, LinearOperator};

use crate::error::{invalid, Error, Result};
use crate::grid::ImageGrid;
use crate::rng::Rng;

/// One component `g_i` of the data-fidelity.
#[derive(Debug, Clone, PartialEq)]
pub enum Measurement {
    Cdp(CdpMeasurement),
    Linear(LinearMeasurement),
}

impl Measurement {
    pub fn fidelity(&self, x: &ImageGrid) -> Result<f64> {
        match self {
            Measurement::Cdp(m) => cdp_fidelity(x, m),
            Measurement::Linear(m) => linear_fidelity(x, m),
        }
    }

    pub fn gradient(&self, x: &ImageGrid) -> Result<ImageGrid> {
        match self {
            Measurement::Cdp(m) => cdp_gradient(x, m),
            Measurement::Linear(m) => linear_gradient(x, m),
        }
    }

    fn shape(&self) -> (usize, usize) {
        match self {
            Measurement::Cdp(m) => (m.mask.height(), m.mask.width()),
            Measurement::Linear(m) => (m.height(), m.width()),
        }
    }
}

/// An ordered set of `I` measurements of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    height: usize,
    width: usize,
    measurements: Vec<Measurement>,
    /// Input SNR used at simulation time; `+inf` for noiseless data.
    input_snr_db: f64,
}

impl MeasurementSet {
    pub fn new(measurements: Vec<Measurement>, input_snr_db: f64) -> Result<Self> {
        let first = measurements
            .first()
            .ok_or_else(|| invalid("measurement set must not be empty"))?;
        let (height, width) = first.shape();
        for m in &measurements {
            let (h, w) = m.shape();
            if (h, w) != (height, width) {
                return Err(Error::DimensionMismatch {
                    expected: format!("{height}x{width}"),
                    found: format!("{h}x{w}"),
                });
            }
        }
        Ok(Self { height, width, measurements, input_snr_db })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    pub fn input_snr_db(&self) -> f64 {
        self.input_snr_db
    }

    pub fn measurements(&self) -> &[Measurement] {
        &self.measurements
    }

    pub fn get(&self, i: usize) -> &Measurement {
        &self.measurements[i]
    }

    /// The first `m` measurements as a new set.
    pub fn subset(&self, m: usize) -> Result<MeasurementSet> {
        if m == 0 || m > self.len() {
            return Err(invalid(format!("subset size {m} must be in 1..={}", self.len())));
        }
        MeasurementSet::new(self.measurements[..m].to_vec(), self.input_snr_db)
    }

    /// `(1/I) Σ_i g_i(x)`
    pub fn fidelity(&self, x: &ImageGrid) -> Result<f64> {
        let mut total = 0.0;
        for m in &self.measurements {
            total += m.fidelity(x)?;
        }
        Ok(total / self.len() as f64)
    }

    /// Mean of the component gradients at `indices` (duplicates counted).
    ///
    /// The sum runs sequentially over the indices in sorted order so that the
    /// result does not depend on the draw order.
    pub fn mean_gradient(&self, x: &ImageGrid, indices: &[usize]) -> Result<ImageGrid> {
        if indices.is_empty() {
            return Err(invalid("cannot average an empty set of gradients"));
        }
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        let mut acc = ImageGrid::zeros(x.height(), x.width());
        for &i in &sorted {
            let m = self
                .measurements
                .get(i)
                .ok_or_else(|| invalid(format!("component index {i} out of range")))?;
            acc.axpy(1.0, &m.gradient(x)?);
        }
        let count = sorted.len() as f64;
        Ok(acc.map(|v| v / count))
    }

    pub fn is_cdp(&self) -> bool {
        self.measurements.iter().all(|m| matches!(m, Measurement::Cdp(_)))
    }
}

/// Simulates `count` coded-diffraction measurements of `truth`.
///
/// Mask seeds are drawn first from `rng`, then one Gaussian noise vector per
/// measurement. Each noise vector is rescaled so that the noisy magnitudes
/// have exactly `input_snr_db` against the clean ones; negative values are
/// then clamped to zero. `input_snr_db = +inf` disables noise.
pub fn simulate_cdp(
    truth: &ImageGrid,
    count: usize,
    input_snr_db: f64,
    rng: &mut Rng,
) -> Result<MeasurementSet> {
    if count == 0 {
        return Err(invalid("number of measurements must be positive"));
    }
    if input_snr_db.is_nan() || input_snr_db == f64::NEG_INFINITY {
        return Err(invalid(format!("invalid input SNR {input_snr_db}")));
    }
    let (h, w) = (truth.height(), truth.width());
    let seeds: Vec<u64> = (0..count).map(|_| rng.next_u64()).collect();
    let mut measurements = Vec::with_capacity(count);
    for seed in seeds {
        let mask = CdpMask::from_seed(seed, h, w);
        let clean = cdp_forward(truth, &mask)?;
        let magnitudes = if input_snr_db.is_finite() {
            calibrated_noisy(&clean, input_snr_db, rng)
                .into_iter()
                .map(|v| v.max(0.0))
                .collect()
        } else {
            clean
        };
        measurements.push(Measurement::Cdp(CdpMeasurement::new(mask, magnitudes)?));
    }
    MeasurementSet::new(measurements, input_snr_db)
}

/// Convex test instances: `count` dense Gaussian operators with `rows` rows,
/// entries `N(0, 1/n)`, and observations at `input_snr_db` drawn like
/// [`simulate_cdp`].
pub fn simulate_linear_gaussian(
    truth: &ImageGrid,
    count: usize,
    rows: usize,
    input_snr_db: f64,
    rng: &mut Rng,
) -> Result<MeasurementSet> {
    if count == 0 || rows == 0 {
        return Err(invalid("number of measurements and rows must be positive"));
    }
    if input_snr_db.is_nan() || input_snr_db == f64::NEG_INFINITY {
        return Err(invalid(format!("invalid input SNR {input_snr_db}")));
    }
    let (h, w) = (truth.height(), truth.width());
    let n = h * w;
    let scale = 1.0 / (n as f64).sqrt();
    let mut measurements = Vec::with_capacity(count);
    for _ in 0..count {
        let entries = (0..rows * n).map(|_| scale * rng.standard_normal()).collect();
        let operator = LinearOperator::dense(rows, n, entries)?;
        let clean = operator.apply(truth.data())?;
        let observation = if input_snr_db.is_finite() {
            calibrated_noisy(&clean, input_snr_db, rng)
        } else {
            clean
        };
        measurements.push(Measurement::Linear(LinearMeasurement::new(h, w, operator, observation)?));
    }
    MeasurementSet::new(measurements, input_snr_db)
}

/// Clean magnitudes plus a Gaussian vector rescaled so the result sits at
/// exactly `snr_db` against `clean`. No clamping.
pub(crate) fn calibrated_noisy(clean: &[f64], snr_db: f64, rng: &mut Rng) -> Vec<f64> {
    let noise: Vec<f64> = clean.iter().map(|_| rng.standard_normal()).collect();
    let signal = clean.iter().map(|v| v * v).sum::<f64>().sqrt();
    let noise_norm = noise.iter().map(|v| v * v).sum::<f64>().sqrt();
    if signal == 0.0 || noise_norm == 0.0 {
        return clean.to_vec();
    }
    let scale = signal / (noise_norm * 10f64.powf(snr_db / 20.0));
    clean.iter().zip(&noise).map(|(c, e)| c + scale * e).collect()
}

/// Flat starting image whose energy matches the data.
///
/// With the unitary DFT and unit-modulus masks `‖F M x‖ = ‖x‖`, so the
/// constant image `c·1` with `c = mean_i ‖y_i‖ / sqrt(n)` has the energy the
/// magnitudes imply. For linear sets the zero image is returned.
pub fn flat_start(set: &MeasurementSet) -> ImageGrid {
    let (h, w) = (set.height(), set.width());
    if !set.is_cdp() {
        return ImageGrid::zeros(h, w);
    }
    let energy: f64 = set
        .measurements()
        .iter()
        .map(|m| match m {
            Measurement::Cdp(c) => c.magnitudes.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Measurement::Linear(_) => 0.0,
        })
        .sum::<f64>()
        / set.len() as f64;
    ImageGrid::constant(h, w, energy / ((h * w) as f64).sqrt())
}

/// Common Lipschitz constant `L` of the component gradients.
///
/// For coded diffraction with the unitary DFT and unit-modulus masks,
/// `(F M)^H (F M) = I`, so `L = 1` is returned directly (a surrogate: the
/// amplitude loss is not convex). For linear components the largest
/// `σ_max(H_i)^2` over the set is returned.
pub fn estimate_lipschitz(set: &MeasurementSet) -> Result<f64> {
    let n = set.height() * set.width();
    let mut best: f64 = 0.0;
    for m in set.measurements() {
        let l = match m {
            Measurement::Cdp(_) => 1.0,
            Measurement::Linear(lin) => lin.operator.spectral_norm_sq(n)?,
        };
        best = best.max(l);
    }
    if best <= 0.0 {
        return Err(invalid("measurement operators are identically zero"));
    }
    Ok(best)
}
