//! Linear measurements `y = H x + e` with least-squares fidelity.

use crate::error::{invalid, Error, Result};
use crate::grid::ImageGrid;
use crate::rng::Rng;

/// Supported measurement operators `H`.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearOperator {
    Identity,
    /// Keeps the pixels whose mask entry is `true`, in row-major order.
    Subsample(Vec<bool>),
    /// Dense `rows x cols` matrix, row-major.
    Dense { rows: usize, cols: usize, data: Vec<f64> },
}

impl LinearOperator {
    pub fn dense(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(invalid(format!(
                "dense operator needs {rows}x{cols} entries, got {}",
                data.len()
            )));
        }
        Ok(LinearOperator::Dense { rows, cols, data })
    }

    /// Length of `H x` for an input of length `n`.
    pub fn output_len(&self, n: usize) -> usize {
        match self {
            LinearOperator::Identity => n,
            LinearOperator::Subsample(mask) => mask.iter().filter(|&&k| k).count(),
            LinearOperator::Dense { rows, .. } => *rows,
        }
    }

    fn check_input(&self, n: usize) -> Result<()> {
        let expected = match self {
            LinearOperator::Identity => return Ok(()),
            LinearOperator::Subsample(mask) => mask.len(),
            LinearOperator::Dense { cols, .. } => *cols,
        };
        if expected != n {
            return Err(Error::DimensionMismatch {
                expected: format!("operator input of length {expected}"),
                found: format!("length {n}"),
            });
        }
        Ok(())
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x.len())?;
        Ok(match self {
            LinearOperator::Identity => x.to_vec(),
            LinearOperator::Subsample(mask) => x
                .iter()
                .zip(mask)
                .filter(|(_, &keep)| keep)
                .map(|(&v, _)| v)
                .collect(),
            LinearOperator::Dense { cols, data, .. } => data
                .chunks_exact(*cols)
                .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
                .collect(),
        })
    }

    /// `H^T r` for an input-space length `n`.
    pub fn apply_transpose(&self, r: &[f64], n: usize) -> Result<Vec<f64>> {
        self.check_input(n)?;
        if r.len() != self.output_len(n) {
            return Err(Error::DimensionMismatch {
                expected: format!("residual of length {}", self.output_len(n)),
                found: format!("length {}", r.len()),
            });
        }
        Ok(match self {
            LinearOperator::Identity => r.to_vec(),
            LinearOperator::Subsample(mask) => {
                let mut out = vec![0.0; n];
                let kept = mask.iter().enumerate().filter(|(_, &k)| k).map(|(j, _)| j);
                for (j, &v) in kept.zip(r) {
                    out[j] = v;
                }
                out
            }
            LinearOperator::Dense { cols, data, .. } => {
                let mut out = vec![0.0; *cols];
                for (row, &ri) in data.chunks_exact(*cols).zip(r) {
                    for (o, a) in out.iter_mut().zip(row) {
                        *o += a * ri;
                    }
                }
                out
            }
        })
    }

    /// Largest eigenvalue of `H^T H` by power iteration (at most 50 steps,
    /// relative tolerance 1e-8).
    pub fn spectral_norm_sq(&self, n: usize) -> Result<f64> {
        match self {
            LinearOperator::Identity => Ok(1.0),
            LinearOperator::Subsample(mask) => {
                self.check_input(n)?;
                Ok(if mask.iter().any(|&k| k) { 1.0 } else { 0.0 })
            }
            LinearOperator::Dense { .. } => {
                let mut rng = Rng::new(0x5EED);
                let mut v: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
                normalize(&mut v);
                let mut estimate = 0.0;
                for _ in 0..50 {
                    let mut w = self.apply_transpose(&self.apply(&v)?, n)?;
                    let next: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
                    if normalize(&mut w) == 0.0 {
                        return Ok(0.0);
                    }
                    v = w;
                    let converged = (next - estimate).abs() <= 1e-8 * next.abs();
                    estimate = next;
                    if converged {
                        break;
                    }
                }
                Ok(estimate)
            }
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|a| *a /= norm);
    }
    norm
}

/// A linear measurement of an image of fixed shape.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMeasurement {
    height: usize,
    width: usize,
    pub operator: LinearOperator,
    pub observation: Vec<f64>,
}

impl LinearMeasurement {
    pub fn new(
        height: usize,
        width: usize,
        operator: LinearOperator,
        observation: Vec<f64>,
    ) -> Result<Self> {
        let n = height * width;
        operator.check_input(n)?;
        if operator.output_len(n) != observation.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("observation of length {}", operator.output_len(n)),
                found: format!("length {}", observation.len()),
            });
        }
        if observation.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linear observation"));
        }
        Ok(Self { height, width, operator, observation })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    fn residual(&self, x: &ImageGrid) -> Result<Vec<f64>> {
        x.ensure_shape(self.height, self.width)?;
        let mut hx = self.operator.apply(x.data())?;
        for (a, y) in hx.iter_mut().zip(&self.observation) {
            *a -= y;
        }
        Ok(hx)
    }
}

/// `½ ‖y − H x‖²`
pub fn linear_fidelity(x: &ImageGrid, m: &LinearMeasurement) -> Result<f64> {
    Ok(0.5 * m.residual(x)?.iter().map(|r| r * r).sum::<f64>())
}

/// `H^T (H x − y)`
pub fn linear_gradient(x: &ImageGrid, m: &LinearMeasurement) -> Result<ImageGrid> {
    let r = m.residual(x)?;
    let g = m.operator.apply_transpose(&r, x.len())?;
    Ok(ImageGrid::from_raw(x.height(), x.width(), g))
}
