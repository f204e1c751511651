//! Brute-force reference computations for tests.
//!
//! Nothing here calls into the code paths it is meant to check: the DFT is
//! evaluated from its definition, gradients by central differences.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::forward::MeasurementSet;
use crate::grid::{ComplexGrid, ImageGrid};

/// Largest grid the direct DFT accepts.
pub const NAIVE_DFT_MAX_LEN: usize = 4096;

/// Largest set [`enumerate_variance`] accepts.
pub const ENUMERATE_MAX_COMPONENTS: usize = 16;

fn naive_dft2_signed(v: &ComplexGrid, sign: f64) -> Result<ComplexGrid> {
    let (h, w) = (v.height(), v.width());
    let n = h * w;
    if n > NAIVE_DFT_MAX_LEN {
        return Err(invalid(format!("naive DFT capped at {NAIVE_DFT_MAX_LEN} points, got {n}")));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let data = v.data();
    let mut out = Vec::with_capacity(n);
    for k in 0..h {
        for l in 0..w {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..h {
                for c in 0..w {
                    let angle = sign
                        * 2.0
                        * PI
                        * (((k * r) % h) as f64 / h as f64 + ((l * c) % w) as f64 / w as f64);
                    acc += data[r * w + c] * Complex64::new(angle.cos(), angle.sin());
                }
            }
            out.push(acc * scale);
        }
    }
    ComplexGrid::new(h, w, out)
}

/// Unitary 2D DFT straight from the definition, `O(n²)`.
pub fn naive_dft2(v: &ComplexGrid) -> Result<ComplexGrid> {
    naive_dft2_signed(v, -1.0)
}

/// Unitary inverse 2D DFT straight from the definition.
pub fn naive_idft2(v: &ComplexGrid) -> Result<ComplexGrid> {
    naive_dft2_signed(v, 1.0)
}

/// Central differences `(f(x + s e_j) − f(x − s e_j)) / 2s` per pixel.
pub fn finite_diff_gradient<F>(f: F, x: &ImageGrid, step: f64) -> Result<ImageGrid>
where
    F: Fn(&ImageGrid) -> Result<f64>,
{
    if !(step > 0.0) {
        return Err(invalid(format!("finite-difference step must be positive, got {step}")));
    }
    let mut probe = x.clone();
    let mut out = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        let orig = probe.data()[j];
        probe.data_mut()[j] = orig + step;
        let plus = f(&probe)?;
        probe.data_mut()[j] = orig - step;
        let minus = f(&probe)?;
        probe.data_mut()[j] = orig;
        out.push((plus - minus) / (2.0 * step));
    }
    ImageGrid::new(x.height(), x.width(), out)
}

/// Exact variance of the with-replacement minibatch mean,
/// `ν̂²(x)/B` with `ν̂²(x) = (1/I) Σ_i ‖∇g_i(x) − ∇g(x)‖²`.
pub fn enumerate_variance(set: &MeasurementSet, x: &ImageGrid, minibatch: usize) -> Result<f64> {
    Ok(population_variance(set, x)? / minibatch as f64)
}

/// `ν̂²(x)` by enumerating every component.
pub fn population_variance(set: &MeasurementSet, x: &ImageGrid) -> Result<f64> {
    let count = set.len();
    if count > ENUMERATE_MAX_COMPONENTS {
        return Err(invalid(format!(
            "variance enumeration capped at {ENUMERATE_MAX_COMPONENTS} components, got {count}"
        )));
    }
    let grads = set
        .measurements()
        .iter()
        .map(|m| m.gradient(x).map(ImageGrid::into_data))
        .collect::<Result<Vec<_>>>()?;
    let n = x.len();
    let mut mean = vec![0.0; n];
    for g in &grads {
        for (m, v) in mean.iter_mut().zip(g) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count as f64);
    let total: f64 = grads
        .iter()
        .map(|g| g.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .sum();
    Ok(total / count as f64)
}

/// Right-hand side of the On-RED convergence bound,
/// `((L+2τ)/γ) [ν²γ²/B + 2γν R0/√B + R0²/t]`.
pub fn theorem1_bound(
    lipschitz: f64,
    tau: f64,
    gamma: f64,
    nu_sq: f64,
    minibatch: usize,
    r0: f64,
    iterations: usize,
) -> Result<f64> {
    if !(lipschitz > 0.0 && gamma > 0.0 && tau >= 0.0 && nu_sq >= 0.0 && r0 >= 0.0) {
        return Err(invalid("bound parameters must be positive"));
    }
    if minibatch == 0 || iterations == 0 {
        return Err(invalid("minibatch size and iteration count must be positive"));
    }
    let lt = lipschitz + 2.0 * tau;
    if gamma > 1.0 / lt * (1.0 + 1e-12) {
        return Err(invalid(format!("step size {gamma} exceeds 1/(L + 2 tau) = {}", 1.0 / lt)));
    }
    let b = minibatch as f64;
    let nu = nu_sq.sqrt();
    Ok(lt / gamma
        * (nu_sq * gamma * gamma / b + 2.0 * gamma * nu * r0 / b.sqrt() + r0 * r0 / iterations as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impulse_has_flat_spectrum() {
        let mut data = vec![Complex64::new(0.0, 0.0); 12];
        data[0] = Complex64::new(1.0, 0.0);
        let out = naive_dft2(&ComplexGrid::new(3, 4, data).unwrap()).unwrap();
        for z in out.data() {
            assert!((z.norm() - 1.0 / 12f64.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn naive_inverse_undoes_forward() {
        let data = (0..20)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let v = ComplexGrid::new(4, 5, data).unwrap();
        let back = naive_idft2(&naive_dft2(&v).unwrap()).unwrap();
        for (a, b) in back.data().iter().zip(v.data()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn naive_dft_size_cap() {
        let v = ComplexGrid::new(65, 64, vec![Complex64::default(); 65 * 64]).unwrap();
        assert!(naive_dft2(&v).is_err());
    }

    #[test]
    fn finite_diff_of_half_norm_is_identity() {
        let x = ImageGrid::from_fn(3, 3, |r, c| r as f64 - 0.5 * c as f64);
        let g = finite_diff_gradient(|z| Ok(0.5 * z.norm_sq()), &x, 1e-3).unwrap();
        assert!(g.distance(&x) < 1e-9);
    }

    #[test]
    fn finite_diff_of_linear_form_is_exact() {
        let c = ImageGrid::from_fn(2, 3, |r, k| 1.0 + r as f64 - k as f64);
        let x = ImageGrid::from_fn(2, 3, |r, k| (r * k) as f64);
        let g = finite_diff_gradient(|z| Ok(c.dot(z)), &x, 0.5).unwrap();
        assert!(g.distance(&c) < 1e-12);
        assert!(finite_diff_gradient(|z| Ok(c.dot(z)), &x, 0.0).is_err());
    }

    #[test]
    fn bound_reduces_to_deterministic_limit() {
        let (l, tau, gamma) = (1.0, 0.2, 0.5);
        let b = theorem1_bound(l, tau, gamma, 0.0, 3, 2.0, 1000).unwrap();
        assert!((b - (l + 2.0 * tau) * 4.0 / (gamma * 1000.0)).abs() < 1e-15);
        assert!(theorem1_bound(1.0, 0.2, 1.0, 1.0, 1, 1.0, 1).is_err());
    }

    #[test]
    fn bound_hand_computed_value() {
        // L=1, τ=0.2, γ=1/1.4, ν²=1, B=10, R0=1, t=100:
        // 1.4·1.4 · [ (1/1.96)/10 + 2·(1/1.4)/√10 + 1/100 ]
        let gamma = 1.0 / 1.4;
        let expected = 1.96 * (1.0 / 19.6 + 2.0 / (1.4 * 10f64.sqrt()) + 0.01);
        let got = theorem1_bound(1.0, 0.2, gamma, 1.0, 10, 1.0, 100).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        assert!((expected - 1.005_037_744_847_146).abs() < 1e-12);
    }

    #[test]
    fn bound_with_b_equal_t_decays_like_inverse_sqrt() {
        let gamma = 1.0 / 1.4;
        let scaled: Vec<f64> = [100usize, 10_000, 1_000_000]
            .iter()
            .map(|&t| theorem1_bound(1.0, 0.2, gamma, 1.0, t, 1.0, t).unwrap() * (t as f64).sqrt())
            .collect();
        // b(t)·√t is bounded and approaches 2(L+2τ)νR0 = 2.8 from above.
        assert!(scaled.windows(2).all(|w| w[1] <= w[0]));
        assert!((scaled[2] - 2.8).abs() < 0.01);
    }
}
