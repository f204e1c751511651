//! Synthetic test images with intensities in `[0, 1]`.

use crate::error::{invalid, Result};
use crate::grid::ImageGrid;

/// Modified Shepp-Logan ellipses: (intensity, semi-axis a, semi-axis b,
/// centre x, centre y, rotation in degrees).
const SHEPP_LOGAN: [(f64, f64, f64, f64, f64, f64); 10] = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

/// Shepp-Logan head phantom sampled at pixel centres on `[-1, 1]²`.
pub fn shepp_logan(size: usize) -> ImageGrid {
    let coord = |i: usize| (2.0 * i as f64 + 1.0) / size as f64 - 1.0;
    ImageGrid::from_fn(size, size, |r, c| {
        let (x, y) = (coord(c), -coord(r));
        let v: f64 = SHEPP_LOGAN
            .iter()
            .filter(|&&(_, a, b, x0, y0, deg)| {
                let (s, co) = deg.to_radians().sin_cos();
                let (dx, dy) = (x - x0, y - y0);
                let u = dx * co + dy * s;
                let w = -dx * s + dy * co;
                (u / a).powi(2) + (w / b).powi(2) <= 1.0
            })
            .map(|e| e.0)
            .sum();
        v.clamp(0.0, 1.0)
    })
}

/// Alternating 0.2 / 0.8 squares of side `block`.
pub fn checkerboard(size: usize, block: usize) -> ImageGrid {
    let block = block.max(1);
    ImageGrid::from_fn(size, size, |r, c| if (r / block + c / block) % 2 == 0 { 0.2 } else { 0.8 })
}

/// Built-in phantoms by name: `shepp<N>` or `checker<N>`, e.g. `shepp32`.
pub fn by_name(name: &str) -> Result<ImageGrid> {
    let parse = |prefix: &str| -> Option<usize> {
        name.strip_prefix(prefix)?.parse().ok().filter(|&n| n >= 2)
    };
    if let Some(n) = parse("shepp") {
        Ok(shepp_logan(n))
    } else if let Some(n) = parse("checker") {
        Ok(checkerboard(n, (n / 8).max(1)))
    } else {
        Err(invalid(format!("unknown phantom `{name}` (expected shepp<N> or checker<N>)")))
    }
}
