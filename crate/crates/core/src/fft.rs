//! Unitary 2D DFT on row-major complex buffers.
//!
//! Both directions are scaled by `1/sqrt(n)`, so the forward transform is an
//! isometry and its adjoint is the inverse.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::ComplexGrid;

struct Plans {
    rows: Arc<dyn Fft<f64>>,
    cols: Arc<dyn Fft<f64>>,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static CACHE: RefCell<HashMap<(usize, usize, bool), Arc<Plans>>> = RefCell::new(HashMap::new());
}

fn plans(height: usize, width: usize, direction: FftDirection) -> Arc<Plans> {
    let key = (height, width, direction == FftDirection::Forward);
    CACHE.with(|cache| {
        cache
            .borrow_mut()
            .entry(key)
            .or_insert_with(|| {
                PLANNER.with(|p| {
                    let mut p = p.borrow_mut();
                    Arc::new(Plans {
                        rows: p.plan_fft(width, direction),
                        cols: p.plan_fft(height, direction),
                    })
                })
            })
            .clone()
    })
}

fn transform(height: usize, width: usize, buf: &mut [Complex64], direction: FftDirection) {
    assert_eq!(buf.len(), height * width, "buffer does not match grid shape");
    let plans = plans(height, width, direction);
    for row in buf.chunks_exact_mut(width) {
        plans.rows.process(row);
    }
    let mut column = vec![Complex64::default(); height];
    for c in 0..width {
        for (r, v) in column.iter_mut().enumerate() {
            *v = buf[r * width + c];
        }
        plans.cols.process(&mut column);
        for (r, v) in column.iter().enumerate() {
            buf[r * width + c] = *v;
        }
    }
    let scale = 1.0 / ((height * width) as f64).sqrt();
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// In-place unitary forward DFT of a `height x width` row-major buffer.
pub fn forward_in_place(height: usize, width: usize, buf: &mut [Complex64]) {
    transform(height, width, buf, FftDirection::Forward);
}

/// In-place unitary inverse DFT (the adjoint of [`forward_in_place`]).
pub fn inverse_in_place(height: usize, width: usize, buf: &mut [Complex64]) {
    transform(height, width, buf, FftDirection::Inverse);
}

pub fn fft2(v: &ComplexGrid) -> ComplexGrid {
    let mut data = v.data().to_vec();
    forward_in_place(v.height(), v.width(), &mut data);
    ComplexGrid::from_raw(v.height(), v.width(), data)
}

pub fn ifft2(v: &ComplexGrid) -> ComplexGrid {
    let mut data = v.data().to_vec();
    inverse_in_place(v.height(), v.width(), &mut data);
    ComplexGrid::from_raw(v.height(), v.width(), data)
}

pub(crate) fn check_len(height: usize, width: usize, len: usize) -> Result<()> {
    if len != height * width {
        return Err(Error::DimensionMismatch {
            expected: format!("{} values", height * width),
            found: format!("{len} values"),
        });
    }
    Ok(())
}
