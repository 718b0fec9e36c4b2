//! N-dimensional FFT on row-major grid data.
//!
//! Convention: `f^(xi) = (2 pi)^{-d/2} \int f(x) e^{-i x.xi} dx`, discretised
//! with the sample origin at `-L/2`, so the shift phase reduces to `(-1)^m`
//! per axis. Plancherel then holds with constant one between the physical
//! sum `sum |f|^2 dx^d` and the spectral sum `sum |f^|^2 (2 pi / L)^d`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::grid::Grid;

const COLUMN_BATCH: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Sign {
    Forward,
    Inverse,
}

/// Unnormalised DFT along every axis.
fn raw_transform(grid: &Grid, data: &mut [Complex64], sign: Sign) {
    for axis in 0..grid.dim() {
        transform_axis(grid, data, axis, sign);
    }
}

fn transform_axis(grid: &Grid, data: &mut [Complex64], axis: usize, sign: Sign) {
    let plan = grid.plan(axis);
    let fft = match sign {
        Sign::Forward => &plan.forward,
        Sign::Inverse => &plan.inverse,
    };
    let n = grid.n(axis);
    let stride = grid.strides()[axis];
    if stride == 1 {
        data.par_chunks_mut(n * 64).for_each(|chunk| {
            let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(chunk, &mut scratch);
        });
        return;
    }
    let block = n * stride;
    data.par_chunks_mut(block).for_each(|blk| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let mut buf = vec![Complex64::new(0.0, 0.0); n * COLUMN_BATCH];
        let mut c0 = 0;
        while c0 < stride {
            let w = COLUMN_BATCH.min(stride - c0);
            for j in 0..n {
                let row = &blk[j * stride + c0..j * stride + c0 + w];
                for (c, v) in row.iter().enumerate() {
                    buf[c * n + j] = *v;
                }
            }
            fft.process_with_scratch(&mut buf[..w * n], &mut scratch);
            for j in 0..n {
                let row = &mut blk[j * stride + c0..j * stride + c0 + w];
                for (c, v) in row.iter_mut().enumerate() {
                    *v = buf[c * n + j];
                }
            }
            c0 += w;
        }
    });
}

/// Multiplies by `scale * (-1)^(sum of indices)`.
fn apply_scale_and_shift(grid: &Grid, data: &mut [Complex64], scale: f64) {
    let d = grid.dim();
    let strides = grid.strides().to_vec();
    data.par_iter_mut().enumerate().for_each(|(flat, v)| {
        let mut parity = 0usize;
        let mut rem = flat;
        for a in 0..d {
            parity += rem / strides[a];
            rem %= strides[a];
        }
        let s = if parity % 2 == 0 { scale } else { -scale };
        *v *= s;
    });
}

/// Physical samples to spectral coefficients, in place.
pub(crate) fn forward(grid: &Grid, data: &mut [Complex64]) {
    raw_transform(grid, data, Sign::Forward);
    let scale: f64 = grid.spacings().iter().map(|h| h / (2.0 * PI).sqrt()).product();
    apply_scale_and_shift(grid, data, scale);
}

/// Spectral coefficients to physical samples, in place.
pub(crate) fn inverse(grid: &Grid, data: &mut [Complex64]) {
    let scale: f64 = grid
        .lengths()
        .iter()
        .map(|l| (2.0 * PI).sqrt() / l)
        .product();
    apply_scale_and_shift(grid, data, scale);
    raw_transform(grid, data, Sign::Inverse);
}
