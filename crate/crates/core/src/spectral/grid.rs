use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{LabError, Result};

/// Maximum supported spatial dimension.
pub const MAX_DIM: usize = 4;

/// Periodic box `[-L/2, L/2)^d` sampled on a power-of-two lattice.
///
/// Axis 0 is the propagation direction `x`; axes `1..d` are the transverse
/// `y` coordinates. Data on the grid is stored row-major with the last axis
/// contiguous.
pub struct Grid {
    n: Vec<usize>,
    lengths: Vec<f64>,
    dx: Vec<f64>,
    xi: Vec<Vec<f64>>,
    index: Vec<Vec<i64>>,
    strides: Vec<usize>,
    plans: Vec<AxisPlan>,
}

pub(crate) struct AxisPlan {
    pub(crate) forward: Arc<dyn Fft<f64>>,
    pub(crate) inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("lengths", &self.lengths)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.lengths == other.lengths
    }
}

/// Builds a grid with `n[a]` samples over a side of length `lengths[a]`.
pub fn make_grid(n: &[usize], lengths: &[f64]) -> Result<Arc<Grid>> {
    Grid::new(n, lengths).map(Arc::new)
}

impl Grid {
    pub fn new(n: &[usize], lengths: &[f64]) -> Result<Self> {
        let d = n.len();
        if d == 0 || d > MAX_DIM {
            return Err(LabError::Config(format!(
                "grid dimension must be in 1..={MAX_DIM}, got {d}"
            )));
        }
        if lengths.len() != d {
            return Err(LabError::Config(format!(
                "grid has {d} axes but {} side lengths",
                lengths.len()
            )));
        }
        for (a, (&na, &la)) in n.iter().zip(lengths).enumerate() {
            if na < 8 || !na.is_power_of_two() {
                return Err(LabError::Config(format!(
                    "axis {a}: sample count {na} is not a power of two >= 8"
                )));
            }
            if !(la.is_finite() && la > 0.0) {
                return Err(LabError::Config(format!(
                    "axis {a}: side length {la} must be positive and finite"
                )));
            }
        }

        let mut planner = FftPlanner::new();
        let mut xi = Vec::with_capacity(d);
        let mut index = Vec::with_capacity(d);
        let mut plans = Vec::with_capacity(d);
        for (&na, &la) in n.iter().zip(lengths) {
            let idx: Vec<i64> = (0..na)
                .map(|k| {
                    let k = k as i64;
                    if k < (na / 2) as i64 {
                        k
                    } else {
                        k - na as i64
                    }
                })
                .collect();
            let dk = 2.0 * PI / la;
            xi.push(idx.iter().map(|&m| m as f64 * dk).collect());
            index.push(idx);
            plans.push(AxisPlan {
                forward: planner.plan_fft_forward(na),
                inverse: planner.plan_fft_inverse(na),
            });
        }

        let mut strides = vec![1usize; d];
        for a in (0..d.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * n[a + 1];
        }

        Ok(Grid {
            n: n.to_vec(),
            lengths: lengths.to_vec(),
            dx: n.iter().zip(lengths).map(|(&na, &la)| la / na as f64).collect(),
            xi,
            index,
            strides,
            plans,
        })
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.n
    }

    pub fn n(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.lengths[axis]
    }

    pub fn dx(&self, axis: usize) -> f64 {
        self.dx[axis]
    }

    pub fn spacings(&self) -> &[f64] {
        &self.dx
    }

    /// Total number of lattice points.
    pub fn size(&self) -> usize {
        self.n.iter().product()
    }

    /// Physical cell measure `prod dx[a]`.
    pub fn cell_measure(&self) -> f64 {
        self.dx.iter().product()
    }

    /// Spectral cell measure `prod 2 pi / L[a]`.
    pub fn spectral_cell_measure(&self) -> f64 {
        self.lengths.iter().map(|l| 2.0 * PI / l).product()
    }

    /// Wavenumbers `2 pi m / L` along `axis`, in FFT order.
    pub fn xi(&self, axis: usize) -> &[f64] {
        &self.xi[axis]
    }

    /// Signed mode indices `m` along `axis`, in FFT order.
    pub fn mode_index(&self, axis: usize) -> &[i64] {
        &self.index[axis]
    }

    /// Sample coordinates `-L/2 + j dx` along `axis`.
    pub fn coords(&self, axis: usize) -> Vec<f64> {
        let (l, h) = (self.lengths[axis], self.dx[axis]);
        (0..self.n[axis]).map(|j| -0.5 * l + j as f64 * h).collect()
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub(crate) fn plan(&self, axis: usize) -> &AxisPlan {
        &self.plans[axis]
    }

    /// Largest wavenumber modulus on the lattice.
    pub fn max_wavenumber(&self) -> f64 {
        self.xi
            .iter()
            .map(|x| x.iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .map(|m| m * m)
            .sum::<f64>()
            .sqrt()
    }

    /// Multi-index of flat position `flat`.
    pub fn unflatten(&self, mut flat: usize) -> [usize; MAX_DIM] {
        let mut out = [0usize; MAX_DIM];
        for a in 0..self.dim() {
            out[a] = flat / self.strides[a];
            flat %= self.strides[a];
        }
        out
    }

    /// Same box with every side scaled by `1/lambda` and identical sample
    /// counts, i.e. the lattice seen by `f(lambda x)`.
    pub fn rescaled(&self, lambda: f64) -> Result<Arc<Grid>> {
        let l: Vec<f64> = self.lengths.iter().map(|l| l / lambda).collect();
        make_grid(&self.n, &l)
    }
}

/// Wavevector of one lattice mode, handed to multiplier symbols.
#[derive(Clone, Copy, Debug)]
pub struct Mode {
    pub dim: usize,
    pub xi: [f64; MAX_DIM],
    /// `true` on axes where this mode sits on the self-paired Nyquist index.
    pub nyquist: [bool; MAX_DIM],
}

impl Mode {
    pub fn norm_sq(&self) -> f64 {
        self.xi[..self.dim].iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

/// Visits every lattice point of `data` together with its wavevector.
///
/// The outermost axis is split across rayon workers; the visit order inside
/// a slab is deterministic.
pub(crate) fn for_each_mode<F>(grid: &Grid, data: &mut [num_complex::Complex64], f: F)
where
    F: Fn(usize, &Mode, &mut num_complex::Complex64) + Sync,
{
    use rayon::prelude::*;
    let d = grid.dim();
    let slab = grid.strides[0];
    data.par_chunks_mut(slab)
        .enumerate()
        .for_each(|(i0, chunk)| {
            let mut mode = Mode {
                dim: d,
                xi: [0.0; MAX_DIM],
                nyquist: [false; MAX_DIM],
            };
            let mut idx = [0usize; MAX_DIM];
            idx[0] = i0;
            for (off, v) in chunk.iter_mut().enumerate() {
                if off > 0 {
                    // increment the inner multi-index, last axis fastest
                    let mut a = d - 1;
                    loop {
                        idx[a] += 1;
                        if idx[a] < grid.n[a] || a == 1 {
                            break;
                        }
                        idx[a] = 0;
                        a -= 1;
                    }
                }
                for a in 0..d {
                    mode.xi[a] = grid.xi[a][idx[a]];
                    mode.nyquist[a] = idx[a] == grid.n[a] / 2;
                }
                f(i0 * slab + off, &mode, v);
            }
        });
}

/// Deterministic sum of `f(mode, value)` over the lattice.
pub(crate) fn sum_over_modes<F>(grid: &Grid, data: &[num_complex::Complex64], f: F) -> f64
where
    F: Fn(&Mode, &num_complex::Complex64) -> f64 + Sync,
{
    use rayon::prelude::*;
    let d = grid.dim();
    let slab = grid.strides[0];
    let partial: Vec<f64> = data
        .par_chunks(slab)
        .enumerate()
        .map(|(i0, chunk)| {
            let mut mode = Mode {
                dim: d,
                xi: [0.0; MAX_DIM],
                nyquist: [false; MAX_DIM],
            };
            let mut idx = [0usize; MAX_DIM];
            idx[0] = i0;
            let mut acc = 0.0;
            for (off, v) in chunk.iter().enumerate() {
                if off > 0 {
                    let mut a = d - 1;
                    loop {
                        idx[a] += 1;
                        if idx[a] < grid.n[a] || a == 1 {
                            break;
                        }
                        idx[a] = 0;
                        a -= 1;
                    }
                }
                for a in 0..d {
                    mode.xi[a] = grid.xi[a][idx[a]];
                    mode.nyquist[a] = idx[a] == grid.n[a] / 2;
                }
                acc += f(&mode, v);
            }
            acc
        })
        .collect();
    partial.iter().sum()
}
