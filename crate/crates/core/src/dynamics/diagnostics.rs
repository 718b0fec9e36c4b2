use num_complex::Complex64;

use super::equation::EquationSpec;
use crate::error::{LabError, Result};
use crate::spectral::{sum_over_modes, Field, Grid};

/// Mass `int u^2` and energy `1/2 int |grad u|^2 - sign*coupling/(k+2) int u^{k+2}`.
pub fn conserved(u: &Field, spec: &EquationSpec) -> (f64, f64) {
    let phys = u.to_physical();
    let spec_data = u.to_spectral();
    let vals = phys.real_values();
    let grad = gradient_energy(u.grid(), spec_data.data());
    let (mass, potential) = physical_integrals(u.grid(), &vals, spec.k);
    (mass, grad + potential_coefficient(spec) * potential)
}

pub(crate) fn potential_coefficient(spec: &EquationSpec) -> f64 {
    -spec.sign.value() * spec.coupling / (spec.k as f64 + 2.0)
}

/// `1/2 sum |xi_a|^2 |u^|^2 dk` with Nyquist planes excluded per axis, i.e.
/// the gradient energy of the spectrally differentiated field.
pub(crate) fn gradient_energy(grid: &Grid, spectral: &[Complex64]) -> f64 {
    let s = sum_over_modes(grid, spectral, |m, v| {
        let mut w = 0.0;
        for a in 0..m.dim {
            if !m.nyquist[a] {
                w += m.xi[a] * m.xi[a];
            }
        }
        w * v.norm_sqr()
    });
    0.5 * s * grid.spectral_cell_measure()
}

/// `(int u^2, int u^{k+2})` by cell sums.
pub(crate) fn physical_integrals(grid: &Grid, vals: &[f64], k: u32) -> (f64, f64) {
    let cell = grid.cell_measure();
    let mut mass = 0.0;
    let mut pot = 0.0;
    let e = k as i32 + 2;
    for &v in vals {
        mass += v * v;
        pot += v.powi(e);
    }
    (mass * cell, pot * cell)
}

/// Per-sample weight of the x-buffer slabs `[-L/2, -L/2 + bL)` and
/// `[L/2 - bL, L/2)`, as the overlap fraction of each cell `[x_j, x_j + dx)`.
pub(crate) fn buffer_weights(grid: &Grid, buffer_fraction: f64) -> Vec<f64> {
    let l = grid.length(0);
    let h = grid.dx(0);
    let width = buffer_fraction * l;
    let left = (-0.5 * l, -0.5 * l + width);
    let right = (0.5 * l - width, 0.5 * l);
    let overlap = |a: f64, b: f64, (c, d): (f64, f64)| (b.min(d) - a.max(c)).max(0.0);
    grid.coords(0)
        .iter()
        .map(|&x| (overlap(x, x + h, left) + overlap(x, x + h, right)) / h)
        .collect()
}

/// Fraction of `int u^2` carried by the two buffer slabs in x (all y).
pub fn wraparound_guard(u: &Field, buffer_fraction: f64) -> Result<f64> {
    if !(buffer_fraction > 0.0 && buffer_fraction < 0.5) {
        return Err(LabError::Usage(format!(
            "buffer fraction {buffer_fraction} outside (0, 1/2)"
        )));
    }
    let w = buffer_weights(u.grid(), buffer_fraction);
    let phys = u.to_physical();
    let vals: Vec<f64> = phys.data().iter().map(|v| v.norm_sqr()).collect();
    Ok(boundary_fraction(&w, &vals))
}

/// `sum w_x |u|^2 / sum |u|^2` for squared samples in storage order.
pub(crate) fn boundary_fraction(weights: &[f64], squares: &[f64]) -> f64 {
    let nx = weights.len();
    let m = squares.len() / nx;
    let mut total = 0.0;
    let mut edge = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        let row: f64 = squares[i * m..(i + 1) * m].iter().sum();
        total += row;
        edge += w * row;
    }
    if total == 0.0 {
        0.0
    } else {
        edge / total
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::dynamics::Sign;
    use crate::spectral::make_grid;

    #[test]
    fn zero_field_has_no_mass_or_energy() {
        let g = make_grid(&[32], &[10.0]).unwrap();
        let u = Field::from_fn(&g, |_| 0.0);
        assert_eq!(conserved(&u, &EquationSpec::gkdv(4, Sign::Focusing)), (0.0, 0.0));
    }

    #[test]
    fn mass_of_sine() {
        let g = make_grid(&[64], &[2.0 * PI]).unwrap();
        let u = Field::from_fn(&g, |x| x[0].sin());
        let (m, _) = conserved(&u, &EquationSpec::gkdv(2, Sign::Defocusing));
        assert!((m - PI).abs() < 1e-13);
    }

    #[test]
    fn buffer_measure_ratio() {
        let g = make_grid(&[64, 8], &[10.0, 3.0]).unwrap();
        let uniform = Field::from_fn(&g, |_| 1.7);
        assert!((wraparound_guard(&uniform, 0.1).unwrap() - 0.2).abs() < 1e-14);
        let centred = Field::from_fn(&g, |x| if x[0].abs() < 2.5 { 1.0 } else { 0.0 });
        assert_eq!(wraparound_guard(&centred, 0.1).unwrap(), 0.0);
        assert!(wraparound_guard(&uniform, 0.5).is_err());
    }
}
