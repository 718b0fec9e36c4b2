//! Smooth dyadic frequency decomposition.
//!
//! The profile is built from `g(x) = exp(-1/x)`: `step(y) = g(y)/(g(y)+g(1-y))`
//! rises from 0 to 1 on `[0, 1]`, `low(r) = step(2 - r)` equals 1 on `[0, 1]`
//! and vanishes on `[2, inf)`, and the annular bump is
//! `bump(r) = low(r) - low(2r)`, supported in `[1/2, 2]`. The blocks
//! `P_1 = low(|xi|)` and `P_N = bump(|xi|/N)` telescope to one.

use super::field::Field;
use super::grid::Grid;
use super::multiplier::{apply_multiplier, Multiplier};
use crate::error::{LabError, Result};

fn mollifier(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

fn smooth_step(y: f64) -> f64 {
    let a = mollifier(y);
    let b = mollifier(1.0 - y);
    a / (a + b)
}

/// Low-frequency cutoff: 1 on `[0, 1]`, 0 on `[2, inf)`.
pub fn low_profile(r: f64) -> f64 {
    smooth_step(2.0 - r)
}

/// Annular bump supported in `[1/2, 2]` with `bump(1) = 1`.
pub fn bump_profile(r: f64) -> f64 {
    low_profile(r) - low_profile(2.0 * r)
}

fn check_dyadic(n: u64) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(LabError::Usage(format!(
            "Littlewood-Paley frequency {n} is not 1 or a power of two"
        )));
    }
    Ok(())
}

/// Symbol of the block at dyadic frequency `n` (1 is the low block).
pub fn lp_multiplier(n: u64) -> Result<Multiplier> {
    check_dyadic(n)?;
    if n == 1 {
        return Ok(Multiplier::real("P_1", true, |m| low_profile(m.norm())));
    }
    let scale = n as f64;
    Ok(Multiplier::real(format!("P_{n}"), true, move |m| {
        bump_profile(m.norm() / scale)
    }))
}

pub fn littlewood_paley(f: &Field, n: u64) -> Result<Field> {
    apply_multiplier(f, &lp_multiplier(n)?)
}

/// Dyadic frequencies whose blocks can be nonzero on `grid`, in increasing
/// order. Their sum is the identity on the lattice.
pub fn dyadic_frequencies(grid: &Grid) -> Vec<u64> {
    let kmax = grid.max_wavenumber();
    let mut out = vec![1u64];
    let mut n = 2u64;
    while (n as f64) < 2.0 * kmax {
        out.push(n);
        n *= 2;
    }
    out
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::spectral::make_grid;

    #[test]
    fn profile_support_and_normalisation() {
        assert_eq!(bump_profile(1.0), 1.0);
        assert_eq!(bump_profile(0.5), 0.0);
        assert_eq!(bump_profile(2.0), 0.0);
        assert_eq!(bump_profile(0.2), 0.0);
        assert_eq!(bump_profile(3.0), 0.0);
        assert!(bump_profile(0.7) > 0.0 && bump_profile(1.6) > 0.0);
        for i in 0..200 {
            let r = i as f64 * 0.05;
            let total: f64 = low_profile(r)
                + (1..10).map(|j| bump_profile(r / 2f64.powi(j))).sum::<f64>();
            assert!((total - 1.0).abs() < 1e-15, "r = {r}");
        }
    }

    #[test]
    fn blocks_reconstruct_field() {
        let g = make_grid(&[64, 32], &[10.0, 7.0]).unwrap();
        let f = Field::from_fn(&g, |x| (-(x[0] * x[0] + x[1] * x[1]) / 0.3).exp() + 0.1 * x[1].sin());
        let mut acc = Field::zeros(&g, f.rep());
        for n in dyadic_frequencies(&g) {
            acc = acc.axpy(1.0, &littlewood_paley(&f, n).unwrap()).unwrap();
        }
        assert!(acc.max_abs_diff(&f) < 1e-10);
    }

    #[test]
    fn block_at_matching_frequency_keeps_mode() {
        let g = make_grid(&[32], &[2.0 * PI]).unwrap();
        let f = Field::from_fn(&g, |x| (4.0 * x[0]).cos());
        let p = littlewood_paley(&f, 4).unwrap();
        assert!(p.max_abs_diff(&f.clone().scale(bump_profile(1.0))) < 1e-14);
    }

    #[test]
    fn disjoint_block_annihilates() {
        let g = make_grid(&[32], &[2.0 * PI]).unwrap();
        let f = Field::from_fn(&g, |x| x[0].sin());
        let p = littlewood_paley(&f, 8).unwrap();
        assert!(p.sup_abs() < 1e-12);
    }

    #[test]
    fn rejects_non_dyadic() {
        assert!(matches!(lp_multiplier(3), Err(LabError::Usage(_))));
        assert!(matches!(lp_multiplier(0), Err(LabError::Usage(_))));
    }
}
