use std::f64::consts::PI;

use super::grid::Grid;
use super::multiplier::Multiplier;
use crate::error::{LabError, Result};

/// Largest retained `|index|` per axis for products of degree `degree`: the
/// largest `c` with `(degree + 1) c < n`. When `degree + 1` divides `n` this is
/// one below `n/(degree+1)`, which would alias onto the band edge.
pub fn dealias_cutoff(n: usize, degree: usize) -> usize {
    (n - 1) / (degree + 1)
}

/// 0/1 mask keeping `|index| <= dealias_cutoff(n, degree)` on every axis, so that
/// degree-`degree` products of retained modes never alias onto retained modes.
pub fn dealias_mask(grid: &Grid, degree: usize) -> Result<Multiplier> {
    if degree < 2 {
        return Err(LabError::Usage(format!(
            "dealias degree must be at least 2, got {degree}"
        )));
    }
    let d = grid.dim();
    let cut: Vec<f64> = (0..d).map(|a| dealias_cutoff(grid.n(a), degree) as f64).collect();
    let unit: Vec<f64> = grid.lengths().iter().map(|l| l / (2.0 * PI)).collect();
    Ok(Multiplier::real(format!("mask{degree}"), true, move |m| {
        let keep = (0..d).all(|a| (m.xi[a] * unit[a]).round().abs() <= cut[a]);
        if keep {
            1.0
        } else {
            0.0
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;

    fn kept(grid: &Grid, degree: usize) -> Vec<i64> {
        let mask = dealias_mask(grid, degree).unwrap().sample(grid).unwrap();
        grid.mode_index(0)
            .iter()
            .zip(mask)
            .filter(|(_, v)| v.re == 1.0)
            .map(|(&i, _)| i)
            .collect()
    }

    #[test]
    fn quadratic_rule_on_sixteen() {
        let g = make_grid(&[16], &[3.0]).unwrap();
        let mut k = kept(&g, 2);
        k.sort();
        assert_eq!(k, (-5..=5).collect::<Vec<_>>());
    }

    #[test]
    fn quintic_rule_on_256() {
        let g = make_grid(&[256], &[100.0]).unwrap();
        let k = kept(&g, 5);
        assert_eq!(k.iter().max(), Some(&42));
        assert_eq!(k.iter().min(), Some(&-42));
        assert_eq!(k.len(), 85);
    }

    #[test]
    fn divisible_size_drops_the_edge() {
        assert_eq!(dealias_cutoff(64, 3), 15);
        assert_eq!(dealias_cutoff(8192, 7), 1023);
        assert_eq!(dealias_cutoff(8192, 5), 1365);
    }

    #[test]
    fn rejects_degree_one() {
        let g = make_grid(&[16], &[3.0]).unwrap();
        assert!(dealias_mask(&g, 1).is_err());
    }
}
