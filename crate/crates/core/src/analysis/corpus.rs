//! Deterministic random smooth test functions.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::spectral::{Field, Grid, Rep};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    /// Gaussian times a random polynomial of degree at most 4.
    ModulatedGaussian,
    /// Random phases with spectral amplitude `(1 + |xi|)^{-sigma}`.
    RandomPhase,
}

/// Generator for sample `index` of the corpus with seed `seed`; each sample
/// has its own ChaCha stream so samples can be drawn in any order.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn modulated_gaussian(grid: &Arc<Grid>, rng: &mut impl Rng) -> Field {
    let d = grid.dim();
    let span: Vec<f64> = grid.lengths().iter().map(|l| l / 8.0).collect();
    let centre: Vec<f64> = span.iter().map(|s| rng.random_range(-s..*s)).collect();
    let width: f64 = rng.random_range(0.5..3.0);
    let degree = rng.random_range(0..=4usize);
    let coeffs: Vec<f64> = (0..=degree).map(|_| rng.random_range(-1.0..1.0)).collect();
    let axis = rng.random_range(0..d);
    Field::from_fn(grid, move |x| {
        let mut r2 = 0.0;
        for a in 0..d {
            let y = (x[a] - centre[a]) / width;
            r2 += y * y;
        }
        let z = (x[axis] - centre[axis]) / width;
        let poly = coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c);
        (1.0 + poly) * (-0.5 * r2).exp()
    })
}

/// Real field with `|u^(xi)| = (1 + |xi|)^{-sigma}` and random phases, scaled
/// to unit sup.
pub fn random_phase(grid: &Arc<Grid>, sigma: f64, rng: &mut impl Rng) -> Field {
    let d = grid.dim();
    let n = grid.size();
    let mut data = vec![Complex64::new(0.0, 0.0); n];
    for flat in 0..n {
        let idx = grid.unflatten(flat);
        let mut mirror = 0;
        let mut r2 = 0.0;
        for a in 0..d {
            let na = grid.n(a);
            mirror += ((na - idx[a]) % na) * grid.strides()[a];
            r2 += grid.xi(a)[idx[a]].powi(2);
        }
        if mirror < flat {
            data[flat] = data[mirror].conj();
            continue;
        }
        let amp = (1.0 + r2.sqrt()).powf(-sigma);
        data[flat] = if mirror == flat {
            Complex64::new(amp * if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0)
        } else {
            Complex64::from_polar(amp, rng.random_range(0.0..std::f64::consts::TAU))
        };
    }
    let f = Field::from_data(grid, Rep::Spectral, data, true)
        .expect("length matches grid")
        .into_physical();
    let sup = f.sup_abs();
    if sup > 0.0 {
        f.scale(1.0 / sup)
    } else {
        f
    }
}

/// Sample `index`: even indices are modulated Gaussians, odd ones random-phase
/// fields with `sigma` in `[1, 3]`.
pub fn corpus_sample(grid: &Arc<Grid>, seed: u64, index: u64) -> (SampleKind, Field) {
    let mut rng = sample_rng(seed, index);
    if index % 2 == 0 {
        (SampleKind::ModulatedGaussian, modulated_gaussian(grid, &mut rng))
    } else {
        let sigma = rng.random_range(1.0..=3.0);
        (SampleKind::RandomPhase, random_phase(grid, sigma, &mut rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;

    #[test]
    fn samples_are_reproducible_and_real() {
        let g = make_grid(&[64, 16], &[20.0, 10.0]).unwrap();
        for i in 0..4 {
            let (_, a) = corpus_sample(&g, 7, i);
            let (_, b) = corpus_sample(&g, 7, i);
            assert_eq!(a.data(), b.data());
            assert!(a.to_spectral().hermitian_defect() < 1e-12);
        }
        let (_, a) = corpus_sample(&g, 7, 1);
        let (_, b) = corpus_sample(&g, 8, 1);
        assert_ne!(a.data(), b.data());
    }
}
