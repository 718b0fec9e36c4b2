use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::fft;
use super::grid::{for_each_mode, Grid, Mode, MAX_DIM};
use crate::error::{LabError, Result};

/// Which representation a [`Field`] currently holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rep {
    Physical,
    Spectral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// A scalar field on a [`Grid`], held either as physical samples or as
/// spectral coefficients.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    rep: Rep,
    data: Vec<Complex64>,
    real: bool,
}

impl Field {
    pub fn zeros(grid: &Arc<Grid>, rep: Rep) -> Self {
        Field {
            grid: Arc::clone(grid),
            rep,
            data: vec![Complex64::new(0.0, 0.0); grid.size()],
            real: true,
        }
    }

    /// Real physical field from samples in row-major order.
    pub fn from_real(grid: &Arc<Grid>, values: &[f64]) -> Result<Self> {
        if values.len() != grid.size() {
            return Err(LabError::Usage(format!(
                "expected {} samples, got {}",
                grid.size(),
                values.len()
            )));
        }
        Ok(Field {
            grid: Arc::clone(grid),
            rep: Rep::Physical,
            data: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            real: true,
        })
    }

    /// Raw constructor; `real` asserts the physical field is real-valued.
    pub fn from_data(grid: &Arc<Grid>, rep: Rep, data: Vec<Complex64>, real: bool) -> Result<Self> {
        if data.len() != grid.size() {
            return Err(LabError::Usage(format!(
                "expected {} samples, got {}",
                grid.size(),
                data.len()
            )));
        }
        Ok(Field {
            grid: Arc::clone(grid),
            rep,
            data,
            real,
        })
    }

    /// Samples a real function of the coordinates `x[0..d]`.
    pub fn from_fn<F>(grid: &Arc<Grid>, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let d = grid.dim();
        let coords: Vec<Vec<f64>> = (0..d).map(|a| grid.coords(a)).collect();
        let data = (0..grid.size())
            .into_par_iter()
            .map(|flat| {
                let idx = grid.unflatten(flat);
                let mut x = [0.0; MAX_DIM];
                for a in 0..d {
                    x[a] = coords[a][idx[a]];
                }
                Complex64::new(f(&x[..d]), 0.0)
            })
            .collect();
        Field {
            grid: Arc::clone(grid),
            rep: Rep::Physical,
            data,
            real: true,
        }
    }

    /// Spectral field from a function of the wavevector. When `real` is set the
    /// caller guarantees `f(-xi) = conj f(xi)`.
    pub fn from_spectrum<F>(grid: &Arc<Grid>, real: bool, f: F) -> Self
    where
        F: Fn(&Mode) -> Complex64 + Sync,
    {
        let mut data = vec![Complex64::new(0.0, 0.0); grid.size()];
        for_each_mode(grid, &mut data, |_, m, v| *v = f(m));
        Field {
            grid: Arc::clone(grid),
            rep: Rep::Spectral,
            data,
            real,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn rep(&self) -> Rep {
        self.rep
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub(crate) fn set_real(&mut self, real: bool) {
        self.real = real;
    }

    /// Real parts of the samples (meaningful for physical real fields).
    pub fn real_values(&self) -> Vec<f64> {
        self.data.iter().map(|v| v.re).collect()
    }

    /// Transform in place; errors if the representation does not match.
    pub fn transform_in_place(&mut self, direction: Direction) -> Result<()> {
        match (direction, self.rep) {
            (Direction::Forward, Rep::Physical) => {
                fft::forward(&self.grid, &mut self.data);
                self.rep = Rep::Spectral;
            }
            (Direction::Inverse, Rep::Spectral) => {
                fft::inverse(&self.grid, &mut self.data);
                if self.real {
                    self.data.par_iter_mut().for_each(|v| v.im = 0.0);
                }
                self.rep = Rep::Physical;
            }
            (dir, rep) => {
                return Err(LabError::Usage(format!(
                    "cannot apply {dir:?} transform to a field in {rep:?} representation"
                )))
            }
        }
        Ok(())
    }

    /// Converts to spectral representation if needed.
    pub fn into_spectral(mut self) -> Self {
        if self.rep == Rep::Physical {
            fft::forward(&self.grid, &mut self.data);
            self.rep = Rep::Spectral;
        }
        self
    }

    /// Converts to physical representation if needed.
    pub fn into_physical(mut self) -> Self {
        if self.rep == Rep::Spectral {
            self.transform_in_place(Direction::Inverse)
                .expect("representation checked");
        }
        self
    }

    pub fn to_spectral(&self) -> Self {
        self.clone().into_spectral()
    }

    pub fn to_physical(&self) -> Self {
        self.clone().into_physical()
    }

    pub fn into_rep(self, rep: Rep) -> Self {
        match rep {
            Rep::Physical => self.into_physical(),
            Rep::Spectral => self.into_spectral(),
        }
    }

    /// `sum |v|^2 * weight`, where the weight is the physical or spectral
    /// cell measure according to the representation.
    pub fn l2_norm(&self) -> f64 {
        let w = match self.rep {
            Rep::Physical => self.grid.cell_measure(),
            Rep::Spectral => self.grid.spectral_cell_measure(),
        };
        (self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() * w).sqrt()
    }

    pub fn sup_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.norm()))
    }

    pub fn scale(mut self, c: f64) -> Self {
        self.data.par_iter_mut().for_each(|v| *v *= c);
        self
    }

    /// Pointwise combination `self + c * other` in the current representation.
    pub fn axpy(&self, c: f64, other: &Field) -> Result<Field> {
        self.check_compatible(other)?;
        let data = self
            .data
            .par_iter()
            .zip(other.data.par_iter())
            .map(|(a, b)| a + b * c)
            .collect();
        Ok(Field {
            grid: Arc::clone(&self.grid),
            rep: self.rep,
            data,
            real: self.real && other.real,
        })
    }

    /// Pointwise product of two physical fields.
    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.check_compatible(other)?;
        if self.rep != Rep::Physical {
            return Err(LabError::Usage("pointwise product needs physical fields".into()));
        }
        let data = self
            .data
            .par_iter()
            .zip(other.data.par_iter())
            .map(|(a, b)| a * b)
            .collect();
        Ok(Field {
            grid: Arc::clone(&self.grid),
            rep: Rep::Physical,
            data,
            real: self.real && other.real,
        })
    }

    /// Largest pointwise distance to `other`, compared in physical space.
    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        let a = self.to_physical();
        let b = other.to_physical();
        a.data
            .iter()
            .zip(&b.data)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).norm()))
    }

    fn check_compatible(&self, other: &Field) -> Result<()> {
        if *self.grid != *other.grid {
            return Err(LabError::Usage("fields live on different grids".into()));
        }
        if self.rep != other.rep {
            return Err(LabError::Usage("fields are in different representations".into()));
        }
        Ok(())
    }

    /// Maximum Hermitian-symmetry defect `|f^(-xi) - conj f^(xi)|` relative to
    /// the spectral sup. Only meaningful for spectral data.
    pub fn hermitian_defect(&self) -> f64 {
        let g = &self.grid;
        let d = g.dim();
        let sup = self.sup_abs().max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for flat in 0..g.size() {
            let idx = g.unflatten(flat);
            let mut mirror = 0usize;
            for a in 0..d {
                let na = g.n(a);
                mirror += ((na - idx[a]) % na) * g.strides()[a];
            }
            let e = (self.data[mirror] - self.data[flat].conj()).norm();
            worst = worst.max(e);
        }
        worst / sup
    }
}

/// Forward or inverse transform returning a new field.
pub fn transform(f: &Field, direction: Direction) -> Result<Field> {
    let mut out = f.clone();
    out.transform_in_place(direction)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::spectral::make_grid;

    #[test]
    fn constant_maps_to_dc() {
        let g = make_grid(&[16, 8], &[3.0, 5.0]).unwrap();
        let c = 2.5;
        let f = Field::from_fn(&g, |_| c);
        let s = transform(&f, Direction::Forward).unwrap();
        let dc = s.data()[0].norm();
        assert!(dc > 0.0);
        for v in &s.data()[1..] {
            assert!(v.norm() < 1e-12 * c);
        }
    }

    #[test]
    fn sine_has_two_equal_modes() {
        let g = make_grid(&[8], &[2.0 * PI]).unwrap();
        let f = Field::from_fn(&g, |x| x[0].sin());
        let s = transform(&f, Direction::Forward).unwrap();
        let mags: Vec<f64> = s.data().iter().map(|v| v.norm()).collect();
        assert!((mags[1] - mags[7]).abs() < 1e-14);
        assert!(mags[1] > 0.1);
        for (k, m) in mags.iter().enumerate() {
            if k != 1 && k != 7 {
                assert!(*m < 1e-14);
            }
        }
    }

    #[test]
    fn gaussian_matches_continuum_transform() {
        // (2pi)^{-1/2} int e^{-x^2/2} e^{-ix xi} dx = e^{-xi^2/2}
        let g = make_grid(&[256], &[40.0]).unwrap();
        let f = Field::from_fn(&g, |x| (-0.5 * x[0] * x[0]).exp());
        let s = f.to_spectral();
        for (v, &k) in s.data().iter().zip(g.xi(0)) {
            assert!((v - Complex64::new((-0.5 * k * k).exp(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn rep_mismatch_is_usage_error() {
        let g = make_grid(&[8], &[1.0]).unwrap();
        let f = Field::zeros(&g, Rep::Physical);
        assert!(matches!(
            transform(&f, Direction::Inverse),
            Err(LabError::Usage(_))
        ));
    }

    #[test]
    fn real_field_spectrum_is_hermitian() {
        let g = make_grid(&[16, 32], &[4.0, 6.0]).unwrap();
        let f = Field::from_fn(&g, |x| (x[0] * 1.3).cos() * (-x[1] * x[1]).exp() + 0.2 * x[1]);
        let s = f.to_spectral();
        assert!(s.hermitian_defect() < 1e-12);
    }
}
