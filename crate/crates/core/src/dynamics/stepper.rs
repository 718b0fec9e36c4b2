//! Integrating-factor RK4.
//!
//! The state is kept in spectral form. With `E = exp(i omega h / 2)` a step
//! of size `h` reads
//!
//! ```text
//! k1 = N(u)
//! k2 = N(E (u + h/2 k1))
//! k3 = N(E u + h/2 k2)
//! k4 = N(E^2 u + h E k3)
//! u+ = E^2 u + h/6 (E^2 k1 + 2 E (k2 + k3) + k4)
//! ```
//!
//! which is classical RK4 applied to `v = U(-t) u`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::equation::EquationSpec;
use crate::error::{LabError, Result};
use crate::spectral::{
    dealias_mask, dispersion_table, fft_forward, fft_inverse, Field, Grid, Multiplier, Rep,
};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

pub(crate) struct Stepper {
    grid: Arc<Grid>,
    spec: EquationSpec,
    omega: Vec<f64>,
    mask: Vec<f64>,
    /// `c * xi_1` on retained modes, 0 elsewhere; `N = i * flux * F[(mask u)^{k+1}]`.
    flux: Vec<f64>,
    /// Per step size: `E` and `E^2 - 1`.
    factors: Vec<(f64, Vec<Complex64>, Vec<Complex64>)>,
    work: Vec<Complex64>,
    kbuf: Vec<Complex64>,
    acc: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Stepper {
    pub(crate) fn new(grid: &Arc<Grid>, spec: &EquationSpec) -> Result<Self> {
        spec.validate()?;
        if spec.dim != grid.dim() {
            return Err(LabError::Usage(format!(
                "equation is {}-dimensional but the grid has {} axes",
                spec.dim,
                grid.dim()
            )));
        }
        let n = grid.size();
        let omega = dispersion_table(grid, spec.family)?;
        let (mask, flux) = if spec.is_linear() {
            (Vec::new(), Vec::new())
        } else {
            let degree = (spec.k as usize + 1).max(2);
            let mask: Vec<f64> = dealias_mask(grid, degree)?
                .sample(grid)?
                .iter()
                .map(|v| v.re)
                .collect();
            let c = spec.flux_coefficient();
            let xi1 = Multiplier::partial(0).sample(grid)?;
            let flux = mask.iter().zip(&xi1).map(|(m, d)| m * c * d.im).collect();
            (mask, flux)
        };
        let buf = |len| vec![ZERO; len];
        let nl = if spec.is_linear() { 0 } else { n };
        Ok(Stepper {
            grid: Arc::clone(grid),
            spec: *spec,
            omega,
            mask,
            flux,
            factors: Vec::new(),
            work: buf(nl),
            kbuf: buf(nl),
            acc: buf(nl),
            tmp: buf(nl),
        })
    }

    pub(crate) fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Zeroes the modes outside the dealiasing band. Those modes only ever
    /// feel the linear flow, yet they enter the potential energy, so a run
    /// that keeps them does not conserve the energy it reports.
    pub(crate) fn project(&self, u: &mut [Complex64]) {
        if self.mask.is_empty() {
            return;
        }
        u.par_iter_mut()
            .zip(self.mask.par_iter())
            .for_each(|(x, m)| *x *= m);
    }

    /// Index into the cache of factors for step `h`.
    ///
    /// The full-step factor is applied as `u + (E^2 - 1) u` with `E^2 - 1`
    /// formed from `sin`, so its modulus error scales with the phase instead
    /// of sitting at one ulp. Multiplying by a rounded `E^2` every step drifts
    /// the low modes coherently by about `steps * eps`.
    fn factor(&mut self, h: f64) -> usize {
        if let Some(i) = self.factors.iter().position(|(s, _, _)| *s == h) {
            return i;
        }
        let e: Vec<Complex64> = self
            .omega
            .par_iter()
            .map(|w| Complex64::from_polar(1.0, 0.5 * h * w))
            .collect();
        let z: Vec<Complex64> = self
            .omega
            .par_iter()
            .map(|w| {
                let s = (0.5 * h * w).sin();
                Complex64::new(-2.0 * s * s, (h * w).sin())
            })
            .collect();
        if self.factors.len() >= 2 {
            self.factors.remove(0);
        }
        self.factors.push((h, e, z));
        self.factors.len() - 1
    }

    /// `out = N(v)` for spectral `v`.
    fn nonlinear(
        &mut self,
        v: &[Complex64],
        out: &mut [Complex64],
        t: f64,
    ) -> Result<()> {
        let grid = Arc::clone(&self.grid);
        let power = self.spec.k as i32 + 1;
        self.work
            .par_iter_mut()
            .zip(v.par_iter().zip(self.mask.par_iter()))
            .for_each(|(w, (x, m))| *w = x * m);
        fft_inverse(&grid, &mut self.work);
        let bad = self
            .work
            .par_iter_mut()
            .map(|w| {
                let p = w.re.powi(power);
                *w = Complex64::new(p, 0.0);
                !p.is_finite()
            })
            .reduce(|| false, |a, b| a || b);
        if bad {
            let sup = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
            return Err(LabError::BlowUp { time: t, sup });
        }
        fft_forward(&grid, &mut self.work);
        out.par_iter_mut()
            .zip(self.work.par_iter().zip(self.flux.par_iter()))
            .for_each(|(o, (w, f))| *o = Complex64::new(-w.im * f, w.re * f));
        Ok(())
    }

    /// Advances spectral state `u` from `t` to `t + h`.
    pub(crate) fn step(&mut self, u: &mut [Complex64], t: f64, h: f64) -> Result<()> {
        let fi = self.factor(h);
        let e = std::mem::take(&mut self.factors[fi].1);
        let z = std::mem::take(&mut self.factors[fi].2);
        let result = self.step_with(u, t, h, &e, &z);
        self.factors[fi].1 = e;
        self.factors[fi].2 = z;
        result
    }

    fn step_with(
        &mut self,
        u: &mut [Complex64],
        t: f64,
        h: f64,
        e: &[Complex64],
        z: &[Complex64],
    ) -> Result<()> {
        if self.spec.is_linear() {
            u.par_iter_mut()
                .zip(z.par_iter())
                .for_each(|(x, d)| *x += d * *x);
            return Ok(());
        }
        let mut kbuf = std::mem::take(&mut self.kbuf);
        let mut acc = std::mem::take(&mut self.acc);
        let mut tmp = std::mem::take(&mut self.tmp);
        let result = (|| {
            let hh = 0.5 * h;
            self.nonlinear(u, &mut kbuf, t)?;
            acc.par_iter_mut()
                .zip(kbuf.par_iter().zip(e.par_iter()))
                .for_each(|(a, (k, f))| *a = f * f * k);
            tmp.par_iter_mut()
                .zip(u.par_iter().zip(kbuf.par_iter().zip(e.par_iter())))
                .for_each(|(s, (x, (k, f)))| *s = f * (x + k * hh));
            self.nonlinear(&tmp, &mut kbuf, t + hh)?;
            acc.par_iter_mut()
                .zip(kbuf.par_iter().zip(e.par_iter()))
                .for_each(|(a, (k, f))| *a += f * k * 2.0);
            tmp.par_iter_mut()
                .zip(u.par_iter().zip(kbuf.par_iter().zip(e.par_iter())))
                .for_each(|(s, (x, (k, f)))| *s = f * x + k * hh);
            self.nonlinear(&tmp, &mut kbuf, t + hh)?;
            acc.par_iter_mut()
                .zip(kbuf.par_iter().zip(e.par_iter()))
                .for_each(|(a, (k, f))| *a += f * k * 2.0);
            tmp.par_iter_mut()
                .zip(u.par_iter().zip(kbuf.par_iter().zip(e.par_iter())))
                .for_each(|(s, (x, (k, f)))| *s = f * f * x + f * k * h);
            self.nonlinear(&tmp, &mut kbuf, t + h)?;
            let h6 = h / 6.0;
            u.par_iter_mut()
                .zip(acc.par_iter().zip(kbuf.par_iter().zip(z.par_iter())))
                .for_each(|(x, (a, (k, d)))| *x += d * *x + (a + k) * h6);
            Ok(())
        })();
        self.kbuf = kbuf;
        self.acc = acc;
        self.tmp = tmp;
        result
    }
}

fn physical_real(u: &Field) -> Result<Field> {
    if !u.is_real() {
        return Err(LabError::Usage("the evolution needs a real field".into()));
    }
    Ok(u.to_physical())
}

/// Right-hand side `-sign * d_x(u^{k+1})` (scaled by the coupling), dealiased
/// before and after the power. Returned in physical representation.
pub fn nonlinearity(u: &Field, spec: &EquationSpec) -> Result<Field> {
    let u = physical_real(u)?;
    let mut st = Stepper::new(u.grid(), spec)?;
    if spec.is_linear() {
        return Ok(Field::zeros(u.grid(), Rep::Physical));
    }
    let s = u.to_spectral();
    let mut out = vec![ZERO; s.data().len()];
    st.nonlinear(s.data(), &mut out, 0.0)?;
    Ok(Field::from_data(u.grid(), Rep::Spectral, out, true)?.into_physical())
}

/// One integrating-factor RK4 step from `t` to `t + dt` (negative `dt`
/// integrates backwards).
pub fn step(u: &Field, t: f64, dt: f64, spec: &EquationSpec) -> Result<Field> {
    if !dt.is_finite() || !t.is_finite() {
        return Err(LabError::Usage(format!("step needs finite t and dt, got {t}, {dt}")));
    }
    let u = physical_real(u)?;
    let mut st = Stepper::new(u.grid(), spec)?;
    let mut s = u.to_spectral().into_data();
    st.step(&mut s, t, dt)?;
    Ok(Field::from_data(st.grid(), Rep::Spectral, s, true)?.into_physical())
}
