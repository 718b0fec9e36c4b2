use std::fmt;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use super::field::Field;
use super::grid::{for_each_mode, Grid, Mode};
use crate::error::{LabError, Result};

type Symbol = dyn Fn(&Mode) -> Complex64 + Send + Sync;

/// Fourier multiplier: a symbol evaluated on the wavenumber lattice.
///
/// `hermitian` declares `m(-xi) = conj m(xi)` on the lattice, which is what
/// lets [`apply_multiplier`] keep a real field real.
#[derive(Clone)]
pub struct Multiplier {
    label: String,
    hermitian: bool,
    symbol: Arc<Symbol>,
}

impl fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Multiplier")
            .field("label", &self.label)
            .field("hermitian", &self.hermitian)
            .finish()
    }
}

impl Multiplier {
    pub fn new<F>(label: impl Into<String>, hermitian: bool, symbol: F) -> Self
    where
        F: Fn(&Mode) -> Complex64 + Send + Sync + 'static,
    {
        Multiplier {
            label: label.into(),
            hermitian,
            symbol: Arc::new(symbol),
        }
    }

    /// Real-valued symbol; hermitian whenever `f` is even in `xi`.
    pub fn real<F>(label: impl Into<String>, even: bool, f: F) -> Self
    where
        F: Fn(&Mode) -> f64 + Send + Sync + 'static,
    {
        Self::new(label, even, move |m| Complex64::new(f(m), 0.0))
    }

    pub fn identity() -> Self {
        Self::real("1", true, |_| 1.0)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn eval(&self, mode: &Mode) -> Complex64 {
        (self.symbol)(mode)
    }

    /// Product of the two symbols.
    pub fn compose(&self, other: &Multiplier) -> Multiplier {
        let (a, b) = (Arc::clone(&self.symbol), Arc::clone(&other.symbol));
        Multiplier {
            label: format!("{}*{}", self.label, other.label),
            hermitian: self.hermitian && other.hermitian,
            symbol: Arc::new(move |m| a(m) * b(m)),
        }
    }

    /// `|xi|^s`.
    pub fn homogeneous(s: f64) -> Self {
        Self::real(format!("D^{s}"), true, move |m| power_or_zero(m.norm(), s))
    }

    /// `(1 + |xi|^2)^{s/2}`.
    pub fn inhomogeneous(s: f64) -> Self {
        Self::real(format!("J^{s}"), true, move |m| {
            (1.0 + m.norm_sq()).powf(0.5 * s)
        })
    }

    /// `|xi_1|^s`.
    pub fn x_only(s: f64) -> Self {
        Self::real(format!("D_x^{s}"), true, move |m| {
            power_or_zero(m.xi[0].abs(), s)
        })
    }

    /// `(-Delta)^{s/2}`, i.e. `|xi|^s`.
    pub fn laplacian_power(s: f64) -> Self {
        Self::real(format!("(-Lap)^{}", 0.5 * s), true, move |m| {
            power_or_zero(m.norm(), s)
        })
    }

    /// `i xi_axis`, with the Nyquist plane of that axis sent to zero.
    pub fn partial(axis: usize) -> Self {
        Self::new(format!("d/dx{axis}"), true, move |m| {
            if m.nyquist[axis] {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, m.xi[axis])
            }
        })
    }

    /// Evaluates the symbol on every lattice point, in storage order.
    pub fn sample(&self, grid: &Grid) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); grid.size()];
        let bad: Mutex<Option<(usize, Mode)>> = Mutex::new(None);
        for_each_mode(grid, &mut out, |flat, m, v| {
            let s = self.eval(m);
            if !(s.re.is_finite() && s.im.is_finite()) {
                let mut slot = bad.lock().unwrap();
                if slot.map_or(true, |(f, _)| flat < f) {
                    *slot = Some((flat, *m));
                }
            }
            *v = s;
        });
        if let Some((_, m)) = bad.into_inner().unwrap() {
            return Err(LabError::Numeric(format!(
                "multiplier {} is not finite at xi = {:?}",
                self.label,
                &m.xi[..m.dim]
            )));
        }
        Ok(out)
    }
}

/// `r^s` with the value at `r = 0` defined as 0 for `s < 0` (and 1 for `s = 0`).
fn power_or_zero(r: f64, s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else if r == 0.0 {
        0.0
    } else {
        r.powf(s)
    }
}

/// Multiplies the spectrum of `f` by the symbol of `m`. Physical input is
/// transformed and the result returned in the input's representation.
pub fn apply_multiplier(f: &Field, m: &Multiplier) -> Result<Field> {
    let rep = f.rep();
    let symbol = m.sample(f.grid())?;
    let mut s = f.to_spectral();
    for (v, w) in s.data_mut().iter_mut().zip(&symbol) {
        *v *= w;
    }
    s.set_real(f.is_real() && m.is_hermitian());
    Ok(s.into_rep(rep))
}

/// Which derivative [`fractional_derivative`] applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeKind {
    /// `|xi|^s`
    Homogeneous,
    /// `(1 + |xi|^2)^{s/2}`
    Inhomogeneous,
    /// `|xi_1|^s`
    XOnly,
    /// `(-Delta)^{s/2}`, symbol `|xi|^s`
    Laplacian,
}

pub fn derivative_multiplier(s: f64, kind: DerivativeKind) -> Multiplier {
    match kind {
        DerivativeKind::Homogeneous => Multiplier::homogeneous(s),
        DerivativeKind::Inhomogeneous => Multiplier::inhomogeneous(s),
        DerivativeKind::XOnly => Multiplier::x_only(s),
        DerivativeKind::Laplacian => Multiplier::laplacian_power(s),
    }
}

/// Fractional derivative of order `s`.
///
/// Negative homogeneous orders send the singular modes to zero and require
/// the input to carry no mass there (below `1e-12` of the spectral sup).
pub fn fractional_derivative(f: &Field, s: f64, kind: DerivativeKind) -> Result<Field> {
    if !s.is_finite() {
        return Err(LabError::Usage(format!("derivative order {s} is not finite")));
    }
    if s < 0.0 && kind != DerivativeKind::Inhomogeneous {
        let spec = f.to_spectral();
        let sup = spec.sup_abs();
        let mut singular = 0.0f64;
        let on_axis_only = kind == DerivativeKind::XOnly;
        for (flat, v) in spec.data().iter().enumerate() {
            let idx = f.grid().unflatten(flat);
            let hit = if on_axis_only {
                idx[0] == 0
            } else {
                idx[..f.grid().dim()].iter().all(|&i| i == 0)
            };
            if hit {
                singular = singular.max(v.norm());
            }
        }
        if singular >= 1e-12 * sup && singular > 0.0 {
            return Err(LabError::Singularity(format!(
                "order {s} derivative of a field with |u^(0)| = {singular:e} (sup {sup:e})"
            )));
        }
    }
    apply_multiplier(f, &derivative_multiplier(s, kind))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::spectral::make_grid;

    #[test]
    fn unit_symbol_is_identity() {
        let g = make_grid(&[32], &[5.0]).unwrap();
        let f = Field::from_fn(&g, |x| (-x[0] * x[0]).exp() * (3.0 * x[0]).sin());
        let h = apply_multiplier(&f, &Multiplier::identity()).unwrap();
        assert!(h.max_abs_diff(&f) < 1e-15);
        assert!(h.is_real());
    }

    #[test]
    fn first_derivative_of_unit_sine() {
        let g = make_grid(&[8], &[2.0 * PI]).unwrap();
        let f = Field::from_fn(&g, |x| x[0].sin());
        let h = fractional_derivative(&f, 1.0, DerivativeKind::Homogeneous).unwrap();
        assert!(h.max_abs_diff(&f) < 1e-14);
    }

    #[test]
    fn half_derivative_of_cos4() {
        let g = make_grid(&[16], &[2.0 * PI]).unwrap();
        let f = Field::from_fn(&g, |x| (4.0 * x[0]).cos());
        let h = fractional_derivative(&f, 0.5, DerivativeKind::Homogeneous).unwrap();
        let expect = f.clone().scale(2.0);
        assert!(h.max_abs_diff(&expect) < 1e-13);
    }

    #[test]
    fn inhomogeneous_is_one_at_origin() {
        let mode = Mode {
            dim: 2,
            xi: [0.0; 4],
            nyquist: [false; 4],
        };
        for s in [-3.0, -0.5, 0.0, 0.7, 4.0] {
            assert_eq!(Multiplier::inhomogeneous(s).eval(&mode), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn zero_order_inhomogeneous_is_identity() {
        let g = make_grid(&[16, 16], &[4.0, 4.0]).unwrap();
        let f = Field::from_fn(&g, |x| (-x[0] * x[0] - 2.0 * x[1] * x[1]).exp());
        let h = fractional_derivative(&f, 0.0, DerivativeKind::Inhomogeneous).unwrap();
        assert!(h.max_abs_diff(&f) < 1e-15);
    }

    #[test]
    fn negative_order_inverse_pair() {
        let g = make_grid(&[64], &[2.0 * PI]).unwrap();
        let f = Field::from_fn(&g, |x| (2.0 * x[0]).sin() + 0.3 * (5.0 * x[0]).cos());
        let h = fractional_derivative(&f, -1.0, DerivativeKind::Homogeneous).unwrap();
        let back = fractional_derivative(&h, 1.0, DerivativeKind::Homogeneous).unwrap();
        assert!(back.max_abs_diff(&f) < 1e-10);
    }

    #[test]
    fn negative_order_with_dc_is_singular() {
        let g = make_grid(&[32], &[2.0 * PI]).unwrap();
        let f = Field::from_fn(&g, |x| 1.0 + x[0].sin());
        assert!(matches!(
            fractional_derivative(&f, -0.5, DerivativeKind::Homogeneous),
            Err(LabError::Singularity(_))
        ));
    }

    #[test]
    fn non_finite_symbol_names_xi() {
        let g = make_grid(&[8], &[2.0 * PI]).unwrap();
        let f = Field::from_fn(&g, |x| x[0].cos());
        let m = Multiplier::real("1/xi", false, |m| 1.0 / m.xi[0]);
        match apply_multiplier(&f, &m) {
            Err(LabError::Numeric(msg)) => assert!(msg.contains("[0.0]"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn partial_derivative_of_sine() {
        let g = make_grid(&[32, 16], &[2.0 * PI, 2.0 * PI]).unwrap();
        let f = Field::from_fn(&g, |x| (3.0 * x[0]).sin() * (2.0 * x[1]).cos());
        let dx = apply_multiplier(&f, &Multiplier::partial(0)).unwrap();
        let expect = Field::from_fn(&g, |x| 3.0 * (3.0 * x[0]).cos() * (2.0 * x[1]).cos());
        assert!(dx.max_abs_diff(&expect) < 1e-12);
        assert!(dx.is_real());
    }
}
