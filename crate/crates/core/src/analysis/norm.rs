use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::{for_each_mode, Field, Rep};

/// Order of integration in a space-time norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixedOrder {
    /// `L^q_t L^p_x`: spatial norm first, then time.
    TOuter,
    /// `L^p_x L^q_t`: temporal norm at each point first, then space.
    XOuter,
}

/// Which norm to evaluate. Exponents are in `[1, inf]`, with
/// `f64::INFINITY` for the sup.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormSpec {
    Lebesgue {
        p: f64,
    },
    Lorentz {
        p: f64,
        q: f64,
    },
    Sobolev {
        s: f64,
        homogeneous: bool,
    },
    /// Space-time norm over a trajectory; `q_lorentz` turns the temporal
    /// factor into `L^{q_t, q_lorentz}_t`.
    MixedXT {
        p_x: f64,
        q_t: f64,
        order: MixedOrder,
        #[serde(default)]
        q_lorentz: Option<f64>,
    },
    /// `L^{p_y}` over the transverse variables of `L^{p_x}` over x.
    AnisotropicYX {
        p_y: f64,
        p_x: f64,
    },
}

impl NormSpec {
    pub fn lebesgue(p: f64) -> Self {
        NormSpec::Lebesgue { p }
    }

    pub fn sup() -> Self {
        NormSpec::Lebesgue { p: f64::INFINITY }
    }

    pub fn lorentz(p: f64, q: f64) -> Self {
        NormSpec::Lorentz { p, q }
    }

    pub fn validate(&self) -> Result<()> {
        let exps: Vec<f64> = match *self {
            NormSpec::Lebesgue { p } => vec![p],
            NormSpec::Lorentz { p, q } => vec![p, q],
            NormSpec::Sobolev { s, .. } => {
                if !s.is_finite() {
                    return Err(LabError::Usage(format!("Sobolev order {s} is not finite")));
                }
                vec![]
            }
            NormSpec::MixedXT {
                p_x, q_t, q_lorentz, ..
            } => {
                let mut v = vec![p_x, q_t];
                v.extend(q_lorentz);
                v
            }
            NormSpec::AnisotropicYX { p_y, p_x } => vec![p_y, p_x],
        };
        check_exponents(&exps)
    }
}

pub(crate) fn check_exponents(exps: &[f64]) -> Result<()> {
    for &e in exps {
        if e.is_nan() || e < 1.0 {
            return Err(LabError::Usage(format!("exponent {e} is below 1")));
        }
    }
    Ok(())
}

/// Conjugate exponent `r'` with `1/r + 1/r' = 1`.
pub fn dual_exponent(r: f64) -> f64 {
    if r.is_infinite() {
        1.0
    } else if r == 1.0 {
        f64::INFINITY
    } else {
        r / (r - 1.0)
    }
}

/// `(sum w_i |v_i|^p)^{1/p}`, or `max |v_i|` over positive weights for `p = inf`.
pub fn weighted_lebesgue(values: &[f64], weights: &[f64], p: f64) -> f64 {
    let top = values
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .fold(0.0f64, |m, (v, _)| m.max(v.abs()));
    if p.is_infinite() || top == 0.0 {
        return top;
    }
    let s: f64 = values
        .iter()
        .zip(weights)
        .map(|(v, w)| w * (v.abs() / top).powf(p))
        .sum();
    top * s.powf(1.0 / p)
}

/// Lorentz quasinorm of the step function taking value `|v_i|` on a set of
/// measure `w_i`, computed exactly from its decreasing rearrangement:
/// `p^{1/q} || lambda mu(lambda)^{1/p} ||_{L^q(d lambda / lambda)}`.
pub fn weighted_lorentz(values: &[f64], weights: &[f64], p: f64, q: f64) -> Result<f64> {
    check_exponents(&[p, q])?;
    let mut pairs: Vec<(f64, f64)> = values
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(v, &w)| (v.abs(), w))
        .filter(|(a, _)| *a > 0.0)
        .collect();
    if pairs.is_empty() {
        return Ok(0.0);
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let top = pairs[0].0;
    if p.is_infinite() {
        if q.is_infinite() {
            return Ok(top);
        }
        return Err(LabError::Usage(format!(
            "Lorentz space with p = inf and q = {q} is trivial"
        )));
    }
    let mut cum = 0.0;
    if q.is_infinite() {
        let mut best = 0.0f64;
        for (a, w) in &pairs {
            cum += w;
            best = best.max(a * cum.powf(1.0 / p));
        }
        return Ok(best);
    }
    let mut acc = 0.0;
    for (j, (a, w)) in pairs.iter().enumerate() {
        cum += w;
        let next = pairs.get(j + 1).map_or(0.0, |x| x.0);
        let layer = (a / top).powf(q) - (next / top).powf(q);
        if layer > 0.0 {
            acc += cum.powf(q / p) * layer;
        }
    }
    Ok(top * (p / q * acc).powf(1.0 / q))
}

/// Norm of a single field.
pub fn norm(f: &Field, spec: &NormSpec) -> Result<f64> {
    spec.validate()?;
    match *spec {
        NormSpec::Lebesgue { p } => {
            let phys = physical(f);
            let cell = f.grid().cell_measure();
            Ok(lebesgue_uniform(phys.data().iter().map(|v| v.norm()), cell, p))
        }
        NormSpec::Lorentz { p, q } => {
            let vals = abs_values(f);
            let w = vec![f.grid().cell_measure(); vals.len()];
            weighted_lorentz(&vals, &w, p, q)
        }
        NormSpec::Sobolev { s, homogeneous } => Ok(sobolev(f, s, homogeneous)),
        NormSpec::AnisotropicYX { p_y, p_x } => anisotropic_yx(f, p_y, p_x),
        NormSpec::MixedXT { .. } => Err(LabError::Usage(
            "space-time norms need a trajectory; use mixed_norm".into(),
        )),
    }
}

fn lebesgue_uniform(values: impl Iterator<Item = f64> + Clone, cell: f64, p: f64) -> f64 {
    let top = values.clone().fold(0.0f64, f64::max);
    if p.is_infinite() || top == 0.0 {
        return top;
    }
    let s: f64 = values.map(|a| (a / top).powf(p)).sum();
    top * (s * cell).powf(1.0 / p)
}

/// `(sum weight(xi) |u^(xi)|^2 dk)^{1/2}` with weight `(1+|xi|^2)^s` or `|xi|^{2s}`.
pub fn sobolev(f: &Field, s: f64, homogeneous: bool) -> f64 {
    let spec = f.to_spectral();
    let mut data = spec.into_data();
    for_each_mode(f.grid(), &mut data, |_, m, v| {
        let r2 = m.norm_sq();
        let w = if homogeneous {
            if s == 0.0 {
                1.0
            } else if r2 == 0.0 {
                0.0
            } else {
                r2.powf(s)
            }
        } else {
            (1.0 + r2).powf(s)
        };
        v.re = w * v.norm_sqr();
        v.im = 0.0;
    });
    let total: f64 = data.iter().map(|v| v.re).sum();
    (total * f.grid().spectral_cell_measure()).sqrt()
}

fn anisotropic_yx(f: &Field, p_y: f64, p_x: f64) -> Result<f64> {
    let g = f.grid();
    let phys = physical(f);
    let nx = g.n(0);
    let m = g.size() / nx;
    let dx = g.dx(0);
    let dy: f64 = g.spacings()[1..].iter().product();
    let data = phys.data();
    let top = data.iter().fold(0.0f64, |a, v| a.max(v.norm()));
    if top == 0.0 {
        return Ok(0.0);
    }
    // Rows of constant x are contiguous, so accumulate over x row by row.
    let mut inner = vec![0.0f64; m];
    for row in data.chunks(m) {
        for (acc, v) in inner.iter_mut().zip(row) {
            let a = v.norm() / top;
            if p_x.is_infinite() {
                *acc = acc.max(a);
            } else {
                *acc += a.powf(p_x);
            }
        }
    }
    if p_x.is_finite() {
        inner.iter_mut().for_each(|a| *a = (*a * dx).powf(1.0 / p_x));
    }
    Ok(top * lebesgue_uniform(inner.iter().copied(), dy, p_y))
}

fn physical(f: &Field) -> Cow<'_, Field> {
    if f.rep() == Rep::Physical {
        Cow::Borrowed(f)
    } else {
        Cow::Owned(f.to_physical())
    }
}

/// Cell values `|f|` of a field in physical space.
pub(crate) fn abs_values(f: &Field) -> Vec<f64> {
    physical(f).data().iter().map(|v| v.norm()).collect()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::spectral::make_grid;

    #[test]
    fn indicator_closed_form() {
        for &(p, q, a) in &[(2.0, 1.0, 4.0), (3.0, 2.0, 0.5), (1.5, 4.0, 7.0), (2.0, 2.0, 3.0)] {
            let v = [1.0];
            let got = weighted_lorentz(&v, &[a], p, q).unwrap();
            let want = (p / q as f64).powf(1.0 / q) * f64::powf(a, 1.0 / p);
            assert!((got - want).abs() < 1e-12 * want, "{p} {q} {a}");
        }
        let got = weighted_lorentz(&[1.0], &[4.0], 2.0, 1.0).unwrap();
        assert!((got - 4.0).abs() < 1e-12);
    }

    #[test]
    fn two_valued_step_function() {
        // value 3 on measure 0.5, value 1 on measure 2
        let (p, q) = (2.0f64, 3.0f64);
        let got = weighted_lorentz(&[1.0, 3.0], &[2.0, 0.5], p, q).unwrap();
        let layer = (p / q) * (0.5f64.powf(q / p) * (27.0 - 1.0) + 2.5f64.powf(q / p) * 1.0);
        assert!((got - layer.powf(1.0 / q)).abs() < 1e-12);
    }

    #[test]
    fn weak_type_is_max() {
        let got = weighted_lorentz(&[1.0, 3.0], &[2.0, 0.5], 2.0, f64::INFINITY).unwrap();
        let want = f64::max(3.0 * 0.5f64.sqrt(), 2.5f64.sqrt());
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn sup_norm_and_l2_of_sine() {
        let g = make_grid(&[64], &[2.0 * PI]).unwrap();
        let f = Field::from_fn(&g, |x| 2.0 * x[0].sin());
        assert!((norm(&f, &NormSpec::sup()).unwrap() - 2.0).abs() < 1e-14);
        let l2 = norm(&f, &NormSpec::lebesgue(2.0)).unwrap();
        assert!((l2 - (4.0 * PI).sqrt()).abs() < 1e-12);
        let s0 = sobolev(&f, 0.0, false);
        assert!((s0 - l2).abs() < 1e-12 * l2);
    }

    #[test]
    fn exponent_below_one_rejected() {
        let g = make_grid(&[8], &[1.0]).unwrap();
        let f = Field::zeros(&g, Rep::Physical);
        assert!(norm(&f, &NormSpec::lebesgue(0.5)).is_err());
        assert!(norm(&f, &NormSpec::lorentz(2.0, 0.9)).is_err());
    }

    #[test]
    fn anisotropic_two_two_is_l2() {
        let g = make_grid(&[16, 8, 8], &[4.0, 3.0, 5.0]).unwrap();
        let f = Field::from_fn(&g, |x| (-(x[0] * x[0] + x[1] * x[1] + 0.5 * x[2] * x[2])).exp() + 0.01);
        let a = norm(&f, &NormSpec::AnisotropicYX { p_y: 2.0, p_x: 2.0 }).unwrap();
        let b = norm(&f, &NormSpec::lebesgue(2.0)).unwrap();
        assert!((a - b).abs() < 1e-12 * b);
    }

    #[test]
    fn dual_exponents() {
        assert_eq!(dual_exponent(2.0), 2.0);
        assert_eq!(dual_exponent(f64::INFINITY), 1.0);
        assert_eq!(dual_exponent(1.0), f64::INFINITY);
        assert!((dual_exponent(4.0) - 4.0 / 3.0).abs() < 1e-15);
    }
}
