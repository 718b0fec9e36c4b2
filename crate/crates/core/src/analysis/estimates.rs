use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::mixed::{mixed_norm_samples, trapezoid_weights};
use super::norm::{dual_exponent, norm, MixedOrder, NormSpec};
use crate::dynamics::Trajectory;
use crate::error::{LabError, Result};
use crate::spectral::{
    apply_multiplier, fractional_derivative, linear_propagator, DerivativeKind, Family, Field,
    Multiplier,
};

/// One evaluation of a dispersive estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersiveRatio {
    /// `||gain U(t) u0||_{L^r} t^rate / ||weight u0||_{L^{r'}}`
    pub ratio: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// Decay rate `rho` the estimate asserts.
    pub rate: f64,
    /// Order of the derivative gain on the left.
    pub gain: f64,
}

/// Ratio of the two sides of the dispersive estimate at time `t`.
///
/// `alpha` in `[0, 1]` selects the derivative gain `D_x^{theta alpha}` in one and
/// two dimensions; in three or more dimensions there is no gain and the right
/// side carries `(-Lap)^{(d-3)(1/2-1/r)}` instead.
pub fn dispersive_ratio(u0: &Field, family: Family, t: f64, r: f64, alpha: f64) -> Result<DispersiveRatio> {
    let d = u0.grid().dim();
    family.check_dim(d)?;
    if r.is_nan() || r < 2.0 {
        return Err(LabError::Usage(format!("dispersive estimate needs r >= 2, got {r}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(LabError::Usage(format!("time {t} must be positive")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(LabError::Usage(format!("alpha {alpha} outside [0, 1]")));
    }
    let theta = if r.is_infinite() { 1.0 } else { (r - 2.0) / r };
    let (rate, gain, weight) = match d {
        1 => ((alpha + 1.0) * theta / 3.0, theta * alpha, 0.0),
        2 => ((alpha + 2.0) * theta / 3.0, theta * alpha, 0.0),
        _ => {
            if alpha != 0.0 {
                return Err(LabError::Usage(
                    "derivative gain is only defined in one and two dimensions".into(),
                ));
            }
            let inv_r = if r.is_infinite() { 0.0 } else { 1.0 / r };
            (1.0 - 2.0 * inv_r, 0.0, (d as f64 - 3.0) * (0.5 - inv_r))
        }
    };
    let evolved = linear_propagator(u0, t, family)?;
    let lifted = if gain == 0.0 {
        evolved
    } else {
        fractional_derivative(&evolved, gain, DerivativeKind::XOnly)?
    };
    let lhs = norm(&lifted, &NormSpec::lebesgue(r))?;
    let weighted = if weight == 0.0 {
        u0.clone()
    } else {
        fractional_derivative(u0, 2.0 * weight, DerivativeKind::Laplacian)?
    };
    let rhs = norm(&weighted, &NormSpec::lebesgue(dual_exponent(r)))?;
    if rhs == 0.0 {
        return Err(LabError::Usage("initial data has zero dual norm".into()));
    }
    Ok(DispersiveRatio {
        ratio: lhs * t.powf(rate) / rhs,
        lhs,
        rhs,
        rate,
        gain,
    })
}

/// Symmetric time grid `[-t_max, t_max]` with spacing `dt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_max: f64,
    pub dt: f64,
}

impl TimeGrid {
    pub fn samples(&self) -> Result<Vec<f64>> {
        if !(self.t_max > 0.0 && self.dt > 0.0 && self.dt < self.t_max) {
            return Err(LabError::Usage(format!("bad time grid {self:?}")));
        }
        let m = (self.t_max / self.dt).round() as i64;
        let h = self.t_max / m as f64;
        Ok((-m..=m).map(|j| j as f64 * h).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KatoResult {
    /// `|| d_x U(t) u0 (x_star) ||_{L^2_t} / || u0 ||_{L^2}`
    pub ratio: f64,
    pub x_star: f64,
    /// Largest `|v(t)|^2` at the two ends of the grid, relative to its peak.
    pub endpoint_level: f64,
    pub warning: Option<String>,
}

/// Local smoothing ratio at a point, by direct summation of the oscillatory
/// lattice sum `v(t) = sum (dk / sqrt(2 pi)) i xi e^{i x xi + i t xi^3} u0^(xi)`.
pub fn kato_smoothing_ratio(u0: &Field, x_star: f64, grid_t: &TimeGrid) -> Result<KatoResult> {
    let g = u0.grid();
    Family::Airy.check_dim(g.dim())?;
    let times = grid_t.samples()?;
    let spec = u0.to_spectral();
    let sup = spec.sup_abs();
    let dk = g.spectral_cell_measure();
    let c = dk / (2.0 * PI).sqrt();
    let modes: Vec<(f64, Complex64)> = g
        .xi(0)
        .iter()
        .zip(spec.data())
        .enumerate()
        .filter(|(j, (_, v))| *j != g.n(0) / 2 && v.norm() > 1e-17 * sup)
        .map(|(_, (&xi, &v))| {
            let a = Complex64::new(0.0, xi * c) * v * Complex64::from_polar(1.0, x_star * xi);
            (xi * xi * xi, a)
        })
        .collect();
    let power: Vec<f64> = times
        .iter()
        .map(|&t| {
            modes
                .iter()
                .map(|(w, a)| a * Complex64::from_polar(1.0, t * w))
                .sum::<Complex64>()
                .norm_sqr()
        })
        .collect();
    let w = trapezoid_weights(&times);
    let l2t: f64 = power.iter().zip(&w).map(|(p, w)| p * w).sum::<f64>().sqrt();
    let peak = power.iter().cloned().fold(0.0, f64::max);
    let ends = power[0].max(*power.last().unwrap());
    let endpoint_level = if peak > 0.0 { ends / peak } else { 0.0 };
    let warning = (endpoint_level > 1e-8).then(|| {
        format!(
            "integrand at |t| = {} is {endpoint_level:e} of its peak; extend the time grid",
            grid_t.t_max
        )
    });
    let l2x = u0.l2_norm();
    if l2x == 0.0 {
        return Err(LabError::Usage("zero initial data".into()));
    }
    Ok(KatoResult {
        ratio: l2t / l2x,
        x_star,
        endpoint_level,
        warning,
    })
}

/// Exponent pair `(q, p) = (6/(theta (alpha + 1)), 2/(1 - theta))` with gain
/// `theta alpha / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrichartzPair {
    pub theta: f64,
    pub alpha: f64,
}

impl StrichartzPair {
    pub fn new(theta: f64, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) || !(0.0..=0.5).contains(&alpha) {
            return Err(LabError::Usage(format!(
                "inadmissible pair theta = {theta}, alpha = {alpha}"
            )));
        }
        Ok(StrichartzPair { theta, alpha })
    }

    pub fn q(&self) -> f64 {
        if self.theta == 0.0 {
            f64::INFINITY
        } else {
            6.0 / (self.theta * (self.alpha + 1.0))
        }
    }

    pub fn p(&self) -> f64 {
        if self.theta == 1.0 {
            f64::INFINITY
        } else {
            2.0 / (1.0 - self.theta)
        }
    }

    pub fn gain(&self) -> f64 {
        0.5 * self.theta * self.alpha
    }
}

/// `|| D^gain U(t) u0 ||` in the given space-time norm over the stored
/// snapshots in `window`, divided by `||u0||_{L^2}`.
pub fn space_time_ratio(
    traj: &Trajectory,
    window: (f64, f64),
    spec: &NormSpec,
    gain: f64,
) -> Result<f64> {
    let (t0, t1) = window;
    if t1 > traj.valid_until() * (1.0 + 1e-12) {
        return Err(LabError::Usage(format!(
            "window end {t1} exceeds the valid range {}",
            traj.valid_until()
        )));
    }
    let samples = traj.stored_in(t0, t1);
    if samples.is_empty() {
        return Err(LabError::Usage("no stored snapshots in the window".into()));
    }
    let initial = traj
        .stored
        .iter()
        .find(|(i, _)| *i == 0)
        .map(|(_, f)| f)
        .ok_or_else(|| LabError::Usage("trajectory does not store its initial state".into()))?;
    let l2 = initial.l2_norm();
    if l2 == 0.0 {
        return Err(LabError::Usage("zero initial data".into()));
    }
    let times: Vec<f64> = samples.iter().map(|(t, _)| *t).collect();
    let lifted: Vec<Field> = if gain == 0.0 {
        samples.iter().map(|(_, f)| (*f).clone()).collect()
    } else {
        let m = Multiplier::homogeneous(gain);
        samples
            .iter()
            .map(|(_, f)| apply_multiplier(f, &m))
            .collect::<Result<_>>()?
    };
    let refs: Vec<&Field> = lifted.iter().collect();
    Ok(mixed_norm_samples(&times, &refs, spec)? / l2)
}

/// Strichartz ratio `||D^{theta alpha/2} U(t) u0||_{L^q_t L^p_x} / ||u0||_{L^2}`.
pub fn strichartz_ratio(traj: &Trajectory, pair: &StrichartzPair, window: (f64, f64)) -> Result<f64> {
    let pair = StrichartzPair::new(pair.theta, pair.alpha)?;
    let spec = NormSpec::MixedXT {
        p_x: pair.p(),
        q_t: pair.q(),
        order: MixedOrder::TOuter,
        q_lorentz: None,
    };
    space_time_ratio(traj, window, &spec, pair.gain())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_relations() {
        let p = StrichartzPair::new(0.0, 0.3).unwrap();
        assert_eq!((p.q(), p.p()), (f64::INFINITY, 2.0));
        let p = StrichartzPair::new(0.4, 0.5).unwrap();
        assert!((p.q() - 6.0 / (0.4 * 1.5)).abs() < 1e-14);
        assert!((p.p() - 2.0 / 0.6).abs() < 1e-14);
        assert!((p.gain() - 0.1).abs() < 1e-15);
        assert!(StrichartzPair::new(1.2, 0.0).is_err());
        assert!(StrichartzPair::new(0.5, 0.7).is_err());
    }

    #[test]
    fn time_grid_is_symmetric() {
        let s = TimeGrid { t_max: 2.0, dt: 0.5 }.samples().unwrap();
        assert_eq!(s, vec![-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0]);
    }
}
