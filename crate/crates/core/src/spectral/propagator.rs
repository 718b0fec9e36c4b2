use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::Field;
use super::grid::{Grid, Mode};
use super::multiplier::{apply_multiplier, Multiplier};
use crate::error::{LabError, Result};

/// Linear dispersion family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `u_t + u_xxx = 0` in one dimension.
    Airy,
    /// `u_t + d_x Lap u = 0` in two or more dimensions.
    Zk,
}

impl Family {
    pub fn check_dim(self, d: usize) -> Result<()> {
        match (self, d) {
            (Family::Airy, 1) => Ok(()),
            (Family::Zk, d) if d >= 2 => Ok(()),
            (fam, d) => Err(LabError::Usage(format!(
                "{fam:?} flow is not defined in dimension {d}"
            ))),
        }
    }
}

/// Phase rate `omega(xi)` with `U(t) = exp(i t omega)`.
///
/// On the Nyquist plane of the x axis `xi_1` has no partner of opposite sign,
/// so it is taken as 0 there; this keeps the flow unitary and real.
pub fn dispersion(mode: &Mode, family: Family) -> f64 {
    let x = if mode.nyquist[0] { 0.0 } else { mode.xi[0] };
    match family {
        Family::Airy => x * x * x,
        Family::Zk => x * mode.norm_sq(),
    }
}

pub fn propagator_multiplier(grid: &Grid, t: f64, family: Family) -> Result<Multiplier> {
    family.check_dim(grid.dim())?;
    if !t.is_finite() {
        return Err(LabError::Usage(format!("propagator time {t} is not finite")));
    }
    Ok(Multiplier::new(format!("U_{family:?}({t})"), true, move |m| {
        Complex64::from_polar(1.0, t * dispersion(m, family))
    }))
}

/// Exact linear flow `U(t) f`.
pub fn linear_propagator(f: &Field, t: f64, family: Family) -> Result<Field> {
    apply_multiplier(f, &propagator_multiplier(f.grid(), t, family)?)
}

/// `omega` sampled on the lattice in storage order.
pub fn dispersion_table(grid: &Grid, family: Family) -> Result<Vec<f64>> {
    family.check_dim(grid.dim())?;
    let m = Multiplier::real("omega", false, move |m| dispersion(m, family));
    Ok(m.sample(grid)?.into_iter().map(|v| v.re).collect())
}
