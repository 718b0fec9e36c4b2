use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::Family;

/// Sign of the power nonlinearity; focusing is the `+` in
/// `u_t + L u + d_x(u^{k+1}) = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Focusing,
    Defocusing,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Focusing => 1.0,
            Sign::Defocusing => -1.0,
        }
    }
}

/// `u_t + L u + sign * coupling * d_x(u^{k+1}) = 0`, with `L = d_x^3` (Airy)
/// or `L = d_x Lap` (ZK).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquationSpec {
    pub family: Family,
    pub dim: usize,
    pub k: u32,
    pub sign: Sign,
    /// Multiplies the nonlinearity; 0 gives the linear flow.
    pub coupling: f64,
}

impl EquationSpec {
    pub fn gkdv(k: u32, sign: Sign) -> Self {
        EquationSpec {
            family: Family::Airy,
            dim: 1,
            k,
            sign,
            coupling: 1.0,
        }
    }

    pub fn gzk(dim: usize, k: u32, sign: Sign) -> Self {
        EquationSpec {
            family: Family::Zk,
            dim,
            k,
            sign,
            coupling: 1.0,
        }
    }

    pub fn linear(self) -> Self {
        EquationSpec {
            coupling: 0.0,
            ..self
        }
    }

    pub fn is_linear(&self) -> bool {
        self.coupling == 0.0
    }

    /// Scaling-critical Sobolev exponent `d/2 - 2/k`.
    pub fn critical_exponent(&self) -> f64 {
        self.dim as f64 / 2.0 - 2.0 / self.k as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(LabError::Config("k: power must be at least 1".into()));
        }
        if !self.coupling.is_finite() {
            return Err(LabError::Config("coupling must be finite".into()));
        }
        self.family.check_dim(self.dim).map_err(|e| match e {
            LabError::Usage(m) => LabError::Config(m),
            other => other,
        })
    }

    /// Coefficient `c` in `u_t = -L u + c * d_x(u^{k+1})`.
    pub(crate) fn flux_coefficient(&self) -> f64 {
        -self.sign.value() * self.coupling
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_exponents() {
        assert_eq!(EquationSpec::gkdv(4, Sign::Defocusing).critical_exponent(), 0.0);
        assert_eq!(EquationSpec::gzk(3, 4, Sign::Focusing).critical_exponent(), 1.0);
        assert!(EquationSpec::gzk(4, 3, Sign::Focusing).critical_exponent() > 1.0);
        assert_eq!(EquationSpec::gzk(2, 4, Sign::Focusing).critical_exponent(), 0.5);
    }

    #[test]
    fn rejects_zero_power() {
        let mut s = EquationSpec::gkdv(4, Sign::Focusing);
        s.k = 0;
        assert!(matches!(s.validate(), Err(LabError::Config(_))));
        assert!(EquationSpec::gzk(1, 2, Sign::Focusing).validate().is_err());
    }
}
