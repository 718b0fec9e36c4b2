//! Time evolution of gKdV and gZK.

mod diagnostics;
mod equation;
mod evolve;
mod stepper;

pub use diagnostics::{conserved, wraparound_guard};
pub use equation::{EquationSpec, Sign};
pub use evolve::{
    default_dt, evolve, ConservedLedger, DerivativeKindTag, EvolveOptions, GuardOptions,
    NormRecord, Probe, ProbeOperator, Schedule, Trajectory,
};
pub use stepper::{nonlinearity, step};
