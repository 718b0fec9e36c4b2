//! Grids, the Fourier transform, Fourier multipliers and dealiasing.

mod dealias;
mod fft;
mod field;
mod grid;
mod littlewood_paley;
mod multiplier;
mod propagator;

pub use dealias::{dealias_cutoff, dealias_mask};
pub use field::{transform, Direction, Field, Rep};
pub use grid::{make_grid, Grid, Mode, MAX_DIM};
pub(crate) use fft::{forward as fft_forward, inverse as fft_inverse};
pub(crate) use grid::{for_each_mode, sum_over_modes};
pub use littlewood_paley::{
    bump_profile, dyadic_frequencies, littlewood_paley, low_profile, lp_multiplier,
};
pub use multiplier::{
    apply_multiplier, derivative_multiplier, fractional_derivative, DerivativeKind, Multiplier,
};
pub use propagator::{
    dispersion, dispersion_table, linear_propagator, propagator_multiplier, Family,
};
