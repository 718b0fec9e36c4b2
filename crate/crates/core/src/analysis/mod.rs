//! Norms, decay fits and the inequality harness.

mod corpus;
mod estimates;
mod fit;
mod inequality;
mod mixed;
mod norm;

pub use corpus::{corpus_sample, modulated_gaussian, random_phase, sample_rng, SampleKind};
pub use estimates::{
    dispersive_ratio, kato_smoothing_ratio, space_time_ratio, strichartz_ratio, DispersiveRatio,
    KatoResult, StrichartzPair, TimeGrid,
};
pub use fit::{decay_fit, DecayFit};
pub use inequality::{
    calibrated_check, commutator_check, inequality_corpus, lorentz_embedding_check,
    lorentz_holder_check, InequalityEntry, InequalityForm, InequalityReport,
};
pub use mixed::{mixed_norm, mixed_norm_samples, trapezoid_weights};
pub use norm::{
    dual_exponent, norm, sobolev, weighted_lebesgue, weighted_lorentz, MixedOrder, NormSpec,
};
