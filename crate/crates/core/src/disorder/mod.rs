//! Smooth time-dependent disorder and ensemble statistics.

mod ensemble;
mod noise;
mod spline;

pub use ensemble::{ensemble_min_gaps, mean_stderr, run_ensemble, EnsembleStats};
pub use noise::{
    apply_disorder, curve_count, realization_rng, sample_noise, DisorderKind, DisorderSpec, Disordered, NoiseCurve,
};
pub use spline::NaturalSpline;
