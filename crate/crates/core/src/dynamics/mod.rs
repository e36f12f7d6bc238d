//! Time evolution, observables and adiabaticity diagnostics.

mod adiabatic;
mod bloch;
mod evolve;
mod observables;
mod schedule;

pub use adiabatic::{adiabatic_prediction, adiabaticity_ratio, AdiabaticPrediction, level_history, min_gap, nonadiabatic_coupling, Coupling, DEGENERATE_GAP};
pub use bloch::{bloch_evolve, bloch_vector, state_from_bloch, two_level_hamiltonian, BlochState};
pub use evolve::{
    evolve, evolve_columns, evolve_hermitian, real_state, sample_steps, ColumnTrajectory, Drive, StateVector,
    StaticPropagator, Trajectory, NORM_FAILURE,
};
pub use observables::{
    density_matrix, energy, ensemble_entropy, fidelity, phase_aligned, von_neumann_entropy, wrap_phase,
};
pub use schedule::{Curve, Ramp, Schedule};
