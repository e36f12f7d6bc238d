//! Sine-cosine ("Matryoshka") topological chains.
//!
//! Lattice construction and the squaring / square-root angle recursion live in
//! [`lattice`]; spectra, Bloch bands and edge-state detection in [`spectral`];
//! time evolution and adiabaticity diagnostics in [`dynamics`]; smooth
//! time-dependent disorder and ensembles in [`disorder`]; and the transfer,
//! braiding and memory experiments in [`protocols`].
//!
//! Units: ħ = 1 and the hopping scale defaults to 1.

pub mod disorder;
pub mod dynamics;
mod error;
pub mod exec;
pub mod lattice;
mod linalg;
pub mod protocols;
pub mod spectral;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};
pub use num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
