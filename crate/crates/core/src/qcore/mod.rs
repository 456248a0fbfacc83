//! State vectors, operators, phase estimation and spectra for exact
//! small-scale simulation.

mod eigen;
mod operator;
mod phase;
mod state;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use eigen::{eigenphases, eigenphases_of, phase_distance, signed_phase, MAX_DENSE_DIM};
pub use operator::{reflect_about, selective_phase_about, LinearMap, Operator};
pub use phase::{
    ancilla_count, binary_powers, controlled_powers, fourier_ancillas, hadamard_ancillas, phase_estimation,
    PhaseEstimationResult,
};
pub use state::{distance, inner, norm, phase_aligned_distance, Layout, Register, StateVector};

pub type CMatrix = DMatrix<Complex64>;

/// Tolerance on `|‖ψ‖ - 1|` for a valid state.
pub const NORM_TOL: f64 = 1e-10;

/// Default ceiling on amplitudes held by one simulation.
pub const DEFAULT_AMPLITUDE_CAP: usize = 1 << 28;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}
