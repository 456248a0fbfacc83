use std::f64::consts::PI;

use nalgebra::Schur;

use crate::error::{Error, Result};

use super::{CMatrix, Operator};

/// Dimension above which a dense spectral decomposition is refused.
pub const MAX_DENSE_DIM: usize = 2048;

/// Eigenvalues of a unitary from its complex Schur form, ascending by phase
/// in `[0, 2π)`.
pub fn eigenphases(op: &Operator) -> Result<Vec<f64>> {
    let n = op.dim();
    if n > MAX_DENSE_DIM {
        return Err(Error::MemoryCap {
            what: "dense eigendecomposition",
            needed: n * n,
            cap: MAX_DENSE_DIM * MAX_DENSE_DIM,
        });
    }
    eigenphases_of(op.to_dense())
}

pub fn eigenphases_of(m: CMatrix) -> Result<Vec<f64>> {
    let values = Schur::try_new(m, 1e-14, 10_000)
        .ok_or_else(|| Error::Spectral("Schur iteration did not converge".into()))?
        .eigenvalues()
        .ok_or_else(|| Error::Spectral("Schur form is not triangular".into()))?;
    let mut phases: Vec<f64> = values
        .iter()
        .map(|z| {
            let a = z.arg();
            if a < 0.0 {
                a + 2.0 * PI
            } else {
                a
            }
        })
        .map(|a| if a >= 2.0 * PI { 0.0 } else { a })
        .collect();
    phases.sort_by(f64::total_cmp);
    Ok(phases)
}

/// Representative of `phase` in `(-π, π]`.
pub fn signed_phase(phase: f64) -> f64 {
    let p = phase.rem_euclid(2.0 * PI);
    if p > PI {
        p - 2.0 * PI
    } else {
        p
    }
}

/// Circular distance between two phases.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    signed_phase(a - b).abs()
}
