use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};

use super::{CMatrix, LinearMap, StateVector};

/// Exact outcome distribution of a `t`-qubit phase-estimation circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseEstimationResult {
    pub t: u32,
    pub probabilities: Vec<f64>,
    /// Controlled-`U` invocations the circuit makes, `2^t - 1`.
    pub controlled_applications: u64,
}

impl PhaseEstimationResult {
    pub fn outcomes(&self) -> usize {
        self.probabilities.len()
    }

    /// Phase estimate `2πk / 2^t` for outcome `k`.
    pub fn phase(&self, outcome: usize) -> f64 {
        2.0 * PI * outcome as f64 / self.outcomes() as f64
    }

    pub fn most_likely(&self) -> usize {
        self.probabilities
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(k, _)| k)
    }

    /// Total probability of outcomes whose phase satisfies `pred`.
    pub fn mass_where(&self, mut pred: impl FnMut(f64) -> bool) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|&(k, _)| pred(self.phase(k)))
            .map(|(_, p)| p)
            .sum()
    }
}

/// Runs the textbook circuit (Hadamards, controlled `U^{2^j}`, inverse
/// Fourier transform) on `t` ancillas and `psi`, and returns the exact
/// measurement distribution.
///
/// After the controlled powers the joint state is `2^{-t/2} Σ_k |k⟩ U^k|ψ⟩`;
/// the vectors `U^k|ψ⟩` are generated by repeated application and the
/// inverse Fourier transform is taken per system component.
pub fn phase_estimation(
    u: &impl LinearMap,
    psi: &StateVector,
    t: u32,
    amplitude_cap: usize,
) -> Result<PhaseEstimationResult> {
    if t == 0 || t > 30 {
        return invalid(format!("ancilla count must be in 1..=30, got {t}"));
    }
    let dim = psi.dim();
    if u.dim() != dim {
        return invalid(format!("operator dimension {} vs state dimension {dim}", u.dim()));
    }
    let n = 1usize << t;
    let needed = n.saturating_mul(dim);
    if needed > amplitude_cap {
        return Err(Error::MemoryCap {
            what: "phase estimation",
            needed,
            cap: amplitude_cap,
        });
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); needed];
    let mut v = psi.amplitudes().to_vec();
    for k in 0..n {
        if k > 0 {
            v = u.apply(&v);
            let norm = super::state::norm(&v);
            if (norm - 1.0).abs() > 1e-8 {
                return Err(Error::NonUnitary((norm - 1.0).abs()));
            }
        }
        for (c, x) in v.iter().enumerate() {
            buf[c * n + k] = *x;
        }
    }
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / (n as f64 * n as f64);
    let mut probabilities = vec![0.0; n];
    for chunk in buf.chunks_exact(n) {
        for (p, x) in probabilities.iter_mut().zip(chunk) {
            *p += x.norm_sqr() * scale;
        }
    }
    Ok(PhaseEstimationResult {
        t,
        probabilities,
        controlled_applications: (n - 1) as u64,
    })
}

/// Ancillas for a phase estimate within `eps_pe` (radians) with failure
/// probability at most `p_f`:
/// `⌈log₂(2π/ε_pe)⌉ + ⌈log₂(2 + 1/(2 p_f))⌉`.
pub fn ancilla_count(eps_pe: f64, p_f: f64) -> Result<u32> {
    if !(eps_pe > 0.0 && eps_pe < 1.0) || !(p_f > 0.0 && p_f < 0.5) {
        return invalid(format!("need eps_pe in (0,1), p_f in (0,1/2), got {eps_pe}, {p_f}"));
    }
    let bits = (2.0 * PI / eps_pe).log2().ceil();
    let margin = (2.0 + 1.0 / (2.0 * p_f)).log2().ceil();
    Ok((bits + margin) as u32)
}

// Gate-level helpers for states laid out as `[ancilla (2^t)] ⊗ [system (dim)]`,
// flat index `a * dim + s`.

/// `H^{⊗t}` on the ancilla register.
pub fn hadamard_ancillas(amps: &mut [Complex64], t: u32, dim: usize) {
    let n = 1usize << t;
    debug_assert_eq!(amps.len(), n * dim);
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for a in block..block + h {
                for s in 0..dim {
                    let x = amps[a * dim + s];
                    let y = amps[(a + h) * dim + s];
                    amps[a * dim + s] = x + y;
                    amps[(a + h) * dim + s] = x - y;
                }
            }
        }
        h *= 2;
    }
    let scale = (n as f64).sqrt().recip();
    amps.iter_mut().for_each(|x| *x *= scale);
}

/// Quantum Fourier transform on the ancillas; `inverse` selects `QFT†`.
/// `QFT|j⟩ = 2^{-t/2} Σ_k e^{2πi jk/2^t} |k⟩`.
pub fn fourier_ancillas(amps: &mut [Complex64], t: u32, dim: usize, inverse: bool) {
    let n = 1usize << t;
    let mut planner = FftPlanner::<f64>::new();
    // QFT† matches the forward (negative exponent) FFT
    let fft = if inverse {
        planner.plan_fft_forward(n)
    } else {
        planner.plan_fft_inverse(n)
    };
    let scale = (n as f64).sqrt().recip();
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    for s in 0..dim {
        for a in 0..n {
            column[a] = amps[a * dim + s];
        }
        fft.process(&mut column);
        for a in 0..n {
            amps[a * dim + s] = column[a] * scale;
        }
    }
}

/// `Σ_k |k⟩⟨k| ⊗ U^k` built from `powers[j] = U^{2^j}` (or their adjoints).
pub fn controlled_powers(amps: &mut [Complex64], t: u32, dim: usize, powers: &[CMatrix], adjoint: bool) {
    let n = 1usize << t;
    let mut slice = vec![Complex64::new(0.0, 0.0); dim];
    for (j, p) in powers.iter().enumerate().take(t as usize) {
        let m = if adjoint { p.adjoint() } else { p.clone() };
        for a in (0..n).filter(|a| a >> j & 1 == 1) {
            slice.copy_from_slice(&amps[a * dim..(a + 1) * dim]);
            for (r, out) in amps[a * dim..(a + 1) * dim].iter_mut().enumerate() {
                *out = (0..dim).map(|c| m[(r, c)] * slice[c]).sum();
            }
        }
    }
}

/// `[U, U², U⁴, …, U^{2^{t-1}}]` by repeated squaring.
pub fn binary_powers(u: &CMatrix, t: u32) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(t as usize);
    let mut p = u.clone();
    for _ in 0..t {
        let next = &p * &p;
        out.push(p);
        p = next;
    }
    out
}
