//! Quantum samples `Σ √π(σ) |σ⟩`: exact preparation, approximate
//! reflections from phase estimation on the walk, and π/3 fixed-point
//! preparation along a schedule.
//!
//! Reflections built from a `b`-qubit phase estimation are simulated in a
//! compressed ancilla frame. On a walk eigenvector with phase `φ` the circuit
//! `C_φ = QFT† · diag(e^{ikφ}) · H^{⊗b}` acts on the ancillas only, and an
//! outcome-conditional phase `c₀|0⟩⟨0| + c(I − |0⟩⟨0|)` becomes
//! `c·I + (c₀ − c)|f_φ⟩⟨f_φ|` in the Hadamard-rotated ancilla basis, with
//! `f_φ = 2^{-b/2} Σ_k e^{-ikφ}|k⟩` and `|0^b⟩ ↦ f_0`. Every state reachable
//! from `f_0` therefore stays in `span{f_0, f_φ : φ a walk phase}`, whose
//! Gram matrix is a Dirichlet kernel. Simulating in an orthonormal basis of
//! that span is exact and independent of `b`.

use std::f64::consts::PI;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::markov::metropolis_chain;
use crate::model::{boltzmann, Schedule, System};
use crate::qcore::{
    binary_powers, controlled_powers, fourier_ancillas, hadamard_ancillas, inner, phase_aligned_distance,
    selective_phase_about, signed_phase, CMatrix, Layout, StateVector,
};
use crate::szegedy::{build_walk, walk_spectrum, WalkOperator, WalkSpectrum};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest ancilla count for a compressed reflection.
pub const MAX_REFLECTION_BITS: u32 = 40;

/// Largest ancilla count for which explicit `2^b` vectors are formed.
pub const MAX_LITERAL_BITS: u32 = 16;

const PHASE_MERGE_TOL: f64 = 1e-12;
const GRAM_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    Exact,
    Walk,
}

#[derive(Debug, Clone)]
pub struct QuantumSample {
    pub state: StateVector,
    pub mode: SampleMode,
    pub beta: f64,
    /// Phase-aligned distance from the ideal sample, when approximate.
    pub deviation: Option<f64>,
}

/// `Σ √π(σ)|σ⟩` from the exact Boltzmann weights.
pub fn exact_sample(system: &System, beta: f64) -> Result<QuantumSample> {
    let amps: Vec<f64> = boltzmann(system, beta)?.iter().map(|p| p.sqrt()).collect();
    Ok(QuantumSample {
        state: StateVector::from_real(Layout::new(&[("x", system.states())]), &amps)?,
        mode: SampleMode::Exact,
        beta,
        deviation: None,
    })
}

/// `Σ √π(x)|x⟩|0⟩` on the doubled register, the vector fixed by the walk.
pub fn lifted_sample(system: &System, beta: f64) -> Result<QuantumSample> {
    let d = system.states();
    let mut amps = vec![0.0; d * d];
    for (x, p) in boltzmann(system, beta)?.iter().enumerate() {
        amps[x * d] = p.sqrt();
    }
    Ok(QuantumSample {
        state: StateVector::from_real(Layout::new(&[("x", d), ("y", d)]), &amps)?,
        mode: SampleMode::Walk,
        beta,
        deviation: None,
    })
}

/// `|⟨a|b⟩|²`.
pub fn overlap_sq(a: &QuantumSample, b: &QuantumSample) -> Result<f64> {
    if a.state.dim() != b.state.dim() {
        return invalid("samples live on different registers");
    }
    Ok(a.state.inner(&b.state).norm_sqr())
}

/// Exact selective phase `ω|π⟩⟨π| + (I − |π⟩⟨π|)` about a sample.
pub fn selective_phase(sample: &QuantumSample, omega: Complex64) -> crate::qcore::Operator {
    selective_phase_about(sample.state.amplitudes(), omega)
}

/// Conditional phase applied between estimation and uncomputation:
/// `zero` on ancilla outcome 0, `rest` on every other outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AncillaPhase {
    pub zero: Complex64,
    pub rest: Complex64,
}

impl AncillaPhase {
    /// `−1` on every nonzero outcome: the approximate reflection.
    pub fn reflection() -> Self {
        Self { zero: ONE, rest: -ONE }
    }

    /// `ω` on outcome 0: the approximate selective phase.
    pub fn selective(omega: Complex64) -> Self {
        Self { zero: omega, rest: ONE }
    }

    pub fn adjoint(self) -> Self {
        Self {
            zero: self.zero.conj(),
            rest: self.rest.conj(),
        }
    }
}

/// `(1/N) Σ_{k<N} e^{ikx}`.
fn dirichlet(n: f64, x: f64) -> Complex64 {
    let x = signed_phase(x);
    let s = (x / 2.0).sin();
    if s.abs() < 1e-300 {
        return ONE;
    }
    Complex64::from_polar(1.0, (n - 1.0) * x / 2.0) * ((n * x / 2.0).sin() / (n * s))
}

/// Orthonormal coordinates for `span{f_φ}` over a fixed phase set.
#[derive(Debug, Clone)]
pub struct AncillaFrame {
    bits: u32,
    phases: Vec<f64>,
    /// `e_r = Σ_b f_{φ_b} T[b, r]`.
    transform: CMatrix,
}

impl AncillaFrame {
    pub fn new(bits: u32, phases: impl IntoIterator<Item = f64>) -> Result<Self> {
        if bits == 0 || bits > MAX_REFLECTION_BITS {
            return invalid(format!(
                "reflection ancillas must be in 1..={MAX_REFLECTION_BITS}, got {bits}"
            ));
        }
        let mut all: Vec<f64> = phases.into_iter().map(signed_phase).collect();
        all.push(0.0);
        all.sort_by(f64::total_cmp);
        let mut merged: Vec<f64> = Vec::with_capacity(all.len());
        for p in all {
            if merged.last().is_none_or(|&q| (p - q).abs() > PHASE_MERGE_TOL) {
                merged.push(p);
            }
        }
        let n = (1u64 << bits) as f64;
        let m = merged.len();
        let gram = CMatrix::from_fn(m, m, |a, b| dirichlet(n, merged[a] - merged[b]));
        let eig = SymmetricEigen::new(gram);
        let keep: Vec<usize> = (0..m).filter(|&i| eig.eigenvalues[i] > GRAM_TOL * m as f64).collect();
        let transform = CMatrix::from_fn(m, keep.len(), |b, r| {
            eig.eigenvectors[(b, keep[r])] / eig.eigenvalues[keep[r]].sqrt()
        });
        Ok(Self {
            bits,
            phases: merged,
            transform,
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Number of orthonormal coordinates, `K`.
    pub fn dim(&self) -> usize {
        self.transform.ncols()
    }

    /// Coordinates of (the projection of) `f_φ`.
    pub fn coords(&self, phase: f64) -> Vec<Complex64> {
        let n = (1u64 << self.bits) as f64;
        let g: Vec<Complex64> = self.phases.iter().map(|&p| dirichlet(n, p - phase)).collect();
        (0..self.dim())
            .map(|r| {
                (0..self.phases.len())
                    .map(|b| self.transform[(b, r)].conj() * g[b])
                    .sum()
            })
            .collect()
    }

    /// Coordinates of the ancilla state `|0^b⟩`.
    pub fn zero(&self) -> Vec<Complex64> {
        self.coords(0.0)
    }

    /// The computational-basis ancilla vector with these coordinates.
    pub fn embed(&self, coords: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.bits > MAX_LITERAL_BITS {
            return Err(Error::MemoryCap {
                what: "explicit ancilla register",
                needed: 1 << self.bits,
                cap: 1 << MAX_LITERAL_BITS,
            });
        }
        let n = 1usize << self.bits;
        let weights: Vec<Complex64> = (0..self.phases.len())
            .map(|b| (0..self.dim()).map(|r| self.transform[(b, r)] * coords[r]).sum())
            .collect();
        let scale = (n as f64).sqrt().recip();
        let mut out: Vec<Complex64> = (0..n)
            .map(|k| {
                self.phases
                    .iter()
                    .zip(&weights)
                    .map(|(&p, w)| w * Complex64::from_polar(scale, -(k as f64) * p))
                    .sum()
            })
            .collect();
        hadamard_ancillas(&mut out, self.bits, 1);
        Ok(out)
    }
}

/// Controlled-walk applications of one reflection: estimation plus
/// uncomputation, `2(2^b − 1)`.
pub fn reflection_queries(bits: u32) -> u64 {
    2 * ((1u64 << bits) - 1)
}

/// Error of a `b`-ancilla reflection on an eigenvector of phase `φ ≠ 0`:
/// `2|⟨f_φ|f_0⟩| ≤ 2 / (2^b sin(|φ|/2))`. Bounded by that expression at the
/// phase gap.
pub fn reflection_error_bound(bits: u32, phase_gap: f64) -> f64 {
    (2.0 / ((1u64 << bits) as f64 * (phase_gap / 2.0).sin())).min(2.0)
}

/// Fewest ancillas with [`reflection_error_bound`] at most `eps_r`.
pub fn reflection_bits(phase_gap: f64, eps_r: f64) -> Result<u32> {
    if !(phase_gap > 0.0 && phase_gap <= PI) || !(eps_r > 0.0) {
        return invalid(format!(
            "need phase gap in (0, π] and eps_r > 0, got {phase_gap}, {eps_r}"
        ));
    }
    let bits = (2.0 / (eps_r * (phase_gap / 2.0).sin())).log2().ceil().max(1.0) as u32;
    if bits > MAX_REFLECTION_BITS {
        return invalid(format!("reflection would need {bits} ancillas"));
    }
    Ok(bits)
}

/// Phase estimation on one walk, an ancilla-conditional phase, and
/// uncomputation, acting on `sample (D²) ⊗ frame (K)` with flat index
/// `s·K + a`.
#[derive(Debug, Clone)]
pub struct ApproxReflection {
    bits: u32,
    sample_dim: usize,
    frame_dim: usize,
    vectors: CMatrix,
    phase_coords: Vec<Vec<Complex64>>,
    zero_coords: Vec<Complex64>,
    lift: Vec<Complex64>,
}

impl ApproxReflection {
    pub fn new(walk: &WalkOperator, spectrum: &WalkSpectrum, frame: &AncillaFrame) -> Self {
        Self {
            bits: frame.bits(),
            sample_dim: walk.dim(),
            frame_dim: frame.dim(),
            vectors: spectrum.vectors.clone(),
            phase_coords: spectrum.phases.iter().map(|&p| frame.coords(p)).collect(),
            zero_coords: frame.zero(),
            lift: walk.lift().iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn dim(&self) -> usize {
        self.sample_dim * self.frame_dim
    }

    pub fn frame_dim(&self) -> usize {
        self.frame_dim
    }

    /// The walk's stationary lift, whose reflection this approximates.
    pub fn lift(&self) -> &[Complex64] {
        &self.lift
    }

    pub fn queries(&self) -> u64 {
        reflection_queries(self.bits)
    }

    pub fn apply(&self, v: &[Complex64], phase: AncillaPhase) -> Vec<Complex64> {
        let (n, k) = (self.sample_dim, self.frame_dim);
        debug_assert_eq!(v.len(), n * k);
        let delta = phase.zero - phase.rest;
        let mut out: Vec<Complex64> = v.iter().map(|x| phase.rest * x).collect();
        // components along the A+B eigenvectors, and the spectator remainder
        let mut spect = v.to_vec();
        for (j, g) in self.phase_coords.iter().enumerate() {
            let col = self.vectors.column(j);
            let mut c = vec![ZERO; k];
            for s in 0..n {
                let e = col[s].conj();
                if e != ZERO {
                    for a in 0..k {
                        c[a] += e * v[s * k + a];
                    }
                }
            }
            let proj = delta * inner(g, &c);
            for s in 0..n {
                let e = col[s];
                if e != ZERO {
                    for a in 0..k {
                        spect[s * k + a] -= e * c[a];
                        out[s * k + a] += e * proj * g[a];
                    }
                }
            }
        }
        let g0 = &self.zero_coords;
        for s in 0..n {
            let row = &spect[s * k..(s + 1) * k];
            let proj = delta * inner(g0, row);
            for a in 0..k {
                out[s * k + a] += proj * g0[a];
            }
        }
        out
    }

    /// `‖R̃(|u⟩|0^b⟩) − (R|u⟩)|0^b⟩‖` for every eigenvector `u` of the walk on
    /// `A + B`, with `R = 2|lift⟩⟨lift| − I`.
    pub fn errors(&self) -> Vec<f64> {
        let k = self.frame_dim;
        (0..self.vectors.ncols())
            .map(|j| {
                let u: Vec<Complex64> = self.vectors.column(j).iter().copied().collect();
                let input = kron(&u, &self.zero_coords);
                let out = self.apply(&input, AncillaPhase::reflection());
                let c = inner(&self.lift, &u) * 2.0;
                let target: Vec<Complex64> = self.lift.iter().zip(&u).map(|(l, x)| c * l - x).collect();
                let target = kron(&target, &self.zero_coords);
                debug_assert_eq!(target.len(), self.sample_dim * k);
                crate::qcore::distance(&out, &target)
            })
            .collect()
    }

    pub fn worst_error(&self) -> f64 {
        self.errors().into_iter().fold(0.0, f64::max)
    }
}

pub(crate) fn kron(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// Gate-level version of the same circuit on an explicit `b`-qubit ancilla
/// register, layout `ancilla (2^b) ⊗ sample`.
pub fn literal_phase_circuit(
    walk: &CMatrix,
    bits: u32,
    phase: AncillaPhase,
    state: &[Complex64],
) -> Result<Vec<Complex64>> {
    let dim = walk.nrows();
    if bits == 0 || bits > MAX_LITERAL_BITS {
        return invalid(format!("literal circuit supports 1..={MAX_LITERAL_BITS} ancillas"));
    }
    let n = 1usize << bits;
    if state.len() != n * dim {
        return invalid("state does not match ancilla ⊗ sample layout");
    }
    let powers = binary_powers(walk, bits);
    let mut amps = state.to_vec();
    hadamard_ancillas(&mut amps, bits, dim);
    controlled_powers(&mut amps, bits, dim, &powers, false);
    fourier_ancillas(&mut amps, bits, dim, true);
    for (i, a) in amps.iter_mut().enumerate() {
        *a *= if i < dim { phase.zero } else { phase.rest };
    }
    fourier_ancillas(&mut amps, bits, dim, false);
    controlled_powers(&mut amps, bits, dim, &powers, true);
    hadamard_ancillas(&mut amps, bits, dim);
    Ok(amps)
}

/// A selective phase about a fixed target state, exact or approximate.
pub trait PhaseOracle {
    fn apply_phase(&self, v: &[Complex64], omega: Complex64) -> Vec<Complex64>;
    /// Controlled-walk applications per call.
    fn walk_queries(&self) -> u64;
}

/// Exact `ω|π⟩⟨π| + (I − |π⟩⟨π|)` on the sample register, identity on a
/// trailing register of dimension `spectator`.
#[derive(Debug, Clone)]
pub struct ExactPhase {
    target: Vec<Complex64>,
    spectator: usize,
}

impl ExactPhase {
    pub fn new(target: &[Complex64], spectator: usize) -> Self {
        Self {
            target: target.to_vec(),
            spectator,
        }
    }
}

impl PhaseOracle for ExactPhase {
    fn apply_phase(&self, v: &[Complex64], omega: Complex64) -> Vec<Complex64> {
        let k = self.spectator;
        let mut c = vec![ZERO; k];
        for (s, t) in self.target.iter().enumerate() {
            for a in 0..k {
                c[a] += t.conj() * v[s * k + a];
            }
        }
        let mut out = v.to_vec();
        for (s, t) in self.target.iter().enumerate() {
            for a in 0..k {
                out[s * k + a] += (omega - 1.0) * t * c[a];
            }
        }
        out
    }

    fn walk_queries(&self) -> u64 {
        0
    }
}

impl PhaseOracle for ApproxReflection {
    fn apply_phase(&self, v: &[Complex64], omega: Complex64) -> Vec<Complex64> {
        self.apply(v, AncillaPhase::selective(omega))
    }

    fn walk_queries(&self) -> u64 {
        self.queries()
    }
}

/// Selective phases per stage at recursion depth `d`: `s(d) = 3 s(d−1) + 2`.
pub fn phases_per_stage(depth: u32) -> u64 {
    (0..depth).fold(0, |s, _| 3 * s + 2)
}

/// Smallest depth `≥ min_depth` for which a stage that starts with
/// infidelity at most `1/2` ends within `eps_s / stages` of its target.
/// After `d` levels the infidelity is at most `2^{-3^d}`, and a phase-aligned
/// distance is at most `sqrt(2 · infidelity)`.
pub fn required_depth(eps_s: f64, stages: usize, min_depth: u32) -> Result<u32> {
    if !(eps_s > 0.0 && eps_s < 1.0) {
        return invalid(format!("eps_S must lie in (0, 1), got {eps_s}"));
    }
    let target = eps_s / stages.max(1) as f64;
    let mut d = min_depth.max(1);
    while (2.0 * 0.5f64.powf(3f64.powi(d as i32))).sqrt() > target {
        d += 1;
        if d > 8 {
            return invalid("fixed-point depth would exceed 8");
        }
    }
    Ok(d)
}

struct Counter {
    phases: u64,
    queries: u64,
}

fn recurse(
    level: u32,
    v: Vec<Complex64>,
    source: &dyn PhaseOracle,
    target: &dyn PhaseOracle,
    adjoint: bool,
    count: &mut Counter,
) -> Vec<Complex64> {
    if level == 0 {
        return v;
    }
    let omega = Complex64::from_polar(1.0, PI / 3.0);
    let call = |o: &dyn PhaseOracle, v: &[Complex64], w: Complex64, count: &mut Counter| {
        count.phases += 1;
        count.queries += o.walk_queries();
        o.apply_phase(v, w)
    };
    if adjoint {
        let v = recurse(level - 1, v, source, target, true, count);
        let v = call(source, &v, omega.conj(), count);
        let v = recurse(level - 1, v, source, target, false, count);
        let v = call(target, &v, omega.conj(), count);
        recurse(level - 1, v, source, target, true, count)
    } else {
        let v = recurse(level - 1, v, source, target, false, count);
        let v = call(target, &v, omega, count);
        let v = recurse(level - 1, v, source, target, true, count);
        let v = call(source, &v, omega, count);
        recurse(level - 1, v, source, target, false, count)
    }
}

/// `A_d|v⟩` for `A_0 = I`, `A_{m+1} = A_m S_s(ω) A_m† S_t(ω) A_m`,
/// `ω = e^{iπ/3}`. Returns the state, selective phases used and walk
/// queries.
pub fn fixed_point_stage(
    v: Vec<Complex64>,
    source: &dyn PhaseOracle,
    target: &dyn PhaseOracle,
    depth: u32,
) -> (Vec<Complex64>, u64, u64) {
    let mut count = Counter { phases: 0, queries: 0 };
    let out = recurse(depth, v, source, target, false, &mut count);
    (out, count.phases, count.queries)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct StageReport {
    pub beta: f64,
    pub beta_next: f64,
    /// `|⟨π_i|π_{i+1}⟩|²`.
    pub overlap_sq: f64,
    pub selective_phases: u64,
    pub walk_queries: u64,
    /// Phase-aligned distance from the ideal target after the stage.
    pub deviation: f64,
}

/// Result of preparing `|π_i⟩` along the schedule.
#[derive(Debug, Clone)]
pub struct Preparation {
    pub sample: QuantumSample,
    pub depth: u32,
    pub stages: Vec<StageReport>,
    pub selective_phases: u64,
    pub walk_queries: u64,
}

/// Runs the fixed-point recursion stage by stage from `targets[0]` to
/// `targets[upto]`. `targets[i]` is the ideal state for `betas[i]`, already
/// tensored with whatever trailing register the oracles expect.
fn prepare_along(
    targets: &[Vec<Complex64>],
    oracles: &[&dyn PhaseOracle],
    betas: &[f64],
    upto: usize,
    depth: u32,
) -> Result<(Vec<Complex64>, Vec<StageReport>)> {
    let mut v = targets[0].clone();
    let mut stages = Vec::new();
    for i in 0..upto {
        if betas[i] == betas[i + 1] {
            continue;
        }
        let overlap = inner(&targets[i], &targets[i + 1]).norm_sqr();
        if overlap < 0.5 - 1e-12 {
            return Err(Error::Schedule(format!(
                "stage {i} overlap {overlap} is below 1/2; the schedule's ratio is too small"
            )));
        }
        let (out, phases, queries) = fixed_point_stage(v, oracles[i], oracles[i + 1], depth);
        v = out;
        stages.push(StageReport {
            beta: betas[i],
            beta_next: betas[i + 1],
            overlap_sq: overlap,
            selective_phases: phases,
            walk_queries: queries,
            deviation: phase_aligned_distance(&v, &targets[i + 1]),
        });
    }
    Ok((v, stages))
}

fn finish(
    state: Vec<Complex64>,
    layout: Layout,
    ideal: &[Complex64],
    mode: SampleMode,
    beta: f64,
    depth: u32,
    stages: Vec<StageReport>,
) -> Result<Preparation> {
    let deviation = phase_aligned_distance(&state, ideal);
    Ok(Preparation {
        sample: QuantumSample {
            state: StateVector::normalized(layout, state)?,
            mode,
            beta,
            deviation: Some(deviation),
        },
        depth,
        selective_phases: stages.iter().map(|s| s.selective_phases).sum(),
        walk_queries: stages.iter().map(|s| s.walk_queries).sum(),
        stages,
    })
}

/// Fixed-point preparation of `|π_upto⟩` with exact selective phases.
pub fn prepare_exact(system: &System, schedule: &Schedule, upto: usize, depth: u32) -> Result<Preparation> {
    if upto > schedule.len() {
        return invalid(format!("level {upto} is beyond the schedule"));
    }
    let targets: Vec<Vec<Complex64>> = schedule.betas()[..=upto]
        .iter()
        .map(|&b| exact_sample(system, b).map(|s| s.state.into_amplitudes()))
        .collect::<Result<_>>()?;
    let phases: Vec<ExactPhase> = targets.iter().map(|t| ExactPhase::new(t, 1)).collect();
    let oracles: Vec<&dyn PhaseOracle> = phases.iter().map(|p| p as &dyn PhaseOracle).collect();
    let (state, stages) = prepare_along(&targets, &oracles, schedule.betas(), upto, depth)?;
    finish(
        state,
        Layout::new(&[("x", system.states())]),
        &targets[upto],
        SampleMode::Exact,
        schedule.betas()[upto],
        depth,
        stages,
    )
}

/// Walks for every inverse temperature of a schedule, their spectra, and
/// approximate reflections sharing one compressed ancilla register.
#[derive(Debug, Clone)]
pub struct WalkFamily {
    states: usize,
    betas: Vec<f64>,
    spectra: Vec<WalkSpectrum>,
    reflections: Vec<ApproxReflection>,
    frame: AncillaFrame,
}

impl WalkFamily {
    /// Smallest phase gap over the walks of a schedule, computed before the
    /// ancilla count is fixed.
    pub fn min_phase_gap(system: &System, schedule: &Schedule) -> Result<f64> {
        let mut gap = PI;
        for &b in schedule.betas() {
            let walk = build_walk(&metropolis_chain(system, b)?)?;
            gap = gap.min(walk_spectrum(&walk)?.gap);
        }
        Ok(gap)
    }

    pub fn new(system: &System, schedule: &Schedule, bits: u32) -> Result<Self> {
        let mut walks = Vec::new();
        let mut spectra = Vec::new();
        for &b in schedule.betas() {
            let walk = build_walk(&metropolis_chain(system, b)?)?;
            spectra.push(walk_spectrum(&walk)?);
            walks.push(walk);
        }
        let frame = AncillaFrame::new(bits, spectra.iter().flat_map(|s| s.phases.clone()))?;
        let reflections = walks
            .iter()
            .zip(&spectra)
            .map(|(w, s)| ApproxReflection::new(w, s, &frame))
            .collect();
        Ok(Self {
            states: system.states(),
            betas: schedule.betas().to_vec(),
            spectra,
            reflections,
            frame,
        })
    }

    pub fn frame(&self) -> &AncillaFrame {
        &self.frame
    }

    pub fn spectra(&self) -> &[WalkSpectrum] {
        &self.spectra
    }

    pub fn reflection(&self, level: usize) -> &ApproxReflection {
        &self.reflections[level]
    }

    pub fn bits(&self) -> u32 {
        self.frame.bits()
    }

    /// Amplitudes held by one state: `D² · K`.
    pub fn state_dim(&self) -> usize {
        self.states * self.states * self.frame.dim()
    }

    pub fn layout(&self) -> Layout {
        Layout::new(&[("x", self.states), ("y", self.states), ("ancilla", self.frame.dim())])
    }

    /// `lift_i ⊗ |0^b⟩`.
    pub fn ideal(&self, level: usize) -> Vec<Complex64> {
        kron(self.reflections[level].lift(), &self.frame.zero())
    }

    /// Fixed-point preparation of `|π_upto⟩|0^b⟩` using approximate selective
    /// phases from each walk.
    pub fn prepare(&self, upto: usize, depth: u32) -> Result<Preparation> {
        if upto >= self.betas.len() {
            return invalid(format!("level {upto} is beyond the schedule"));
        }
        let targets: Vec<Vec<Complex64>> = (0..=upto).map(|i| self.ideal(i)).collect();
        let oracles: Vec<&dyn PhaseOracle> = self.reflections.iter().map(|r| r as &dyn PhaseOracle).collect();
        let (state, stages) = prepare_along(&targets, &oracles, &self.betas, upto, depth)?;
        finish(
            state,
            self.layout(),
            &targets[upto],
            SampleMode::Walk,
            self.betas[upto],
            depth,
            stages,
        )
    }
}
