//! Ratio estimation by phase estimation on `G = (2|ψ⟩⟨ψ| − I)(2P − I)`,
//! median boosting, product composition, and the full pipelines.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::classical::estimator_y;
use crate::error::{invalid, Result};
use crate::model::{exact_partition, exact_partition_unshifted, Schedule, System};
use crate::qcore::{
    ancilla_count, phase_estimation, reflect_about, LinearMap, Operator, PhaseEstimationResult, StateVector,
    DEFAULT_AMPLITUDE_CAP,
};
use crate::qprep::{
    exact_sample, kron, reflection_bits, reflection_queries, required_depth, AncillaPhase, ApproxReflection,
    QuantumSample, WalkFamily,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Failure probability allowed to a single phase estimation.
pub const PHASE_FAILURE: f64 = 1.0 / 8.0;

/// State-preparation accuracy used in walk mode.
pub const WALK_EPS_S: f64 = 1.0 / 32.0;

/// Contracted within-band mass of one estimation: `7/8` with perfect samples,
/// less `2ε_S` for state error and `2/32` for reflection error in walk mode.
pub fn band_mass_floor(mode: Mode) -> f64 {
    match mode {
        Mode::Perfect => 1.0 - PHASE_FAILURE,
        Mode::Walk => 1.0 - PHASE_FAILURE - 2.0 * WALK_EPS_S - 2.0 / 32.0,
    }
}

/// Minimum fixed-point depth in walk mode.
pub const WALK_MIN_DEPTH: u32 = 2;

/// The rotation `V` with 2×2 blocks `[[√y, √(1−y)], [−√(1−y), √y]]`
/// controlled on the system state, so `V|σ⟩|0⟩ = |σ⟩(√y|0⟩ − √(1−y)|1⟩)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableRotation {
    y: Vec<f64>,
}

pub fn build_rotation(system: &System, beta_i: f64, beta_next: f64) -> Result<ObservableRotation> {
    if !(beta_next >= beta_i) || beta_i < 0.0 {
        return invalid(format!("need 0 <= beta_i <= beta_next, got {beta_i}, {beta_next}"));
    }
    Ok(ObservableRotation {
        y: (0..system.states())
            .map(|s| estimator_y(system, beta_i, beta_next, s))
            .collect(),
    })
}

impl ObservableRotation {
    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn block(&self, state: usize) -> [[f64; 2]; 2] {
        let a = self.y[state].sqrt();
        let b = (1.0 - self.y[state]).max(0.0).sqrt();
        [[a, b], [-b, a]]
    }

    /// Applies `V` (or `V†`) to amplitudes laid out as
    /// `x (D) ⊗ middle ⊗ q (2) ⊗ trailing`.
    pub fn apply(&self, v: &mut [Complex64], middle: usize, trailing: usize, adjoint: bool) {
        let d = self.y.len();
        debug_assert_eq!(v.len(), d * middle * 2 * trailing);
        for x in 0..d {
            let [[a, b], [c, e]] = self.block(x);
            let (b, c) = if adjoint { (c, b) } else { (b, c) };
            for m in 0..middle {
                let base = (x * middle + m) * 2 * trailing;
                for t in 0..trailing {
                    let i0 = base + t;
                    let i1 = base + trailing + t;
                    let (v0, v1) = (v[i0], v[i1]);
                    v[i0] = v0 * a + v1 * b;
                    v[i1] = v0 * c + v1 * e;
                }
            }
        }
    }

    /// Dense `V` on `x ⊗ q`.
    pub fn to_operator(&self) -> Operator {
        let n = 2 * self.y.len();
        let mut m = crate::qcore::CMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![ZERO; n];
            e[j] = Complex64::new(1.0, 0.0);
            self.apply(&mut e, 1, 1, false);
            m.column_mut(j).iter_mut().zip(e).for_each(|(a, b)| *a = b);
        }
        Operator::Dense(m)
    }

    /// `ψ = V(|π⟩|0⟩)` for a sample on the system register.
    pub fn rotate_sample(&self, sample: &QuantumSample) -> Result<StateVector> {
        if sample.state.dim() != self.y.len() {
            return invalid("sample does not live on the system register");
        }
        let mut amps = kron(sample.state.amplitudes(), &[Complex64::new(1.0, 0.0), ZERO]);
        self.apply(&mut amps, 1, 1, false);
        StateVector::new(crate::qcore::Layout::new(&[("x", self.y.len()), ("q", 2)]), amps)
    }
}

/// `2P − I` with `P` projecting the estimator qubit (stride `trailing`) onto `|0⟩`.
pub fn projector_reflection(outer: usize, trailing: usize) -> Operator {
    let mut d = Vec::with_capacity(outer * 2 * trailing);
    for _ in 0..outer {
        d.extend(std::iter::repeat_n(Complex64::new(1.0, 0.0), trailing));
        d.extend(std::iter::repeat_n(Complex64::new(-1.0, 0.0), trailing));
    }
    Operator::Diagonal(d)
}

/// `G = (2|ψ⟩⟨ψ| − I)(2P − I)` for `ψ` on `x ⊗ q`.
pub fn grover_rotation(psi: &StateVector) -> Operator {
    Operator::Product(vec![
        reflect_about(psi.amplitudes()),
        projector_reflection(psi.dim() / 2, 1),
    ])
}

/// `α′ = (1 + cos θ′)/2`; `θ′` and `2π − θ′` give the same value.
pub fn alpha_from_phase(phase: f64) -> f64 {
    (1.0 + phase.cos()) / 2.0
}

/// Exact outcome distribution of one ratio estimation.
#[derive(Debug, Clone)]
pub struct RatioDistribution {
    pub phase: PhaseEstimationResult,
    pub alpha_exact: f64,
    pub eps_pe: f64,
}

impl RatioDistribution {
    pub fn from_phase(phase: PhaseEstimationResult, alpha_exact: f64, eps_pe: f64) -> Self {
        Self {
            phase,
            alpha_exact,
            eps_pe,
        }
    }

    /// Probability that `α′` lands in `[(1−ε_pe)α, (1+ε_pe)α]`.
    pub fn within_band_mass(&self) -> f64 {
        let (lo, hi) = (
            (1.0 - self.eps_pe) * self.alpha_exact,
            (1.0 + self.eps_pe) * self.alpha_exact,
        );
        self.phase.mass_where(|p| {
            let a = alpha_from_phase(p);
            a >= lo && a <= hi
        })
    }

    /// One measured estimate.
    pub fn draw(&self, rng: &mut impl Rng) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let probs = &self.phase.probabilities;
        let mut outcome = probs.len() - 1;
        for (k, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                outcome = k;
                break;
            }
        }
        alpha_from_phase(self.phase.phase(outcome))
    }
}

/// Phase estimation of `G` on `ψ = V(|π⟩|0⟩)` with perfect samples.
pub fn estimate_ratio_quantum(
    sample: &QuantumSample,
    rotation: &ObservableRotation,
    alpha_exact: f64,
    eps_pe: f64,
    amplitude_cap: usize,
) -> Result<RatioDistribution> {
    let t = ancilla_count(eps_pe, PHASE_FAILURE)?;
    let psi = rotation.rotate_sample(sample)?;
    let g = grover_rotation(&psi);
    Ok(RatioDistribution::from_phase(
        phase_estimation(&g, &psi, t, amplitude_cap)?,
        alpha_exact,
        eps_pe,
    ))
}

/// Runs `k = ⌈8 ln(1/δ)⌉` give a failure probability of at most
/// `exp(−k/8) ≤ δ` when each run fails with probability at most `1/4`.
pub fn median_runs(delta_boost: f64) -> Result<usize> {
    if !(delta_boost > 0.0 && delta_boost < 1.0) {
        return invalid(format!("delta must lie in (0, 1), got {delta_boost}"));
    }
    Ok((8.0 * (1.0 / delta_boost).ln()).ceil() as usize)
}

/// Median of `k` runs; the mean of the two middle values when `k` is even.
pub fn power_median(k: usize, mut run: impl FnMut() -> f64) -> f64 {
    let mut values: Vec<f64> = (0..k.max(1)).map(|_| run()).collect();
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// `z0 · Π Q_i`.
pub fn compose_product(estimates: &[f64], z0: f64) -> f64 {
    estimates.iter().fold(z0, |acc, q| acc * q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Perfect,
    Walk,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "perfect" => Ok(Mode::Perfect),
            "walk" => Ok(Mode::Walk),
            other => Err(format!("unknown mode {other:?}, expected perfect or walk")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub epsilon: f64,
    pub levels: usize,
    /// `ε/(2ℓ)`.
    pub eps_pe: f64,
    /// `1/(4ℓ)`.
    pub delta_boost: f64,
    pub p_f: f64,
    /// Phase-estimation ancillas.
    pub t: u32,
    /// Runs per median.
    pub k: usize,
    pub amplitude_cap: usize,
    pub walk: Option<WalkConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkConfig {
    pub eps_s: f64,
    pub depth: u32,
    /// Reflection accuracy asked for by state preparation, `ε_S/(8ℓ3^depth)`.
    pub eps_r_prep: f64,
    /// Reflection accuracy asked for by estimation, `ε_pe/32`.
    pub eps_r_estimate: f64,
    pub min_phase_gap: f64,
    /// Ancillas per reflection, enough for both accuracies.
    pub reflection_bits: u32,
}

impl PipelineConfig {
    pub fn perfect(epsilon: f64, levels: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return invalid(format!("epsilon must lie in (0, 1), got {epsilon}"));
        }
        let l = levels.max(1) as f64;
        let eps_pe = epsilon / (2.0 * l);
        let delta_boost = 1.0 / (4.0 * l);
        Ok(Self {
            mode: Mode::Perfect,
            epsilon,
            levels,
            eps_pe,
            delta_boost,
            p_f: PHASE_FAILURE,
            t: ancilla_count(eps_pe, PHASE_FAILURE)?,
            k: median_runs(delta_boost)?,
            amplitude_cap: DEFAULT_AMPLITUDE_CAP,
            walk: None,
        })
    }

    /// Walk-mode parameters for a schedule whose walks have smallest phase
    /// gap `min_phase_gap`.
    pub fn walk(epsilon: f64, levels: usize, min_phase_gap: f64) -> Result<Self> {
        let mut c = Self::perfect(epsilon, levels)?;
        let depth = required_depth(WALK_EPS_S, levels, WALK_MIN_DEPTH)?;
        let l = levels.max(1) as f64;
        let eps_r_prep = WALK_EPS_S / (8.0 * l * 3f64.powi(depth as i32));
        let eps_r_estimate = c.eps_pe / 32.0;
        c.mode = Mode::Walk;
        c.walk = Some(WalkConfig {
            eps_s: WALK_EPS_S,
            depth,
            eps_r_prep,
            eps_r_estimate,
            min_phase_gap,
            reflection_bits: reflection_bits(min_phase_gap, eps_r_prep.min(eps_r_estimate))?,
        });
        Ok(c)
    }

    pub fn for_mode(mode: Mode, system: &System, schedule: &Schedule, epsilon: f64) -> Result<Self> {
        match mode {
            Mode::Perfect => Self::perfect(epsilon, schedule.len()),
            Mode::Walk => Self::walk(epsilon, schedule.len(), WalkFamily::min_phase_gap(system, schedule)?),
        }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.amplitude_cap = cap;
        self
    }

    /// Controlled applications of `G` per estimation run.
    pub fn grover_applications(&self) -> u64 {
        (1u64 << self.t) - 1
    }
}

/// Resource counters; the currency in which the schemes are compared.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct QueryLedger {
    pub controlled_walk: u64,
    /// Controlled reflections about `ψ` (one per application of `G`).
    pub controlled_reflections: u64,
    pub selective_phases: u64,
    pub samples_prepared: u64,
    pub classical_chain_steps: u64,
}

impl std::ops::AddAssign for QueryLedger {
    fn add_assign(&mut self, o: Self) {
        self.controlled_walk += o.controlled_walk;
        self.controlled_reflections += o.controlled_reflections;
        self.selective_phases += o.selective_phases;
        self.samples_prepared += o.samples_prepared;
        self.classical_chain_steps += o.classical_chain_steps;
    }
}

impl std::iter::Sum for QueryLedger {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |mut a, b| {
            a += b;
            a
        })
    }
}

/// Ledger of one level: `k` runs, each preparing a sample and applying `G`
/// `2^t − 1` times.
pub fn level_ledger(config: &PipelineConfig, prep_phases: u64, prep_walk_queries: u64) -> QueryLedger {
    let k = config.k as u64;
    let g = config.grover_applications();
    let walk_per_g = config
        .walk
        .as_ref()
        .map_or(0, |w| reflection_queries(w.reflection_bits));
    QueryLedger {
        controlled_walk: k * (prep_walk_queries + g * walk_per_g),
        controlled_reflections: k * g,
        selective_phases: k * prep_phases,
        samples_prepared: k,
        classical_chain_steps: 0,
    }
}

/// Walk-mode `G`: the reflection about `ψ` is `V · (R̃ ⊕ −I) · V†`, with `R̃`
/// the approximate reflection on the `q = 0` branch. Layout
/// `x ⊗ y ⊗ q ⊗ ancilla frame`.
struct WalkGrover<'a> {
    rotation: &'a ObservableRotation,
    reflection: &'a ApproxReflection,
    states: usize,
}

impl LinearMap for WalkGrover<'_> {
    fn dim(&self) -> usize {
        self.states * self.states * 2 * self.reflection.frame_dim()
    }

    fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let k = self.reflection.frame_dim();
        let n = self.states * self.states;
        let mut w = v.to_vec();
        for s in 0..n {
            for a in 0..k {
                w[(s * 2 + 1) * k + a] = -w[(s * 2 + 1) * k + a];
            }
        }
        self.rotation.apply(&mut w, self.states, k, true);
        let mut branch = vec![ZERO; n * k];
        for s in 0..n {
            branch[s * k..(s + 1) * k].copy_from_slice(&w[s * 2 * k..(s * 2 + 1) * k]);
        }
        let reflected = self.reflection.apply(&branch, AncillaPhase::reflection());
        for s in 0..n {
            w[s * 2 * k..(s * 2 + 1) * k].copy_from_slice(&reflected[s * k..(s + 1) * k]);
            for a in 0..k {
                w[(s * 2 + 1) * k + a] = -w[(s * 2 + 1) * k + a];
            }
        }
        self.rotation.apply(&mut w, self.states, k, false);
        w
    }
}

/// Everything fixed about one level before any randomness is drawn.
#[derive(Debug, Clone)]
pub struct LevelPlan {
    pub beta: f64,
    pub beta_next: f64,
    pub alpha_exact: f64,
    pub distribution: RatioDistribution,
    pub ledger: QueryLedger,
    /// Distance of the prepared sample from the ideal one (walk mode).
    pub prep_deviation: Option<f64>,
}

/// Exact per-level outcome distributions; [`QuantumPlan::run`] draws from them.
#[derive(Debug, Clone)]
pub struct QuantumPlan {
    pub config: PipelineConfig,
    pub levels: Vec<LevelPlan>,
    z0: f64,
    unshift: f64,
    pub exact_z: f64,
}

pub fn plan_quantum(system: &System, schedule: &Schedule, config: PipelineConfig) -> Result<QuantumPlan> {
    let alphas = schedule.ratios(system)?;
    let levels = match config.mode {
        Mode::Perfect => plan_perfect(system, schedule, &config, &alphas)?,
        Mode::Walk => plan_walk(system, schedule, &config, &alphas)?,
    };
    Ok(QuantumPlan {
        z0: system.states() as f64,
        unshift: system.unshift_factor(schedule.beta_final())?,
        exact_z: exact_partition_unshifted(system, schedule.beta_final())?,
        config,
        levels,
    })
}

fn plan_perfect(
    system: &System,
    schedule: &Schedule,
    config: &PipelineConfig,
    alphas: &[f64],
) -> Result<Vec<LevelPlan>> {
    schedule
        .steps()
        .zip(alphas)
        .map(|((b0, b1), &alpha)| {
            let sample = exact_sample(system, b0)?;
            let rotation = build_rotation(system, b0, b1)?;
            let distribution = estimate_ratio_quantum(&sample, &rotation, alpha, config.eps_pe, config.amplitude_cap)?;
            Ok(LevelPlan {
                beta: b0,
                beta_next: b1,
                alpha_exact: alpha,
                distribution,
                ledger: level_ledger(config, 0, 0),
                prep_deviation: None,
            })
        })
        .collect()
}

fn plan_walk(system: &System, schedule: &Schedule, config: &PipelineConfig, alphas: &[f64]) -> Result<Vec<LevelPlan>> {
    let walk = config.walk.as_ref().expect("walk configuration present in walk mode");
    let family = WalkFamily::new(system, schedule, walk.reflection_bits)?;
    let d = system.states();
    let k = family.frame().dim();
    let dim = family.state_dim() * 2;
    let needed = dim.saturating_mul(1usize << config.t);
    if needed > config.amplitude_cap {
        return Err(crate::Error::MemoryCap {
            what: "walk-mode phase estimation",
            needed,
            cap: config.amplitude_cap,
        });
    }
    schedule
        .steps()
        .zip(alphas)
        .enumerate()
        .map(|(i, ((b0, b1), &alpha))| {
            let prep = family.prepare(i, walk.depth)?;
            let rotation = build_rotation(system, b0, b1)?;
            let prepared = prep.sample.state.amplitudes();
            let mut psi = vec![ZERO; dim];
            for s in 0..d * d {
                psi[s * 2 * k..(s * 2 + 1) * k].copy_from_slice(&prepared[s * k..(s + 1) * k]);
            }
            rotation.apply(&mut psi, d, k, false);
            let layout = crate::qcore::Layout::new(&[("x", d), ("y", d), ("q", 2), ("ancilla", k)]);
            let psi = StateVector::normalized(layout, psi)?;
            let g = WalkGrover {
                rotation: &rotation,
                reflection: family.reflection(i),
                states: d,
            };
            let phase = phase_estimation(&g, &psi, config.t, config.amplitude_cap)?;
            Ok(LevelPlan {
                beta: b0,
                beta_next: b1,
                alpha_exact: alpha,
                distribution: RatioDistribution::from_phase(phase, alpha, config.eps_pe),
                ledger: level_ledger(config, prep.selective_phases, prep.walk_queries),
                prep_deviation: prep.sample.deviation,
            })
        })
        .collect()
}

/// One end-to-end estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumEstimate {
    pub value: f64,
    pub level_estimates: Vec<f64>,
    pub ledger: QueryLedger,
}

impl QuantumPlan {
    pub fn ledger(&self) -> QueryLedger {
        self.levels.iter().map(|l| l.ledger).sum()
    }

    /// Draws `k` outcomes per level, takes medians, and composes.
    pub fn run(&self, rng: &mut impl Rng) -> QuantumEstimate {
        let level_estimates: Vec<f64> = self
            .levels
            .iter()
            .map(|l| power_median(self.config.k, || l.distribution.draw(rng)))
            .collect();
        QuantumEstimate {
            value: compose_product(&level_estimates, self.z0) * self.unshift,
            level_estimates,
            ledger: self.ledger(),
        }
    }

    pub fn report(&self, estimate: &QuantumEstimate, seed: u64) -> RunReport {
        RunReport {
            mode: self.config.mode,
            estimate: estimate.value,
            exact_z: self.exact_z,
            relative_error: (estimate.value - self.exact_z).abs() / self.exact_z,
            per_level: self
                .levels
                .iter()
                .zip(&estimate.level_estimates)
                .map(|(l, &e)| LevelReport {
                    beta: l.beta,
                    beta_next: l.beta_next,
                    alpha_exact: l.alpha_exact,
                    estimate: e,
                    within_band_mass: l.distribution.within_band_mass(),
                    t: self.config.t,
                    k: self.config.k,
                    prep_deviation: l.prep_deviation,
                })
                .collect(),
            ledger: estimate.ledger,
            seed,
            config: self.config.clone(),
        }
    }
}

/// Plans and runs once.
pub fn quantum_fpras(
    system: &System,
    schedule: &Schedule,
    epsilon: f64,
    mode: Mode,
    rng: &mut impl Rng,
) -> Result<(QuantumEstimate, QuantumPlan)> {
    let config = PipelineConfig::for_mode(mode, system, schedule, epsilon)?;
    let plan = plan_quantum(system, schedule, config)?;
    Ok((plan.run(rng), plan))
}

/// Ledger of a run without simulating it. Perfect mode only needs `ℓ` and
/// `ε`; walk mode also counts preparation queries stage by stage.
pub fn planned_ledger(config: &PipelineConfig, schedule: &Schedule) -> QueryLedger {
    let steps: Vec<(f64, f64)> = schedule.steps().collect();
    (0..steps.len())
        .map(|i| match &config.walk {
            None => level_ledger(config, 0, 0),
            Some(w) => {
                let stages = steps[..i].iter().filter(|(a, b)| a != b).count() as u64;
                let phases = stages * crate::qprep::phases_per_stage(w.depth);
                level_ledger(config, phases, phases * reflection_queries(w.reflection_bits))
            }
        })
        .sum()
}

/// Ledger if each quantum sample were measured and fed to the classical
/// estimator instead: `⌈64ℓ/ε²⌉` samples per level, so the `1/ε` advantage
/// degrades to `1/ε²`.
pub fn measured_sample_ledger(epsilon: f64, levels: usize) -> Result<QueryLedger> {
    let config = crate::classical::ClassicalConfig::new(epsilon, levels)?;
    Ok(QueryLedger {
        samples_prepared: config.samples * levels as u64,
        ..QueryLedger::default()
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    pub beta: f64,
    pub beta_next: f64,
    pub alpha_exact: f64,
    pub estimate: f64,
    pub within_band_mass: f64,
    pub t: u32,
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prep_deviation: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub mode: Mode,
    pub estimate: f64,
    #[serde(rename = "exact_Z")]
    pub exact_z: f64,
    pub relative_error: f64,
    pub per_level: Vec<LevelReport>,
    pub ledger: QueryLedger,
    pub seed: u64,
    pub config: PipelineConfig,
}

/// `Z_{i+1}/Z_i` on shifted energies.
pub fn exact_ratio(system: &System, beta_i: f64, beta_next: f64) -> Result<f64> {
    Ok(exact_partition(system, beta_next)? / exact_partition(system, beta_i)?)
}

/// Rotation angle `θ ∈ [0, π]` of `G` in the plane of `ψ`, `cos θ = 2α − 1`.
pub fn rotation_angle(alpha: f64) -> f64 {
    (2.0 * alpha - 1.0).clamp(-1.0, 1.0).acos()
}
