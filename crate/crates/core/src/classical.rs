//! Classical annealing FPRAS: per-ratio means of `Y_i = exp(-Δβ E')` over
//! Metropolis samples, composed through the telescoping product.

use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::markov::{chain_spectrum, metropolis_chain, mixing_steps, TransitionMatrix};
use crate::model::{Schedule, System};

/// `y_i(σ) = exp(-(β_{i+1} - β_i) E'(σ))`, in `(0, 1]` for `beta_next >= beta_i`.
pub fn estimator_y(system: &System, beta_i: f64, beta_next: f64, state: usize) -> f64 {
    debug_assert!(beta_next >= beta_i);
    (-(beta_next - beta_i) * system.shifted_energy(state)).exp()
}

/// Sample and accuracy budgets for a run with `ℓ` ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicalConfig {
    pub epsilon: f64,
    pub levels: usize,
    /// Samples per ratio, `⌈64ℓ/ε²⌉`.
    pub samples: u64,
    /// Variation-distance budget per sample, `ε²/(512ℓ²)`.
    pub tv_budget: f64,
}

impl ClassicalConfig {
    pub fn new(epsilon: f64, levels: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return invalid(format!("epsilon must lie in (0, 1), got {epsilon}"));
        }
        let l = levels.max(1) as f64;
        Ok(Self {
            epsilon,
            levels,
            samples: if levels == 0 {
                0
            } else {
                Self::samples_exact(epsilon, levels).ceil() as u64
            },
            tv_budget: epsilon * epsilon / (512.0 * l * l),
        })
    }

    /// `64ℓ/ε²` before rounding.
    pub fn samples_exact(epsilon: f64, levels: usize) -> f64 {
        64.0 * levels as f64 / (epsilon * epsilon)
    }

    /// `d · m · ℓ` before rounding `m`; identically `1/8`.
    pub fn total_variation_mass(&self) -> f64 {
        self.tv_budget * Self::samples_exact(self.epsilon, self.levels) * self.levels as f64
    }
}

/// Mean of `samples` estimator values, each taken after `burn` chain steps
/// from an independent uniformly random start.
pub fn estimate_ratio_classical(
    chain: &TransitionMatrix,
    system: &System,
    step: (f64, f64),
    samples: u64,
    burn: u64,
    rng: &mut impl Rng,
) -> f64 {
    let (beta_i, beta_next) = step;
    let d = chain.states();
    let mut sum = 0.0;
    for _ in 0..samples {
        let mut state = rng.random_range(0..d);
        for _ in 0..burn {
            state = chain.step_with(state, rng.random::<f64>());
        }
        sum += estimator_y(system, beta_i, beta_next, state);
    }
    sum / samples as f64
}

/// Per-level bookkeeping of a classical run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalLevel {
    pub beta: f64,
    pub beta_next: f64,
    pub gap: f64,
    pub burn_in: u64,
    pub mean: f64,
    pub chain_steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalEstimate {
    /// Unshifted estimate of `Z(β_F)`.
    pub value: f64,
    pub config: ClassicalConfig,
    pub levels: Vec<ClassicalLevel>,
    pub total_steps: u64,
}

impl ClassicalEstimate {
    pub fn ratio_means(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.mean).collect()
    }
}

/// Burn-in per level and its gap, computed from the chains' exact spectra.
pub fn plan_burn_in(
    system: &System,
    schedule: &Schedule,
    config: &ClassicalConfig,
) -> Result<Vec<(TransitionMatrix, f64, u64)>> {
    schedule
        .steps()
        .map(|(beta, _)| {
            let chain = metropolis_chain(system, beta)?;
            let spectrum = chain_spectrum(&chain)?;
            let pi_min = chain.stationary().iter().copied().fold(1.0, f64::min);
            let burn = mixing_steps(&spectrum, config.tv_budget.min(0.5), pi_min)?;
            Ok((chain, spectrum.gap, burn))
        })
        .collect()
}

/// Full classical scheme. Returns `D · Π Ȳ_i · exp(-β_F E_min)`.
pub fn classical_fpras(
    system: &System,
    schedule: &Schedule,
    epsilon: f64,
    rng: &mut impl Rng,
) -> Result<ClassicalEstimate> {
    let config = ClassicalConfig::new(epsilon, schedule.len())?;
    let plan = plan_burn_in(system, schedule, &config)?;
    let mut levels = Vec::with_capacity(plan.len());
    let mut product = system.states() as f64;
    for ((chain, gap, burn), step) in plan.into_iter().zip(schedule.steps()) {
        let mean = estimate_ratio_classical(&chain, system, step, config.samples, burn, rng);
        product *= mean;
        levels.push(ClassicalLevel {
            beta: step.0,
            beta_next: step.1,
            gap,
            burn_in: burn,
            mean,
            chain_steps: config.samples * burn,
        });
    }
    let total_steps = levels.iter().map(|l| l.chain_steps).sum();
    Ok(ClassicalEstimate {
        value: product * system.unshift_factor(schedule.beta_final())?,
        config,
        levels,
        total_steps,
    })
}

/// Chain steps the scheme would spend, without sampling.
pub fn classical_cost(system: &System, schedule: &Schedule, epsilon: f64) -> Result<u64> {
    let config = ClassicalConfig::new(epsilon, schedule.len())?;
    Ok(plan_burn_in(system, schedule, &config)?
        .iter()
        .map(|(_, _, burn)| burn * config.samples)
        .sum())
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassicalReport {
    pub estimate: f64,
    pub per_ratio_means: Vec<f64>,
    pub m: u64,
    pub d: f64,
    pub burn_in: Vec<u64>,
    pub total_steps: u64,
    pub seed: u64,
}

impl ClassicalReport {
    pub fn new(estimate: &ClassicalEstimate, seed: u64) -> Self {
        Self {
            estimate: estimate.value,
            per_ratio_means: estimate.ratio_means(),
            m: estimate.config.samples,
            d: estimate.config.tv_budget,
            burn_in: estimate.levels.iter().map(|l| l.burn_in).collect(),
            total_steps: estimate.total_steps,
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{boltzmann, build_schedule, exact_partition, exact_partition_unshifted, IsingModel};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn three_spin() -> System {
        IsingModel::ring(3, 1.0).field(0, 0.3).to_system().unwrap()
    }

    #[test]
    fn estimator_edge_values() {
        let sys = three_spin();
        for s in 0..8 {
            assert_eq!(estimator_y(&sys, 0.4, 0.4, s), 1.0);
        }
        let ground = (0..8).find(|&s| sys.shifted_energy(s) == 0.0).unwrap();
        assert_eq!(estimator_y(&sys, 0.1, 0.9, ground), 1.0);
    }

    #[test]
    fn estimator_is_unbiased() {
        let sys = three_spin();
        let (b0, b1) = (0.35, 0.8);
        let pi = boltzmann(&sys, b0).unwrap();
        let mean: f64 = (0..8).map(|s| pi[s] * estimator_y(&sys, b0, b1, s)).sum();
        let alpha = exact_partition(&sys, b1).unwrap() / exact_partition(&sys, b0).unwrap();
        assert_relative_eq!(mean, alpha, max_relative = 1e-12);
    }

    #[test]
    fn budgets_match_closed_forms() {
        let c = ClassicalConfig::new(0.1, 4).unwrap();
        assert_eq!(c.samples, 25600);
        for (eps, l) in [(0.1, 4), (0.3, 3), (0.05, 7), (0.77, 1)] {
            let c = ClassicalConfig::new(eps, l).unwrap();
            assert_relative_eq!(c.total_variation_mass(), 0.125, max_relative = 1e-12);
        }
        assert!(ClassicalConfig::new(1.0, 2).is_err());
    }

    #[test]
    fn constant_estimator_gives_exactly_one() {
        let sys = three_spin();
        let chain = metropolis_chain(&sys, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(
            estimate_ratio_classical(&chain, &sys, (0.5, 0.5), 100, 5, &mut rng),
            1.0
        );
    }

    #[test]
    fn two_spin_ratio_within_three_sigma() {
        let sys = IsingModel::new(2).edge(0, 1, 1.0).to_system().unwrap();
        let (b0, b1) = (0.2, 0.9);
        let chain = metropolis_chain(&sys, b0).unwrap();
        let spectrum = chain_spectrum(&chain).unwrap();
        let burn = mixing_steps(&spectrum, 1e-6, 0.1).unwrap();
        let alpha = exact_partition(&sys, b1).unwrap() / exact_partition(&sys, b0).unwrap();
        let m = 100_000u64;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut values = Vec::with_capacity(m as usize);
        for _ in 0..m {
            let mut s = rng.random_range(0..4);
            for _ in 0..burn {
                s = chain.step_with(s, rng.random::<f64>());
            }
            values.push(estimator_y(&sys, b0, b1, s));
        }
        let mean = values.iter().sum::<f64>() / m as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
        assert!((mean - alpha).abs() < 3.0 * var.sqrt() / (m as f64).sqrt());
    }

    #[test]
    fn relative_variance_bounded_on_schedule() {
        let sys = IsingModel::ring(4, 1.0).to_system().unwrap();
        let schedule = build_schedule(&sys, 1.5, 0.5, 0.75).unwrap();
        let eps = 0.2;
        let config = ClassicalConfig::new(eps, schedule.len()).unwrap();
        let mut product = 1.0;
        for ((b0, b1), alpha) in schedule.steps().zip(schedule.ratios(&sys).unwrap()) {
            let pi = boltzmann(&sys, b0).unwrap();
            let m1: f64 = (0..16).map(|s| pi[s] * estimator_y(&sys, b0, b1, s)).sum();
            let m2: f64 = (0..16).map(|s| pi[s] * estimator_y(&sys, b0, b1, s).powi(2)).sum();
            let rel = (m2 - m1 * m1) / (m1 * m1);
            assert!(rel <= 1.0 / alpha - 1.0 + 1e-12);
            assert!(rel <= 1.0);
            product *= 1.0 + rel / ClassicalConfig::samples_exact(eps, config.levels);
        }
        assert!(product - 1.0 <= eps * eps / 8.0);
    }

    #[test]
    fn zero_length_schedule_returns_state_count() {
        let sys = three_spin();
        let schedule = Schedule::new(vec![0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let est = classical_fpras(&sys, &schedule, 0.2, &mut rng).unwrap();
        assert_eq!(est.value, 8.0);
        assert_eq!(est.total_steps, 0);
    }

    #[test]
    fn ledger_counts_steps_exactly() {
        let sys = three_spin();
        let schedule = build_schedule(&sys, 0.8, 0.5, 0.75).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let est = classical_fpras(&sys, &schedule, 0.5, &mut rng).unwrap();
        let expected: u64 = est.levels.iter().map(|l| est.config.samples * l.burn_in).sum();
        assert_eq!(est.total_steps, expected);
        assert_eq!(classical_cost(&sys, &schedule, 0.5).unwrap(), expected);
        let z = exact_partition_unshifted(&sys, 0.8).unwrap();
        assert!((est.value / z - 1.0).abs() < 0.5);
    }
}
