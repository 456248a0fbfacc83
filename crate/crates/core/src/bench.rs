//! Planned-cost sweeps comparing classical chain steps with quantum
//! controlled-reflection counts. Nothing here samples; every number comes
//! from a deterministic ledger.

use std::io::Write;

use serde::Serialize;

use crate::classical::classical_cost;
use crate::error::{invalid, Result};
use crate::model::{build_schedule, Schedule, System};
use crate::qestimate::{measured_sample_ledger, planned_ledger, PipelineConfig};
use crate::report::fmt_f64;

pub const DEFAULT_EPSILONS: [f64; 3] = [0.4, 0.2, 0.1];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRow {
    pub epsilon: f64,
    pub levels: usize,
    pub beta_final: f64,
    pub classical_steps: u64,
    pub quantum_queries: u64,
    /// Samples needed if quantum samples were measured and averaged classically.
    pub measured_samples: u64,
}

pub fn bench_point(system: &System, schedule: &Schedule, epsilon: f64) -> Result<BenchRow> {
    let config = PipelineConfig::perfect(epsilon, schedule.len())?;
    Ok(BenchRow {
        epsilon,
        levels: schedule.len(),
        beta_final: schedule.beta_final(),
        classical_steps: classical_cost(system, schedule, epsilon)?,
        quantum_queries: planned_ledger(&config, schedule).controlled_reflections,
        measured_samples: measured_sample_ledger(epsilon, schedule.len())?.samples_prepared,
    })
}

/// One row per `ε` on a fixed schedule.
pub fn sweep_epsilon(system: &System, schedule: &Schedule, epsilons: &[f64]) -> Result<Vec<BenchRow>> {
    epsilons.iter().map(|&e| bench_point(system, schedule, e)).collect()
}

/// One row per final inverse temperature, so `ℓ` varies at fixed `ε`.
pub fn sweep_levels(system: &System, epsilon: f64, beta_finals: &[f64], low: f64, high: f64) -> Result<Vec<BenchRow>> {
    beta_finals
        .iter()
        .map(|&b| bench_point(system, &build_schedule(system, b, low, high)?, epsilon))
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return invalid("slope needs at least two paired points");
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return invalid("slope needs positive values");
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return invalid("slope needs distinct x values");
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slopes {
    pub classical: f64,
    pub quantum: f64,
}

pub fn epsilon_slopes(rows: &[BenchRow]) -> Result<Slopes> {
    let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let c: Vec<f64> = rows.iter().map(|r| r.classical_steps as f64).collect();
    let q: Vec<f64> = rows.iter().map(|r| r.quantum_queries as f64).collect();
    Ok(Slopes {
        classical: loglog_slope(&eps, &c)?,
        quantum: loglog_slope(&eps, &q)?,
    })
}

pub const CSV_HEADER: &str = "sweep,epsilon,levels,beta_final,classical_steps,quantum_queries,measured_samples";

pub fn write_csv(out: &mut impl Write, sweep: &str, rows: &[BenchRow]) -> std::io::Result<()> {
    for r in rows {
        writeln!(
            out,
            "{sweep},{},{},{},{},{},{}",
            fmt_f64(r.epsilon),
            r.levels,
            fmt_f64(r.beta_final),
            r.classical_steps,
            r.quantum_queries,
            r.measured_samples
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::IsingModel;
    use approx::assert_relative_eq;

    #[test]
    fn slope_of_power_law() {
        let xs = [0.4, 0.2, 0.1];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 7.0 * x.powf(-1.5)).collect();
        assert_relative_eq!(loglog_slope(&xs, &ys).unwrap(), -1.5, epsilon = 1e-12);
        assert!(loglog_slope(&[1.0], &[1.0]).is_err());
        assert!(loglog_slope(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn epsilon_sweep_scales() {
        let sys = IsingModel::chain(3, 1.0).to_system().unwrap();
        let sched = build_schedule(&sys, 1.0, 0.5, 0.75).unwrap();
        let rows = sweep_epsilon(&sys, &sched, &DEFAULT_EPSILONS).unwrap();
        let s = epsilon_slopes(&rows).unwrap();
        assert!(s.classical < -1.9 && s.classical > -2.5, "{s:?}");
        // counts are k·ℓ·(2^t − 1), so only the "−1" is off from exact doubling
        assert!((s.quantum + 1.0).abs() < 0.01, "{s:?}");
        let mut buf = Vec::new();
        write_csv(&mut buf, "epsilon", &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }

    #[test]
    fn level_sweep_grows() {
        let sys = IsingModel::chain(3, 1.0).to_system().unwrap();
        let rows = sweep_levels(&sys, 0.2, &[0.5, 2.0, 4.0], 0.5, 0.75).unwrap();
        assert!(rows.windows(2).all(|w| w[0].levels <= w[1].levels));
        assert!(rows.windows(2).all(|w| w[0].quantum_queries <= w[1].quantum_queries));
    }
}
