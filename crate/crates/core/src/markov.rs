//! Lazy Metropolis chains, their spectra, and classical sampling.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::model::{boltzmann, System};
use crate::report::fmt_f64;

const STOCHASTIC_TOL: f64 = 1e-12;
const REVERSIBILITY_TOL: f64 = 1e-8;

/// Dense row-stochastic transition matrix with its stationary distribution.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    p: DMatrix<f64>,
    pi: Vec<f64>,
    beta: Option<f64>,
    /// Row-wise cumulative sums for sampling.
    cumulative: Vec<Vec<f64>>,
}

impl TransitionMatrix {
    /// Wraps a row-stochastic matrix and its claimed stationary distribution.
    pub fn new(p: DMatrix<f64>, pi: Vec<f64>) -> Result<Self> {
        let d = p.nrows();
        if d == 0 || p.ncols() != d || pi.len() != d {
            return invalid("transition matrix must be square and match pi");
        }
        for row in 0..d {
            let r = p.row(row);
            let sum: f64 = r.iter().sum();
            let min = r.iter().copied().fold(f64::INFINITY, f64::min);
            if (sum - 1.0).abs() > STOCHASTIC_TOL || min < 0.0 {
                return Err(Error::NotStochastic { row, sum, min });
            }
        }
        let cumulative = (0..d)
            .map(|x| {
                let mut acc = 0.0;
                p.row(x)
                    .iter()
                    .map(|v| {
                        acc += v;
                        acc
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            p,
            pi,
            beta: None,
            cumulative,
        })
    }

    /// Random walk on a symmetric nonnegative conductance matrix,
    /// `p_xy = c_xy / Σ_y c_xy`, made lazy. Reversible with respect to
    /// `π_x ∝ Σ_y c_xy`.
    pub fn from_conductances(c: &DMatrix<f64>) -> Result<Self> {
        let d = c.nrows();
        if c.ncols() != d || (c - c.transpose()).amax() > 1e-14 || c.min() < 0.0 {
            return invalid("conductances must be square, symmetric and nonnegative");
        }
        let degree: Vec<f64> = (0..d).map(|x| c.row(x).sum()).collect();
        if degree.iter().any(|&g| g <= 0.0) {
            return invalid("every state needs positive total conductance");
        }
        let total: f64 = degree.iter().sum();
        let p = DMatrix::from_fn(d, d, |x, y| c[(x, y)] / degree[x]);
        Self::new(lazify(&p), degree.iter().map(|g| g / total).collect())
    }

    pub fn states(&self) -> usize {
        self.p.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.p[(x, y)]
    }

    /// The stationary distribution the chain was built for.
    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    pub fn beta(&self) -> Option<f64> {
        self.beta
    }

    /// `max |π_x p_xy - π_y p_yx|`.
    pub fn detailed_balance_residual(&self) -> f64 {
        let d = self.states();
        let mut worst = 0.0f64;
        for x in 0..d {
            for y in 0..d {
                let r = self.pi[x] * self.p[(x, y)] - self.pi[y] * self.p[(y, x)];
                worst = worst.max(r.abs());
            }
        }
        worst
    }

    /// One transition from `state` driven by a uniform draw in `[0, 1)`.
    pub fn step_with(&self, state: usize, u: f64) -> usize {
        let row = &self.cumulative[state];
        let idx = row.partition_point(|&c| c <= u);
        // guard against a last cumulative entry rounding below 1
        idx.min(row.len() - 1)
    }

    /// Distribution after one step from `dist` (row vector times `P`).
    pub fn evolve(&self, dist: &[f64]) -> Vec<f64> {
        let d = self.states();
        (0..d).map(|y| (0..d).map(|x| dist[x] * self.p[(x, y)]).sum()).collect()
    }

    /// Writes `P` row-major as CSV with 17 significant digits.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        for row in self.p.row_iter() {
            let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// `(I + P) / 2`.
pub fn lazify(p: &DMatrix<f64>) -> DMatrix<f64> {
    let d = p.nrows();
    (p + DMatrix::identity(d, d)) * 0.5
}

/// Lazy single-move Metropolis chain for `boltzmann(system, beta)`.
///
/// A neighbour is proposed uniformly from the system's move set and accepted
/// with probability `min(1, exp(-β ΔE))`; the result is then averaged with
/// the identity.
pub fn metropolis_chain(system: &System, beta: f64) -> Result<TransitionMatrix> {
    let pi = boltzmann(system, beta)?;
    let d = system.states();
    let moves = system.moves();
    let degree = moves.degree(d);
    let mut p = DMatrix::zeros(d, d);
    for x in 0..d {
        let mut stay = 1.0;
        for y in moves.neighbours(x, d) {
            let delta = system.shifted_energy(y) - system.shifted_energy(x);
            let accept = (-beta * delta).exp().min(1.0) / degree as f64;
            p[(x, y)] += accept;
            stay -= accept;
        }
        p[(x, x)] += stay;
    }
    let mut chain = TransitionMatrix::new(lazify(&p), pi)?;
    chain.beta = Some(beta);
    Ok(chain)
}

/// Eigenvalues of a reversible chain, largest first.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpectrum {
    pub eigenvalues: Vec<f64>,
    pub gap: f64,
}

impl ChainSpectrum {
    /// `μ_1`, or `0` for a single-state chain.
    pub fn second(&self) -> f64 {
        self.eigenvalues.get(1).copied().unwrap_or(0.0)
    }

    /// Errors when the gap is below `min`.
    pub fn require_gap(&self, min: f64) -> Result<()> {
        if self.gap < min {
            return Err(Error::SmallGap { gap: self.gap, min });
        }
        Ok(())
    }

    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "index,eigenvalue")?;
        for (j, mu) in self.eigenvalues.iter().enumerate() {
            writeln!(out, "{j},{}", fmt_f64(*mu))?;
        }
        writeln!(out, "gap,{}", fmt_f64(self.gap))?;
        Ok(())
    }
}

/// `D_π^{1/2} P D_π^{-1/2}`; symmetric exactly when `P` is reversible.
pub fn symmetrized(chain: &TransitionMatrix) -> DMatrix<f64> {
    let pi = chain.stationary();
    let d = chain.states();
    DMatrix::from_fn(d, d, |x, y| (pi[x].sqrt() / pi[y].sqrt()) * chain.get(x, y))
}

/// Spectrum via the symmetrised matrix. The gap is `1 - μ_1`; laziness keeps
/// every eigenvalue nonnegative so no absolute value is needed.
pub fn chain_spectrum(chain: &TransitionMatrix) -> Result<ChainSpectrum> {
    if chain.stationary().iter().any(|&p| p <= 0.0) {
        return invalid("stationary distribution must be strictly positive");
    }
    let s = symmetrized(chain);
    let asym = (&s - s.transpose()).amax();
    if asym > REVERSIBILITY_TOL {
        return Err(Error::NonReversible(asym));
    }
    let sym = (&s + s.transpose()) * 0.5;
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    let gap = if eigenvalues.len() > 1 {
        1.0 - eigenvalues[1]
    } else {
        1.0
    };
    Ok(ChainSpectrum { eigenvalues, gap })
}

/// Runs `steps` transitions from `start`.
pub fn sample_chain(chain: &TransitionMatrix, start: usize, steps: u64, rng: &mut impl Rng) -> usize {
    let mut state = start;
    for _ in 0..steps {
        state = chain.step_with(state, rng.random::<f64>());
    }
    state
}

/// Relaxation-time burn-in `⌈(1/δ) ln(1/(d π_min))⌉` guaranteeing variation
/// distance at most `d` from any start.
pub fn mixing_steps(spectrum: &ChainSpectrum, d: f64, pi_min: f64) -> Result<u64> {
    if !(d > 0.0 && d < 1.0) || !(pi_min > 0.0 && pi_min <= 1.0) {
        return invalid(format!("need d in (0,1) and pi_min in (0,1], got {d}, {pi_min}"));
    }
    mixing_steps_for_gap(spectrum.gap, d, pi_min)
}

pub(crate) fn mixing_steps_for_gap(gap: f64, d: f64, pi_min: f64) -> Result<u64> {
    if !(gap > 0.0) {
        return Err(Error::SmallGap { gap, min: 0.0 });
    }
    let log = (1.0 / (d * pi_min)).ln();
    if log <= 0.0 {
        return Ok(0);
    }
    Ok((log / gap).ceil() as u64)
}

/// Total-variation distance `½ Σ |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
