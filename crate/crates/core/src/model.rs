//! Physical systems on enumerable state spaces, their exact partition
//! functions and Boltzmann distributions, and cooling-schedule construction.
//!
//! Energies are stored shifted by the ground energy, `E'(σ) = E(σ) - E_min`,
//! so every weight `exp(-β E')` lies in `(0, 1]` and the ground state carries
//! weight exactly one. The offset is kept on the [`System`] and reapplied by
//! [`System::unshift_factor`] whenever an unshifted partition function is
//! reported. Inverse temperatures use `k = 1`.

use std::fmt;
use std::path::Path;

use crate::error::{invalid, Error, Result};

/// Largest state space the exact oracles will enumerate.
pub const MAX_STATES: usize = 1 << 12;

/// Largest `|β · E|` accepted before `exp` leaves the comfortable f64 range.
const MAX_EXPONENT: f64 = 700.0;

/// Proposal graph used by the Metropolis chains over this state space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Moves {
    /// Flip one of `n` spins: state `x` neighbours `x ^ (1 << u)`.
    SpinFlip { spins: usize },
    /// Nearest neighbours on a ring of `D` states.
    Ring,
}

impl Moves {
    /// Neighbours of `state`, each proposed with probability `1 / degree()`.
    pub fn neighbours(&self, state: usize, states: usize) -> Vec<usize> {
        match *self {
            Moves::SpinFlip { spins } => (0..spins).map(|u| state ^ (1 << u)).collect(),
            Moves::Ring => match states {
                1 => vec![],
                2 => vec![1 - state],
                d => vec![(state + d - 1) % d, (state + 1) % d],
            },
        }
    }

    pub fn degree(&self, states: usize) -> usize {
        match *self {
            Moves::SpinFlip { spins } => spins,
            Moves::Ring => states.min(3) - 1,
        }
    }
}

/// A finite system: an energy per state, stored ground-shifted.
#[derive(Debug, Clone, PartialEq)]
pub struct System {
    shifted: Vec<f64>,
    energy_offset: f64,
    moves: Moves,
}

impl System {
    /// Builds a system from raw energies. Spin-flip moves are used when the
    /// state count is a power of two, a ring otherwise.
    pub fn from_energies(energies: Vec<f64>) -> Result<Self> {
        let d = energies.len();
        let moves = if d.is_power_of_two() && d > 1 {
            Moves::SpinFlip {
                spins: d.trailing_zeros() as usize,
            }
        } else {
            Moves::Ring
        };
        Self::with_moves(energies, moves)
    }

    pub fn with_moves(energies: Vec<f64>, moves: Moves) -> Result<Self> {
        let d = energies.len();
        if d == 0 {
            return invalid("a system needs at least one state");
        }
        if d > MAX_STATES {
            return Err(Error::StateSpaceCap {
                states: d,
                cap: MAX_STATES,
            });
        }
        if let Some(i) = energies.iter().position(|e| !e.is_finite()) {
            return invalid(format!("energy of state {i} is not finite"));
        }
        if let Moves::SpinFlip { spins } = moves {
            if 1usize << spins != d {
                return invalid(format!("{spins} spins cannot index {d} states"));
            }
        }
        let offset = energies.iter().copied().fold(f64::INFINITY, f64::min);
        let shifted = energies.iter().map(|e| e - offset).collect();
        Ok(Self {
            shifted,
            energy_offset: offset,
            moves,
        })
    }

    /// Number of states `D`.
    pub fn states(&self) -> usize {
        self.shifted.len()
    }

    /// Shifted energy `E'(σ) >= 0`.
    pub fn shifted_energy(&self, state: usize) -> f64 {
        self.shifted[state]
    }

    pub fn shifted_energies(&self) -> &[f64] {
        &self.shifted
    }

    /// Unshifted energy `E(σ)`.
    pub fn energy(&self, state: usize) -> f64 {
        self.shifted[state] + self.energy_offset
    }

    /// The ground energy `E_min` subtracted at construction.
    pub fn energy_offset(&self) -> f64 {
        self.energy_offset
    }

    pub fn moves(&self) -> Moves {
        self.moves
    }

    /// Largest shifted energy.
    pub fn energy_range(&self) -> f64 {
        self.shifted.iter().copied().fold(0.0, f64::max)
    }

    /// `exp(-β E_min)`, the factor turning a shifted partition function into
    /// the unshifted one.
    pub fn unshift_factor(&self, beta: f64) -> Result<f64> {
        let exponent = -beta * self.energy_offset;
        if exponent.abs() > MAX_EXPONENT {
            return Err(Error::Overflow(exponent));
        }
        Ok(exponent.exp())
    }

    fn check_beta(&self, beta: f64) -> Result<()> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return invalid(format!("beta must be finite and nonnegative, got {beta}"));
        }
        let span = beta * self.energy_range();
        if span > MAX_EXPONENT {
            return Err(Error::Overflow(span));
        }
        Ok(())
    }
}

/// Ising model `E(s) = -Σ J_uv s_u s_v - Σ h_u s_u` on `n` spins.
///
/// Spin `u` of state index `σ` is `+1` when bit `u` is clear and `-1` when
/// it is set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IsingModel {
    pub spins: usize,
    pub couplings: Vec<(usize, usize, f64)>,
    pub fields: Vec<(usize, f64)>,
}

impl IsingModel {
    pub fn new(spins: usize) -> Self {
        Self {
            spins,
            ..Self::default()
        }
    }

    pub fn edge(mut self, u: usize, v: usize, coupling: f64) -> Self {
        self.couplings.push((u, v, coupling));
        self
    }

    pub fn field(mut self, u: usize, h: f64) -> Self {
        self.fields.push((u, h));
        self
    }

    /// Open chain `0 - 1 - … - (n-1)` with uniform coupling.
    pub fn chain(spins: usize, coupling: f64) -> Self {
        (1..spins).fold(Self::new(spins), |m, u| m.edge(u - 1, u, coupling))
    }

    /// Ring with uniform coupling (an open chain for `n < 3`).
    pub fn ring(spins: usize, coupling: f64) -> Self {
        let m = Self::chain(spins, coupling);
        if spins >= 3 {
            m.edge(spins - 1, 0, coupling)
        } else {
            m
        }
    }

    fn spin(state: usize, u: usize) -> f64 {
        if state >> u & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn energy(&self, state: usize) -> f64 {
        let pair: f64 = self
            .couplings
            .iter()
            .map(|&(u, v, j)| j * Self::spin(state, u) * Self::spin(state, v))
            .sum();
        let single: f64 = self.fields.iter().map(|&(u, h)| h * Self::spin(state, u)).sum();
        -pair - single
    }

    fn validate(&self) -> Result<()> {
        if self.spins == 0 {
            return invalid("an Ising model needs at least one spin");
        }
        if self.spins > MAX_STATES.trailing_zeros() as usize {
            return Err(Error::StateSpaceCap {
                states: 1usize.checked_shl(self.spins as u32).unwrap_or(usize::MAX),
                cap: MAX_STATES,
            });
        }
        for &(u, v, j) in &self.couplings {
            if u >= self.spins || v >= self.spins || u == v {
                return invalid(format!("bad edge ({u}, {v})"));
            }
            if !j.is_finite() {
                return invalid(format!("coupling on ({u}, {v}) is not finite"));
            }
        }
        for &(u, h) in &self.fields {
            if u >= self.spins || !h.is_finite() {
                return invalid(format!("bad field on site {u}"));
            }
        }
        Ok(())
    }

    pub fn to_system(&self) -> Result<System> {
        self.validate()?;
        let energies = (0..1usize << self.spins).map(|s| self.energy(s)).collect();
        System::with_moves(energies, Moves::SpinFlip { spins: self.spins })
    }

    /// Parses the line-oriented model format:
    ///
    /// ```text
    /// # comment
    /// spins 3
    /// edge 0 1 1.0
    /// field 2 -0.5
    /// ```
    ///
    /// `spins` must come before any `edge` or `field` record.
    pub fn parse(text: &str) -> Result<Self> {
        let mut model: Option<IsingModel> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |msg: &str| Error::Parse {
                line,
                msg: msg.to_string(),
            };
            let fields: Vec<&str> = content.split_whitespace().collect();
            let index = |s: &str| s.parse::<usize>().map_err(|_| err("expected a site index"));
            let real = |s: &str| s.parse::<f64>().map_err(|_| err("expected a number"));
            match fields.as_slice() {
                ["spins", n] => {
                    if model.is_some() {
                        return Err(err("duplicate spins record"));
                    }
                    model = Some(IsingModel::new(index(n)?));
                }
                ["edge", u, v, j] => {
                    let m = model.as_mut().ok_or_else(|| err("edge before spins"))?;
                    m.couplings.push((index(u)?, index(v)?, real(j)?));
                }
                ["field", u, h] => {
                    let m = model.as_mut().ok_or_else(|| err("field before spins"))?;
                    m.fields.push((index(u)?, real(h)?));
                }
                _ => return Err(err("unrecognised record")),
            }
        }
        let model = model.ok_or(Error::Parse {
            line: 0,
            msg: "missing spins record".into(),
        })?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

impl fmt::Display for IsingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "spins {}", self.spins)?;
        for (u, v, j) in &self.couplings {
            writeln!(f, "edge {u} {v} {j}")?;
        }
        for (u, h) in &self.fields {
            writeln!(f, "field {u} {h}")?;
        }
        Ok(())
    }
}

/// Shifted partition function `Σ exp(-β E'(σ))` by full enumeration.
///
/// Multiply by [`System::unshift_factor`] for the physical `Z(β)`.
pub fn exact_partition(system: &System, beta: f64) -> Result<f64> {
    system.check_beta(beta)?;
    Ok(system.shifted.iter().map(|e| (-beta * e).exp()).sum())
}

/// Unshifted `Z(β) = Σ exp(-β E(σ))`.
pub fn exact_partition_unshifted(system: &System, beta: f64) -> Result<f64> {
    Ok(exact_partition(system, beta)? * system.unshift_factor(beta)?)
}

/// Boltzmann probabilities `π_β(σ)`.
pub fn boltzmann(system: &System, beta: f64) -> Result<Vec<f64>> {
    let z = exact_partition(system, beta)?;
    Ok(system.shifted.iter().map(|e| (-beta * e).exp() / z).collect())
}

/// Nondecreasing inverse temperatures `0 = β_0 <= … <= β_ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    betas: Vec<f64>,
}

impl Schedule {
    pub fn new(betas: Vec<f64>) -> Result<Self> {
        match betas.first() {
            None => return invalid("a schedule needs at least beta_0 = 0"),
            Some(&b) if b != 0.0 => return invalid(format!("beta_0 must be 0, got {b}")),
            _ => {}
        }
        if betas.iter().any(|b| !b.is_finite()) {
            return invalid("schedule contains a non-finite beta");
        }
        if betas.windows(2).any(|w| w[1] < w[0]) {
            return invalid("schedule must be nondecreasing");
        }
        Ok(Self { betas })
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// Number of ratios `ℓ`.
    pub fn len(&self) -> usize {
        self.betas.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn beta_final(&self) -> f64 {
        *self.betas.last().expect("schedule is never empty")
    }

    /// Consecutive pairs `(β_i, β_{i+1})`.
    pub fn steps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.betas.windows(2).map(|w| (w[0], w[1]))
    }

    /// Exact ratios `α_i = Z(β_{i+1}) / Z(β_i)`.
    pub fn ratios(&self, system: &System) -> Result<Vec<f64>> {
        let z: Vec<f64> = self
            .betas
            .iter()
            .map(|&b| exact_partition(system, b))
            .collect::<Result<_>>()?;
        Ok(z.windows(2).map(|w| w[1] / w[0]).collect())
    }

    /// Checks every ratio lies in `[low, 1]`.
    pub fn check_ratios(&self, system: &System, low: f64) -> Result<()> {
        for (i, a) in self.ratios(system)?.into_iter().enumerate() {
            if a < low || a > 1.0 + 1e-12 {
                return Err(Error::Schedule(format!("ratio {i} is {a}, outside [{low}, 1]")));
            }
        }
        Ok(())
    }
}

pub const DEFAULT_TARGET_LOW: f64 = 0.5;
pub const DEFAULT_TARGET_HIGH: f64 = 0.75;

const BISECTION_TOL: f64 = 1e-10;
const BISECTION_MAX_ITER: usize = 200;

/// Builds a cooling schedule ending at `beta_final` whose ratios all lie in
/// `[target_low, 1]`, using the exact partition function as oracle.
pub fn build_schedule(system: &System, beta_final: f64, target_low: f64, target_high: f64) -> Result<Schedule> {
    system.check_beta(beta_final.max(0.0))?;
    build_schedule_with(|b| exact_partition(system, b), beta_final, target_low, target_high)
}

/// [`build_schedule`] against an arbitrary nonincreasing partition oracle.
///
/// Each intermediate `β_{i+1}` is the largest inverse temperature (to within
/// `1e-10`) whose ratio is still at least `target_low`; the final step jumps
/// straight to `beta_final` once its ratio clears `target_low`.
pub fn build_schedule_with(
    z: impl Fn(f64) -> Result<f64>,
    beta_final: f64,
    target_low: f64,
    target_high: f64,
) -> Result<Schedule> {
    if !(beta_final >= 0.0) || !beta_final.is_finite() {
        return invalid(format!("beta_final must be finite and >= 0, got {beta_final}"));
    }
    if !(0.0 < target_low && target_low <= target_high && target_high < 1.0) {
        return invalid(format!(
            "need 0 < target_low <= target_high < 1, got {target_low}, {target_high}"
        ));
    }
    let mut betas = vec![0.0];
    let mut current = 0.0;
    let mut z_current = z(0.0)?;
    while current < beta_final {
        let z_final = z(beta_final)?;
        if z_final / z_current >= target_low {
            betas.push(beta_final);
            break;
        }
        // ratio(lo) >= target_low > ratio(hi)
        let (mut lo, mut hi) = (current, beta_final);
        let mut z_lo = z_current;
        let mut iterations = 0;
        while hi - lo > BISECTION_TOL {
            if iterations == BISECTION_MAX_ITER {
                return Err(Error::Bisection {
                    width: hi - lo,
                    iterations,
                });
            }
            let mid = 0.5 * (lo + hi);
            let z_mid = z(mid)?;
            if z_mid / z_current >= target_low {
                lo = mid;
                z_lo = z_mid;
            } else {
                hi = mid;
            }
            iterations += 1;
        }
        let ratio = z_lo / z_current;
        if lo <= current || ratio > target_high {
            return Err(Error::Bisection {
                width: hi - lo,
                iterations,
            });
        }
        betas.push(lo);
        current = lo;
        z_current = z_lo;
    }
    Schedule::new(betas)
}
