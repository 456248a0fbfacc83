//! Quantum walks `W(P) = R_B · R_A` built from reversible chains, and their
//! spectra on the invariant subspace `A + B`.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::markov::{chain_spectrum, ChainSpectrum, TransitionMatrix};
use crate::qcore::{signed_phase, CMatrix, Operator};
use crate::report::fmt_f64;

/// Largest chain the walk is built for; the doubled register has `D²` entries.
pub const MAX_WALK_STATES: usize = 1 << 6;

/// Phases below this magnitude count as zero.
pub const ZERO_PHASE_TOL: f64 = 1e-9;

const RANK_TOL: f64 = 1e-10;
const NORMALITY_TOL: f64 = 1e-8;

/// `V_x` with `V_x|0⟩ = |p_x⟩`: the Householder reflection exchanging `|0⟩`
/// and `|p_x⟩`, or the identity when they coincide.
fn row_loader(chain: &TransitionMatrix, x: usize) -> DMatrix<f64> {
    let d = chain.states();
    let mut w: Vec<f64> = (0..d).map(|y| -chain.get(x, y).sqrt()).collect();
    w[0] += 1.0;
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut v = DMatrix::identity(d, d);
    if norm > 1e-15 {
        for a in 0..d {
            for b in 0..d {
                v[(a, b)] -= 2.0 * w[a] * w[b] / (norm * norm);
            }
        }
    }
    v
}

/// `U = Σ_x |x⟩⟨x| ⊗ V_x` on the doubled register, index `x·D + y`.
pub fn quantum_update_real(chain: &TransitionMatrix) -> DMatrix<f64> {
    let d = chain.states();
    let mut u = DMatrix::zeros(d * d, d * d);
    for x in 0..d {
        u.view_mut((x * d, x * d), (d, d)).copy_from(&row_loader(chain, x));
    }
    u
}

pub fn quantum_update(chain: &TransitionMatrix) -> Operator {
    Operator::from_real(&quantum_update_real(chain))
}

fn swap(d: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(d * d, d * d);
    for x in 0..d {
        for y in 0..d {
            s[(y * d + x, x * d + y)] = 1.0;
        }
    }
    s
}

/// The walk unitary together with the data it was built from.
#[derive(Debug, Clone)]
pub struct WalkOperator {
    states: usize,
    walk: DMatrix<f64>,
    /// `U†SU`, an involution mapping `A` onto `B`.
    exchange: DMatrix<f64>,
    lift: Vec<f64>,
    chain_spectrum: ChainSpectrum,
}

pub fn build_walk(chain: &TransitionMatrix) -> Result<WalkOperator> {
    let d = chain.states();
    if d > MAX_WALK_STATES {
        return Err(Error::StateSpaceCap {
            states: d,
            cap: MAX_WALK_STATES,
        });
    }
    let chain_spectrum = chain_spectrum(chain)?;
    let u = quantum_update_real(chain);
    let exchange = u.transpose() * swap(d) * &u;
    let n = d * d;
    let r_a = DMatrix::from_fn(n, n, |i, j| match (i == j, i % d == 0) {
        (false, _) => 0.0,
        (true, true) => 1.0,
        (true, false) => -1.0,
    });
    let r_b = &exchange * &r_a * &exchange;
    let walk = r_b * r_a;
    let mut lift = vec![0.0; n];
    for (x, p) in chain.stationary().iter().enumerate() {
        lift[x * d] = p.sqrt();
    }
    Ok(WalkOperator {
        states: d,
        walk,
        exchange,
        lift,
        chain_spectrum,
    })
}

impl WalkOperator {
    /// `D`, the chain's state count.
    pub fn states(&self) -> usize {
        self.states
    }

    pub fn dim(&self) -> usize {
        self.states * self.states
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.walk
    }

    pub fn operator(&self) -> Operator {
        Operator::from_real(&self.walk)
    }

    /// `Σ_x √π_x |x⟩|0⟩`.
    pub fn lift(&self) -> &[f64] {
        &self.lift
    }

    pub fn chain_spectrum(&self) -> &ChainSpectrum {
        &self.chain_spectrum
    }

    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.dim();
        (self.walk.transpose() * &self.walk - DMatrix::identity(n, n)).amax()
    }

    /// `‖W·lift - lift‖`.
    pub fn lift_residual(&self) -> f64 {
        let v = nalgebra::DVector::from_column_slice(&self.lift);
        (&self.walk * &v - &v).norm()
    }

    /// Orthonormal basis of `A + B` as columns.
    pub fn invariant_basis(&self) -> DMatrix<f64> {
        let d = self.states;
        let n = self.dim();
        let mut gens = DMatrix::zeros(n, 2 * d);
        for x in 0..d {
            gens[(x * d, x)] = 1.0;
            gens.column_mut(d + x).copy_from(&self.exchange.column(x * d));
        }
        // range of the generators from their Gram matrix
        let eig = SymmetricEigen::new(gens.transpose() * &gens);
        let top = eig.eigenvalues.max();
        let keep: Vec<usize> = (0..eig.eigenvalues.len())
            .filter(|&i| eig.eigenvalues[i] > RANK_TOL * top)
            .collect();
        let mut q = DMatrix::zeros(n, keep.len());
        for (j, &i) in keep.iter().enumerate() {
            q.set_column(j, &(&gens * eig.eigenvectors.column(i) / eig.eigenvalues[i].sqrt()));
        }
        q
    }
}

/// Eigen-decomposition of `W` on `A + B`.
#[derive(Debug, Clone)]
pub struct WalkSpectrum {
    /// Phases in `(-π, π]`, ascending, one per eigenvector.
    pub phases: Vec<f64>,
    /// Matching orthonormal eigenvectors as columns, on the doubled register.
    pub vectors: CMatrix,
    /// Phase gap `Δ`: the smallest nonzero phase magnitude.
    pub gap: f64,
}

impl WalkSpectrum {
    pub fn nonzero_phases(&self) -> impl Iterator<Item = f64> + '_ {
        self.phases.iter().copied().filter(|p| p.abs() > ZERO_PHASE_TOL)
    }

    pub fn zero_phase_count(&self) -> usize {
        self.phases.len() - self.nonzero_phases().count()
    }
}

/// Restricts `W` to an orthonormal basis of `A + B` and diagonalises the
/// restriction. Eigenvectors of `W` outside `A + B` are never formed.
pub fn walk_spectrum(walk: &WalkOperator) -> Result<WalkSpectrum> {
    let q = walk.invariant_basis();
    let restricted = q.transpose() * walk.matrix() * &q;
    let leak = (&q * &restricted - walk.matrix() * &q).amax();
    if leak > NORMALITY_TOL {
        return Err(Error::Spectral(format!("A + B is not invariant (leak {leak:e})")));
    }
    let r = restricted.nrows();
    let complex = restricted.map(|v| Complex64::new(v, 0.0));
    let (z, t) = Schur::try_new(complex, 1e-14, 10_000)
        .ok_or_else(|| Error::Spectral("Schur iteration did not converge".into()))?
        .unpack();
    let off = (0..r)
        .flat_map(|i| (i + 1..r).map(move |j| (i, j)))
        .map(|(i, j)| t[(i, j)].norm())
        .fold(0.0, f64::max);
    if off > NORMALITY_TOL {
        return Err(Error::Spectral(format!(
            "restricted walk is not normal (off-diagonal {off:e})"
        )));
    }
    let mut order: Vec<(f64, usize)> = (0..r).map(|i| (signed_phase(t[(i, i)].arg()), i)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let qc = q.map(|v| Complex64::new(v, 0.0));
    let z_sorted = CMatrix::from_fn(r, r, |i, j| z[(i, order[j].1)]);
    let vectors = qc * z_sorted;
    let phases: Vec<f64> = order
        .iter()
        .map(|&(p, _)| if p.abs() <= ZERO_PHASE_TOL { 0.0 } else { p })
        .collect();
    let gap = phases
        .iter()
        .map(|p| p.abs())
        .filter(|&p| p > ZERO_PHASE_TOL)
        .fold(PI, f64::min);
    Ok(WalkSpectrum { phases, vectors, gap })
}

/// Pairing of walk phases with chain eigenvalues: each `μ_j < 1` should
/// appear twice as `cos(φ/2)`, once for each of `e^{±2iθ_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Correspondence {
    /// `(μ_j, cos(φ/2))` matched in sorted order.
    pub pairs: Vec<(f64, f64)>,
    /// Zero phases on `A + B` and chain eigenvalues equal to one.
    pub zero_phases: usize,
    pub unit_eigenvalues: usize,
    pub max_error: f64,
}

impl Correspondence {
    pub fn holds(&self, tol: f64) -> bool {
        self.zero_phases == self.unit_eigenvalues && self.max_error <= tol
    }
}

pub fn correspondence(spectrum: &WalkSpectrum, chain: &ChainSpectrum) -> Correspondence {
    let mut measured: Vec<f64> = spectrum.nonzero_phases().map(|p| (p / 2.0).cos()).collect();
    measured.sort_by(|a, b| b.total_cmp(a));
    let unit = chain.eigenvalues.iter().filter(|&&m| m >= 1.0 - 1e-12).count();
    let mut expected: Vec<f64> = chain
        .eigenvalues
        .iter()
        .copied()
        .filter(|&m| m < 1.0 - 1e-12)
        .flat_map(|m| [m, m])
        .collect();
    expected.sort_by(|a, b| b.total_cmp(a));
    let max_error = if expected.len() == measured.len() {
        expected
            .iter()
            .zip(&measured)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    Correspondence {
        pairs: expected.into_iter().zip(measured).collect(),
        zero_phases: spectrum.zero_phase_count(),
        unit_eigenvalues: unit,
        max_error,
    }
}

/// Everything `walk-analyze` reports for one chain.
#[derive(Debug, Clone)]
pub struct WalkAnalysis {
    pub spectrum: WalkSpectrum,
    pub chain: ChainSpectrum,
    pub correspondence: Correspondence,
    pub unitarity_deviation: f64,
    pub lift_residual: f64,
}

impl WalkAnalysis {
    pub fn phase_gap(&self) -> f64 {
        self.spectrum.gap
    }

    pub fn spectral_gap(&self) -> f64 {
        self.chain.gap
    }

    /// `Δ ≥ 2√δ`.
    pub fn gap_relation_holds(&self) -> bool {
        self.phase_gap() >= 2.0 * self.spectral_gap().sqrt()
    }

    /// Long-format CSV: eigenphases, the pairing table, then summary rows.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "row,index,mu,phase,cos_half_phase,abs_error")?;
        for (i, p) in self.spectrum.phases.iter().enumerate() {
            writeln!(out, "eigenphase,{i},,{},{},", fmt_f64(*p), fmt_f64((p / 2.0).cos()))?;
        }
        for (j, (mu, c)) in self.correspondence.pairs.iter().enumerate() {
            writeln!(
                out,
                "pair,{j},{},{},{},{}",
                fmt_f64(*mu),
                fmt_f64(2.0 * mu.acos()),
                fmt_f64(*c),
                fmt_f64((mu - c).abs())
            )?;
        }
        writeln!(out, "phase_gap,0,,{},,", fmt_f64(self.phase_gap()))?;
        writeln!(out, "spectral_gap,0,{},,,", fmt_f64(self.spectral_gap()))?;
        writeln!(
            out,
            "two_sqrt_spectral_gap,0,,{},,",
            fmt_f64(2.0 * self.spectral_gap().sqrt())
        )?;
        Ok(())
    }
}

pub fn analyze_walk(chain: &TransitionMatrix) -> Result<WalkAnalysis> {
    let walk = build_walk(chain)?;
    let spectrum = walk_spectrum(&walk)?;
    let correspondence = correspondence(&spectrum, walk.chain_spectrum());
    Ok(WalkAnalysis {
        correspondence,
        chain: walk.chain_spectrum().clone(),
        unitarity_deviation: walk.unitarity_deviation(),
        lift_residual: walk.lift_residual(),
        spectrum,
    })
}
