use num_complex::Complex64;

use crate::error::{invalid, Result};

use super::{Operator, NORM_TOL};

/// One named tensor factor of a state space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub dim: usize,
}

/// Ordered registers; the first register is the most significant index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    registers: Vec<Register>,
}

impl Layout {
    pub fn new(registers: &[(&str, usize)]) -> Self {
        Self {
            registers: registers
                .iter()
                .map(|&(name, dim)| Register {
                    name: name.to_string(),
                    dim,
                })
                .collect(),
        }
    }

    /// A single anonymous register.
    pub fn flat(dim: usize) -> Self {
        Self::new(&[("q", dim)])
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn total(&self) -> usize {
        self.registers.iter().map(|r| r.dim).product()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.registers.iter().position(|r| r.name == name)
    }

    /// `(outer, dim, stride)` for register `index`: the register's digit of a
    /// flat index `i` is `(i / stride) % dim`.
    pub fn split(&self, index: usize) -> (usize, usize, usize) {
        let outer = self.registers[..index].iter().map(|r| r.dim).product();
        let stride = self.registers[index + 1..].iter().map(|r| r.dim).product();
        (outer, self.registers[index].dim, stride)
    }

    /// Flat index of a tuple of register digits.
    pub fn index_of(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.registers.len());
        digits
            .iter()
            .zip(&self.registers)
            .fold(0, |acc, (&d, r)| acc * r.dim + d)
    }
}

/// Normalised complex amplitudes over a [`Layout`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: Layout,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(layout: Layout, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != layout.total() {
            return invalid(format!(
                "{} amplitudes for a layout of dimension {}",
                amps.len(),
                layout.total()
            ));
        }
        let state = Self { layout, amps };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return invalid(format!("state norm is {norm}, expected 1"));
        }
        Ok(state)
    }

    /// Normalises `amps` first.
    pub fn normalized(layout: Layout, mut amps: Vec<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return invalid("cannot normalise the zero vector");
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Self::new(layout, amps)
    }

    pub fn from_real(layout: Layout, amps: &[f64]) -> Result<Self> {
        Self::new(layout, amps.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn basis(layout: Layout, index: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); layout.total()];
        amps[index] = Complex64::new(1.0, 0.0);
        Self { layout, amps }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        inner(&self.amps, &other.amps)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Marginal distribution of one register.
    pub fn marginal(&self, register: &str) -> Option<Vec<f64>> {
        let r = self.layout.position(register)?;
        let (outer, dim, stride) = self.layout.split(r);
        let mut out = vec![0.0; dim];
        for o in 0..outer {
            for (k, slot) in out.iter_mut().enumerate() {
                let base = (o * dim + k) * stride;
                *slot += self.amps[base..base + stride].iter().map(|a| a.norm_sqr()).sum::<f64>();
            }
        }
        Some(out)
    }

    /// Applies `op` to the whole space.
    pub fn apply(&self, op: &Operator) -> Result<StateVector> {
        if op.dim() != self.dim() {
            return invalid(format!(
                "operator of dimension {} on a state of dimension {}",
                op.dim(),
                self.dim()
            ));
        }
        Ok(Self {
            layout: self.layout.clone(),
            amps: op.apply(&self.amps),
        })
    }

    /// Applies `op` to one named register, identity elsewhere.
    pub fn apply_on(&self, register: &str, op: &Operator) -> Result<StateVector> {
        let r = self
            .layout
            .position(register)
            .ok_or_else(|| crate::Error::InvalidInput(format!("no register named {register}")))?;
        let local = Operator::local(self.layout.clone(), r, op.clone())?;
        self.apply(&local)
    }

    /// `self ⊗ other`, registers concatenated.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut registers = self.layout.registers.clone();
        registers.extend(other.layout.registers.iter().cloned());
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect();
        Self {
            layout: Layout { registers },
            amps,
        }
    }
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖a - b‖`.
pub fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// `min_γ ‖a - e^{iγ} b‖ = sqrt(‖a‖² + ‖b‖² - 2|⟨a|b⟩|)`.
pub fn phase_aligned_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let na = a.iter().map(|x| x.norm_sqr()).sum::<f64>();
    let nb = b.iter().map(|x| x.norm_sqr()).sum::<f64>();
    (na + nb - 2.0 * inner(a, b).norm()).max(0.0).sqrt()
}
