use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Result};

use super::{state::inner, CMatrix, Layout};

/// Anything that can act linearly on a flat amplitude vector.
pub trait LinearMap {
    fn dim(&self) -> usize;
    fn apply(&self, v: &[Complex64]) -> Vec<Complex64>;
}

/// Dense, rank-one-update, composed, tensor and register-local operators.
///
/// Composite variants are applied factor by factor and never materialise the
/// full matrix unless [`Operator::to_dense`] is called.
#[derive(Debug, Clone, PartialEq)]
pub enum Operator {
    Dense(CMatrix),
    Diagonal(Vec<Complex64>),
    /// `a·I + b·|v⟩⟨v|` with `v` normalised.
    RankOne {
        vector: Vec<Complex64>,
        a: Complex64,
        b: Complex64,
    },
    /// Matrix product `f[0] · f[1] · …`; the last factor acts first.
    Product(Vec<Operator>),
    /// `f[0] ⊗ f[1] ⊗ …`, first factor most significant.
    Kron(Vec<Operator>),
    /// `op` on register `register` of `layout`, identity on the rest.
    Local {
        layout: Layout,
        register: usize,
        op: Box<Operator>,
    },
}

impl Operator {
    pub fn identity(dim: usize) -> Self {
        Operator::Dense(CMatrix::identity(dim, dim))
    }

    pub fn from_real(m: &DMatrix<f64>) -> Self {
        Operator::Dense(m.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn local(layout: Layout, register: usize, op: Operator) -> Result<Self> {
        if register >= layout.registers().len() {
            return invalid(format!("register index {register} out of range"));
        }
        if layout.registers()[register].dim != op.dim() {
            return invalid(format!(
                "operator of dimension {} on register of dimension {}",
                op.dim(),
                layout.registers()[register].dim
            ));
        }
        Ok(Operator::Local {
            layout,
            register,
            op: Box::new(op),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Operator::Dense(m) => m.nrows(),
            Operator::Diagonal(d) => d.len(),
            Operator::RankOne { vector, .. } => vector.len(),
            Operator::Product(fs) => fs.first().map_or(0, Operator::dim),
            Operator::Kron(fs) => fs.iter().map(Operator::dim).product(),
            Operator::Local { layout, .. } => layout.total(),
        }
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        match self {
            Operator::Dense(m) => {
                let n = m.nrows();
                let mut out = vec![Complex64::new(0.0, 0.0); n];
                // column-major storage: accumulate column by column
                for (j, &x) in v.iter().enumerate() {
                    if x == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for (o, a) in out.iter_mut().zip(m.column(j).iter()) {
                        *o += a * x;
                    }
                }
                out
            }
            Operator::Diagonal(d) => d.iter().zip(v).map(|(a, x)| a * x).collect(),
            Operator::RankOne { vector, a, b } => {
                let c = b * inner(vector, v);
                v.iter().zip(vector).map(|(x, u)| a * x + c * u).collect()
            }
            Operator::Product(fs) => fs.iter().rev().fold(v.to_vec(), |acc, f| f.apply(&acc)),
            Operator::Kron(fs) => {
                let dims: Vec<(String, usize)> =
                    fs.iter().enumerate().map(|(i, f)| (format!("k{i}"), f.dim())).collect();
                let refs: Vec<(&str, usize)> = dims.iter().map(|(n, d)| (n.as_str(), *d)).collect();
                let layout = Layout::new(&refs);
                fs.iter()
                    .enumerate()
                    .fold(v.to_vec(), |acc, (i, f)| apply_local(&layout, i, f, &acc))
            }
            Operator::Local { layout, register, op } => apply_local(layout, *register, op, v),
        }
    }

    pub fn adjoint(&self) -> Operator {
        match self {
            Operator::Dense(m) => Operator::Dense(m.adjoint()),
            Operator::Diagonal(d) => Operator::Diagonal(d.iter().map(|a| a.conj()).collect()),
            Operator::RankOne { vector, a, b } => Operator::RankOne {
                vector: vector.clone(),
                a: a.conj(),
                b: b.conj(),
            },
            Operator::Product(fs) => Operator::Product(fs.iter().rev().map(Operator::adjoint).collect()),
            Operator::Kron(fs) => Operator::Kron(fs.iter().map(Operator::adjoint).collect()),
            Operator::Local { layout, register, op } => Operator::Local {
                layout: layout.clone(),
                register: *register,
                op: Box::new(op.adjoint()),
            },
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        match self {
            Operator::Dense(m) => m.clone(),
            _ => {
                let n = self.dim();
                let mut m = CMatrix::zeros(n, n);
                let mut e = vec![Complex64::new(0.0, 0.0); n];
                for j in 0..n {
                    e[j] = Complex64::new(1.0, 0.0);
                    let col = self.apply(&e);
                    m.column_mut(j).iter_mut().zip(col).for_each(|(a, b)| *a = b);
                    e[j] = Complex64::new(0.0, 0.0);
                }
                m
            }
        }
    }

    /// `max |U†U - I|` over entries.
    pub fn unitarity_deviation(&self) -> f64 {
        let m = self.to_dense();
        let n = m.nrows();
        (m.adjoint() * &m - CMatrix::identity(n, n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }
}

impl LinearMap for Operator {
    fn dim(&self) -> usize {
        Operator::dim(self)
    }

    fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        Operator::apply(self, v)
    }
}

fn apply_local(layout: &Layout, register: usize, op: &Operator, v: &[Complex64]) -> Vec<Complex64> {
    let (outer, dim, stride) = layout.split(register);
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    let mut fibre = vec![Complex64::new(0.0, 0.0); dim];
    for o in 0..outer {
        for s in 0..stride {
            for (k, f) in fibre.iter_mut().enumerate() {
                *f = v[(o * dim + k) * stride + s];
            }
            for (k, x) in op.apply(&fibre).into_iter().enumerate() {
                out[(o * dim + k) * stride + s] = x;
            }
        }
    }
    out
}

/// `2|ψ⟩⟨ψ| - I`.
pub fn reflect_about(psi: &[Complex64]) -> Operator {
    Operator::RankOne {
        vector: psi.to_vec(),
        a: Complex64::new(-1.0, 0.0),
        b: Complex64::new(2.0, 0.0),
    }
}

/// `ω|ψ⟩⟨ψ| + (I - |ψ⟩⟨ψ|)`.
pub fn selective_phase_about(psi: &[Complex64], omega: Complex64) -> Operator {
    Operator::RankOne {
        vector: psi.to_vec(),
        a: Complex64::new(1.0, 0.0),
        b: omega - 1.0,
    }
}
