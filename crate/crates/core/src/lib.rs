//! Exact desk-scale simulation of classical and quantum-walk approximation
//! schemes for Gibbs partition functions of small Ising systems.

// `!(x > 0.0)` style guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod classical;
pub mod cli;
pub mod error;
pub mod markov;
pub mod model;
pub mod qcore;
pub mod qestimate;
pub mod qprep;
pub mod report;
pub mod szegedy;

pub use error::{Error, Result};
