//! Numerical core for evolution inclusions `v' + Av + BKv ∋ F(t, v)` with an
//! exponential memory operator `Kv = u0 + ∫ λ e^{-λ(t-s)} v(s) ds`.
//!
//! The memory is carried as `w = Kv - u0`, which solves `w' = λ(v - w)`,
//! `w(0) = 0`, so every time step is local.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod kernel;
pub mod operators;
pub mod setvalued;
pub mod solver;
pub mod spaces;

pub use error::{Error, Result};
pub use kernel::TimeMesh;
pub use operators::{OperatorA, OperatorB};
pub use setvalued::{SelectionRule, SetField, SetValue};
pub use solver::{ProblemData, SolverOptions, Trajectory};
pub use spaces::{Grid, StateVector};
