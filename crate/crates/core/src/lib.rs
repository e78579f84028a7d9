//! Solvers for complex matrix least squares in Frobenius norm,
//! `min 1/2 ||H W - A||_F^2`, with and without per-row power constraints
//! `||row_n(W)||^2 <= eta`.
//!
//! * [`cmat`]: dense complex matrices and the real Frobenius geometry.
//! * [`objective`]: problem data, cached normal equations, gradient,
//!   Lipschitz constant, closed-form unconstrained solution.
//! * [`projection`]: projection onto the row-power ball.
//! * [`solvers`]: gradient descent, projected gradient descent, its real
//!   doubled-space mirror, and the exhaustive active-set reference.
//! * [`diagnostics`]: KKT report and per-iteration inequality monitors.
//! * [`sample`]: seeded instance generation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cmat;
pub mod diagnostics;
mod error;
pub mod objective;
pub mod projection;
pub mod sample;
pub mod solvers;

pub use cmat::{ComplexMatrix, RealVector, C64};
pub use diagnostics::{KktReport, MonitorKind, MonitorReport};
pub use error::{CmopError, Result};
pub use objective::{precompute, Precomputed, ProblemInstance};
pub use projection::RowBall;
pub use solvers::{IterationRecord, SolveResult, SolverConfig, StepSize, StopReason};
