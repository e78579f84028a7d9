//! Fixed-step gradient descent, projected gradient descent, the doubled
//! real-space mirror of the projected iteration, and the exhaustive
//! active-set solver used as a reference for the constrained problem.

mod descent;
mod mirror;
mod oracle;

pub use descent::{gd_solve, pgd_solve};
pub use mirror::real_augmented_pgd;
pub use oracle::{active_set_oracle, OracleSolution, ORACLE_MAX_N};

use std::fmt;
use std::str::FromStr;

use crate::cmat::ComplexMatrix;
use crate::error::{CmopError, Result};

/// Which convergence interval applies to a step size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Unconstrained descent, guaranteed for `alpha < 2 / L`.
    Gd,
    /// Projected descent, guaranteed for `alpha < 1 / L`.
    Pgd,
}

impl Mode {
    pub fn interval_end(self, lipschitz: f64) -> f64 {
        match self {
            Mode::Gd => 2.0 / lipschitz,
            Mode::Pgd => 1.0 / lipschitz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Fixed(f64),
    /// `fraction * 2 / L`, fraction in `(0, 1)`.
    FractionOfTwoOverL(f64),
    /// `fraction * 1 / L`, fraction in `(0, 1)`.
    FractionOfOneOverL(f64),
}

impl StepSize {
    /// `fraction` of the guaranteed interval of `mode`.
    pub fn fraction_of_interval(mode: Mode, fraction: f64) -> Self {
        match mode {
            Mode::Gd => StepSize::FractionOfTwoOverL(fraction),
            Mode::Pgd => StepSize::FractionOfOneOverL(fraction),
        }
    }
}

/// Step size after the Lipschitz constant is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedStep {
    pub alpha: f64,
    /// `alpha` lies in the open interval where convergence is guaranteed.
    pub in_interval: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub step: StepSize,
    /// Stop once `F(W^t) - F(W^{t+1}) < tau`.
    pub tau: f64,
    pub max_iter: usize,
    pub record_trace: bool,
    /// Keep every iterate `W^0, W^1, ...` in the result.
    pub record_iterates: bool,
    /// Secondary stop on `||W^t - W^{t+1}||_F / alpha`; `0` disables it.
    pub grad_map_tol: f64,
    /// Measure wall-clock time per iteration. Off by default so traces are
    /// reproducible byte for byte.
    pub record_timing: bool,
}

impl SolverConfig {
    pub fn new(step: StepSize) -> Self {
        Self {
            step,
            tau: 1e-14,
            max_iter: 1_000_000,
            record_trace: true,
            record_iterates: false,
            grad_map_tol: 0.0,
            record_timing: false,
        }
    }

    pub fn tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn record_iterates(mut self, on: bool) -> Self {
        self.record_iterates = on;
        self
    }

    pub fn record_trace(mut self, on: bool) -> Self {
        self.record_trace = on;
        self
    }

    pub fn grad_map_tol(mut self, tol: f64) -> Self {
        self.grad_map_tol = tol;
        self
    }

    pub fn record_timing(mut self, on: bool) -> Self {
        self.record_timing = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(CmopError::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if self.max_iter == 0 {
            return Err(CmopError::Config("max_iter must be at least 1".into()));
        }
        if !(self.grad_map_tol >= 0.0) {
            return Err(CmopError::Config("grad_map_tol must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Turns a step-size policy into a number for the given mode. Fixed steps
/// outside the guaranteed interval are allowed but flagged.
pub fn resolve_alpha(config: &SolverConfig, lipschitz: f64, mode: Mode) -> Result<ResolvedStep> {
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(CmopError::Config(format!("Lipschitz constant must be positive, got {lipschitz}")));
    }
    let fraction = |f: f64| -> Result<f64> {
        if f > 0.0 && f < 1.0 {
            Ok(f)
        } else {
            Err(CmopError::Config(format!("step fraction must lie in (0, 1), got {f}")))
        }
    };
    let alpha = match config.step {
        StepSize::Fixed(a) => a,
        StepSize::FractionOfTwoOverL(f) => fraction(f)? * (2.0 / lipschitz),
        StepSize::FractionOfOneOverL(f) => fraction(f)? * (1.0 / lipschitz),
    };
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(CmopError::Config(format!("resolved step size must be positive, got {alpha}")));
    }
    Ok(ResolvedStep {
        alpha,
        in_interval: alpha < mode.interval_end(lipschitz),
    })
}

/// One row of a convergence trace. Values refer to the transition
/// `W^t -> W^{t+1}` with `t = iter`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// `F(W^t)`.
    pub objective: f64,
    /// `F(W^t) - F(W^{t+1})`.
    pub decrease: f64,
    /// `||grad F(W^t)||_F`.
    pub grad_norm: f64,
    /// `||W^{t+1} - W^t||_F`.
    pub step_norm: f64,
    pub flops: u64,
    pub elapsed_ns: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    DecreaseBelowTau,
    GradMapBelowTol,
    MaxIter,
    Diverged,
    /// Direct (non-iterative) solution.
    Exact,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::DecreaseBelowTau => "decrease-below-tau",
            StopReason::GradMapBelowTol => "grad-map-below-tol",
            StopReason::MaxIter => "max-iter",
            StopReason::Diverged => "diverged",
            StopReason::Exact => "exact",
        }
    }

    pub fn is_converged(self) -> bool {
        matches!(
            self,
            StopReason::DecreaseBelowTau | StopReason::GradMapBelowTol | StopReason::Exact
        )
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StopReason {
    type Err = CmopError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "decrease-below-tau" => StopReason::DecreaseBelowTau,
            "grad-map-below-tol" => StopReason::GradMapBelowTol,
            "max-iter" => StopReason::MaxIter,
            "diverged" => StopReason::Diverged,
            "exact" => StopReason::Exact,
            other => return Err(CmopError::Input(format!("unknown stop reason {other:?}"))),
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub w_final: ComplexMatrix,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub alpha: f64,
    pub alpha_in_interval: bool,
    pub trace: Vec<IterationRecord>,
    /// `W^0 .. W^T`, filled when [`SolverConfig::record_iterates`] is set.
    pub iterates: Vec<ComplexMatrix>,
}

impl SolveResult {
    pub(crate) fn exact(w: ComplexMatrix, objective: f64, iterations: usize) -> Self {
        Self {
            w_final: w,
            objective,
            iterations,
            converged: true,
            stop_reason: StopReason::Exact,
            alpha: 0.0,
            alpha_in_interval: true,
            trace: Vec::new(),
            iterates: Vec::new(),
        }
    }
}

/// Arithmetic cost of one complex GD (or PGD, with `projected`) iteration
/// once `G` and `B` are cached, in real floating-point operations.
///
/// A complex multiply-add counts 8, a complex add 2, a real scaling of a
/// complex entry 2, and `|z|^2` accumulated into a sum 4. Per iteration:
///
/// | step                          | flops            |
/// |-------------------------------|------------------|
/// | `G W`                         | `8 N^2 K`        |
/// | `- B`                         | `2 N K`          |
/// | `W - alpha grad`              | `4 N K`          |
/// | `W+ - W`, `||W+ - W||^2`      | `2 N K + 4 N K`  |
/// | `||grad||^2`                  | `4 N K`          |
/// | decrease `Re[D, g + g+]`      | `6 N K`          |
/// | objective `Re[W, g - B]`      | `6 N K`          |
/// | scalar bookkeeping            | `6`              |
/// | projection (PGD only)         | `6 N K + 3 N`    |
///
/// The projection is charged as if every row were rescaled, so the count
/// does not depend on the data.
pub fn complex_iteration_flops(n: usize, k: usize, projected: bool) -> u64 {
    let (n, k) = (n as u64, k as u64);
    let mut flops = 8 * n * n * k + 28 * n * k + 6;
    if projected {
        flops += 6 * n * k + 3 * n;
    }
    flops
}

/// Cost of one iteration of [`real_augmented_pgd`]: the same bookkeeping
/// as [`complex_iteration_flops`] on `2NK` real unknowns, with the
/// gradient formed by a dense `2NK x 2NK` real Hessian-vector product.
pub fn real_iteration_flops(n: usize, k: usize) -> u64 {
    let (n, k) = (n as u64, k as u64);
    let dim = 2 * n * k;
    2 * dim * dim + 28 * n * k + 6 + 6 * n * k + 3 * n
}
