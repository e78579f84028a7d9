use std::time::Instant;

use crate::cmat::{frob_norm, re_frob_inner, ComplexMatrix};
use crate::error::{CmopError, Result};
use crate::objective::{Precomputed, ProblemInstance};
use crate::projection::{is_feasible, project_rows, project_rows_in_place, RowBall};

use super::{
    complex_iteration_flops, resolve_alpha, IterationRecord, Mode, SolveResult, SolverConfig, StopReason,
};

/// Ratio to the initial objective beyond which a run counts as diverged.
pub(crate) const DIVERGENCE_FACTOR: f64 = 1e6;
/// An objective increase larger than this (relative to `1 + |F|`) ends the
/// run as diverged rather than as a converged plateau.
pub(crate) const INCREASE_SLACK: f64 = 1e-9;

/// Fixed-step gradient descent `W^{t+1} = W^t - alpha grad F(W^t)`.
pub fn gd_solve(
    pre: &Precomputed,
    instance: &ProblemInstance,
    w0: &ComplexMatrix,
    config: &SolverConfig,
) -> Result<SolveResult> {
    instance.check_variable(w0, "gd_solve")?;
    descend(pre, w0.clone(), config, None)
}

/// Projected gradient descent `W^{t+1} = P(W^t - alpha grad F(W^t))` onto
/// the row ball. An infeasible `w0` is projected first.
pub fn pgd_solve(
    pre: &Precomputed,
    instance: &ProblemInstance,
    w0: &ComplexMatrix,
    ball: &RowBall,
    config: &SolverConfig,
) -> Result<SolveResult> {
    instance.check_variable(w0, "pgd_solve")?;
    let start = if is_feasible(w0, ball, 0.0) {
        w0.clone()
    } else {
        project_rows(w0, ball)
    };
    descend(pre, start, config, Some(ball))
}

fn descend(
    pre: &Precomputed,
    mut w: ComplexMatrix,
    config: &SolverConfig,
    ball: Option<&RowBall>,
) -> Result<SolveResult> {
    config.validate()?;
    let mode = if ball.is_some() { Mode::Pgd } else { Mode::Gd };
    let step = resolve_alpha(config, pre.lipschitz(), mode)?;
    let alpha = step.alpha;
    let flops = complex_iteration_flops(pre.n(), pre.k(), ball.is_some());

    let mut grad = pre.gradient(&w)?;
    let mut f = pre.objective_from_gradient(&w, &grad)?;
    if !f.is_finite() || !w.all_finite() {
        return Err(CmopError::Input("objective at the starting point is not finite".into()));
    }
    let f0 = f;

    let mut trace = Vec::new();
    let mut iterates = Vec::new();
    if config.record_iterates {
        iterates.push(w.clone());
    }
    let mut stop = StopReason::MaxIter;
    let mut iterations = 0;

    for t in 0..config.max_iter {
        let started = config.record_timing.then(Instant::now);
        let mut next = w.sub_scaled(alpha, &grad)?;
        if let Some(ball) = ball {
            project_rows_in_place(&mut next, ball);
        }
        let grad_next = pre.gradient(&next)?;
        let f_next = pre.objective_from_gradient(&next, &grad_next)?;
        let d = next.sub(&w)?;
        let step_norm = frob_norm(&d);
        // Exact for a quadratic: F(W + D) - F(W) = Re[D, (g + g+) / 2].
        let decrease = -0.5 * re_frob_inner(&d, &grad.add(&grad_next)?)?;
        let elapsed_ns = started.map_or(0, |s| s.elapsed().as_nanos() as u64);

        if config.record_trace {
            trace.push(IterationRecord {
                iter: t,
                objective: f,
                decrease,
                grad_norm: frob_norm(&grad),
                step_norm,
                flops,
                elapsed_ns,
            });
        }
        iterations = t + 1;

        if !f_next.is_finite() || !next.all_finite() {
            stop = StopReason::Diverged;
            break;
        }
        w = next;
        grad = grad_next;
        f = f_next;
        if config.record_iterates {
            iterates.push(w.clone());
        }

        if f > DIVERGENCE_FACTOR * f0.max(f64::MIN_POSITIVE) || decrease < -INCREASE_SLACK * (1.0 + f.abs()) {
            stop = StopReason::Diverged;
            break;
        }
        if decrease < config.tau {
            stop = StopReason::DecreaseBelowTau;
            break;
        }
        if config.grad_map_tol > 0.0 && step_norm / alpha < config.grad_map_tol {
            stop = StopReason::GradMapBelowTol;
            break;
        }
    }

    Ok(SolveResult {
        w_final: w,
        objective: f,
        iterations,
        converged: stop.is_converged(),
        stop_reason: stop,
        alpha,
        alpha_in_interval: step.in_interval,
        trace,
        iterates,
    })
}
