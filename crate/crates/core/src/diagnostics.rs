//! Runtime certificates for the convergence and optimality guarantees.
//!
//! Every monitor evaluates a literal inequality `lhs >= rhs` (or `<=` for
//! the Lipschitz bound) and records a violation when it fails by more than
//! an additive slack scaled to the magnitude of the terms. Slack constants
//! live in [`Slack`] so callers can see and tighten them.

use std::fmt;

use crate::cmat::{frob_norm, re_frob_inner, row_sq_norms, sq_norm_slice, ComplexMatrix, RealVector};
use crate::error::{CmopError, Result};
use crate::objective::{Precomputed, ProblemInstance};
use crate::projection::{project_rows, vi_residual, RowBall};
use crate::sample::{gaussian_matrix, Prng};
use crate::solvers::IterationRecord;

/// Relative slack constants used by the monitors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slack;

impl Slack {
    /// Descent, decrease, Fejer and convexity checks: `1e-9 * (1 + |lead|)`.
    pub const INEQUALITY: f64 = 1e-9;
    /// Lipschitz bound: `1e-8` relative.
    pub const LIPSCHITZ: f64 = 1e-8;
    /// Variational inequality: `1e-10 * (1 + ||V||^2)`.
    pub const VI: f64 = 1e-10;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MonitorKind {
    Thm2Descent,
    Thm3Decrease,
    Thm3Fejer,
    Lemma2Convexity,
    Lemma4Vi,
    Lemma3Lipschitz,
}

impl MonitorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MonitorKind::Thm2Descent => "thm2-descent",
            MonitorKind::Thm3Decrease => "thm3-decrease",
            MonitorKind::Thm3Fejer => "thm3-fejer",
            MonitorKind::Lemma2Convexity => "lemma2-convexity",
            MonitorKind::Lemma4Vi => "lemma4-vi",
            MonitorKind::Lemma3Lipschitz => "lemma3-lipschitz",
        }
    }
}

impl fmt::Display for MonitorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    /// Iteration or sample index.
    pub iter: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    pub name: MonitorKind,
    pub violations: Vec<Violation>,
    /// Smallest observed `margin + slack`, where the margin is the signed
    /// amount by which the inequality holds. Negative iff something failed.
    pub worst_slack: f64,
    pub checks: usize,
    pub passed: bool,
}

impl MonitorReport {
    fn new(name: MonitorKind) -> Self {
        Self {
            name,
            violations: Vec::new(),
            worst_slack: f64::INFINITY,
            checks: 0,
            passed: true,
        }
    }

    /// Records `lhs >= rhs` up to `slack`.
    fn check_ge(&mut self, iter: usize, lhs: f64, rhs: f64, slack: f64) {
        self.checks += 1;
        let margin = lhs - rhs + slack;
        // NaN compares false and is reported.
        if !(margin >= 0.0) {
            self.violations.push(Violation { iter, lhs, rhs, slack });
            self.passed = false;
        }
        if margin < self.worst_slack || margin.is_nan() {
            self.worst_slack = margin;
        }
    }

    /// One line per violation: `name,iter,lhs,rhs,slack`.
    pub fn violation_lines(&self) -> Vec<String> {
        self.violations
            .iter()
            .map(|v| format!("{},{},{:e},{:e},{:e}", self.name, v.iter, v.lhs, v.rhs, v.slack))
            .collect()
    }
}

/// Multiplier-based optimality report for the row-constrained problem.
#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    /// `||(G + Diag(lambda)) W - B||_F / ||B||_F`.
    pub stationarity_residual: f64,
    /// `max(0, max_n ||row_n||^2 - eta)`.
    pub primal_violation: f64,
    /// `max(0, -min_n lambda_n)`.
    pub dual_violation: f64,
    /// `max_n |lambda_n (||row_n||^2 - eta)|`.
    pub complementarity: f64,
    pub lambda_hat: RealVector,
    pub passed: bool,
}

/// Active rows are those with `||row_n||^2 >= eta - active_tol`.
pub const DEFAULT_ACTIVE_TOL_REL: f64 = 1e-6;
pub const DEFAULT_PASS_TOL: f64 = 1e-6;

/// Recovers multipliers from the residual `R = B - G W` and scores the four
/// KKT conditions.
///
/// For an active row, `lambda_n = Re[R_n, w_n] / ||w_n||^2` is the best
/// scalar fit of `R_n` by `lambda_n w_n`; whatever is left over lands in the
/// stationarity residual. Inactive rows get `lambda_n = 0`.
///
/// `passed` compares the stationarity residual against `pass_tol`, the
/// primal violation and the complementarity against `pass_tol * eta` (the
/// latter times `1 + max lambda`), and the dual violation against
/// `pass_tol * max(1, max_n G_nn)`, the natural scale of a multiplier.
pub fn kkt_check(
    pre: &Precomputed,
    instance: &ProblemInstance,
    w: &ComplexMatrix,
    active_tol: f64,
    pass_tol: f64,
) -> Result<KktReport> {
    instance.check_variable(w, "kkt_check")?;
    let eta = instance.eta();
    let residual = pre.b().sub(&pre.g().matmul(w)?)?;
    let norms = row_sq_norms(w);
    let mut lambda = vec![0.0; w.rows()];
    for (n, &sq) in norms.iter().enumerate() {
        if sq >= eta - active_tol {
            if sq == 0.0 {
                return Err(CmopError::DegenerateRow { row: n });
            }
            let fit: f64 = residual
                .row(n)
                .iter()
                .zip(w.row(n))
                .map(|(r, x)| r.re * x.re + r.im * x.im)
                .sum();
            lambda[n] = fit / sq;
        }
    }
    // (G + Diag(lambda)) W - B = Diag(lambda) W - R.
    let mut stationarity = 0.0;
    for (n, &l) in lambda.iter().enumerate() {
        stationarity += w
            .row(n)
            .iter()
            .zip(residual.row(n))
            .map(|(x, r)| (x * l - r).norm_sqr())
            .sum::<f64>();
    }
    let b_norm = frob_norm(pre.b());
    let stationarity_residual = stationarity.sqrt() / if b_norm > 0.0 { b_norm } else { 1.0 };
    let primal_violation = norms.iter().map(|&sq| sq - eta).fold(0.0, f64::max);
    let dual_violation = lambda.iter().map(|&l| 0.0 - l).fold(0.0, f64::max);
    let complementarity = lambda
        .iter()
        .zip(norms.iter())
        .map(|(l, sq)| (l * (sq - eta)).abs())
        .fold(0.0, f64::max);
    let lambda_max = lambda.iter().cloned().fold(0.0, f64::max);
    let g_scale = (0..pre.n()).map(|i| pre.g().get(i, i).re).fold(1.0, f64::max);
    let passed = stationarity_residual <= pass_tol
        && primal_violation <= pass_tol * eta
        && dual_violation <= pass_tol * g_scale
        && complementarity <= pass_tol * eta * (1.0 + lambda_max);
    Ok(KktReport {
        stationarity_residual,
        primal_violation,
        dual_violation,
        complementarity,
        lambda_hat: RealVector::new(lambda)?,
        passed,
    })
}

/// `kkt_check` with `active_tol = 1e-6 * eta` and `pass_tol = 1e-6`.
pub fn kkt_check_default(pre: &Precomputed, instance: &ProblemInstance, w: &ComplexMatrix) -> Result<KktReport> {
    kkt_check(pre, instance, w, DEFAULT_ACTIVE_TOL_REL * instance.eta(), DEFAULT_PASS_TOL)
}

/// Per-iteration descent bound of fixed-step gradient descent:
/// `F(W^t) - F(W^{t+1}) >= alpha (1 - alpha L / 2) ||grad F(W^t)||^2`.
pub fn monitor_thm2(trace: &[IterationRecord], alpha: f64, lipschitz: f64) -> Result<MonitorReport> {
    if trace.is_empty() {
        return Err(CmopError::Input("descent monitor needs a non-empty trace".into()));
    }
    let coeff = alpha * (1.0 - alpha * lipschitz / 2.0);
    let mut report = MonitorReport::new(MonitorKind::Thm2Descent);
    for rec in trace {
        let rhs = coeff * rec.grad_norm * rec.grad_norm;
        report.check_ge(rec.iter, rec.decrease, rhs, Slack::INEQUALITY * (1.0 + rec.objective.abs()));
    }
    Ok(report)
}

/// Sufficient decrease `F(W^t) - F(W^{t+1}) >= (1/alpha - L) ||W^t - W^{t+1}||^2`
/// and Fejer monotonicity
/// `||W^t - W*||^2 >= ||W^{t+1} - W*||^2 + (1 - alpha L) ||W^t - W^{t+1}||^2`
/// of projected descent. `iterates` holds `W^0 .. W^T`, one more than the
/// trace.
///
/// Outside `alpha < 1/L` the inequalities are still evaluated literally;
/// a failure there is an observation, not a broken guarantee.
pub fn monitor_thm3(
    trace: &[IterationRecord],
    iterates: &[ComplexMatrix],
    w_opt: &ComplexMatrix,
    alpha: f64,
    lipschitz: f64,
) -> Result<(MonitorReport, MonitorReport)> {
    if trace.is_empty() {
        return Err(CmopError::Input("projected-descent monitor needs a non-empty trace".into()));
    }
    if iterates.len() != trace.len() + 1 {
        return Err(CmopError::Input(format!(
            "expected {} iterates for a trace of {} records, got {}",
            trace.len() + 1,
            trace.len(),
            iterates.len()
        )));
    }
    let mut decrease = MonitorReport::new(MonitorKind::Thm3Decrease);
    let mut fejer = MonitorReport::new(MonitorKind::Thm3Fejer);
    let dec_coeff = 1.0 / alpha - lipschitz;
    let fejer_coeff = 1.0 - alpha * lipschitz;
    for (t, rec) in trace.iter().enumerate() {
        let step_sq = sq_norm_slice(iterates[t + 1].sub(&iterates[t])?.as_slice());
        decrease.check_ge(
            rec.iter,
            rec.decrease,
            dec_coeff * step_sq,
            Slack::INEQUALITY * (1.0 + rec.objective.abs()),
        );
        let before = sq_norm_slice(iterates[t].sub(w_opt)?.as_slice());
        let after = sq_norm_slice(iterates[t + 1].sub(w_opt)?.as_slice());
        fejer.check_ge(
            rec.iter,
            before,
            after + fejer_coeff * step_sq,
            Slack::INEQUALITY * (1.0 + before),
        );
    }
    Ok((decrease, fejer))
}

/// First-order convexity `F(W) >= F(W') + Re[W - W', grad F(W')]` for each
/// pair `(W, W')`.
pub fn monitor_lemma2(
    pre: &Precomputed,
    instance: &ProblemInstance,
    pairs: &[(ComplexMatrix, ComplexMatrix)],
) -> Result<MonitorReport> {
    let mut report = MonitorReport::new(MonitorKind::Lemma2Convexity);
    for (i, (w, w_ref)) in pairs.iter().enumerate() {
        let f = instance.objective(w)?;
        let f_ref = instance.objective(w_ref)?;
        let lin = re_frob_inner(&w.sub(w_ref)?, &pre.gradient(w_ref)?)?;
        report.check_ge(i, f, f_ref + lin, Slack::INEQUALITY * (1.0 + f.abs()));
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzReport {
    pub report: MonitorReport,
    /// Largest `||H dW||^2 / ||dW||^2` seen.
    pub tightest_ratio: f64,
}

/// Draws `samples` seeded Gaussian `dW` with `k` columns and checks
/// `||H dW||_F^2 <= L ||dW||_F^2 (1 + 1e-8)`.
pub fn monitor_lipschitz(h: &ComplexMatrix, lipschitz: f64, samples: usize, seed: u64, k: usize) -> Result<LipschitzReport> {
    if samples == 0 {
        return Err(CmopError::Input("Lipschitz monitor needs at least one sample".into()));
    }
    let mut rng = Prng::new(seed);
    let mut report = MonitorReport::new(MonitorKind::Lemma3Lipschitz);
    let mut tightest: f64 = 0.0;
    for s in 0..samples {
        let dw = gaussian_matrix(&mut rng, h.cols(), k.max(1));
        let lhs = sq_norm_slice(h.matmul(&dw)?.as_slice());
        let denom = sq_norm_slice(dw.as_slice());
        let rhs = lipschitz * denom;
        tightest = tightest.max(lhs / denom);
        // lhs <= rhs, flipped into the >= form.
        report.check_ge(s, rhs, lhs, Slack::LIPSCHITZ * rhs.abs());
    }
    Ok(LipschitzReport {
        report,
        tightest_ratio: tightest,
    })
}

/// Projection variational inequality `Re[P(V) - W, V - P(V)] >= 0` for each
/// `(V, W)` with feasible `W`.
pub fn monitor_lemma4(ball: &RowBall, pairs: &[(ComplexMatrix, ComplexMatrix)]) -> Result<MonitorReport> {
    let mut report = MonitorReport::new(MonitorKind::Lemma4Vi);
    for (i, (v, w_test)) in pairs.iter().enumerate() {
        let w_plus = project_rows(v, ball);
        let r = vi_residual(&w_plus, v, w_test, ball)?;
        report.check_ge(i, r, 0.0, Slack::VI * (1.0 + sq_norm_slice(v.as_slice())));
    }
    Ok(report)
}
