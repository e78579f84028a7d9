//! Exhaustive active-set solution of the row-constrained problem.
//!
//! For every candidate set `S` of rows held on the boundary, the
//! multipliers `lambda_S > 0` are chosen so that
//! `W(lambda) = (G + Diag(lambda))^{-1} B` has `||row_n||^2 = eta` on `S`.
//! The first set (by size, then lexicographically) whose solution satisfies
//! stationarity, primal and dual feasibility and complementary slackness is
//! the constrained optimum. The cost is exponential in `N`, which is the
//! point: it is a reference, not a solver.

use crate::cmat::{frob_norm, row_sq_norms, solve, ComplexMatrix, RealVector};
use crate::error::{CmopError, Result};
use crate::objective::{Precomputed, ProblemInstance};

use super::SolveResult;

/// Largest `N` the enumeration accepts (`2^12 = 4096` candidate sets).
pub const ORACLE_MAX_N: usize = 12;
const PIVOT_REL: f64 = 1e-14;
const STATIONARITY_REL: f64 = 1e-9;
const BISECTION_STEPS: usize = 200;
const MAX_DOUBLINGS: usize = 200;
const FIXED_POINT_CONTRACTION: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub result: SolveResult,
    pub lambda: RealVector,
    /// Rows on the boundary, ascending.
    pub active_set: Vec<usize>,
    pub candidates_examined: usize,
}

/// Enumerates all `2^N` active sets, see the module docs.
///
/// `inner_tol` is the relative accuracy `max |row_n|^2 - eta| <= inner_tol * eta`
/// demanded from the multiplier solve, and the tolerance for the remaining
/// KKT conditions of a candidate.
pub fn active_set_oracle(
    pre: &Precomputed,
    instance: &ProblemInstance,
    inner_tol: f64,
    inner_max_iter: usize,
) -> Result<OracleSolution> {
    let n = pre.n();
    if n > ORACLE_MAX_N {
        return Err(CmopError::EnumerationGuard { n, max: ORACLE_MAX_N });
    }
    if !(inner_tol > 0.0) || inner_max_iter == 0 {
        return Err(CmopError::Config("oracle needs inner_tol > 0 and inner_max_iter >= 1".into()));
    }
    let eta = instance.eta();
    let solver = MultiplierSolver {
        pre,
        eta,
        tol: inner_tol,
        max_iter: inner_max_iter,
    };
    let unconstrained = solve(pre.g(), pre.b(), PIVOT_REL).ok();
    let seed_norms = unconstrained.as_ref().map(row_sq_norms);

    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut examined = 0;
    for size in 0..=n {
        for set in combinations(n, size) {
            examined += 1;
            let cand = match solver.solve_for(&set, seed_norms.as_ref()) {
                Ok(c) => c,
                Err(_) => continue,
            };
            let score = cand.worst_violation(&set, eta, pre)?;
            if score <= inner_tol {
                let objective = instance.objective(&cand.w)?;
                return Ok(OracleSolution {
                    result: SolveResult::exact(cand.w, objective, examined),
                    lambda: RealVector::new(cand.lambda)?,
                    active_set: set,
                    candidates_examined: examined,
                });
            }
            if best.as_ref().is_none_or(|(_, s)| score < *s) {
                best = Some((set.clone(), score));
            }
        }
    }
    let (best_set, best_residual) = best.unwrap_or((Vec::new(), f64::INFINITY));
    Err(CmopError::OracleFailure {
        best_set,
        best_residual,
    })
}

/// `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < n - k + i {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

struct Candidate {
    w: ComplexMatrix,
    lambda: Vec<f64>,
}

impl Candidate {
    /// Largest relative KKT violation of the candidate.
    fn worst_violation(&self, set: &[usize], eta: f64, pre: &Precomputed) -> Result<f64> {
        let norms = row_sq_norms(&self.w);
        let mut worst: f64 = 0.0;
        for (row, &sq) in norms.iter().enumerate() {
            // Primal feasibility.
            worst = worst.max((sq - eta).max(0.0) / eta);
            if set.contains(&row) {
                // Complementarity; dual feasibility requires a positive multiplier.
                worst = worst.max((sq - eta).abs() / eta);
                if !(self.lambda[row] > 0.0) {
                    worst = f64::INFINITY;
                }
            }
        }
        let lhs = pre.g().add(&ComplexMatrix::diag(&self.lambda))?.matmul(&self.w)?;
        let stationarity = frob_norm(&lhs.sub(pre.b())?) / frob_norm(pre.b()).max(f64::MIN_POSITIVE);
        if stationarity > STATIONARITY_REL {
            worst = f64::INFINITY;
        }
        Ok(worst)
    }
}

struct MultiplierSolver<'a> {
    pre: &'a Precomputed,
    eta: f64,
    tol: f64,
    max_iter: usize,
}

impl MultiplierSolver<'_> {
    fn w_of(&self, lambda: &[f64]) -> Result<ComplexMatrix> {
        let system = self.pre.g().add(&ComplexMatrix::diag(lambda))?;
        solve(&system, self.pre.b(), PIVOT_REL)
    }

    /// Residual of the box-constrained multiplier problem on `set`: rows
    /// with a positive multiplier must sit on the boundary, rows whose
    /// multiplier is zero must not exceed it.
    fn residual(&self, set: &[usize], lambda: &[f64], w: &ComplexMatrix) -> f64 {
        let norms = row_sq_norms(w);
        set.iter()
            .map(|&n| {
                let phi = (norms[n] - self.eta) / self.eta;
                if lambda[n] > 0.0 {
                    phi.abs()
                } else {
                    phi.max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }

    fn row_excess(&self, lambda: &mut [f64], row: usize, value: f64) -> Result<f64> {
        lambda[row] = value;
        let w = self.w_of(lambda)?;
        Ok(row_sq_norms(&w)[row] - self.eta)
    }

    /// Solves `||row_n(W(lambda))||^2 = eta` in `lambda_row` alone. The
    /// excess is nonincreasing in `lambda_row` because it is the partial
    /// derivative of a concave dual function.
    fn bisect_row(&self, lambda: &mut [f64], row: usize) -> Result<()> {
        let diag = self.pre.g().get(row, row).re.max(1.0);
        if self.row_excess(lambda, row, 0.0)? <= 0.0 {
            lambda[row] = 0.0;
            return Ok(());
        }
        let mut lo = 0.0;
        let mut hi = lambda[row].max(1e-3 * diag);
        let mut doublings = 0;
        while self.row_excess(lambda, row, hi)? > 0.0 {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > MAX_DOUBLINGS {
                return Err(CmopError::Contract("multiplier bracket did not close".into()));
            }
        }
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.row_excess(lambda, row, mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lambda[row] = 0.5 * (lo + hi);
        Ok(())
    }

    fn solve_for(&self, set: &[usize], seed_norms: Option<&RealVector>) -> Result<Candidate> {
        let n = self.pre.n();
        let mut lambda = vec![0.0; n];
        for &row in set {
            let diag = self.pre.g().get(row, row).re.max(1.0);
            let ratio = seed_norms.map_or(1.0, |s| (s[row] / self.eta).sqrt());
            lambda[row] = diag * (ratio - 1.0).max(1e-3);
        }
        let mut w = self.w_of(&lambda)?;
        if set.is_empty() {
            return Ok(Candidate { w, lambda });
        }
        let mut res = self.residual(set, &lambda, &w);
        for _ in 0..self.max_iter {
            if res <= self.tol {
                return Ok(Candidate { w, lambda });
            }
            // Multiplicative fixed point, kept only while it contracts quickly.
            let norms = row_sq_norms(&w);
            let mut trial = lambda.clone();
            for &row in set {
                trial[row] *= (norms[row] / self.eta).sqrt();
            }
            if trial.iter().all(|l| l.is_finite()) {
                if let Ok(w_trial) = self.w_of(&trial) {
                    let r = self.residual(set, &trial, &w_trial);
                    if r < FIXED_POINT_CONTRACTION * res {
                        lambda = trial;
                        w = w_trial;
                        res = r;
                        continue;
                    }
                }
            }
            // Otherwise one Gauss-Seidel sweep of exact coordinate solves.
            for &row in set {
                self.bisect_row(&mut lambda, row)?;
            }
            w = self.w_of(&lambda)?;
            let r = self.residual(set, &lambda, &w);
            // A zero multiplier at a fixed point means a smaller set already covered this case.
            if set.iter().any(|&row| lambda[row] == 0.0) && r <= self.tol {
                return Err(CmopError::Contract("multiplier vanished".into()));
            }
            res = r;
        }
        if res <= self.tol {
            Ok(Candidate { w, lambda })
        } else {
            Err(CmopError::Contract(format!("multiplier solve stalled at residual {res:e}")))
        }
    }
}
