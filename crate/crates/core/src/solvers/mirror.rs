//! The projected iteration carried out on `u = [vec(Re W); vec(Im W)]`,
//! a real vector of length `2NK`, with an explicit real Hessian.
//!
//! Nothing here reuses the complex kernels: the real Gram matrix is formed
//! from the stacked `[[Re H, -Im H], [Im H, Re H]]`, so agreement with
//! [`pgd_solve`](super::pgd_solve) is an independent check that the complex
//! gradient and projection are the real ones in disguise.

use std::time::Instant;

use crate::cmat::{ComplexMatrix, C64};
use crate::error::{CmopError, Result};
use crate::objective::ProblemInstance;
use crate::projection::{is_feasible, project_rows, RowBall};

use super::descent::{DIVERGENCE_FACTOR, INCREASE_SLACK};
use super::{real_iteration_flops, resolve_alpha, IterationRecord, Mode, SolveResult, SolverConfig, StopReason};

struct RealProblem {
    n: usize,
    k: usize,
    /// Dense `2NK x 2NK` Hessian, row-major.
    hessian: Vec<f64>,
    linear: Vec<f64>,
    constant: f64,
}

impl RealProblem {
    fn new(instance: &ProblemInstance) -> Self {
        let (m, n, k) = (instance.m(), instance.n(), instance.k());
        let h = instance.h();
        let a = instance.a();
        // Stacked real operator, 2M x 2N.
        let hr = |row: usize, col: usize| -> f64 {
            let z = h.get(row % m, col % n);
            match (row < m, col < n) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        };
        let ar = |row: usize, col: usize| -> f64 {
            let z = a.get(row % m, col);
            if row < m {
                z.re
            } else {
                z.im
            }
        };
        let mut gram = vec![0.0; 4 * n * n];
        let mut lin_block = vec![0.0; 2 * n * k];
        for p in 0..2 * n {
            for q in 0..2 * n {
                gram[p * 2 * n + q] = (0..2 * m).map(|r| hr(r, p) * hr(r, q)).sum();
            }
            for c in 0..k {
                lin_block[p * k + c] = (0..2 * m).map(|r| hr(r, p) * ar(r, c)).sum();
            }
        }
        let dim = 2 * n * k;
        let mut hessian = vec![0.0; dim * dim];
        let mut linear = vec![0.0; dim];
        for c in 0..k {
            for p in 0..2 * n {
                let i = Self::index(n, k, p, c);
                linear[i] = lin_block[p * k + c];
                for q in 0..2 * n {
                    hessian[i * dim + Self::index(n, k, q, c)] = gram[p * 2 * n + q];
                }
            }
        }
        let constant = 0.5
            * a.as_slice()
                .iter()
                .map(|z| z.re * z.re + z.im * z.im)
                .sum::<f64>();
        Self {
            n,
            k,
            hessian,
            linear,
            constant,
        }
    }

    /// Position of block row `p` (real part for `p < N`, imaginary part
    /// otherwise) and column `c` inside `u`; `vec` stacks columns.
    #[inline]
    fn index(n: usize, k: usize, p: usize, c: usize) -> usize {
        let (part, row) = (p / n, p % n);
        part * n * k + c * n + row
    }

    fn dim(&self) -> usize {
        2 * self.n * self.k
    }

    fn to_real(&self, w: &ComplexMatrix) -> Vec<f64> {
        let mut u = vec![0.0; self.dim()];
        for r in 0..self.n {
            for c in 0..self.k {
                let z = w.get(r, c);
                u[Self::index(self.n, self.k, r, c)] = z.re;
                u[Self::index(self.n, self.k, self.n + r, c)] = z.im;
            }
        }
        u
    }

    fn to_complex(&self, u: &[f64]) -> ComplexMatrix {
        let data = (0..self.n)
            .flat_map(|r| {
                (0..self.k).map(move |c| {
                    C64::new(
                        u[Self::index(self.n, self.k, r, c)],
                        u[Self::index(self.n, self.k, self.n + r, c)],
                    )
                })
            })
            .collect();
        ComplexMatrix::from_raw(self.n, self.k, data)
    }

    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        (0..dim)
            .map(|i| {
                let row = &self.hessian[i * dim..(i + 1) * dim];
                row.iter().zip(u).map(|(q, x)| q * x).sum::<f64>() - self.linear[i]
            })
            .collect()
    }

    fn objective(&self, u: &[f64], v: &[f64]) -> f64 {
        let lin: f64 = u.iter().zip(v).zip(&self.linear).map(|((x, g), c)| x * (g - c)).sum();
        (0.5 * lin + self.constant).max(0.0)
    }

    fn project(&self, u: &mut [f64], ball: &RowBall) {
        for r in 0..self.n {
            let sq: f64 = (0..self.k)
                .map(|c| {
                    let re = u[Self::index(self.n, self.k, r, c)];
                    let im = u[Self::index(self.n, self.k, self.n + r, c)];
                    re * re + im * im
                })
                .sum();
            if let Some(s) = ball.shrink_factor(sq) {
                for c in 0..self.k {
                    u[Self::index(self.n, self.k, r, c)] *= s;
                    u[Self::index(self.n, self.k, self.n + r, c)] *= s;
                }
            }
        }
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// [`pgd_solve`](super::pgd_solve) in the doubled real space.
///
/// `lipschitz` resolves fraction step policies; pass the value the complex
/// run used so both runs take the same step.
pub fn real_augmented_pgd(
    instance: &ProblemInstance,
    w0: &ComplexMatrix,
    ball: &RowBall,
    config: &SolverConfig,
    lipschitz: f64,
) -> Result<SolveResult> {
    instance.check_variable(w0, "real_augmented_pgd")?;
    config.validate()?;
    let step = resolve_alpha(config, lipschitz, Mode::Pgd)?;
    let alpha = step.alpha;
    let prob = RealProblem::new(instance);
    let flops = real_iteration_flops(prob.n, prob.k);

    let start = if is_feasible(w0, ball, 0.0) { w0.clone() } else { project_rows(w0, ball) };
    let mut u = prob.to_real(&start);
    let mut v = prob.gradient(&u);
    let mut f = prob.objective(&u, &v);
    if !f.is_finite() {
        return Err(CmopError::Input("objective at the starting point is not finite".into()));
    }
    let f0 = f;

    let mut trace = Vec::new();
    let mut iterates = Vec::new();
    if config.record_iterates {
        iterates.push(prob.to_complex(&u));
    }
    let mut stop = StopReason::MaxIter;
    let mut iterations = 0;

    for t in 0..config.max_iter {
        let started = config.record_timing.then(Instant::now);
        let mut next: Vec<f64> = u.iter().zip(&v).map(|(x, g)| x - alpha * g).collect();
        prob.project(&mut next, ball);
        let v_next = prob.gradient(&next);
        let f_next = prob.objective(&next, &v_next);
        let d: Vec<f64> = next.iter().zip(&u).map(|(a, b)| a - b).collect();
        let step_norm = dot(&d, &d).sqrt();
        let g_sum: Vec<f64> = v.iter().zip(&v_next).map(|(a, b)| a + b).collect();
        let decrease = -0.5 * dot(&d, &g_sum);
        let elapsed_ns = started.map_or(0, |s| s.elapsed().as_nanos() as u64);

        if config.record_trace {
            trace.push(IterationRecord {
                iter: t,
                objective: f,
                decrease,
                grad_norm: dot(&v, &v).sqrt(),
                step_norm,
                flops,
                elapsed_ns,
            });
        }
        iterations = t + 1;

        if !f_next.is_finite() || next.iter().any(|x| !x.is_finite()) {
            stop = StopReason::Diverged;
            break;
        }
        u = next;
        v = v_next;
        f = f_next;
        if config.record_iterates {
            iterates.push(prob.to_complex(&u));
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
        w_final: prob.to_complex(&u),
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
