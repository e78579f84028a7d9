//! The least-squares objective `F(W) = 1/2 ||H W - A||_F^2`.
//!
//! Solvers never touch `H` after [`precompute`]: the gradient is
//! `G W - B` with `G = H^H H` and `B = H^H A`, and the objective value is
//! recovered from the gradient as `1/2 Re[W, grad - B]_F + 1/2 ||A||_F^2`,
//! so one iteration costs `O(N^2 K)` regardless of `M`.

use crate::cmat::{
    adjoint_product, frob_norm, re_frob_inner, solve, sq_norm_slice, ComplexMatrix, C64,
};
use crate::error::{dim_err, CmopError, Result};
use crate::sample::{gaussian_matrix, Prng};

pub const DEFAULT_POWER_TOL: f64 = 1e-10;
pub const DEFAULT_POWER_MAX_ITER: usize = 10_000;
const POWER_RESTARTS: usize = 3;
const POWER_SEED: u64 = 0x9e37_79b9_7f4a_7c15;
const PIVOT_REL: f64 = 1e-12;
const SOLVE_RESIDUAL_REL: f64 = 1e-9;

/// Data of one problem: `H` (M x N), `A` (M x K) and the row budget `eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    h: ComplexMatrix,
    a: ComplexMatrix,
    eta: f64,
}

impl ProblemInstance {
    pub fn new(h: ComplexMatrix, a: ComplexMatrix, eta: f64) -> Result<Self> {
        if h.rows() != a.rows() {
            return Err(CmopError::Dimension {
                op: "ProblemInstance::new",
                expected: format!("A with {} rows", h.rows()),
                found: format!("{} rows", a.rows()),
            });
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(CmopError::Input(format!("eta must be positive and finite, got {eta}")));
        }
        if !h.all_finite() || !a.all_finite() {
            return Err(CmopError::NonFinite { what: "instance matrices" });
        }
        Ok(Self { h, a, eta })
    }

    pub fn h(&self) -> &ComplexMatrix {
        &self.h
    }

    pub fn a(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn m(&self) -> usize {
        self.h.rows()
    }

    pub fn n(&self) -> usize {
        self.h.cols()
    }

    pub fn k(&self) -> usize {
        self.a.cols()
    }

    /// Advisory `N <= M`; without it `H^H H` cannot be invertible.
    pub fn is_tall(&self) -> bool {
        self.n() <= self.m()
    }

    /// Same matrices, different budget.
    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::new(self.h.clone(), self.a.clone(), eta)
    }

    pub fn check_variable(&self, w: &ComplexMatrix, op: &'static str) -> Result<()> {
        if w.shape() != (self.n(), self.k()) {
            return Err(dim_err(op, (self.n(), self.k()), w.shape()));
        }
        Ok(())
    }

    /// `1/2 ||H W - A||_F^2`, evaluated directly from `H`.
    pub fn objective(&self, w: &ComplexMatrix) -> Result<f64> {
        self.check_variable(w, "objective")?;
        let r = self.h.matmul(w)?.sub(&self.a)?;
        Ok(0.5 * sq_norm_slice(r.as_slice()))
    }

    /// Central differences of the objective along the real and the
    /// imaginary part of every entry, assembled as `dF/dRe + i dF/dIm`.
    pub fn fd_gradient(&self, w: &ComplexMatrix, step: f64) -> Result<ComplexMatrix> {
        self.check_variable(w, "fd_gradient")?;
        if !(step > 0.0) {
            return Err(CmopError::Input(format!("finite-difference step must be positive, got {step}")));
        }
        let (n, k) = w.shape();
        let mut out = ComplexMatrix::zeros(n, k);
        let mut probe = w.clone();
        for idx in 0..n * k {
            let base = probe.as_slice()[idx];
            let mut partial = |delta: C64| -> Result<f64> {
                probe.as_mut_slice()[idx] = base + delta;
                let plus = self.objective(&probe)?;
                probe.as_mut_slice()[idx] = base - delta;
                let minus = self.objective(&probe)?;
                probe.as_mut_slice()[idx] = base;
                Ok((plus - minus) / (2.0 * step))
            };
            let d_re = partial(C64::new(step, 0.0))?;
            let d_im = partial(C64::new(0.0, step))?;
            out.as_mut_slice()[idx] = C64::new(d_re, d_im);
        }
        Ok(out)
    }
}

/// Step used by [`ProblemInstance::fd_gradient`] when the caller has no
/// preference: `1e-5 * (1 + ||W||_F)`.
pub fn default_fd_step(w: &ComplexMatrix) -> f64 {
    1e-5 * (1.0 + frob_norm(w))
}

/// Normal-equation data cached once per instance.
#[derive(Debug, Clone)]
pub struct Precomputed {
    g: ComplexMatrix,
    b: ComplexMatrix,
    a_sq_norm: f64,
    lipschitz: f64,
    lipschitz_tol: f64,
    top_eigenvector: Vec<C64>,
    power_iterations: usize,
    tall: bool,
}

/// Forms `G = H^H H`, `B = H^H A` and estimates `L = lambda_max(G)` by power
/// iteration.
///
/// Iteration stops once successive Rayleigh quotients agree to `power_tol`
/// relatively, or after `power_max_iter` steps, in which case the last gap
/// is reported as [`Precomputed::lipschitz_tol`]. A start vector that is
/// annihilated by `G` is replaced by a fresh seeded one, at most three
/// times.
pub fn precompute(instance: &ProblemInstance, power_tol: f64, power_max_iter: usize) -> Result<Precomputed> {
    if !(power_tol > 0.0) {
        return Err(CmopError::Config(format!("power_tol must be positive, got {power_tol}")));
    }
    if power_max_iter == 0 {
        return Err(CmopError::Config("power_max_iter must be at least 1".into()));
    }
    let g = adjoint_product(instance.h(), instance.h())?;
    let b = adjoint_product(instance.h(), instance.a())?;
    let a_sq_norm = sq_norm_slice(instance.a().as_slice());
    let est = largest_eigenvalue(&g, power_tol, power_max_iter)?;
    Ok(Precomputed {
        g,
        b,
        a_sq_norm,
        lipschitz: est.value,
        lipschitz_tol: est.gap,
        top_eigenvector: est.vector,
        power_iterations: est.iterations,
        tall: instance.is_tall(),
    })
}

struct Eigen {
    value: f64,
    gap: f64,
    vector: Vec<C64>,
    iterations: usize,
}

fn hermitian_apply(g: &ComplexMatrix, x: &[C64]) -> Vec<C64> {
    (0..g.rows())
        .map(|i| g.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

fn largest_eigenvalue(g: &ComplexMatrix, tol: f64, max_iter: usize) -> Result<Eigen> {
    let n = g.rows();
    let null_floor = 1e-14 * frob_norm(g);
    for restart in 0..=POWER_RESTARTS {
        let mut rng = Prng::new(POWER_SEED.wrapping_add(restart as u64));
        let mut x = gaussian_matrix(&mut rng, n, 1).as_slice().to_vec();
        let nx = sq_norm_slice(&x).sqrt();
        x.iter_mut().for_each(|z| *z /= nx);

        let mut prev: Option<f64> = None;
        let mut gap = f64::INFINITY;
        let mut annihilated = false;
        let mut iterations = 0;
        for it in 0..max_iter {
            iterations = it + 1;
            let y = hermitian_apply(g, &x);
            let ny = sq_norm_slice(&y).sqrt();
            if !(ny > null_floor) {
                annihilated = true;
                break;
            }
            let rho: f64 = x.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum();
            x = y.into_iter().map(|z| z / ny).collect();
            if let Some(p) = prev {
                gap = (rho - p).abs() / rho.abs();
                if gap < tol {
                    break;
                }
            }
            prev = Some(rho);
        }
        if annihilated {
            continue;
        }
        let y = hermitian_apply(g, &x);
        let value: f64 = x.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum();
        return Ok(Eigen {
            value: value.max(0.0),
            gap,
            vector: x,
            iterations,
        });
    }
    Err(CmopError::PowerIteration {
        restarts: POWER_RESTARTS,
    })
}

impl Precomputed {
    /// [`precompute`] with tolerance `1e-10` and at most 10000 iterations.
    pub fn new(instance: &ProblemInstance) -> Result<Self> {
        precompute(instance, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER)
    }

    pub fn g(&self) -> &ComplexMatrix {
        &self.g
    }

    pub fn b(&self) -> &ComplexMatrix {
        &self.b
    }

    pub fn n(&self) -> usize {
        self.g.rows()
    }

    pub fn k(&self) -> usize {
        self.b.cols()
    }

    pub fn a_sq_norm(&self) -> f64 {
        self.a_sq_norm
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Last relative gap between Rayleigh quotients.
    pub fn lipschitz_tol(&self) -> f64 {
        self.lipschitz_tol
    }

    /// Unit eigenvector estimate belonging to [`Self::lipschitz`].
    pub fn top_eigenvector(&self) -> &[C64] {
        &self.top_eigenvector
    }

    pub fn power_iterations(&self) -> usize {
        self.power_iterations
    }

    /// `G W - B`.
    pub fn gradient(&self, w: &ComplexMatrix) -> Result<ComplexMatrix> {
        if w.shape() != (self.n(), self.k()) {
            return Err(dim_err("gradient", (self.n(), self.k()), w.shape()));
        }
        self.g.matmul(w)?.sub(&self.b)
    }

    /// Objective from an already computed gradient at `w`.
    pub fn objective_from_gradient(&self, w: &ComplexMatrix, grad: &ComplexMatrix) -> Result<f64> {
        let lin = re_frob_inner(w, &grad.sub(&self.b)?)?;
        Ok((0.5 * lin + 0.5 * self.a_sq_norm).max(0.0))
    }

    /// Unique unconstrained minimiser `G^{-1} B`.
    ///
    /// Fails when a pivot drops below `1e-12 ||G||_F` or the solve
    /// residual exceeds `1e-9 ||B||_F`.
    pub fn closed_form_unconstrained(&self) -> Result<ComplexMatrix> {
        let advise = |detail: String| CmopError::Singular {
            detail: format!(
                "{detail}; N <= M {}",
                if self.tall { "holds, H is rank deficient" } else { "is violated" }
            ),
        };
        let w = solve(&self.g, &self.b, PIVOT_REL).map_err(|e| match e {
            CmopError::Singular { detail } => advise(detail),
            other => other,
        })?;
        let residual = frob_norm(&self.gradient(&w)?);
        let scale = frob_norm(&self.b);
        if residual > SOLVE_RESIDUAL_REL * scale {
            return Err(advise(format!("solve residual {residual:e} exceeds {SOLVE_RESIDUAL_REL:e} * ||B||")));
        }
        Ok(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{random_instance, random_matrix};

    fn real(rows: usize, cols: usize, v: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_real(rows, cols, v).unwrap()
    }

    #[test]
    fn diagonal_lipschitz() {
        let h = real(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let inst = ProblemInstance::new(h, ComplexMatrix::zeros(2, 3), 1.0).unwrap();
        let pre = Precomputed::new(&inst).unwrap();
        assert!((pre.lipschitz() - 4.0).abs() <= 1e-9);
    }

    #[test]
    fn identity_instance() {
        let mut rng = Prng::new(2);
        let a = random_matrix(&mut rng, 3, 2, 1.0);
        let inst = ProblemInstance::new(ComplexMatrix::identity(3), a.clone(), 1.0).unwrap();
        let pre = Precomputed::new(&inst).unwrap();
        assert!((pre.lipschitz() - 1.0).abs() <= 1e-12);
        assert_eq!(pre.g(), &ComplexMatrix::identity(3));
        assert_eq!(pre.b(), &a);
        assert_eq!(inst.objective(&a).unwrap(), 0.0);
        assert_eq!(pre.closed_form_unconstrained().unwrap().max_abs_diff(&a).unwrap(), 0.0);
    }

    #[test]
    fn scalar_objective_and_solution() {
        let inst = ProblemInstance::new(
            real(1, 1, &[1.0]),
            ComplexMatrix::new(1, 1, vec![C64::new(1.0, 1.0)]).unwrap(),
            1.0,
        )
        .unwrap();
        assert_eq!(inst.objective(&ComplexMatrix::zeros(1, 1)).unwrap(), 1.0);

        let inst = ProblemInstance::new(
            real(1, 1, &[2.0]),
            ComplexMatrix::new(1, 1, vec![C64::new(0.0, 4.0)]).unwrap(),
            1.0,
        )
        .unwrap();
        let w = Precomputed::new(&inst).unwrap().closed_form_unconstrained().unwrap();
        assert!((w.get(0, 0) - C64::new(0.0, 2.0)).norm() <= 1e-15);
    }

    #[test]
    fn gradient_identity_zero_target() {
        let mut rng = Prng::new(4);
        let w = random_matrix(&mut rng, 3, 2, 1.0);
        let inst = ProblemInstance::new(ComplexMatrix::identity(3), ComplexMatrix::zeros(3, 2), 1.0).unwrap();
        let pre = Precomputed::new(&inst).unwrap();
        assert_eq!(pre.gradient(&w).unwrap(), w);

        let one = ComplexMatrix::identity(1);
        let inst = ProblemInstance::new(one.clone(), ComplexMatrix::zeros(1, 1), 1.0).unwrap();
        let fd = inst.fd_gradient(&one, default_fd_step(&one)).unwrap();
        assert!((fd.get(0, 0) - C64::new(1.0, 0.0)).norm() <= 1e-9);
    }

    #[test]
    fn cached_objective_matches_direct() {
        let inst = random_instance(10, 5, 8, 10.0, 2.0, 17).unwrap();
        let pre = Precomputed::new(&inst).unwrap();
        let mut rng = Prng::new(99);
        let w = random_matrix(&mut rng, 5, 8, 1.0);
        let grad = pre.gradient(&w).unwrap();
        let cached = pre.objective_from_gradient(&w, &grad).unwrap();
        let direct = inst.objective(&w).unwrap();
        assert!((cached - direct).abs() <= 1e-10 * direct);
    }

    #[test]
    fn singular_normal_matrix_is_reported() {
        // Wide H: N > M.
        let mut rng = Prng::new(1);
        let h = random_matrix(&mut rng, 2, 4, 1.0);
        let a = random_matrix(&mut rng, 2, 3, 1.0);
        let inst = ProblemInstance::new(h, a, 1.0).unwrap();
        assert!(!inst.is_tall());
        let err = Precomputed::new(&inst).unwrap().closed_form_unconstrained().unwrap_err();
        match err {
            CmopError::Singular { detail } => assert!(detail.contains("N <= M is violated")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_h_fails_power_iteration() {
        let inst = ProblemInstance::new(ComplexMatrix::zeros(3, 2), ComplexMatrix::zeros(3, 1), 1.0).unwrap();
        assert!(matches!(Precomputed::new(&inst), Err(CmopError::PowerIteration { .. })));
    }

    #[test]
    fn instance_validation() {
        assert!(ProblemInstance::new(ComplexMatrix::zeros(3, 2), ComplexMatrix::zeros(2, 1), 1.0).is_err());
        assert!(ProblemInstance::new(ComplexMatrix::zeros(3, 2), ComplexMatrix::zeros(3, 1), 0.0).is_err());
        let inst = ProblemInstance::new(ComplexMatrix::zeros(3, 2), ComplexMatrix::zeros(3, 1), 1.0).unwrap();
        assert!(inst.objective(&ComplexMatrix::zeros(3, 1)).is_err());
    }
}
