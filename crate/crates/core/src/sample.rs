//! Seeded random instances.
//!
//! The generator is SplitMix64. A uniform `f64` in `[0, 1)` is the top 53
//! bits of one 64-bit draw scaled by `2^-53`; a component in
//! `[-range, range]` is `range * (2u - 1)`. Entries are filled row-major,
//! real part then imaginary part, `H` before `A`. These rules are part of
//! the instance-file contract: the same seed gives the same matrices on
//! every platform.

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::cmat::{frob_norm, ComplexMatrix, C64};
use crate::error::Result;
use crate::objective::ProblemInstance;

/// Identifier written into instance files next to the seed.
pub const PRNG_ID: &str = "splitmix64";

#[derive(Debug, Clone)]
pub struct Prng(SplitMix64);

impl Prng {
    pub fn new(seed: u64) -> Self {
        Self(SplitMix64::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[-range, range]`.
    pub fn symmetric(&mut self, range: f64) -> f64 {
        range * (2.0 * self.unit() - 1.0)
    }

    pub fn complex(&mut self, range: f64) -> C64 {
        let re = self.symmetric(range);
        let im = self.symmetric(range);
        C64::new(re, im)
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.unit();
        let u2 = self.unit();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

pub fn random_matrix(rng: &mut Prng, rows: usize, cols: usize, range: f64) -> ComplexMatrix {
    let data = (0..rows * cols).map(|_| rng.complex(range)).collect();
    ComplexMatrix::from_raw(rows, cols, data)
}

/// Matrix with i.i.d. standard complex Gaussian entries; isotropic in the
/// real `2 * rows * cols` dimensional space.
pub fn gaussian_matrix(rng: &mut Prng, rows: usize, cols: usize) -> ComplexMatrix {
    let data = (0..rows * cols)
        .map(|_| {
            let re = rng.normal();
            let im = rng.normal();
            C64::new(re, im)
        })
        .collect();
    ComplexMatrix::from_raw(rows, cols, data)
}

/// Random point of the row ball of radius `radius`. About a quarter of the
/// rows land exactly on the boundary, the rest strictly inside.
pub fn random_feasible(rng: &mut Prng, rows: usize, cols: usize, radius: f64) -> ComplexMatrix {
    let mut w = gaussian_matrix(rng, rows, cols);
    for r in 0..rows {
        let on_boundary = rng.unit() < 0.25;
        let target = if on_boundary { radius } else { radius * rng.unit() };
        let row = w.row_mut(r);
        let norm = row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            let s = target / norm;
            row.iter_mut().for_each(|z| *z *= s);
        }
    }
    w
}

/// Random matrix scaled to the given Frobenius norm.
pub fn random_with_norm(rng: &mut Prng, rows: usize, cols: usize, norm: f64) -> ComplexMatrix {
    let w = gaussian_matrix(rng, rows, cols);
    let current = frob_norm(&w);
    if current == 0.0 {
        return w;
    }
    w.scale(norm / current)
}

/// `H` (m x n) and `A` (m x k) with every real and imaginary component
/// uniform in `[-range, range]`.
pub fn random_instance(m: usize, n: usize, k: usize, range: f64, eta: f64, seed: u64) -> Result<ProblemInstance> {
    let mut rng = Prng::new(seed);
    let h = random_matrix(&mut rng, m, n, range);
    let a = random_matrix(&mut rng, m, k, range);
    ProblemInstance::new(h, a, eta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = random_instance(10, 5, 8, 10.0, 2.0, 42).unwrap();
        let b = random_instance(10, 5, 8, 10.0, 2.0, 42).unwrap();
        assert_eq!(a.h(), b.h());
        assert_eq!(a.a(), b.a());
        let c = random_instance(10, 5, 8, 10.0, 2.0, 43).unwrap();
        assert_ne!(a.h(), c.h());
    }

    #[test]
    fn components_within_range() {
        let inst = random_instance(10, 5, 8, 10.0, 2.0, 7).unwrap();
        for z in inst.h().as_slice().iter().chain(inst.a().as_slice()) {
            assert!(z.re.abs() <= 10.0 && z.im.abs() <= 10.0);
        }
    }

    #[test]
    fn feasible_sampler_respects_radius() {
        let mut rng = Prng::new(1);
        for _ in 0..50 {
            let w = random_feasible(&mut rng, 5, 8, 2f64.sqrt());
            for r in 0..5 {
                let sq: f64 = w.row(r).iter().map(|z| z.norm_sqr()).sum();
                assert!(sq <= 2.0 * (1.0 + 1e-14));
            }
        }
    }
}
