//! Fixtures shared by the benchmarks.

use cmop_core::sample::{random_instance, random_matrix, Prng};
use cmop_core::{ComplexMatrix, Precomputed, ProblemInstance, RowBall};

/// Sizes `(m, n, k)` benchmarked: the reference setup, then growing `m`,
/// `n` and `k` one at a time.
pub const SHAPES: [(usize, usize, usize); 4] = [(10, 5, 8), (100, 5, 8), (20, 10, 8), (10, 5, 16)];

pub struct Fixture {
    pub instance: ProblemInstance,
    pub pre: Precomputed,
    pub ball: RowBall,
    /// A point with rows on both sides of the boundary.
    pub point: ComplexMatrix,
}

pub fn fixture(m: usize, n: usize, k: usize) -> Fixture {
    let instance = random_instance(m, n, k, 10.0, 2.0, 1).expect("valid shape");
    let pre = Precomputed::new(&instance).expect("generic instance");
    let ball = RowBall::from_eta(2.0).expect("positive eta");
    let spread = 1.5 * ball.radius() / (k as f64).sqrt();
    let point = random_matrix(&mut Prng::new(2), n, k, spread);
    Fixture {
        instance,
        pre,
        ball,
        point,
    }
}

pub fn label((m, n, k): (usize, usize, usize)) -> String {
    format!("m{m}_n{n}_k{k}")
}
