//! Euclidean projection onto the row-power ball
//! `{W : ||row_n(W)||_2 <= r for every n}`.

use crate::cmat::{re_frob_inner, row_sq_norms, sq_norm_slice, ComplexMatrix};
use crate::error::{CmopError, Result};

/// Rows whose norm exceeds the radius by at most this relative amount are
/// treated as lying on the boundary and left untouched.
pub const BOUNDARY_REL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowBall {
    radius: f64,
}

impl RowBall {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(CmopError::Input(format!("row-ball radius must be positive and finite, got {radius}")));
        }
        Ok(Self { radius })
    }

    /// The feasible set of `diag(W W^H) <= eta`: radius `sqrt(eta)`.
    pub fn from_eta(eta: f64) -> Result<Self> {
        Self::new(eta.sqrt())
    }

    /// Radius `eta` itself, i.e. the budget read as a row-norm bound. Kept
    /// for reproducing runs that compare row norms directly against `eta`.
    pub fn eta_as_radius(eta: f64) -> Result<Self> {
        Self::new(eta)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Bound on the squared row norm.
    pub fn budget(&self) -> f64 {
        self.radius * self.radius
    }

    /// Scale factor applied to a row with squared norm `sq`, if any.
    #[inline]
    pub(crate) fn shrink_factor(&self, sq: f64) -> Option<f64> {
        let norm = sq.sqrt();
        if norm > self.radius * (1.0 + BOUNDARY_REL) {
            Some(self.radius / norm)
        } else {
            None
        }
    }
}

/// Nearest point of the ball: rows outside are rescaled onto the boundary,
/// all other rows are copied bit for bit.
pub fn project_rows(w: &ComplexMatrix, ball: &RowBall) -> ComplexMatrix {
    let mut out = w.clone();
    project_rows_in_place(&mut out, ball);
    out
}

pub(crate) fn project_rows_in_place(w: &mut ComplexMatrix, ball: &RowBall) -> usize {
    let mut scaled = 0;
    for r in 0..w.rows() {
        let row = w.row_mut(r);
        if let Some(s) = ball.shrink_factor(sq_norm_slice(row)) {
            row.iter_mut().for_each(|z| *z *= s);
            scaled += 1;
        }
    }
    scaled
}

pub fn is_feasible(w: &ComplexMatrix, ball: &RowBall, tol: f64) -> bool {
    let budget = ball.budget();
    row_sq_norms(w).iter().all(|&sq| sq <= budget + tol)
}

/// Variational-inequality residual `Re[W+ - W, V - W+]_F` for
/// `W+ = P(V)` and a feasible test point `W`.
///
/// For an exact projection this is nonnegative for every feasible `W`;
/// a clearly negative value means `w_plus` is not the nearest point.
pub fn vi_residual(w_plus: &ComplexMatrix, v: &ComplexMatrix, w_test: &ComplexMatrix, ball: &RowBall) -> Result<f64> {
    let tol = 1e-12 * ball.budget().max(1.0);
    if !is_feasible(w_test, ball, tol) {
        return Err(CmopError::Contract("vi_residual test point lies outside the row ball".into()));
    }
    re_frob_inner(&w_plus.sub(w_test)?, &v.sub(w_plus)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmat::{frob_norm, C64};
    use crate::sample::{random_feasible, random_matrix, Prng};

    #[test]
    fn shrinks_only_long_rows() {
        let w = ComplexMatrix::from_real(2, 2, &[3.0, 0.0, 0.0, 1.0]).unwrap();
        let p = project_rows(&w, &RowBall::new(2.0).unwrap());
        assert_eq!(p, ComplexMatrix::from_real(2, 2, &[2.0, 0.0, 0.0, 1.0]).unwrap());
    }

    #[test]
    fn feasible_input_is_untouched() {
        let mut rng = Prng::new(3);
        let ball = RowBall::from_eta(2.0).unwrap();
        let w = random_feasible(&mut rng, 5, 8, ball.radius());
        assert_eq!(project_rows(&w, &ball), w);
    }

    #[test]
    fn projection_beats_random_feasible_competitors() {
        let mut rng = Prng::new(10);
        let ball = RowBall::new(2f64.sqrt()).unwrap();
        let w = random_matrix(&mut rng, 5, 8, 3.0);
        let p = project_rows(&w, &ball);
        let d = frob_norm(&w.sub(&p).unwrap());
        for _ in 0..200 {
            let z = random_feasible(&mut rng, 5, 8, ball.radius());
            assert!(d <= frob_norm(&w.sub(&z).unwrap()) + 1e-12);
        }
    }

    #[test]
    fn feasibility_checks() {
        let ball = RowBall::from_eta(2.0).unwrap();
        assert!(is_feasible(&ComplexMatrix::zeros(3, 2), &ball, 0.0));
        let w = ComplexMatrix::new(1, 2, vec![C64::new(1.0, 1.0), C64::new(1.0, -1.0)]).unwrap();
        assert!(!is_feasible(&w, &ball, 0.0));
        let mut rng = Prng::new(4);
        for _ in 0..100 {
            let v = random_matrix(&mut rng, 5, 8, 5.0);
            assert!(is_feasible(&project_rows(&v, &ball), &ball, 1e-12));
        }
    }

    #[test]
    fn vi_residual_trivial_cases() {
        let mut rng = Prng::new(6);
        let ball = RowBall::from_eta(2.0).unwrap();
        let v = random_feasible(&mut rng, 4, 3, ball.radius());
        let w_plus = project_rows(&v, &ball);
        let w_test = random_feasible(&mut rng, 4, 3, ball.radius());
        assert_eq!(vi_residual(&w_plus, &v, &w_test, &ball).unwrap(), 0.0);

        let v = random_matrix(&mut rng, 4, 3, 5.0);
        let w_plus = project_rows(&v, &ball);
        assert_eq!(vi_residual(&w_plus, &v, &w_plus, &ball).unwrap(), 0.0);

        let outside = random_matrix(&mut rng, 4, 3, 50.0);
        assert!(matches!(
            vi_residual(&w_plus, &v, &outside, &ball),
            Err(CmopError::Contract(_))
        ));
    }

    #[test]
    fn zero_radius_rejected() {
        assert!(RowBall::new(0.0).is_err());
        assert!(RowBall::from_eta(-1.0).is_err());
        assert_eq!(RowBall::eta_as_radius(2.0).unwrap().radius(), 2.0);
    }
}
