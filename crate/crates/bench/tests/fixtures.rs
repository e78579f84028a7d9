use cmop_bench::{fixture, label, SHAPES};
use cmop_core::projection::is_feasible;

#[test]
fn every_fixture_builds_and_straddles_the_ball() {
    for shape in SHAPES {
        let f = fixture(shape.0, shape.1, shape.2);
        assert_eq!(f.point.shape(), (shape.1, shape.2));
        assert!(f.pre.lipschitz() > 0.0);
        assert!(!is_feasible(&f.point, &f.ball, 0.0), "{}", label(shape));
    }
}
