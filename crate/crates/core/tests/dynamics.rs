use dynlab::balls::{default_levels, dynamical_ball, BallParams};
use dynlab::spaces::{Dynamics, Point, SystemHandle, Torus2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn cat_is_invertible_on_exact_points() {
    let sys = SystemHandle::cat();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10_000 {
        let den = rng.gen_range(2..1_000_000i64);
        let p = Point::Torus(Torus2::exact([rng.gen_range(0..den), rng.gen_range(0..den)], den).unwrap());
        assert_eq!(sys.backward(&sys.forward(&p).unwrap()).unwrap(), p);
        assert_eq!(sys.forward(&sys.backward(&p).unwrap()).unwrap(), p);
        assert_eq!(sys.iterate(&sys.iterate(&p, 5).unwrap(), -5).unwrap(), p);
    }
}

#[test]
fn cat_is_invertible_on_real_points() {
    let sys = SystemHandle::cat();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10_000 {
        let p = Point::Torus(Torus2::real(rng.gen(), rng.gen()));
        let q = sys.backward(&sys.forward(&p).unwrap()).unwrap();
        assert!(sys.dist(&p, &q).unwrap() < 1e-12);
    }
}

#[test]
fn sphere_iteration_respects_the_antipodal_class() {
    let sys = SystemHandle::sphere();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10_000 {
        let t = Torus2::exact([rng.gen_range(0..997), rng.gen_range(0..997)], 997).unwrap();
        let a = sys.forward(&Point::sphere(t)).unwrap();
        let b = sys.forward(&Point::sphere(t.neg())).unwrap();
        assert_eq!(a, b);
        assert_eq!(sys.backward(&a).unwrap(), Point::sphere(t));
    }
}

#[test]
fn example1_ideal_points_are_fixed() {
    let sys = SystemHandle::example1();
    for k in 1..=100 {
        let p = Point::Example1(dynlab::spaces::Example1Point::Ideal(k));
        assert_eq!(sys.forward(&p).unwrap(), p);
        assert_eq!(sys.backward(&p).unwrap(), p);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    /// Γ_c(x) grows with c on a fixed sample.
    #[test]
    fn ball_members_grow_with_radius(i in 0i64..1000, j in 0i64..1000) {
        let sys = SystemHandle::sphere();
        let x = Point::sphere(Torus2::exact([i, j], 1000).unwrap());
        let levels = default_levels(&sys, &x).unwrap();
        let small = dynamical_ball(&sys, &x, BallParams::new(0.005, 12), &levels).unwrap();
        let large = dynamical_ball(&sys, &x, BallParams::new(0.02, 12), &levels).unwrap();
        prop_assert!(small.members_gamma.iter().all(|p| large.members_gamma.contains(p)));
        prop_assert!(small.check_set_identity() && large.check_set_identity());
    }
}
