use dynlab::spaces::{
    cantor_dist, example1_dist, shift_dist, sphere_dist, torus_dist, CantorPoint, Example1Point, ShiftPoint, Torus2,
};
use num_rational::Ratio;
use proptest::prelude::*;

const TOL: f64 = 1e-12;

fn torus() -> impl Strategy<Value = Torus2> {
    (0.0..1.0f64, 0.0..1.0f64).prop_map(|(x, y)| Torus2::real(x, y))
}

fn example1() -> impl Strategy<Value = Example1Point> {
    prop_oneof![
        torus().prop_map(Example1Point::Base),
        (1u64..200).prop_map(Example1Point::Ideal),
        (1u64..u32::MAX as u64).prop_map(Example1Point::Ideal),
    ]
}

fn word(len: usize) -> impl Strategy<Value = Vec<u8>> {
    proptest::collection::vec(0u8..2, len)
}

fn inv(k: u64) -> Ratio<u128> {
    Ratio::new(1, k as u128)
}

/// Ideal-ideal distance in exact arithmetic.
fn ideal_dist(m: u64, k: u64) -> Ratio<u128> {
    if m == k {
        Ratio::from_integer(0)
    } else {
        inv(m) + inv(k)
    }
}

fn axioms(dxy: f64, dyz: f64, dxz: f64, dyx: f64, dxx: f64, same: bool) -> Result<(), TestCaseError> {
    prop_assert!(dxy >= 0.0);
    prop_assert_eq!(dxx, 0.0);
    prop_assert_eq!(dxy, dyx);
    prop_assert_eq!(dxy == 0.0, same);
    prop_assert!(dxz <= dxy + dyz + TOL, "triangle: {dxz} > {dxy} + {dyz}");
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100_000, ..ProptestConfig::default() })]

    #[test]
    fn example1_metric_axioms(x in example1(), y in example1(), z in example1()) {
        let d = example1_dist;
        if let (Example1Point::Ideal(a), Example1Point::Ideal(b), Example1Point::Ideal(c)) = (x, y, z) {
            prop_assert!(ideal_dist(a, c) <= ideal_dist(a, b) + ideal_dist(b, c));
            prop_assert_eq!(ideal_dist(a, b), ideal_dist(b, a));
            prop_assert_eq!(ideal_dist(a, b) == Ratio::from_integer(0), a == b);
        }
        axioms(d(&x, &y), d(&y, &z), d(&x, &z), d(&y, &x), d(&x, &x), x == y)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 20_000, ..ProptestConfig::default() })]

    #[test]
    fn torus_metric_axioms(x in torus(), y in torus(), z in torus()) {
        let d = torus_dist;
        axioms(d(&x, &y), d(&y, &z), d(&x, &z), d(&y, &x), d(&x, &x), x == y)?;
        prop_assert!(d(&x, &y) <= 0.5f64.hypot(0.5) + TOL);
    }

    #[test]
    fn sphere_metric_axioms(x in torus(), y in torus(), z in torus()) {
        let d = sphere_dist;
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + TOL);
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        prop_assert!(d(&x, &x.neg()) < TOL);
        prop_assert!(d(&x, &y) <= torus_dist(&x, &y) + TOL);
    }

    #[test]
    fn shift_metric_axioms(a in word(9), b in word(9), c in word(9)) {
        let (x, y, z) = (ShiftPoint::centered(a.clone()).unwrap(), ShiftPoint::centered(b.clone()).unwrap(), ShiftPoint::centered(c).unwrap());
        let d = shift_dist;
        axioms(d(&x, &y), d(&y, &z), d(&x, &z), d(&y, &x), d(&x, &x), a == b)?;
        // Ultrametric.
        prop_assert!(d(&x, &z) <= d(&x, &y).max(d(&y, &z)));
    }

    #[test]
    fn cantor_metric_axioms(a in word(12), b in word(12), c in word(12)) {
        let (x, y, z) = (CantorPoint { bits: a.clone() }, CantorPoint { bits: b.clone() }, CantorPoint { bits: c });
        let d = |p: &CantorPoint, q: &CantorPoint| cantor_dist(p, q).unwrap();
        axioms(d(&x, &y), d(&y, &z), d(&x, &z), d(&y, &x), d(&x, &x), a == b)?;
        prop_assert!(d(&x, &z) <= d(&x, &y).max(d(&y, &z)));
    }
}

/// The five cases of the Example 1 metric for every ideal index up to 100,
/// against exact fractions.
#[test]
fn example1_five_cases_exhaustive() {
    let a = Torus2::exact([3, 7], 10).unwrap();
    let b = Torus2::exact([1, 9], 10).unwrap();
    let p0 = Torus2::origin();
    let close = |x: f64, r: Ratio<u128>| (x - *r.numer() as f64 / *r.denom() as f64).abs() < 1e-15;
    assert_eq!(example1_dist(&Example1Point::Base(a), &Example1Point::Base(b)), torus_dist(&a, &b));
    for k in 1..=100u64 {
        let pk = Example1Point::Ideal(k);
        let base = Example1Point::Base(a);
        let want = 1.0 / k as f64 + torus_dist(&a, &p0);
        assert!((example1_dist(&base, &pk) - want).abs() < 1e-15);
        assert!((example1_dist(&pk, &base) - want).abs() < 1e-15);
        assert_eq!(example1_dist(&Example1Point::anchor(), &pk), 1.0 / k as f64);
        for m in 1..=100u64 {
            let d = example1_dist(&Example1Point::Ideal(m), &pk);
            assert!(close(d, ideal_dist(m, k)), "p_{m}, p_{k}: {d}");
        }
    }
}
