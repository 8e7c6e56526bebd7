use dynlab::balls::global_grid;
use dynlab::chainrec::{chain_graph, nonwandering_estimate, transitivity_check};
use dynlab::orbits::{linear_shadow_with, Closure, PseudoOrbit};
use dynlab::spaces::{torus_dist, Direction, Dynamics, HyperbolicMatrix, Point, SystemHandle, Torus2};
use dynlab::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `x ↦ x/2` on the square `[0, 1/2)²`, a gradient-like map whose only
/// recurrent point is the origin.
struct Halving;

impl Dynamics for Halving {
    fn name(&self) -> &str {
        "halving"
    }

    fn apply(&self, p: &Point, dir: Direction) -> Result<Point> {
        let Point::Torus(t) = p else {
            return Err(Error::InvalidParameter("halving acts on torus points".into()));
        };
        let [x, y] = t.coords();
        let s = match dir {
            Direction::Forward => 0.5,
            Direction::Backward => 2.0,
        };
        Ok(Point::Torus(Torus2::real(x * s, y * s)))
    }

    fn dist(&self, a: &Point, b: &Point) -> Result<f64> {
        match (a, b) {
            (Point::Torus(x), Point::Torus(y)) => Ok(torus_dist(x, y)),
            _ => Err(Error::InvalidParameter("halving acts on torus points".into())),
        }
    }
}

#[test]
fn contraction_recurs_only_at_its_fixed_point() {
    let cloud: Vec<Point> = (0..10)
        .flat_map(|i| (0..10).map(move |j| Point::Torus(Torus2::real(i as f64 / 20.0, j as f64 / 20.0))))
        .collect();
    let g = chain_graph(&Halving, &cloud, 0.01).unwrap();
    assert_eq!(nonwandering_estimate(&g), vec![0]);
}

#[test]
fn cat_chain_graph_is_one_class() {
    let sys = SystemHandle::cat();
    let cloud = global_grid(&sys, 20).unwrap();
    let g = chain_graph(&sys, &cloud, 0.06).unwrap();
    assert_eq!(g.classes.len(), 1);
    assert_eq!(nonwandering_estimate(&g).len(), cloud.len());
}

#[test]
fn chain_paths_are_shadowed() {
    let sys = SystemHandle::cat();
    let delta = 0.03;
    let cloud = global_grid(&sys, 40).unwrap();
    let g = chain_graph(&sys, &cloud, delta).unwrap();
    let bound = 5f64.sqrt() * delta;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let len = rng.gen_range(2..=200);
        let mut u = rng.gen_range(0..cloud.len());
        let mut path = vec![cloud[u].clone()];
        while path.len() < len {
            let next: Vec<usize> = g.successors(u).collect();
            u = next[rng.gen_range(0..next.len())];
            path.push(cloud[u].clone());
        }
        let po = PseudoOrbit { points: path, delta };
        let s = linear_shadow_with(&HyperbolicMatrix::CAT, &po, Closure::Open).unwrap();
        assert!(s.epsilon_achieved <= bound * (1.0 + 1e-6), "{} > {bound}", s.epsilon_achieved);
        assert!(s.is_genuine());
    }
}

#[test]
fn irrational_cat_orbit_fills_the_grid() {
    let sys = SystemHandle::cat();
    let x = Point::Torus(Torus2::real(2f64.sqrt() - 1.0, 3f64.sqrt() - 1.0));
    let r = transitivity_check(&sys, &x, 100_000, 50).unwrap();
    assert_eq!(r.cells, 2500);
    assert!(r.forward_visited as f64 >= 0.99 * 2500.0, "{} cells", r.forward_visited);
    assert!(r.backward_visited as f64 >= 0.99 * 2500.0, "{} cells", r.backward_visited);
    assert!(r.forward_transitive && r.backward_transitive);
}

#[test]
fn fixed_ideal_point_visits_one_cell() {
    let sys = SystemHandle::example1();
    let p = Point::Example1(dynlab::spaces::Example1Point::Ideal(4));
    let r = transitivity_check(&sys, &p, 1000, 50).unwrap();
    assert_eq!(r.forward_visited, 1);
    assert!(!r.forward_transitive);
}
