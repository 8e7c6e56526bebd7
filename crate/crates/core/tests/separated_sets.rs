use dynlab::balls::{global_grid, Sample};
use dynlab::entropy::{max_separated, verify_witness, SeparationMode};
use dynlab::spaces::{Point, SystemHandle, Torus2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cloud(seed: u64, size: usize) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size).map(|_| Sample::Point(Point::Torus(Torus2::real(rng.gen_range(0.0..0.3), rng.gen_range(0.0..0.3))))).collect()
}

#[test]
fn greedy_never_beats_exact() {
    let sys = SystemHandle::cat();
    for seed in 0..100 {
        let c = cloud(seed, 20);
        let r = max_separated(&sys, &c, 3, 0.1, SeparationMode::Exact).unwrap();
        let exact = r.count_exact.unwrap();
        assert!(r.count_greedy <= exact, "seed {seed}: greedy {} > exact {exact}", r.count_greedy);
        assert_eq!(r.witness.len(), exact);
        assert!(verify_witness(&sys, &c, &r).unwrap());
    }
}

#[test]
fn separated_counts_grow_with_n() {
    let sys = SystemHandle::cat();
    let c = cloud(1, 20);
    let mut last = 0;
    for n in 1..=6 {
        let s = max_separated(&sys, &c, n, 0.1, SeparationMode::Exact).unwrap().count_exact.unwrap();
        assert!(s >= last, "s_{n} = {s} < {last}");
        last = s;
    }
}

#[test]
fn greedy_counts_grow_with_n_on_a_grid() {
    let sys = SystemHandle::cat();
    let c: Vec<Sample> = global_grid(&sys, 20).unwrap().into_iter().map(Sample::Point).collect();
    let counts: Vec<usize> = (1..=5)
        .map(|n| max_separated(&sys, &c, n, 0.1, SeparationMode::Greedy).unwrap().count_greedy)
        .collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
}

#[test]
fn exact_refuses_large_clouds() {
    let sys = SystemHandle::cat();
    assert!(max_separated(&sys, &cloud(0, 26), 2, 0.1, SeparationMode::Exact).is_err());
}
