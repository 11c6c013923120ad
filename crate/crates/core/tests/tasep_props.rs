use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shlab_core::tasep::{random_labels, run_basic_coupling, ClockStream, Direction, Geometry, TasepState};
use shlab_core::{Label, HOLE};

fn geometry() -> impl Strategy<Value = Geometry> {
    prop_oneof![Just(Geometry::Ring), Just(Geometry::Segment)]
}

fn direction() -> impl Strategy<Value = Direction> {
    prop_oneof![Just(Direction::Left), Just(Direction::Right)]
}

fn labels(len: usize, m: u32, seed: u64) -> Vec<Label> {
    random_labels(len, m, 0.3, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn sorted(v: &[Label]) -> Vec<Label> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn labels_are_conserved(len in 2usize..60, seed: u64, g in geometry(), d in direction(), t in 0.0f64..30.0) {
        let start = labels(len, 4, seed);
        let mut s = TasepState::new(start.clone(), g, d).unwrap();
        s.run(&mut ClockStream::new(seed, len), t).unwrap();
        prop_assert_eq!(sorted(s.labels()), sorted(&start));
        // displacements of all identities sum to zero on the ring and on a segment
        prop_assert_eq!((0..len).map(|i| s.displacement(i)).sum::<i64>(), 0);
    }

    #[test]
    fn basic_coupling_keeps_the_order(len in 2usize..50, seed: u64, g in geometry(), d in direction()) {
        // raise some labels: eta <= zeta sitewise
        let eta = labels(len, 3, seed);
        let bumps = labels(len, 2, seed ^ 1);
        let zeta: Vec<Label> = eta
            .iter()
            .zip(&bumps)
            .map(|(&a, &b)| if a == HOLE || b == HOLE { a } else { (a + b).min(4) })
            .collect();
        let mut states = vec![TasepState::new(eta, g, d).unwrap(), TasepState::new(zeta, g, d).unwrap()];
        run_basic_coupling(&mut states, &mut ClockStream::new(seed, len), 25.0).unwrap();
        for (a, b) in states[0].labels().iter().zip(states[1].labels()) {
            prop_assert!(a <= b, "{:?} vs {:?}", states[0].labels(), states[1].labels());
        }
    }

    #[test]
    fn thresholds_follow_single_type_dynamics(len in 2usize..50, seed: u64, g in geometry(), d in direction(), k in 1u32..4) {
        let eta = labels(len, 4, seed);
        let proj: Vec<Label> = eta.iter().map(|&l| if l <= k { 1 } else { HOLE }).collect();
        let mut states = vec![TasepState::new(eta, g, d).unwrap(), TasepState::new(proj, g, d).unwrap()];
        run_basic_coupling(&mut states, &mut ClockStream::new(seed, len), 20.0).unwrap();
        for (a, b) in states[0].labels().iter().zip(states[1].labels()) {
            prop_assert_eq!(*a <= k, *b == 1);
        }
    }

    #[test]
    fn reflection_is_equivariant(len in 2usize..40, seed: u64, g in geometry(), d in direction()) {
        let start = TasepState::new(labels(len, 3, seed), g, d).unwrap();
        let mut forward = start.clone();
        forward.run(&mut ClockStream::new(seed, len), 15.0).unwrap();
        let mut mirrored = start.reflected();
        mirrored.run(&mut ClockStream::reflected(seed, len), 15.0).unwrap();
        prop_assert_eq!(mirrored, forward.reflected());
    }
}

#[test]
fn free_particle_moves_at_unit_speed() {
    let len = 50;
    let t = 1000.0;
    let mut start = vec![HOLE; len];
    start[0] = 1;
    let mut s = TasepState::new(start, Geometry::Ring, Direction::Right).unwrap();
    s.run(&mut ClockStream::new(3, len), t).unwrap();
    // Poisson(T) jumps
    let z = (s.displacement(0) as f64 - t) / t.sqrt();
    assert!(z.abs() < 4.0, "z = {z}");
}

#[test]
fn fully_labelled_start_has_signed_speeds() {
    let len = 400;
    let t = 100.0;
    let mut s = TasepState::fully_labeled(len, Geometry::Ring, Direction::Right).unwrap();
    s.run(&mut ClockStream::new(9, len), t).unwrap();
    // away from the seam the speeds are close to uniform on [-1, 1]
    let speeds: Vec<f64> = (130..270).map(|i| s.displacement(i) as f64 / t).collect();
    assert!(speeds.iter().any(|&u| u > 0.3) && speeds.iter().any(|&u| u < -0.3));
    let mean: f64 = (130..270).map(|i| s.displacement(i) as f64 / t).sum::<f64>() / 140.0;
    assert!(mean.abs() < 0.3, "mean speed {mean}");
}
