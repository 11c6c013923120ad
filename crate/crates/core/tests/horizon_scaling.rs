use proptest::prelude::*;

use shlab_core::horizon::{diff_cdf, expected_jumps, ordering_violations, sample_sh, Grid, ShOptions};
use shlab_core::rng::stream;
use shlab_core::scaling::{densities_for_drifts, h_n_from_bits, h_n_lines_from_fm, lattice_half_width, ScalingParams};
use shlab_core::stats::normal_cdf;
use shlab_core::BinarySeq;

#[test]
fn jump_target_value() {
    let e = expected_jumps(-1.0, 1.0, -1.0, 1.0).unwrap();
    assert!((e - 4.5135).abs() < 1e-4, "{e}");
    // linear in the drift range, square root in the space window
    let half = expected_jumps(0.0, 1.0, -1.0, 1.0).unwrap();
    assert!((2.0 * half - e).abs() < 1e-12);
    let quarter = expected_jumps(-1.0, 1.0, -0.25, 0.25).unwrap();
    assert!((2.0 * quarter - e).abs() < 1e-12);
}

#[test]
fn two_point_law_at_known_points() {
    // the atom at zero, checked by quadrature of the defining integral
    let atom = diff_cdf(0.0, 1.0, 1.0).unwrap();
    assert!((atom - 0.05679).abs() < 1e-4, "{atom}");
    // without drift separation the lines coincide near 0
    assert!(diff_cdf(0.0, 1.0, 1e-9).unwrap() > 0.999);
    assert!(diff_cdf(-0.1, 1.0, 1.0).is_err());
    assert!(diff_cdf(60.0, 1.0, 1.0).unwrap() > 1.0 - 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn two_point_law_is_a_distribution(z1 in 0.0f64..20.0, dz in 0.0f64..5.0, x in 0.05f64..4.0, mu in 0.01f64..3.0) {
        let a = diff_cdf(z1, x, mu).unwrap();
        let b = diff_cdf(z1 + dz, x, mu).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(a <= b + 1e-12);
        // a larger drift gap separates the lines more
        prop_assert!(diff_cdf(z1, x, mu * 1.5).unwrap() <= a + 1e-12);
    }

    #[test]
    fn horizon_samples_are_ordered(seed: u64, gaps in prop::collection::vec(0.05f64..1.5, 1..4)) {
        let mut drifts = vec![-1.0];
        for g in gaps {
            let last = *drifts.last().unwrap();
            drifts.push(last + g);
        }
        let s = sample_sh(&drifts, Grid::symmetric(2.0, 1.0 / 16.0).unwrap(), ShOptions::default(), seed).unwrap();
        prop_assert_eq!(s.lines.len(), drifts.len());
        prop_assert_eq!(ordering_violations(&s.lines, 1e-9), 0);
        for l in &s.lines {
            prop_assert_eq!(l.eval(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn densities_telescope(mu1 in -3.0f64..0.0, gaps in prop::collection::vec(0.01f64..2.0, 0..5), n in 1000.0f64..1e6) {
        let mut drifts = vec![mu1];
        for g in gaps {
            let last = *drifts.last().unwrap();
            drifts.push(last + g);
        }
        prop_assume!(drifts.iter().all(|m| m.abs().powi(3) < n));
        let d = densities_for_drifts(&drifts, n).unwrap();
        let total: f64 = d.lambdas().iter().sum();
        let expected = (1.0 + drifts.last().unwrap() * n.powf(-1.0 / 3.0)) / 2.0;
        prop_assert!((total - expected).abs() < 1e-12);
        prop_assert!(d.lambdas().iter().all(|&l| l > 0.0));
    }

    #[test]
    fn scaled_height_is_anchored_and_reflects(bits in prop::collection::vec(any::<bool>(), 60)) {
        // N = 1000 and x0 = 0.1 need the sites [-20, 19]
        let n = 1000.0;
        let w = lattice_half_width(n, 0.1);
        prop_assert_eq!(w, 20);
        let b = BinarySeq::new(-30, bits).unwrap();
        let h = h_n_from_bits(&b, n, 0.1).unwrap();
        prop_assert_eq!(h.eval(0.0).unwrap(), 0.0);
        let reflected: Vec<bool> = (-30..30).map(|i| b.get(-i - 1).unwrap()).collect();
        let r = h_n_from_bits(&BinarySeq::new(-30, reflected).unwrap(), n, 0.1).unwrap();
        let step = 1.0 / (2.0 * n.powf(2.0 / 3.0));
        for k in -w..=w {
            let x = k as f64 * step;
            prop_assert!((r.eval(x).unwrap() + h.eval(-x).unwrap()).abs() < 1e-12);
        }
    }
}

#[test]
fn centred_lines_are_gaussian_at_finite_n() {
    // CLT oracle: one drift, N = 1000, 2000 replicates of line(1)
    let params = ScalingParams::new(1000.0, vec![0.0], 1.0).unwrap();
    let mut rng = stream(4, "it", 0);
    let mut v: Vec<f64> = (0..2000)
        .map(|_| h_n_lines_from_fm(&params, None, &mut rng).unwrap().lines[0].eval(1.0).unwrap())
        .collect();
    v.sort_by(f64::total_cmp);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (v.len() - 1) as f64;
    assert!(mean.abs() < 0.15, "{mean}");
    assert!((var - 2.0).abs() < 0.25, "{var}");
    // a coarse look at the median and quartiles
    let q = |p: f64| v[(p * v.len() as f64) as usize];
    let sd = 2f64.sqrt();
    for p in [0.25, 0.5, 0.75] {
        assert!((normal_cdf(q(p) / sd) - p).abs() < 0.05);
    }
}

#[test]
fn fm_lines_are_nested() {
    let params = ScalingParams::new(1000.0, vec![-1.0, 0.0, 1.5], 1.0).unwrap();
    let mut rng = stream(7, "it", 1);
    for _ in 0..20 {
        let s = h_n_lines_from_fm(&params, None, &mut rng).unwrap();
        assert_eq!(ordering_violations(&s.lines, 1e-9), 0);
    }
}
