mod common;

use common::{brute_force, detector, max_abs_diff};
use proptest::prelude::*;
use tmdtomo::fock::{pdc_distribution, JointPhotonDistribution};
use tmdtomo::tmd::{
    build_response_matrix, exact_pattern_distribution, marginalize, mode_response, ClickPattern, DetectorConfig, Mode,
    JOINT_PATTERNS, MODE_PATTERNS,
};

#[test]
fn matches_enumeration_for_small_fock_pairs() {
    for (eta, random) in [(0.22, false), (1.0, false), (0.22, true), (1.0, true)] {
        let cfg = detector(eta, random, 17);
        for m in 0..=4 {
            for n in 0..=4 - m {
                let exact = exact_pattern_distribution(&JointPhotonDistribution::delta(m, n, 5), &cfg).unwrap();
                let err = max_abs_diff(exact.cells(), &brute_force(m, n, &cfg));
                assert!(err < 1e-12, "eta {eta} random {random} ({m},{n}): {err}");
            }
        }
    }
}

#[test]
fn matches_enumeration_with_dark_counts() {
    let mut cfg = detector(0.5, true, 3);
    cfg.dark_count_prob = 0.01;
    for (m, n) in [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0)] {
        let exact = exact_pattern_distribution(&JointPhotonDistribution::delta(m, n, 3), &cfg).unwrap();
        assert!(max_abs_diff(exact.cells(), &brute_force(m, n, &cfg)) < 1e-12);
    }
}

#[test]
fn linear_in_the_photon_distribution() {
    let cfg = detector(0.3, true, 5);
    let a = pdc_distribution(0.5, 6).unwrap().normalized();
    let b = JointPhotonDistribution::delta(2, 3, 6);
    let mix: Vec<f64> = a.probs().iter().zip(b.probs()).map(|(x, y)| 0.25 * x + 0.75 * y).collect();
    let mix = JointPhotonDistribution::new(6, mix).unwrap();
    let fa = exact_pattern_distribution(&a, &cfg).unwrap();
    let fb = exact_pattern_distribution(&b, &cfg).unwrap();
    let fm = exact_pattern_distribution(&mix, &cfg).unwrap();
    for k in 0..JOINT_PATTERNS {
        assert!((fm.cells()[k] - 0.25 * fa.cells()[k] - 0.75 * fb.cells()[k]).abs() < 1e-15);
    }
    let matrix = build_response_matrix(&cfg, 6).unwrap();
    assert!(max_abs_diff(matrix.apply(&mix).unwrap().cells(), fm.cells()) < 1e-15);
}

fn permute_mask(mask: u8, perm: &[usize; 8]) -> u8 {
    (0..8).filter(|&b| mask & (1 << b) != 0).fold(0, |acc, b| acc | (1 << perm[b]))
}

#[test]
fn covariant_under_bin_permutations() {
    let cfg = detector(0.4, true, 9);
    let perm = [3, 0, 7, 1, 6, 2, 5, 4];
    let mut permuted = cfg.clone();
    for b in 0..8 {
        permuted.signal_bins[perm[b]] = cfg.signal_bins[b];
        permuted.idler_bins[perm[b]] = cfg.idler_bins[b];
    }
    let p = pdc_distribution(0.8, 5).unwrap().normalized();
    let f = exact_pattern_distribution(&p, &cfg).unwrap();
    let g = exact_pattern_distribution(&p, &permuted).unwrap();
    for k in 0..JOINT_PATTERNS {
        let c = ClickPattern::from_index(k);
        let moved = ClickPattern::new(permute_mask(c.mask(Mode::Signal), &perm), permute_mask(c.mask(Mode::Idler), &perm));
        assert!((f.cells()[k] - g.cells()[moved.index()]).abs() < 1e-15);
    }
}

#[test]
fn marginals_follow_single_mode_responses() {
    let cfg = DetectorConfig::ideal_gating();
    let p = pdc_distribution(0.76, 8).unwrap().normalized();
    let (signal, _) = marginalize(&exact_pattern_distribution(&p, &cfg).unwrap());
    let s = mode_response(Mode::Signal, &cfg, 8).unwrap();
    let pm = p.signal_marginal();
    for alpha in 0..MODE_PATTERNS {
        let expect: f64 = (0..8).map(|m| pm.get(m) * s[m][alpha]).sum();
        assert!((signal.cells()[alpha] - expect).abs() < 1e-15);
    }
}

#[test]
fn afterpulsing_is_rejected() {
    let p = JointPhotonDistribution::delta(1, 1, 2);
    assert!(exact_pattern_distribution(&p, &DetectorConfig::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn distributions_are_normalized(weights in prop::collection::vec(0.0f64..1.0, 16), eta in 0.0f64..=1.0, dark in 0.0f64..0.1) {
        let total: f64 = weights.iter().sum::<f64>() + 1e-3;
        let probs: Vec<f64> = weights.iter().map(|w| (w + 1e-3 / 16.0) / total).collect();
        let p = JointPhotonDistribution::new(4, probs).unwrap();
        let mut cfg = DetectorConfig::ideal_gating().with_efficiency(eta);
        cfg.dark_count_prob = dark;
        let f = exact_pattern_distribution(&p, &cfg).unwrap();
        prop_assert!(f.cells().iter().all(|&v| v >= 0.0));
        prop_assert!((f.cells().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
