use tmdtomo::fock::{pdc_distribution, JointPhotonDistribution};
use tmdtomo::herald::{herald_povm, herald_povm_monte_carlo, herald_select, post_measurement_idler, HeraldCondition, HeraldKind};
use tmdtomo::tmd::{exact_pattern_distribution, mode_response, sample_patterns, DetectorConfig, Mode, MODE_PATTERNS};
use tmdtomo::Execution;

#[test]
fn exact_povm_matches_monte_carlo() {
    let cfg = DetectorConfig::ideal_gating();
    for kind in [HeraldKind::Single, HeraldKind::Double] {
        let exact = herald_povm(kind, &cfg, 6).unwrap();
        let mc = herald_povm_monte_carlo(kind, &cfg, 6, 1_000_000, 21, Execution::default()).unwrap();
        let se = mc.std_error().unwrap();
        for m in 0..6 {
            let (e, s) = (exact.elements()[m], mc.elements()[m]);
            assert!(e >= 0.0);
            assert!((e - s).abs() <= 3.0 * se[m].max(1e-12), "{kind:?} m={m}: exact {e}, mc {s} ± {}", se[m]);
        }
    }
}

#[test]
fn povm_element_with_dark_counts() {
    let mut cfg = DetectorConfig::ideal_gating();
    cfg.dark_count_prob = 1e-3;
    let single = herald_povm(HeraldKind::Single, &cfg, 3).unwrap();
    // Vacuum heralds only through exactly one dark count among 8 signal gates.
    let expect = 8.0 * 1e-3 * (1.0f64 - 1e-3).powi(7);
    assert!((single.elements()[0] - expect).abs() < 1e-15);
}

#[test]
fn selected_idler_patterns_follow_the_heralded_state() {
    let cfg = DetectorConfig::ideal_gating();
    let p = pdc_distribution(0.76, 10).unwrap().normalized();
    let f = exact_pattern_distribution(&p, &cfg).unwrap();
    let idler_response = mode_response(Mode::Idler, &cfg, 10).unwrap();
    for kind in [HeraldKind::Single, HeraldKind::Double] {
        let (idler, total) = herald_select(&f, &HeraldCondition::new(kind, &cfg));
        let state = post_measurement_idler(&p, &herald_povm(kind, &cfg, 10).unwrap()).unwrap();
        for beta in 0..MODE_PATTERNS {
            let expect: f64 = (0..10).map(|n| state.get(n) * idler_response[n][beta]).sum();
            let err = (idler.cells()[beta] / total - expect).abs();
            assert!(err < 1e-12, "{kind:?} {beta}: {err}");
        }
    }
}

#[test]
fn sampled_herald_rate_matches_povm() {
    let cfg = DetectorConfig::ideal_gating();
    let p = pdc_distribution(0.76, 20).unwrap().normalized();
    let n = 1_000_000;
    let h = sample_patterns(&p, &cfg, n, 8).unwrap();
    let povm = herald_povm(HeraldKind::Single, &cfg, 20).unwrap();
    let rate: f64 = (0..20).map(|m| povm.elements()[m] * p.signal_marginal().get(m)).sum();
    let (_, count) = herald_select(&h, &HeraldCondition::new(HeraldKind::Single, &cfg));
    let sigma = (rate * (1.0 - rate) / n as f64).sqrt();
    assert!((count as f64 / n as f64 - rate).abs() < 4.0 * sigma);
}

#[test]
fn uncorrelated_source_heralds_nothing_new() {
    let cfg = DetectorConfig::ideal_gating();
    let signal = pdc_distribution(0.5, 6).unwrap().signal_marginal();
    let idler = pdc_distribution(1.2, 6).unwrap().idler_marginal();
    let p = JointPhotonDistribution::product(&signal, &idler).unwrap();
    let state = post_measurement_idler(&p, &herald_povm(HeraldKind::Single, &cfg, 6).unwrap()).unwrap();
    let marginal = idler.normalized();
    for k in 0..6 {
        assert!((state.get(k) - marginal.get(k)).abs() < 1e-14);
    }
}
