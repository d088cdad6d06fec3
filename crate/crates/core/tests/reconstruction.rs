mod common;

use common::max_abs_diff;
use tmdtomo::fit::{assemble, solve, SolveOptions, View};
use tmdtomo::fock::{apply_loss, pdc_distribution, LossChannel};
use tmdtomo::herald::{HeraldCondition, HeraldKind};
use tmdtomo::probes::{generate_probe_grid, simulate_library, PatternLibrary, ResponseModel, Spacing};
use tmdtomo::stats::{bootstrap_problem, bootstrap_reconstruct, BootstrapOptions};
use tmdtomo::tmd::{exact_pattern_distribution, DetectorConfig, JointPatternDistribution, Mode};
use tmdtomo::Execution;

fn exact_library(grid: usize) -> PatternLibrary {
    let cfg = DetectorConfig::ideal_gating();
    let probes = generate_probe_grid(2.0, (grid, grid), Spacing::Linear).unwrap();
    simulate_library(&probes, &cfg, ResponseModel::Exact, 0.0, Execution::default()).unwrap()
}

/// Exact frequencies of a fixed mixture of library probes.
fn probe_mixture(lib: &PatternLibrary, parts: &[(usize, f64)]) -> JointPatternDistribution {
    let mut cells = vec![0.0; 65536];
    for &(k, w) in parts {
        for (c, v) in cells.iter_mut().zip(lib.responses()[k].frequencies().cells()) {
            *c += w * v;
        }
    }
    JointPatternDistribution::from_probabilities(cells).unwrap()
}

#[test]
fn single_mode_views_agree_with_joint_marginals() {
    // Small enough that probe mixtures are identifiable.
    let lib = exact_library(3);
    let parts = [(4, 0.5), (5, 0.3), (8, 0.2)];
    let data = probe_mixture(&lib, &parts);
    let d = 6;
    let opts = SolveOptions::default();
    let joint = solve(&assemble(&lib, &data, View::Joint, d).unwrap(), opts).unwrap();
    let joint = joint.reconstruction.as_joint().unwrap().clone();
    let mut truth = vec![0.0; d * d];
    for (k, w) in parts {
        for (t, v) in truth.iter_mut().zip(lib.probes()[k].fock(d).unwrap().probs()) {
            *t += w * v;
        }
    }
    let err = max_abs_diff(joint.probs(), &truth);
    assert!(err < 1e-6, "joint: {err}");
    for mode in Mode::BOTH {
        let expect = match mode {
            Mode::Signal => joint.signal_marginal(),
            Mode::Idler => joint.idler_marginal(),
        };
        for view in [View::Marginal(mode), View::ClassReduced(mode)] {
            let fit = solve(&assemble(&lib, &data, view, d).unwrap(), opts).unwrap();
            let got = fit.reconstruction.as_single().unwrap();
            let err = max_abs_diff(got.probs(), expect.normalized().probs());
            assert!(err < 1e-5, "{view}: {err}");
        }
    }
}

#[test]
fn heralded_views_select_idler_probes() {
    let lib = exact_library(4);
    let cfg = DetectorConfig::ideal_gating();
    let data = probe_mixture(&lib, &[(6, 1.0)]);
    let view = View::Heralded(HeraldCondition::new(HeraldKind::Double, &cfg));
    let problem = assemble(&lib, &data, view, 5).unwrap();
    // The four probes without signal light are excluded.
    assert_eq!(problem.len(), 12);
    let fit = solve(&problem, SolveOptions::default()).unwrap();
    // A coherent state heralds its own idler marginal.
    let expect = lib.probes()[6].fock(5).unwrap().idler_marginal().normalized();
    assert!(max_abs_diff(fit.reconstruction.probs(), expect.probs()) < 1e-5);
}

#[test]
fn bootstrap_is_deterministic_and_valid() {
    let cfg = DetectorConfig::ideal_gating();
    let probes = generate_probe_grid(2.0, (6, 6), Spacing::Amplitude).unwrap();
    let lib = simulate_library(&probes, &cfg, ResponseModel::Sampled { events: 100_000, seed: 2 }, 0.0, Execution::default()).unwrap();
    let truth = apply_loss(&pdc_distribution(0.76, 20).unwrap(), LossChannel::symmetric(0.75).unwrap()).unwrap();
    let data = exact_pattern_distribution(&truth, &cfg).unwrap();
    let opts = BootstrapOptions { subset_size: 20, repetitions: 8, seed: 4, solve: SolveOptions::default() };
    let a = bootstrap_reconstruct(&lib, &data, View::Joint, 5, opts, Execution::Parallel).unwrap();
    let b = bootstrap_reconstruct(&lib, &data, View::Joint, 5, opts, Execution::Sequential).unwrap();
    assert_eq!(a.mean, b.mean);
    assert_eq!(a.std, b.std);
    assert!(a.mean.iter().all(|&v| v >= 0.0));
    assert!((a.mean.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    let one = bootstrap_reconstruct(&lib, &data, View::Joint, 5, BootstrapOptions { repetitions: 1, ..opts }, Execution::default()).unwrap();
    assert!(one.std.iter().all(|&s| s == 0.0));
}

#[test]
fn spread_shrinks_with_subset_size() {
    let cfg = DetectorConfig::ideal_gating();
    let probes = generate_probe_grid(2.0, (16, 16), Spacing::Amplitude).unwrap();
    let lib = simulate_library(&probes, &cfg, ResponseModel::Exact, 0.0, Execution::default()).unwrap();
    let truth = apply_loss(&pdc_distribution(0.76, 20).unwrap(), LossChannel::symmetric(0.75).unwrap()).unwrap();
    let data = exact_pattern_distribution(&truth, &cfg).unwrap();
    let problem = assemble(&lib, &data, View::Marginal(Mode::Idler), 6).unwrap();
    let mean_std = |m: usize| -> f64 {
        (0..10u64)
            .map(|seed| {
                let opts = BootstrapOptions { subset_size: m, repetitions: 10, seed, solve: SolveOptions::default() };
                let e = bootstrap_problem(&problem, opts, Execution::default()).unwrap();
                e.std.iter().sum::<f64>() / e.std.len() as f64
            })
            .sum::<f64>()
            / 10.0
    };
    let (small, large) = (mean_std(30), mean_std(200));
    assert!(large <= small, "std at M=200 {large} vs M=30 {small}");
}
