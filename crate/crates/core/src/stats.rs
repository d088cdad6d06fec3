//! Multinomial sampling and bootstrap ensembles over random probe subsets.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{domain, Error, Result};
use crate::exec::Execution;
use crate::fit::{assemble, solve_subset, FitProblem, Reconstruction, SolveOptions, View};
use crate::probes::PatternLibrary;
use crate::tmd::{JointHistogram, Weight};

/// Draws `n` events from the categorical distribution `p` by sequential
/// conditional binomials.
pub fn multinomial_sample(p: &[f64], n: u64, seed: u64) -> Result<Vec<u64>> {
    if p.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(domain("multinomial probabilities must be nonnegative"));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(domain(format!("multinomial probabilities sum to {total}, not 1")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0; p.len()];
    let mut left = n;
    let mut mass = total;
    for (c, &pi) in counts.iter_mut().zip(p) {
        if left == 0 {
            break;
        }
        if pi == 0.0 {
            continue;
        }
        let q = if pi >= mass { 1.0 } else { pi / mass };
        let k = if q >= 1.0 {
            left
        } else {
            Binomial::new(left, q).expect("probability in [0, 1]").sample(&mut rng)
        };
        *c = k;
        left -= k;
        mass -= pi;
    }
    // Rounding in the running mass can leave a few events unassigned.
    if left > 0 {
        let last = p.iter().rposition(|&v| v > 0.0).expect("positive mass");
        counts[last] += left;
    }
    Ok(counts)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BootstrapOptions {
    /// Probes per repetition.
    pub subset_size: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub solve: SolveOptions,
}

/// Reconstructions from random probe subsets with elementwise mean and
/// standard deviation.
#[derive(Clone, Debug)]
pub struct BootstrapEnsemble {
    pub members: Vec<Reconstruction>,
    pub mean: Vec<f64>,
    /// Sample standard deviation (`n − 1` denominator; zero for one member).
    pub std: Vec<f64>,
    pub subset_size: usize,
    pub repetitions: usize,
    /// Repetitions whose solve failed, with the error message.
    pub dropped: Vec<(usize, String)>,
    /// Repetitions whose solver stopped without meeting the tolerance.
    pub unconverged: usize,
}

fn elementwise(members: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
    let n = members.len() as f64;
    let len = members[0].len();
    let mut mean = vec![0.0; len];
    for m in members {
        for (a, v) in mean.iter_mut().zip(*m) {
            *a += v;
        }
    }
    for a in &mut mean {
        *a /= n;
    }
    let mut std = vec![0.0; len];
    if members.len() > 1 {
        for m in members {
            for ((s, v), mu) in std.iter_mut().zip(*m).zip(&mean) {
                *s += (v - mu).powi(2);
            }
        }
        for s in &mut std {
            *s = (*s / (n - 1.0)).sqrt();
        }
    }
    (mean, std)
}

/// Mean and sample standard deviation of a scalar over an ensemble.
pub fn scalar_summary<T>(members: &[T], f: impl Fn(&T) -> f64) -> (f64, f64) {
    let values: Vec<f64> = members.iter().map(f).collect();
    let one: Vec<&[f64]> = values.iter().map(std::slice::from_ref).collect();
    let (m, s) = elementwise(&one);
    (m[0], s[0])
}

impl BootstrapEnsemble {
    pub fn from_members(
        members: Vec<Reconstruction>,
        subset_size: usize,
        repetitions: usize,
    ) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InsufficientData("ensemble has no members".into()));
        }
        if members.iter().any(|m| m.probs().len() != members[0].probs().len()) {
            return Err(domain("ensemble members differ in shape"));
        }
        let views: Vec<&[f64]> = members.iter().map(|m| m.probs()).collect();
        let (mean, std) = elementwise(&views);
        Ok(Self { members, mean, std, subset_size, repetitions, dropped: Vec::new(), unconverged: 0 })
    }

    pub fn cutoff(&self) -> usize {
        self.members[0].cutoff()
    }

    pub fn is_joint(&self) -> bool {
        matches!(self.members[0], Reconstruction::Joint(_))
    }

    /// Ensemble mean as a reconstruction of the members' kind.
    pub fn mean_reconstruction(&self) -> Result<Reconstruction> {
        let total: f64 = self.mean.iter().sum();
        let probs: Vec<f64> = self.mean.iter().map(|v| v / total).collect();
        Ok(match &self.members[0] {
            Reconstruction::Joint(p) => Reconstruction::Joint(crate::fock::JointPhotonDistribution::new(p.cutoff(), probs)?),
            Reconstruction::Single(_) => Reconstruction::Single(crate::fock::PhotonDistribution::new(probs)?),
        })
    }
}

/// Assembles the problem and runs [`bootstrap_problem`].
pub fn bootstrap_reconstruct<T: Weight>(
    library: &PatternLibrary,
    data: &JointHistogram<T>,
    view: View,
    d: usize,
    options: BootstrapOptions,
    exec: Execution,
) -> Result<BootstrapEnsemble> {
    let problem = assemble(library, data, view, d)?;
    bootstrap_problem(&problem, options, exec)
}

/// Solves `repetitions` fits, each on a uniformly drawn subset of
/// `subset_size` probes. Repetition `r` draws from ChaCha8 stream `r`.
pub fn bootstrap_problem(problem: &FitProblem, options: BootstrapOptions, exec: Execution) -> Result<BootstrapEnsemble> {
    let m = problem.len();
    if options.subset_size == 0 || options.subset_size > m {
        return Err(domain(format!(
            "subset size {} outside 1..={m} available probes",
            options.subset_size
        )));
    }
    if options.repetitions == 0 {
        return Err(domain("at least one repetition is required"));
    }
    let fits = exec.map(options.repetitions, |rep| {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        rng.set_stream(rep as u64);
        let mut subset = index::sample(&mut rng, m, options.subset_size).into_vec();
        subset.sort_unstable();
        solve_subset(problem, &subset, options.solve)
    });
    let mut members = Vec::with_capacity(fits.len());
    let mut dropped = Vec::new();
    let mut unconverged = 0;
    for (rep, fit) in fits.into_iter().enumerate() {
        match fit {
            Ok(fit) => {
                if !fit.converged {
                    unconverged += 1;
                }
                members.push(fit.reconstruction);
            }
            Err(e) => {
                log::warn!("bootstrap repetition {rep} dropped: {e}");
                dropped.push((rep, e.to_string()));
            }
        }
    }
    if members.is_empty() {
        return Err(Error::Infeasible(format!(
            "all {} bootstrap repetitions failed",
            options.repetitions
        )));
    }
    let mut ensemble = BootstrapEnsemble::from_members(members, options.subset_size, options.repetitions)?;
    ensemble.dropped = dropped;
    ensemble.unconverged = unconverged;
    Ok(ensemble)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::PhotonDistribution;
    use crate::probes::{generate_probe_grid, simulate_library, ResponseModel, Spacing};
    use crate::tmd::DetectorConfig;

    #[test]
    fn multinomial_basics() {
        let p = [0.2, 0.0, 0.5, 0.3];
        let c = multinomial_sample(&p, 100_000, 4).unwrap();
        assert_eq!(c.iter().sum::<u64>(), 100_000);
        assert_eq!(c[1], 0);
        assert_eq!(c, multinomial_sample(&p, 100_000, 4).unwrap());
        assert_eq!(multinomial_sample(&[0.0, 1.0], 7, 0).unwrap(), vec![0, 7]);
        assert!(multinomial_sample(&[0.0, 0.0], 7, 0).is_err());
        assert!(multinomial_sample(&[0.5, 0.4], 7, 0).is_err());
        assert_eq!(multinomial_sample(&p, 0, 1).unwrap(), vec![0; 4]);
        assert!(multinomial_sample(&[-0.1, 1.0], 7, 0).is_err());
    }

    #[test]
    fn ensemble_statistics() {
        let a = Reconstruction::Single(PhotonDistribution::new(vec![0.5, 0.5]).unwrap());
        let b = Reconstruction::Single(PhotonDistribution::new(vec![0.7, 0.3]).unwrap());
        let e = BootstrapEnsemble::from_members(vec![a.clone(), b], 2, 2).unwrap();
        assert!((e.mean[0] - 0.6).abs() < 1e-15);
        assert!((e.std[0] - 0.02f64.sqrt()).abs() < 1e-12);
        let single = BootstrapEnsemble::from_members(vec![a], 2, 1).unwrap();
        assert_eq!(single.std, vec![0.0, 0.0]);
        assert!(BootstrapEnsemble::from_members(vec![], 2, 1).is_err());
    }

    #[test]
    fn full_subset_has_no_spread() {
        let cfg = DetectorConfig::ideal_gating();
        let probes = generate_probe_grid(2.0, (3, 3), Spacing::Linear).unwrap();
        let lib = simulate_library(&probes, &cfg, ResponseModel::Exact, 0.0, Execution::default()).unwrap();
        let data = lib.responses()[4].frequencies();
        let opts = BootstrapOptions { subset_size: 9, repetitions: 4, seed: 1, solve: SolveOptions::default() };
        let e = bootstrap_reconstruct(&lib, &data, View::Joint, 5, opts, Execution::default()).unwrap();
        assert_eq!(e.members.len(), 4);
        assert!(e.std.iter().all(|&s| s <= 1e-6));
        let seq = bootstrap_reconstruct(&lib, &data, View::Joint, 5, BootstrapOptions { subset_size: 6, ..opts }, Execution::Sequential).unwrap();
        let par = bootstrap_reconstruct(&lib, &data, View::Joint, 5, BootstrapOptions { subset_size: 6, ..opts }, Execution::Parallel).unwrap();
        assert_eq!(seq.mean, par.mean);
        let too_many = BootstrapOptions { subset_size: 10, ..opts };
        assert!(bootstrap_reconstruct(&lib, &data, View::Joint, 5, too_many, Execution::default()).is_err());
    }
}
