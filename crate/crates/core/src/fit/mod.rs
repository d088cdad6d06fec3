//! Data-pattern tomography.
//!
//! The unknown state is written as a combination `P = Σ_ξ x_ξ P^(ξ)` of the
//! probe photon statistics, and the weights are chosen so that the same
//! combination of probe patterns reproduces the measured pattern:
//!
//! ```text
//! min_x ‖f − Σ_ξ x_ξ f^(ξ)‖²   subject to   Σ_ξ x_ξ P^(ξ) ≥ 0,  Σ_mn Σ_ξ x_ξ P^(ξ)_mn = 1
//! ```
//!
//! Only `P` is identified; the weights are generally not unique.

mod qp;

use std::fmt;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};
use crate::exec::Execution;
use crate::fock::{fidelity, poisson, JointPhotonDistribution, PhotonDistribution};
use crate::herald::{herald_select, HeraldCondition, HeraldKind};
use crate::probes::PatternLibrary;
use crate::tmd::{
    marginalize, reduce_to_click_classes, DetectorConfig, JointHistogram, Mode, Weight,
};

/// Which reduction of the joint click statistics is fitted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum View {
    Joint,
    Marginal(Mode),
    ClassReduced(Mode),
    /// Idler patterns conditioned on a signal herald.
    Heralded(HeraldCondition),
}

impl View {
    /// Parses `joint`, `marginal-signal`, `marginal-idler`, `class-signal`,
    /// `class-idler`, `heralded-single` or `heralded-double`.
    pub fn parse(s: &str, cfg: &DetectorConfig) -> Result<Self> {
        Ok(match s {
            "joint" => View::Joint,
            "marginal-signal" => View::Marginal(Mode::Signal),
            "marginal-idler" => View::Marginal(Mode::Idler),
            "class-signal" => View::ClassReduced(Mode::Signal),
            "class-idler" => View::ClassReduced(Mode::Idler),
            "heralded-single" => View::Heralded(HeraldCondition::new(HeraldKind::Single, cfg)),
            "heralded-double" => View::Heralded(HeraldCondition::new(HeraldKind::Double, cfg)),
            other => return Err(domain(format!("unknown view '{other}'"))),
        })
    }

    pub fn is_joint(&self) -> bool {
        matches!(self, View::Joint)
    }

    /// Mode whose photon statistics a single-mode view reconstructs.
    fn mode(&self) -> Option<Mode> {
        match *self {
            View::Joint => None,
            View::Marginal(m) | View::ClassReduced(m) => Some(m),
            View::Heralded(_) => Some(Mode::Idler),
        }
    }

    /// Reduced data vector, or `None` if a herald never fires.
    fn reduce<T: Weight>(&self, h: &JointHistogram<T>) -> Option<Vec<f64>> {
        let f = h.frequencies();
        let out = match *self {
            View::Joint => f.cells().to_vec(),
            View::Marginal(mode) => {
                let (s, i) = marginalize(&f);
                match mode {
                    Mode::Signal => s.cells().to_vec(),
                    Mode::Idler => i.cells().to_vec(),
                }
            }
            View::ClassReduced(mode) => {
                let (s, i) = marginalize(&f);
                let m = if mode == Mode::Signal { s } else { i };
                reduce_to_click_classes(&m).to_vec()
            }
            View::Heralded(cond) => {
                let (idler, total) = herald_select(&f, &cond);
                if !(total > 0.0) {
                    return None;
                }
                idler.frequencies().cells().to_vec()
            }
        };
        Some(out)
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = |m: &Mode| match m {
            Mode::Signal => "signal",
            Mode::Idler => "idler",
        };
        match self {
            View::Joint => write!(f, "joint"),
            View::Marginal(m) => write!(f, "marginal-{}", mode(m)),
            View::ClassReduced(m) => write!(f, "class-{}", mode(m)),
            View::Heralded(c) => match c.kind {
                HeraldKind::Single => write!(f, "heralded-single"),
                HeraldKind::Double => write!(f, "heralded-double"),
            },
        }
    }
}

/// Reconstructed photon statistics: two-mode for the joint view, single-mode
/// otherwise.
#[derive(Clone, Debug, PartialEq)]
pub enum Reconstruction {
    Joint(JointPhotonDistribution),
    Single(PhotonDistribution),
}

impl Reconstruction {
    pub fn probs(&self) -> &[f64] {
        match self {
            Reconstruction::Joint(p) => p.probs(),
            Reconstruction::Single(p) => p.probs(),
        }
    }

    pub fn cutoff(&self) -> usize {
        match self {
            Reconstruction::Joint(p) => p.cutoff(),
            Reconstruction::Single(p) => p.cutoff(),
        }
    }

    pub fn fidelity(&self, other: &Reconstruction) -> Result<f64> {
        match (self, other) {
            (Reconstruction::Joint(a), Reconstruction::Joint(b)) => a.fidelity(b),
            (Reconstruction::Single(a), Reconstruction::Single(b)) => a.fidelity(b),
            _ => Err(domain("fidelity between a joint and a single-mode reconstruction")),
        }
    }

    pub fn as_joint(&self) -> Option<&JointPhotonDistribution> {
        match self {
            Reconstruction::Joint(p) => Some(p),
            Reconstruction::Single(_) => None,
        }
    }

    pub fn as_single(&self) -> Option<&PhotonDistribution> {
        match self {
            Reconstruction::Single(p) => Some(p),
            Reconstruction::Joint(_) => None,
        }
    }

    fn from_probs(joint: bool, d: usize, probs: Vec<f64>) -> Result<Self> {
        Ok(if joint {
            Reconstruction::Joint(JointPhotonDistribution::new(d, probs)?)
        } else {
            Reconstruction::Single(PhotonDistribution::new(probs)?)
        })
    }
}

struct Gram {
    q: DMatrix<f64>,
    c: DVector<f64>,
    ff: f64,
}

/// Data, probe patterns and probe photon statistics of one fit.
pub struct FitProblem {
    view: View,
    cutoff: usize,
    data: Vec<f64>,
    patterns: Vec<Vec<f64>>,
    probe_fock: Vec<Vec<f64>>,
    probe_ids: Vec<u32>,
    gram: OnceLock<Gram>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, ra) = a.split_at(a.len() / 4 * 4);
    let (cb, rb) = b.split_at(ca.len());
    for (x, y) in ca.chunks_exact(4).zip(cb.chunks_exact(4)) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    acc[0] + acc[1] + acc[2] + acc[3] + tail
}

impl FitProblem {
    /// Builds a problem from its parts; shapes are checked, normalization is
    /// not.
    pub fn from_parts(
        view: View,
        cutoff: usize,
        data: Vec<f64>,
        patterns: Vec<Vec<f64>>,
        probe_fock: Vec<Vec<f64>>,
        probe_ids: Vec<u32>,
    ) -> Result<Self> {
        if patterns.is_empty() {
            return Err(domain("fit problem needs at least one probe"));
        }
        if patterns.len() != probe_fock.len() || patterns.len() != probe_ids.len() {
            return Err(domain("pattern, photon-statistics and id lists differ in length"));
        }
        if patterns.iter().any(|p| p.len() != data.len()) {
            return Err(domain("patterns and data differ in length"));
        }
        let dim = if view.is_joint() { cutoff * cutoff } else { cutoff };
        if cutoff == 0 || probe_fock.iter().any(|p| p.len() != dim) {
            return Err(domain(format!("probe photon statistics must have {dim} entries")));
        }
        if data.iter().chain(patterns.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(domain("non-finite pattern frequency"));
        }
        Ok(Self { view, cutoff, data, patterns, probe_fock, probe_ids, gram: OnceLock::new() })
    }

    pub fn view(&self) -> View {
        self.view
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn patterns(&self) -> &[Vec<f64>] {
        &self.patterns
    }

    pub fn probe_fock(&self) -> &[Vec<f64>] {
        &self.probe_fock
    }

    pub fn probe_ids(&self) -> &[u32] {
        &self.probe_ids
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    fn gram(&self) -> &Gram {
        self.gram.get_or_init(|| {
            let m = self.patterns.len();
            let rows = Execution::default().map(m, |i| {
                (i..m).map(|j| dot(&self.patterns[i], &self.patterns[j])).collect::<Vec<_>>()
            });
            let mut q = DMatrix::zeros(m, m);
            for (i, row) in rows.into_iter().enumerate() {
                for (k, v) in row.into_iter().enumerate() {
                    q[(i, i + k)] = v;
                    q[(i + k, i)] = v;
                }
            }
            let c = DVector::from_iterator(m, self.patterns.iter().map(|p| dot(p, &self.data)));
            Gram { q, c, ff: dot(&self.data, &self.data) }
        })
    }

    /// Singular values of the pattern matrix, descending.
    pub fn pattern_singular_values(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(self.gram().q.clone());
        let mut sv: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(0.0).sqrt()).collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }
}

/// Assembles the fit of `data` against the library under `view`.
pub fn assemble<T: Weight>(
    library: &PatternLibrary,
    data: &JointHistogram<T>,
    view: View,
    d: usize,
) -> Result<FitProblem> {
    let data = view.reduce(data).ok_or_else(|| {
        Error::InsufficientData(format!("no data events satisfy the {view} condition"))
    })?;
    let mut problem = assemble_patterns(library, view, d)?;
    problem.data = data;
    Ok(problem)
}

fn assemble_patterns(library: &PatternLibrary, view: View, d: usize) -> Result<FitProblem> {
    if library.is_empty() {
        return Err(domain("probe library is empty"));
    }
    if d == 0 {
        return Err(domain("cutoff must be at least 1"));
    }
    let reduced = Execution::default().map(library.len(), |k| view.reduce(&library.responses()[k].frequencies()));
    let mut patterns = Vec::new();
    let mut fock = Vec::new();
    let mut ids = Vec::new();
    for ((probe, _), pattern) in library.iter().zip(reduced) {
        let Some(pattern) = pattern else {
            log::debug!("probe {} never satisfies the {view} condition; excluded", probe.id);
            continue;
        };
        let sum: f64 = pattern.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(domain(format!("pattern of probe {} sums to {sum}", probe.id)));
        }
        let stats = match view.mode() {
            None => probe.fock(d)?.probs().to_vec(),
            Some(Mode::Signal) => poisson(probe.mu_signal, d)?.normalized().probs().to_vec(),
            Some(Mode::Idler) => poisson(probe.mu_idler, d)?.normalized().probs().to_vec(),
        };
        patterns.push(pattern);
        fock.push(stats);
        ids.push(probe.id);
    }
    if patterns.is_empty() {
        return Err(Error::InsufficientData(format!("no probe satisfies the {view} condition")));
    }
    let len = patterns[0].len();
    FitProblem::from_parts(view, d, vec![0.0; len], patterns, fock, ids)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    /// Bound on the KKT residual, in units where the Gram matrix has unit
    /// mean diagonal.
    pub tolerance: f64,
    /// Cap on active-set iterations.
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_iterations: 10_000 }
    }
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub view: View,
    /// Probe weights, aligned with `probe_ids`.
    pub weights: Vec<f64>,
    pub probe_ids: Vec<u32>,
    pub reconstruction: Reconstruction,
    /// Squared distance `‖f − Σ x_ξ f^(ξ)‖²` at the solution.
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
    pub kkt_residual: f64,
    /// Objective at the successive outer iterates (nonincreasing).
    pub trace: Vec<f64>,
}

pub fn solve(problem: &FitProblem, options: SolveOptions) -> Result<FitResult> {
    let all: Vec<usize> = (0..problem.len()).collect();
    solve_subset(problem, &all, options)
}

/// Solves using only the probes at `indices` of the problem.
pub fn solve_subset(problem: &FitProblem, indices: &[usize], options: SolveOptions) -> Result<FitResult> {
    let gram = problem.gram();
    let c = DVector::from_iterator(indices.len(), indices.iter().map(|&i| gram.c[i]));
    solve_with(problem, indices, &c, gram.ff, Some(&problem.data), options)
}

fn solve_with(
    problem: &FitProblem,
    indices: &[usize],
    c: &DVector<f64>,
    ff: f64,
    data: Option<&[f64]>,
    options: SolveOptions,
) -> Result<FitResult> {
    if indices.iter().any(|&i| i >= problem.len()) {
        return Err(domain("probe index out of range"));
    }
    let gram = problem.gram();
    let k = indices.len();
    let q = DMatrix::from_fn(k, k, |a, b| gram.q[(indices[a], indices[b])]);
    let dim = problem.probe_fock[0].len();
    let a = DMatrix::from_fn(dim, k, |r, j| problem.probe_fock[indices[j]][r]);
    let sol = qp::solve_qp(&q, c, ff, &a, qp::QpOptions {
        tolerance: options.tolerance,
        max_iterations: options.max_iterations,
    })?;

    let mut p = vec![0.0; dim];
    for (j, &i) in indices.iter().enumerate() {
        for (v, &w) in p.iter_mut().zip(&problem.probe_fock[i]) {
            *v += sol.x[j] * w;
        }
    }
    let mut converged = sol.converged;
    let worst = p.iter().copied().fold(0.0, f64::min);
    if worst < -1e-9 {
        log::warn!("reconstruction has entry {worst}; clamped");
        converged = false;
    }
    for v in &mut p {
        *v = v.max(0.0);
    }
    let total: f64 = p.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Infeasible("reconstruction has no positive mass".into()));
    }
    for v in &mut p {
        *v /= total;
    }

    let residual = match data {
        Some(f) => {
            let mut r: Vec<f64> = f.iter().map(|v| -v).collect();
            for (j, &i) in indices.iter().enumerate() {
                let w = sol.x[j];
                for (ri, &pi) in r.iter_mut().zip(&problem.patterns[i]) {
                    *ri += w * pi;
                }
            }
            dot(&r, &r)
        }
        None => *sol.trace.last().expect("trace starts at the initial point"),
    };

    Ok(FitResult {
        view: problem.view,
        weights: sol.x.iter().copied().collect(),
        probe_ids: indices.iter().map(|&i| problem.probe_ids[i]).collect(),
        reconstruction: Reconstruction::from_probs(problem.view.is_joint(), problem.cutoff, p)?,
        residual,
        converged,
        iterations: sol.iterations,
        kkt_residual: sol.kkt_residual,
        trace: sol.trace,
    })
}

/// Summary of one cross-validation repetition.
#[derive(Clone, Debug, PartialEq)]
pub struct HoldoutScore {
    pub held_out: Vec<u32>,
    pub mean_fidelity: f64,
    pub mean_max_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossValidation {
    pub repetitions: Vec<HoldoutScore>,
    pub fidelity_mean: f64,
    pub fidelity_std: f64,
    pub max_error_mean: f64,
    pub max_error_std: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Repeatedly holds out a random fraction of the probes and reconstructs
/// each held-out probe from the rest, scoring against its known photon
/// statistics.
#[allow(clippy::too_many_arguments)]
pub fn cross_validate(
    library: &PatternLibrary,
    holdout_fraction: f64,
    repetitions: usize,
    view: View,
    d: usize,
    seed: u64,
    options: SolveOptions,
    exec: Execution,
) -> Result<CrossValidation> {
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(domain(format!("holdout fraction {holdout_fraction} outside (0, 1)")));
    }
    if repetitions == 0 {
        return Err(domain("at least one repetition is required"));
    }
    let problem = assemble_patterns(library, view, d)?;
    let m = problem.len();
    let held = ((holdout_fraction * m as f64).round() as usize).max(1);
    if m < held + 2 {
        return Err(domain(format!("holding out {held} of {m} probes leaves fewer than 2")));
    }
    let gram = problem.gram();
    let scores = exec.map(repetitions, |rep| -> Result<HoldoutScore> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(rep as u64);
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(&mut rng);
        let (out, kept) = order.split_at(held);
        let mut fids = Vec::with_capacity(held);
        let mut errs = Vec::with_capacity(held);
        for &j in out {
            let c = DVector::from_iterator(kept.len(), kept.iter().map(|&i| gram.q[(i, j)]));
            let fit = solve_with(&problem, kept, &c, gram.q[(j, j)], None, options)?;
            let truth = &problem.probe_fock[j];
            let total: f64 = truth.iter().sum();
            let truth: Vec<f64> = truth.iter().map(|v| v / total).collect();
            fids.push(fidelity(fit.reconstruction.probs(), &truth)?);
            errs.push(
                fit.reconstruction
                    .probs()
                    .iter()
                    .zip(&truth)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max),
            );
        }
        Ok(HoldoutScore {
            held_out: out.iter().map(|&j| problem.probe_ids[j]).collect(),
            mean_fidelity: mean_std(&fids).0,
            mean_max_error: mean_std(&errs).0,
        })
    });
    let repetitions = scores.into_iter().collect::<Result<Vec<_>>>()?;
    let (fidelity_mean, fidelity_std) = mean_std(&repetitions.iter().map(|s| s.mean_fidelity).collect::<Vec<_>>());
    let (max_error_mean, max_error_std) = mean_std(&repetitions.iter().map(|s| s.mean_max_error).collect::<Vec<_>>());
    Ok(CrossValidation { repetitions, fidelity_mean, fidelity_std, max_error_mean, max_error_std })
}
