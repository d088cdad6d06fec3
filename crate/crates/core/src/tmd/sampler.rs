//! Monte Carlo event generation with dark counts and afterpulsing.
//!
//! Events are generated in chunks of [`SAMPLER_CHUNK`]; chunk `k` draws from
//! its own ChaCha8 stream (`seed`, stream `k`), so the histogram is the same
//! whether chunks run sequentially or on the rayon pool.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use super::exact::coherent_mode_distribution;
use super::{
    Afterpulse, Detector, DetectorConfig, JointClickHistogram, Mode, BINS_PER_MODE,
    JOINT_PATTERNS,
};
use crate::error::{domain, Result};
use crate::exec::Execution;
use crate::fock::JointPhotonDistribution;

/// Events per independently seeded chunk.
pub const SAMPLER_CHUNK: u64 = 1 << 16;

const GATES: usize = 2 * BINS_PER_MODE;

/// Afterpulse pass over the gates in time order.
struct GateSequence {
    /// (mode is idler, bin, detector index, ordinal on that detector)
    gates: [(bool, u8, usize, u8); GATES],
    /// `kernel[Δ]` for Δ = 1..GATES.
    kernel: [f64; GATES + 1],
    enabled: bool,
}

impl GateSequence {
    fn new(cfg: &DetectorConfig) -> Self {
        let mut gates = [(false, 0, 0, 0); GATES];
        for (slot, (mode, bin, det, ordinal)) in cfg.layout.timeline().into_iter().enumerate() {
            let det = match det {
                Detector::A => 0,
                Detector::B => 1,
            };
            gates[slot] = (mode == Mode::Idler, bin as u8, det, ordinal);
        }
        let ap: Afterpulse = cfg.afterpulse;
        let mut kernel = [0.0; GATES + 1];
        for (delta, k) in kernel.iter_mut().enumerate().skip(1) {
            *k = ap.at_distance(delta as u32);
        }
        Self { gates, kernel, enabled: ap.is_enabled() }
    }

    #[inline]
    fn apply<R: Rng>(&self, rng: &mut R, signal: &mut u8, idler: &mut u8) {
        if !self.enabled || (*signal | *idler) == 0 {
            return;
        }
        let mut last: [Option<u8>; 2] = [None, None];
        for &(is_idler, bin, det, ordinal) in &self.gates {
            let mask = if is_idler { &mut *idler } else { &mut *signal };
            let bit = 1u8 << bin;
            if *mask & bit != 0 {
                last[det] = Some(ordinal);
            } else if let Some(prev) = last[det] {
                if rng.random::<f64>() < self.kernel[(ordinal - prev) as usize] {
                    *mask |= bit;
                    last[det] = Some(ordinal);
                }
            }
        }
    }
}

fn run<F>(cfg: &DetectorConfig, events: u64, seed: u64, exec: Execution, draw: F) -> JointClickHistogram
where
    F: Fn(&mut ChaCha8Rng) -> (u8, u8) + Sync + Send,
{
    let gates = GateSequence::new(cfg);
    let chunks = events.div_ceil(SAMPLER_CHUNK) as usize;
    let cells = exec.sum_vectors(chunks, JOINT_PATTERNS, |chunk, acc| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk as u64);
        let start = chunk as u64 * SAMPLER_CHUNK;
        let len = SAMPLER_CHUNK.min(events - start);
        for _ in 0..len {
            let (mut s, mut i) = draw(&mut rng);
            gates.apply(&mut rng, &mut s, &mut i);
            acc[(s as usize) << BINS_PER_MODE | i as usize] += 1;
        }
    });
    JointClickHistogram::from_cells(cells).expect("joint size")
}

/// Bins hit by `photons` photons, each detected with probability `η·w_b`.
#[inline]
fn place<R: Rng>(rng: &mut R, photons: usize, cdf: &[f64; BINS_PER_MODE]) -> u8 {
    let mut mask = 0u8;
    for _ in 0..photons {
        let u: f64 = rng.random();
        if u < cdf[BINS_PER_MODE - 1] {
            let b = cdf.iter().position(|&c| u < c).unwrap_or(BINS_PER_MODE - 1);
            mask |= 1 << b;
        }
    }
    mask
}

#[inline]
fn darks<R: Rng>(rng: &mut R, p: f64) -> u8 {
    let mut mask = 0u8;
    for b in 0..BINS_PER_MODE {
        if rng.random::<f64>() < p {
            mask |= 1 << b;
        }
    }
    mask
}

/// Simulates `events` detection events of the state `p` (normalized over its
/// truncation) on the full detector model.
pub fn sample_patterns(
    p: &JointPhotonDistribution,
    cfg: &DetectorConfig,
    events: u64,
    seed: u64,
) -> Result<JointClickHistogram> {
    sample_patterns_with(p, cfg, events, seed, Execution::default())
}

pub fn sample_patterns_with(
    p: &JointPhotonDistribution,
    cfg: &DetectorConfig,
    events: u64,
    seed: u64,
    exec: Execution,
) -> Result<JointClickHistogram> {
    cfg.validate()?;
    if events == 0 {
        return Err(domain("event count must be at least 1"));
    }
    let d = p.cutoff();
    let alias = WeightedAliasIndex::new(p.probs().to_vec())
        .map_err(|e| domain(format!("cannot sample photon numbers: {e}")))?;
    let cdf = |bins: &[f64; BINS_PER_MODE]| {
        let mut c = [0.0; BINS_PER_MODE];
        let mut acc = 0.0;
        for (ci, w) in c.iter_mut().zip(bins) {
            acc += cfg.efficiency * w;
            *ci = acc;
        }
        c
    };
    let cdf_s = cdf(&cfg.signal_bins);
    let cdf_i = cdf(&cfg.idler_bins);
    let dark = cfg.dark_count_prob;
    Ok(run(cfg, events, seed, exec, |rng| {
        let k = alias.sample(rng);
        let (m, n) = (k / d, k % d);
        let mut s = place(rng, m, &cdf_s);
        let mut i = place(rng, n, &cdf_i);
        if dark > 0.0 {
            s |= darks(rng, dark);
            i |= darks(rng, dark);
        }
        (s, i)
    }))
}

/// Simulates a coherent probe `(mu_s, mu_i)` without photon-number
/// truncation: before afterpulsing, gates click independently.
pub fn sample_coherent_patterns(
    mu_s: f64,
    mu_i: f64,
    cfg: &DetectorConfig,
    events: u64,
    seed: u64,
    exec: Execution,
) -> Result<JointClickHistogram> {
    cfg.validate()?;
    if events == 0 {
        return Err(domain("event count must be at least 1"));
    }
    let base = cfg.clone().without_afterpulse();
    let alias = |mu, mode| -> Result<WeightedAliasIndex<f64>> {
        WeightedAliasIndex::new(coherent_mode_distribution(mu, mode, &base)?)
            .map_err(|e| domain(format!("cannot sample probe patterns: {e}")))
    };
    let s = alias(mu_s, Mode::Signal)?;
    let i = alias(mu_i, Mode::Idler)?;
    Ok(run(cfg, events, seed, exec, |rng| (s.sample(rng) as u8, i.sample(rng) as u8)))
}
