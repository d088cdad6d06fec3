//! Coherent probes: grids, power calibration, simulated pattern libraries and
//! the zero-click efficiency estimate.

use std::collections::HashSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exec::{derive_seed, Execution};
use crate::fock::{poisson_product, JointPhotonDistribution};
use crate::tmd::{
    coherent_pattern_distribution, sample_coherent_patterns, DetectorConfig, JointClickHistogram,
    JointPatternDistribution,
};

const PLANCK: f64 = 6.626_070_15e-34;
const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// A two-mode coherent probe, described by its mean photon numbers at the
/// detector input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentProbe {
    pub id: u32,
    pub mu_signal: f64,
    pub mu_idler: f64,
    /// Fractional uncertainty of the calibrated mean photon numbers.
    #[serde(default)]
    pub calibration_relative_error: f64,
}

impl CoherentProbe {
    pub fn new(id: u32, mu_signal: f64, mu_idler: f64) -> Result<Self> {
        for mu in [mu_signal, mu_idler] {
            if !(mu >= 0.0) || !mu.is_finite() {
                return Err(domain(format!("probe {id}: mean photon number {mu} must be nonnegative")));
            }
        }
        Ok(Self { id, mu_signal, mu_idler, calibration_relative_error: 0.0 })
    }

    /// Largest coherent amplitude `√μ` over the two modes.
    pub fn max_amplitude(&self) -> f64 {
        self.mu_signal.max(self.mu_idler).sqrt()
    }

    pub fn is_vacuum(&self) -> bool {
        self.mu_signal == 0.0 && self.mu_idler == 0.0
    }

    /// Poisson product truncated at `d` and renormalized.
    pub fn fock(&self, d: usize) -> Result<JointPhotonDistribution> {
        Ok(poisson_product(self.mu_signal, self.mu_idler, d)?.normalized())
    }
}

/// Optical path from the power meter to the detector fiber.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttenuationChain {
    /// Watts.
    pub measured_power: f64,
    /// Hertz.
    pub repetition_rate: f64,
    /// Meters.
    pub wavelength: f64,
    pub transmittances: Vec<f64>,
}

/// Mean photon number per pulse behind the attenuation chain.
pub fn calibrated_mean_photon(chain: &AttenuationChain) -> Result<f64> {
    if !(chain.measured_power >= 0.0) || !chain.measured_power.is_finite() {
        return Err(domain(format!("measured power {} must be nonnegative", chain.measured_power)));
    }
    if !(chain.repetition_rate > 0.0) || !chain.repetition_rate.is_finite() {
        return Err(domain(format!("repetition rate {} must be positive", chain.repetition_rate)));
    }
    if !(chain.wavelength > 0.0) || !chain.wavelength.is_finite() {
        return Err(domain(format!("wavelength {} must be positive", chain.wavelength)));
    }
    if let Some(t) = chain.transmittances.iter().find(|&&t| !(t > 0.0 && t <= 1.0)) {
        return Err(domain(format!("transmittance {t} outside (0, 1]")));
    }
    let photon_energy = PLANCK * SPEED_OF_LIGHT / chain.wavelength;
    let transmission: f64 = chain.transmittances.iter().product();
    Ok(chain.measured_power / chain.repetition_rate * transmission / photon_energy)
}

/// How grid points are spread over `[0, α_max²]` in each mode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    /// Evenly spaced mean photon numbers.
    Linear,
    /// Vacuum plus log-spaced mean photon numbers from `α_max²/100` up.
    Log,
    /// Evenly spaced amplitudes `√μ`.
    #[default]
    Amplitude,
}

fn axis(alpha_max: f64, count: usize, spacing: Spacing) -> Vec<f64> {
    let mu_max = alpha_max * alpha_max;
    if count == 1 {
        return vec![0.0];
    }
    let last = (count - 1) as f64;
    (0..count)
        .map(|k| {
            let t = k as f64 / last;
            match spacing {
                Spacing::Linear => mu_max * t,
                Spacing::Amplitude => mu_max * t * t,
                Spacing::Log if k == 0 => 0.0,
                Spacing::Log => {
                    let lo = (mu_max / 100.0).ln();
                    let s = if count == 2 { 1.0 } else { (k - 1) as f64 / (last - 1.0) };
                    (lo + s * (mu_max.ln() - lo)).exp()
                }
            }
        })
        // Endpoints are pinned so that √μ never exceeds α_max through rounding.
        .map(|mu: f64| mu.min(mu_max))
        .collect()
}

/// Cartesian grid of probes; ids run row-major over (signal, idler) and the
/// vacuum probe has id 0.
pub fn generate_probe_grid(alpha_max: f64, counts: (usize, usize), spacing: Spacing) -> Result<Vec<CoherentProbe>> {
    if !(alpha_max > 0.0) || !alpha_max.is_finite() {
        return Err(domain(format!("amplitude threshold {alpha_max} must be positive")));
    }
    if counts.0 == 0 || counts.1 == 0 {
        return Err(domain("grid counts must be at least 1"));
    }
    let signal = axis(alpha_max, counts.0, spacing);
    let idler = axis(alpha_max, counts.1, spacing);
    let mut probes = Vec::with_capacity(signal.len() * idler.len());
    for &ms in &signal {
        for &mi in &idler {
            probes.push(CoherentProbe::new(probes.len() as u32, ms, mi)?);
        }
    }
    Ok(probes)
}

/// Measured or modeled response of one probe.
#[derive(Clone, Debug, PartialEq)]
pub enum Response {
    Counts(JointClickHistogram),
    Exact(JointPatternDistribution),
}

impl Response {
    pub fn frequencies(&self) -> JointPatternDistribution {
        match self {
            Response::Counts(h) => h.frequencies(),
            Response::Exact(p) => p.clone(),
        }
    }

    /// Number of recorded events; `None` for modeled probabilities.
    pub fn events(&self) -> Option<u64> {
        match self {
            Response::Counts(h) => Some(h.total()),
            Response::Exact(_) => None,
        }
    }
}

/// Probes together with their pattern responses.
#[derive(Clone, Debug)]
pub struct PatternLibrary {
    probes: Vec<CoherentProbe>,
    responses: Vec<Response>,
}

impl PatternLibrary {
    pub fn new(probes: Vec<CoherentProbe>, responses: Vec<Response>) -> Result<Self> {
        if probes.len() != responses.len() {
            return Err(domain(format!(
                "{} probes but {} responses",
                probes.len(),
                responses.len()
            )));
        }
        let mut ids = HashSet::new();
        let mut settings = HashSet::new();
        for p in &probes {
            if !ids.insert(p.id) {
                return Err(domain(format!("duplicate probe id {}", p.id)));
            }
            if !settings.insert((p.mu_signal.to_bits(), p.mu_idler.to_bits())) {
                return Err(domain(format!(
                    "probe {} duplicates the setting ({}, {})",
                    p.id, p.mu_signal, p.mu_idler
                )));
            }
        }
        for (p, r) in probes.iter().zip(&responses) {
            match r {
                Response::Counts(h) if h.total() == 0 => {
                    return Err(domain(format!("probe {} has no recorded events", p.id)));
                }
                Response::Exact(f) if (f.total() - 1.0).abs() > 1e-9 => {
                    return Err(domain(format!("probe {} pattern sums to {}", p.id, f.total())));
                }
                _ => {}
            }
        }
        Ok(Self { probes, responses })
    }

    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }

    pub fn probes(&self) -> &[CoherentProbe] {
        &self.probes
    }

    pub fn responses(&self) -> &[Response] {
        &self.responses
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CoherentProbe, &Response)> {
        self.probes.iter().zip(&self.responses)
    }

    /// Library restricted to the probes at `indices` (in that order).
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let probes = indices.iter().map(|&i| self.probes[i].clone()).collect();
        let responses = indices.iter().map(|&i| self.responses[i].clone()).collect();
        Self::new(probes, responses)
    }

    /// Singular values (descending) of the `M × d²` matrix of truncated
    /// probe photon statistics.
    pub fn fock_singular_values(&self, d: usize) -> Result<Vec<f64>> {
        let rows: Vec<JointPhotonDistribution> =
            self.probes.iter().map(|p| p.fock(d)).collect::<Result<_>>()?;
        let m = DMatrix::from_fn(rows.len(), d * d, |r, c| rows[r].probs()[c]);
        let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        Ok(sv)
    }

    /// Numerical rank of the probe photon statistics at cutoff `d`.
    pub fn fock_rank(&self, d: usize, threshold: f64) -> Result<usize> {
        Ok(self.fock_singular_values(d)?.iter().filter(|&&s| s > threshold).count())
    }
}

/// How probe responses are produced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ResponseModel {
    /// Closed-form pattern probabilities (afterpulse-free detectors only).
    Exact,
    /// Monte Carlo histograms with `events` per probe.
    Sampled { events: u64, seed: u64 },
}

/// Simulates the responses of `probes`. The detector sees each probe with
/// its mean photon numbers scaled by `1 + mu_scale_error`, while the library
/// keeps the nominal values.
pub fn simulate_library(
    probes: &[CoherentProbe],
    cfg: &DetectorConfig,
    model: ResponseModel,
    mu_scale_error: f64,
    exec: Execution,
) -> Result<PatternLibrary> {
    let scale = 1.0 + mu_scale_error;
    if !(scale >= 0.0) {
        return Err(domain(format!("calibration error {mu_scale_error} makes intensities negative")));
    }
    let responses = probes
        .iter()
        .map(|p| {
            let (ms, mi) = (p.mu_signal * scale, p.mu_idler * scale);
            match model {
                ResponseModel::Exact => coherent_pattern_distribution(ms, mi, cfg).map(Response::Exact),
                ResponseModel::Sampled { events, seed } => {
                    let seed = derive_seed(seed, p.id as u64);
                    sample_coherent_patterns(ms, mi, cfg, events, seed, exec).map(Response::Counts)
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    PatternLibrary::new(probes.to_vec(), responses)
}

/// Detection efficiency from the no-click frequencies of the probes:
/// least-squares slope of `-ln f₀` against `μ_s + μ_i` through the origin,
/// with its standard error.
pub fn estimate_efficiency(library: &PatternLibrary) -> Result<(f64, f64)> {
    let mut points = Vec::new();
    for (probe, response) in library.iter() {
        let x = probe.mu_signal + probe.mu_idler;
        if x == 0.0 {
            continue;
        }
        let f0 = response.frequencies().get(0);
        if f0 <= 0.0 {
            log::warn!("probe {} never produced a no-click event; excluded", probe.id);
            continue;
        }
        points.push((x, -f0.ln()));
    }
    let distinct: HashSet<u64> = points.iter().map(|p| p.0.to_bits()).collect();
    if distinct.len() < 2 {
        return Err(Error::InsufficientData(
            "efficiency fit needs probes with at least two distinct nonzero intensities".into(),
        ));
    }
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let eta = sxy / sxx;
    let rss: f64 = points.iter().map(|p| (p.1 - eta * p.0).powi(2)).sum();
    let std = (rss / (points.len() - 1) as f64 / sxx).sqrt();
    Ok((eta, std))
}
