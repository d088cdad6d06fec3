//! Diagonal photon-number distributions.
//!
//! Every state and POVM element handled by this crate is diagonal in the
//! photon-number basis, so a single-mode state is a probability vector over
//! `n = 0..d` and a two-mode state is a `d × d` matrix `P[m][n]` with `m`
//! counting signal photons and `n` idler photons.
//!
//! Distributions produced by truncating an analytic law (thermal, Poisson)
//! keep the raw truncated values and may therefore sum to slightly less than
//! one; use [`PhotonDistribution::normalized`] /
//! [`JointPhotonDistribution::normalized`] where a proper distribution is
//! needed.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Slack allowed above unit total mass.
pub const MASS_EPS: f64 = 1e-9;

fn check_probs(probs: &[f64]) -> Result<()> {
    if let Some((i, p)) = probs
        .iter()
        .enumerate()
        .find(|(_, p)| !p.is_finite() || **p < 0.0)
    {
        return Err(domain(format!("entry {i} is {p}, expected a nonnegative number")));
    }
    let total: f64 = probs.iter().sum();
    if total > 1.0 + MASS_EPS {
        return Err(domain(format!("total probability {total} exceeds 1")));
    }
    Ok(())
}

/// Single-mode photon-number distribution truncated at `cutoff()`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotonDistribution {
    probs: Vec<f64>,
}

impl PhotonDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(domain("cutoff must be at least 1"));
        }
        check_probs(&probs)?;
        Ok(Self { probs })
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn vacuum(d: usize) -> Self {
        Self::fock(0, d)
    }

    /// The number state `|n⟩` in a space of cutoff `d` (requires `n < d`).
    pub fn fock(n: usize, d: usize) -> Self {
        assert!(n < d, "photon number {n} outside cutoff {d}");
        let mut probs = vec![0.0; d];
        probs[n] = 1.0;
        Self { probs }
    }

    pub fn cutoff(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Rescales to unit total mass. A zero distribution is returned unchanged.
    pub fn normalized(&self) -> Self {
        let t = self.total();
        if t <= 0.0 {
            return self.clone();
        }
        Self {
            probs: self.probs.iter().map(|p| p / t).collect(),
        }
    }

    pub fn mean_photon(&self) -> f64 {
        mean_photon(self)
    }

    pub fn wigner_at_origin(&self) -> f64 {
        wigner_at_origin(self)
    }

    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        fidelity(&self.probs, &other.probs)
    }

    pub fn apply_loss(&self, efficiency: f64) -> Result<Self> {
        apply_loss_single(self, efficiency)
    }
}

/// Two-mode photon-number distribution, `probs[m * d + n] = P(m, n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointPhotonDistribution {
    cutoff: usize,
    probs: Vec<f64>,
}

impl JointPhotonDistribution {
    pub fn new(cutoff: usize, probs: Vec<f64>) -> Result<Self> {
        if cutoff == 0 {
            return Err(domain("cutoff must be at least 1"));
        }
        if probs.len() != cutoff * cutoff {
            return Err(domain(format!(
                "expected {} entries for cutoff {cutoff}, got {}",
                cutoff * cutoff,
                probs.len()
            )));
        }
        check_probs(&probs)?;
        Ok(Self { cutoff, probs })
    }

    pub(crate) fn from_raw(cutoff: usize, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), cutoff * cutoff);
        Self { cutoff, probs }
    }

    /// All mass on `(m, n)`.
    pub fn delta(m: usize, n: usize, d: usize) -> Self {
        assert!(m < d && n < d, "({m}, {n}) outside cutoff {d}");
        let mut probs = vec![0.0; d * d];
        probs[m * d + n] = 1.0;
        Self { cutoff: d, probs }
    }

    /// Product state with the given single-mode marginals.
    pub fn product(signal: &PhotonDistribution, idler: &PhotonDistribution) -> Result<Self> {
        if signal.cutoff() != idler.cutoff() {
            return Err(domain("product of distributions with different cutoffs"));
        }
        let d = signal.cutoff();
        let mut probs = Vec::with_capacity(d * d);
        for &ps in signal.probs() {
            probs.extend(idler.probs().iter().map(|&pi| ps * pi));
        }
        Ok(Self { cutoff: d, probs })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        if m < self.cutoff && n < self.cutoff {
            self.probs[m * self.cutoff + n]
        } else {
            0.0
        }
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn normalized(&self) -> Self {
        let t = self.total();
        if t <= 0.0 {
            return self.clone();
        }
        Self {
            cutoff: self.cutoff,
            probs: self.probs.iter().map(|p| p / t).collect(),
        }
    }

    /// Re-truncates (or zero-pads) to a new cutoff without renormalizing.
    pub fn truncate(&self, d: usize) -> Self {
        let mut probs = vec![0.0; d * d];
        for m in 0..d.min(self.cutoff) {
            for n in 0..d.min(self.cutoff) {
                probs[m * d + n] = self.get(m, n);
            }
        }
        Self { cutoff: d, probs }
    }

    pub fn signal_marginal(&self) -> PhotonDistribution {
        let d = self.cutoff;
        PhotonDistribution::from_raw(
            (0..d)
                .map(|m| self.probs[m * d..(m + 1) * d].iter().sum())
                .collect(),
        )
    }

    pub fn idler_marginal(&self) -> PhotonDistribution {
        let d = self.cutoff;
        PhotonDistribution::from_raw(
            (0..d)
                .map(|n| (0..d).map(|m| self.probs[m * d + n]).sum())
                .collect(),
        )
    }

    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        if self.cutoff != other.cutoff {
            return Err(domain(format!(
                "fidelity between cutoffs {} and {}",
                self.cutoff, other.cutoff
            )));
        }
        fidelity(&self.probs, &other.probs)
    }

    pub fn apply_loss(&self, channel: LossChannel) -> Result<Self> {
        apply_loss(self, channel)
    }
}

/// Independent Bernoulli photon loss on each mode; `signal`/`idler` are the
/// transmission efficiencies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossChannel {
    pub signal: f64,
    pub idler: f64,
}

impl LossChannel {
    pub fn new(signal: f64, idler: f64) -> Result<Self> {
        let c = Self { signal, idler };
        c.validate()?;
        Ok(c)
    }

    pub fn symmetric(efficiency: f64) -> Result<Self> {
        Self::new(efficiency, efficiency)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, eta) in [("signal", self.signal), ("idler", self.idler)] {
            check_efficiency(name, eta)?;
        }
        Ok(())
    }
}

fn check_efficiency(name: &str, eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(domain(format!("{name} efficiency {eta} outside [0, 1]")));
    }
    Ok(())
}

/// `C(k, m) η^m (1-η)^(k-m)` as a `d × d` matrix indexed `[m][k]`.
fn thinning_matrix(eta: f64, d: usize) -> Vec<f64> {
    let mut b = vec![0.0; d * d];
    for k in 0..d {
        // Walk the binomial row with a running coefficient to avoid factorials.
        let mut coeff = 1.0f64;
        for m in 0..=k {
            if m > 0 {
                coeff *= (k + 1 - m) as f64 / m as f64;
            }
            b[m * d + k] = coeff * eta.powi(m as i32) * (1.0 - eta).powi((k - m) as i32);
        }
    }
    b
}

/// Twin-beam thermal distribution `⟨n⟩ⁿ / (1+⟨n⟩)^(1+n) δ_mn`, truncated at `d`.
pub fn pdc_distribution(mean_n: f64, d: usize) -> Result<JointPhotonDistribution> {
    if !(mean_n >= 0.0) || !mean_n.is_finite() {
        return Err(domain(format!("mean photon number {mean_n} must be nonnegative")));
    }
    if d == 0 {
        return Err(domain("cutoff must be at least 1"));
    }
    let mut probs = vec![0.0; d * d];
    let ratio = mean_n / (1.0 + mean_n);
    let mut p = 1.0 / (1.0 + mean_n);
    for n in 0..d {
        probs[n * d + n] = p;
        p *= ratio;
    }
    Ok(JointPhotonDistribution::from_raw(d, probs))
}

/// Bernoulli loss on both modes.
pub fn apply_loss(p: &JointPhotonDistribution, channel: LossChannel) -> Result<JointPhotonDistribution> {
    channel.validate()?;
    let d = p.cutoff();
    let bs = thinning_matrix(channel.signal, d);
    let bi = thinning_matrix(channel.idler, d);
    // tmp[k][n] = Σ_l P[k][l] Bi[n][l]
    let mut tmp = vec![0.0; d * d];
    for k in 0..d {
        for n in 0..d {
            tmp[k * d + n] = (n..d).map(|l| p.probs[k * d + l] * bi[n * d + l]).sum();
        }
    }
    let mut out = vec![0.0; d * d];
    for m in 0..d {
        for n in 0..d {
            out[m * d + n] = (m..d).map(|k| bs[m * d + k] * tmp[k * d + n]).sum();
        }
    }
    Ok(JointPhotonDistribution::from_raw(d, out))
}

/// Bernoulli loss on a single mode.
pub fn apply_loss_single(p: &PhotonDistribution, efficiency: f64) -> Result<PhotonDistribution> {
    check_efficiency("mode", efficiency)?;
    let d = p.cutoff();
    let b = thinning_matrix(efficiency, d);
    Ok(PhotonDistribution::from_raw(
        (0..d)
            .map(|m| (m..d).map(|k| b[m * d + k] * p.probs[k]).sum())
            .collect(),
    ))
}

/// Poisson photon statistics of a coherent state with mean `mu`, truncated.
pub fn poisson(mu: f64, d: usize) -> Result<PhotonDistribution> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(domain(format!("mean photon number {mu} must be nonnegative")));
    }
    if d == 0 {
        return Err(domain("cutoff must be at least 1"));
    }
    let mut probs = Vec::with_capacity(d);
    let mut p = (-mu).exp();
    for n in 0..d {
        probs.push(p);
        p *= mu / (n + 1) as f64;
    }
    Ok(PhotonDistribution::from_raw(probs))
}

/// Photon statistics of a two-mode coherent probe: independent Poisson laws.
pub fn poisson_product(mu_s: f64, mu_i: f64, d: usize) -> Result<JointPhotonDistribution> {
    JointPhotonDistribution::product(&poisson(mu_s, d)?, &poisson(mu_i, d)?)
}

/// Wigner function at the phase-space origin in the normalized-parity
/// convention: `Σ (-1)ⁿ P(n)`, so vacuum gives +1 and `|1⟩` gives -1.
pub fn wigner_at_origin(p: &PhotonDistribution) -> f64 {
    p.probs
        .iter()
        .enumerate()
        .map(|(n, &q)| if n % 2 == 0 { q } else { -q })
        .sum()
}

pub fn mean_photon(p: &PhotonDistribution) -> f64 {
    p.probs.iter().enumerate().map(|(n, &q)| n as f64 * q).sum()
}

/// Classical (Bhattacharyya) fidelity `(Σ √(p_i q_i))²`.
///
/// Slightly negative entries, as left by an unconstrained estimate, count as
/// zero.
pub fn fidelity(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(domain(format!(
            "fidelity between distributions of length {} and {}",
            p.len(),
            q.len()
        )));
    }
    let root: f64 = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| (a.max(0.0) * b.max(0.0)).sqrt())
        .sum();
    Ok(root * root)
}
