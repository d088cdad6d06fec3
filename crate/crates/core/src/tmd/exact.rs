//! Afterpulse-free forward model.
//!
//! Without afterpulsing the two modes are detected independently for a fixed
//! photon-number pair `(m, n)`, so the response factorizes as
//! `C_{αβ,mn} = S_{α,m} · I_{β,n}`. Each photon is detected in bin `b` with
//! probability `η·w_b` and lost otherwise; dark counts are OR-ed in per bin.

use super::{
    DetectorConfig, JointPatternDistribution, Mode, BINS_PER_MODE, JOINT_PATTERNS, MODE_PATTERNS,
};
use crate::error::{domain, Error, Result};
use crate::fock::JointPhotonDistribution;

/// Largest photon-number cutoff accepted by the exact path.
pub const MAX_EXACT_CUTOFF: usize = 32;

fn require_exact(cfg: &DetectorConfig, d: usize) -> Result<()> {
    cfg.validate()?;
    if cfg.afterpulse.is_enabled() {
        return Err(Error::Unsupported(
            "the exact forward model has no afterpulsing; use tmd::sample_patterns".into(),
        ));
    }
    if d == 0 || d > MAX_EXACT_CUTOFF {
        return Err(domain(format!("cutoff {d} outside 1..={MAX_EXACT_CUTOFF}")));
    }
    Ok(())
}

/// Adds independent dark counts to a click-pattern distribution.
fn add_darks(z: &mut [f64], dark: f64) {
    if dark == 0.0 {
        return;
    }
    for b in 0..BINS_PER_MODE {
        let bit = 1 << b;
        for a in 0..MODE_PATTERNS {
            if a & bit == 0 {
                let moved = dark * z[a];
                z[a] -= moved;
                z[a | bit] += moved;
            }
        }
    }
}

/// Single-mode distributions for `0..d` photons, built one photon at a time
/// (every term is nonnegative, so there is no cancellation).
fn fock_mode_distributions(d: usize, bins: &[f64; BINS_PER_MODE], eta: f64, dark: f64) -> Vec<Vec<f64>> {
    let q: Vec<f64> = bins.iter().map(|w| eta * w).collect();
    let mut current = vec![0.0; MODE_PATTERNS];
    current[0] = 1.0;
    let mut out = Vec::with_capacity(d);
    for _ in 0..d {
        let mut with_darks = current.clone();
        add_darks(&mut with_darks, dark);
        out.push(with_darks);
        let mut next = vec![0.0; MODE_PATTERNS];
        for (a, &w) in current.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            next[a] += (1.0 - eta) * w;
            for (b, &qb) in q.iter().enumerate() {
                next[a | 1 << b] += qb * w;
            }
        }
        current = next;
    }
    out
}

/// `S[m][α]`: single-mode click-pattern distributions for `m = 0..d` photons.
pub fn mode_response(mode: Mode, cfg: &DetectorConfig, d: usize) -> Result<Vec<Vec<f64>>> {
    require_exact(cfg, d)?;
    Ok(fock_mode_distributions(d, cfg.bins(mode), cfg.efficiency, cfg.dark_count_prob))
}

/// Exact joint pattern probabilities `p_{αβ} = Σ_{mn} C_{αβ,mn} P_{mn}`.
pub fn exact_pattern_distribution(
    p: &JointPhotonDistribution,
    cfg: &DetectorConfig,
) -> Result<JointPatternDistribution> {
    let d = p.cutoff();
    let s = mode_response(Mode::Signal, cfg, d)?;
    let i = mode_response(Mode::Idler, cfg, d)?;
    Ok(combine(p, &s, &i))
}

fn combine(p: &JointPhotonDistribution, s: &[Vec<f64>], i: &[Vec<f64>]) -> JointPatternDistribution {
    let d = p.cutoff();
    // tmp[m][β] = Σ_n P(m, n) I[n][β]
    let mut tmp = vec![0.0; d * MODE_PATTERNS];
    for m in 0..d {
        let row = &mut tmp[m * MODE_PATTERNS..(m + 1) * MODE_PATTERNS];
        for (n, idler) in i.iter().enumerate() {
            let w = p.get(m, n);
            if w != 0.0 {
                for (r, &v) in row.iter_mut().zip(idler) {
                    *r += w * v;
                }
            }
        }
    }
    let mut out = vec![0.0; JOINT_PATTERNS];
    for (m, signal) in s.iter().enumerate() {
        let row = &tmp[m * MODE_PATTERNS..(m + 1) * MODE_PATTERNS];
        if row.iter().all(|&v| v == 0.0) {
            continue;
        }
        for (alpha, &sa) in signal.iter().enumerate() {
            if sa == 0.0 {
                continue;
            }
            let dst = &mut out[alpha * MODE_PATTERNS..(alpha + 1) * MODE_PATTERNS];
            for (o, &v) in dst.iter_mut().zip(row) {
                *o += sa * v;
            }
        }
    }
    JointPatternDistribution::from_cells(out).expect("joint size")
}

/// Measurement matrix of the conventional (loss + splitting) TMD model,
/// stored in its factorized form.
#[derive(Clone, Debug)]
pub struct ResponseMatrix {
    cutoff: usize,
    signal: Vec<Vec<f64>>,
    idler: Vec<Vec<f64>>,
}

impl ResponseMatrix {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// `C_{αβ,mn}` for joint pattern index `pattern = α·256 + β`.
    pub fn entry(&self, pattern: usize, m: usize, n: usize) -> f64 {
        let alpha = pattern / MODE_PATTERNS;
        let beta = pattern % MODE_PATTERNS;
        self.signal[m][alpha] * self.idler[n][beta]
    }

    /// Response to the number state `|m, n⟩`.
    pub fn column(&self, m: usize, n: usize) -> JointPatternDistribution {
        let mut out = Vec::with_capacity(JOINT_PATTERNS);
        for &sa in &self.signal[m] {
            out.extend(self.idler[n].iter().map(|&ib| sa * ib));
        }
        JointPatternDistribution::from_cells(out).expect("joint size")
    }

    pub fn apply(&self, p: &JointPhotonDistribution) -> Result<JointPatternDistribution> {
        if p.cutoff() != self.cutoff {
            return Err(domain("state cutoff differs from response matrix cutoff"));
        }
        Ok(combine(p, &self.signal, &self.idler))
    }
}

pub fn build_response_matrix(cfg: &DetectorConfig, d: usize) -> Result<ResponseMatrix> {
    Ok(ResponseMatrix {
        cutoff: d,
        signal: mode_response(Mode::Signal, cfg, d)?,
        idler: mode_response(Mode::Idler, cfg, d)?,
    })
}

/// Closed-form single-mode pattern distribution of a coherent state: gates
/// click independently with `1 - (1 - c)·exp(-η w_b μ)`.
pub fn coherent_mode_distribution(mu: f64, mode: Mode, cfg: &DetectorConfig) -> Result<Vec<f64>> {
    require_exact(cfg, 1)?;
    if !(mu >= 0.0) {
        return Err(domain(format!("mean photon number {mu} must be nonnegative")));
    }
    let click: Vec<f64> = cfg
        .bins(mode)
        .iter()
        .map(|w| 1.0 - (1.0 - cfg.dark_count_prob) * (-cfg.efficiency * w * mu).exp())
        .collect();
    Ok((0..MODE_PATTERNS)
        .map(|a| {
            click
                .iter()
                .enumerate()
                .map(|(b, &p)| if a >> b & 1 == 1 { p } else { 1.0 - p })
                .product()
        })
        .collect())
}

/// Exact joint response to the coherent probe `(mu_s, mu_i)` without any
/// photon-number truncation.
pub fn coherent_pattern_distribution(
    mu_s: f64,
    mu_i: f64,
    cfg: &DetectorConfig,
) -> Result<JointPatternDistribution> {
    let s = coherent_mode_distribution(mu_s, Mode::Signal, cfg)?;
    let i = coherent_mode_distribution(mu_i, Mode::Idler, cfg)?;
    let mut out = Vec::with_capacity(JOINT_PATTERNS);
    for &sa in &s {
        out.extend(i.iter().map(|&ib| sa * ib));
    }
    JointPatternDistribution::from_cells(out)
}

#[cfg(test)]
mod tests {
    use super::super::ClickPattern;
    use super::*;
    use crate::fock::{pdc_distribution, poisson_product};

    fn afterpulse_free() -> DetectorConfig {
        DetectorConfig::ideal_gating()
    }

    #[test]
    fn vacuum_gives_no_clicks() {
        let p = JointPhotonDistribution::delta(0, 0, 4);
        let out = exact_pattern_distribution(&p, &afterpulse_free()).unwrap();
        assert_eq!(out.get(0), 1.0);
        assert!((out.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_signal_photon() {
        let p = JointPhotonDistribution::delta(1, 0, 3);
        let out = exact_pattern_distribution(&p, &afterpulse_free()).unwrap();
        assert!((out.get(0) - 0.78).abs() < 1e-14);
        for b in 0..8 {
            let idx = ClickPattern::new(1 << b, 0).index();
            assert!((out.get(idx) - 0.0275).abs() < 1e-14);
        }
        assert!((out.total() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_photons_perfect_detector() {
        let cfg = afterpulse_free().with_efficiency(1.0);
        let p = JointPhotonDistribution::delta(2, 0, 3);
        let out = exact_pattern_distribution(&p, &cfg).unwrap();
        // 64 equally likely placements: 8 put both photons in one bin, each
        // unordered pair of bins is hit by 2 placements.
        for b in 0..8 {
            let one = ClickPattern::new(1 << b, 0).index();
            assert!((out.get(one) - 1.0 / 64.0).abs() < 1e-15);
            for c in (b + 1)..8 {
                let two = ClickPattern::new((1 << b) | (1 << c), 0).index();
                assert!((out.get(two) - 2.0 / 64.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn afterpulsing_is_rejected() {
        let p = JointPhotonDistribution::delta(0, 0, 2);
        let err = exact_pattern_distribution(&p, &DetectorConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
        assert!(build_response_matrix(&DetectorConfig::default(), 4).is_err());
    }

    #[test]
    fn response_matrix_columns() {
        let cfg = afterpulse_free();
        let c = build_response_matrix(&cfg, 4).unwrap();
        let vac = c.column(0, 0);
        assert_eq!(vac.get(0), 1.0);
        assert_eq!(vac.total(), 1.0);
        for m in 0..4 {
            for n in 0..4 {
                assert!((c.column(m, n).total() - 1.0).abs() < 1e-10);
            }
        }
        let direct = exact_pattern_distribution(&JointPhotonDistribution::delta(1, 0, 4), &cfg).unwrap();
        let col = c.column(1, 0);
        for k in 0..JOINT_PATTERNS {
            assert!((direct.get(k) - col.get(k)).abs() < 1e-15);
            assert_eq!(c.entry(k, 1, 0), col.get(k));
        }
    }

    #[test]
    fn coherent_closed_form_matches_fock_sum() {
        // The Poisson-weighted Fock route and the closed form are independent.
        let mut cfg = afterpulse_free();
        cfg.dark_count_prob = 0.01;
        cfg.signal_bins = [0.16, 0.09, 0.14, 0.11, 0.15, 0.10, 0.13, 0.12];
        let (mu_s, mu_i) = (1.3, 0.4);
        let fock = poisson_product(mu_s, mu_i, 30).unwrap();
        let a = exact_pattern_distribution(&fock, &cfg).unwrap();
        let b = coherent_pattern_distribution(mu_s, mu_i, &cfg).unwrap();
        let worst = a
            .cells()
            .iter()
            .zip(b.cells())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-12, "max deviation {worst}");
    }

    #[test]
    fn zero_click_probability_of_coherent_probe() {
        let cfg = afterpulse_free();
        for (ms, mi) in [(0.1, 0.2), (1.0, 3.0), (4.0, 4.0)] {
            let p = coherent_pattern_distribution(ms, mi, &cfg).unwrap();
            assert!((p.get(0) - (-0.22f64 * (ms + mi)).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn pdc_pattern_normalized() {
        let p = pdc_distribution(0.76, 20).unwrap().normalized();
        let out = exact_pattern_distribution(&p, &afterpulse_free()).unwrap();
        assert!((out.total() - 1.0).abs() < 1e-10);
    }
}
