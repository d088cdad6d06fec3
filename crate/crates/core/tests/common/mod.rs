//! Shared oracles for the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tmdtomo::tmd::{ClickPattern, DetectorConfig, BINS_PER_MODE, JOINT_PATTERNS};

/// Joint click-pattern distribution of the Fock pair `|m, n⟩` by enumerating
/// every assignment of each photon to a bin or to loss, then every dark-count
/// subset of the 16 gates.
pub fn brute_force(m: usize, n: usize, cfg: &DetectorConfig) -> Vec<f64> {
    let eta = cfg.efficiency;
    let lost = BINS_PER_MODE;
    let photons = m + n;
    let mut photon_only = vec![0.0; JOINT_PATTERNS];
    for code in 0..(BINS_PER_MODE + 1).pow(photons as u32) {
        let mut c = code;
        let (mut s, mut i, mut w) = (0u8, 0u8, 1.0);
        for k in 0..photons {
            let out = c % (BINS_PER_MODE + 1);
            c /= BINS_PER_MODE + 1;
            let bins = if k < m { &cfg.signal_bins } else { &cfg.idler_bins };
            if out == lost {
                w *= 1.0 - eta;
            } else {
                w *= eta * bins[out];
                if k < m {
                    s |= 1 << out;
                } else {
                    i |= 1 << out;
                }
            }
        }
        photon_only[ClickPattern::new(s, i).index()] += w;
    }
    let dark = cfg.dark_count_prob;
    if dark == 0.0 {
        return photon_only;
    }
    let mut out = vec![0.0; JOINT_PATTERNS];
    for (mask, &w) in photon_only.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for darks in 0..JOINT_PATTERNS {
            let k = darks.count_ones() as i32;
            out[mask | darks] += w * dark.powi(k) * (1.0 - dark).powi(16 - k);
        }
    }
    out
}

/// Random splitting weights, normalized.
pub fn random_bins(rng: &mut ChaCha8Rng) -> [f64; BINS_PER_MODE] {
    let mut b = [0.0; BINS_PER_MODE];
    for v in &mut b {
        *v = rng.random_range(0.2..1.0);
    }
    let s: f64 = b.iter().sum();
    b.map(|v| v / s)
}

/// Afterpulse-free detector with the given efficiency and either uniform or
/// random splitting weights.
pub fn detector(eta: f64, random: bool, seed: u64) -> DetectorConfig {
    let mut cfg = DetectorConfig::ideal_gating().with_efficiency(eta);
    if random {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        cfg.signal_bins = random_bins(&mut rng);
        cfg.idler_bins = random_bins(&mut rng);
    }
    cfg
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
