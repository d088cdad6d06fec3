use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::BINS_PER_MODE;
use crate::error::{domain, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Signal,
    Idler,
}

impl Mode {
    pub const BOTH: [Mode; 2] = [Mode::Signal, Mode::Idler];

    fn offset(self) -> usize {
        match self {
            Mode::Signal => 0,
            Mode::Idler => BINS_PER_MODE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Detector {
    A,
    B,
}

/// Where and when one (mode, bin) gate is read out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub detector: Detector,
    /// Position in the global gate sequence, `0..16`.
    pub time: u8,
}

/// Assignment of the sixteen gates to detectors and readout times.
/// Gates are indexed `mode_offset + bin` (signal bins first).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateLayout {
    pub gates: Vec<Gate>,
}

impl Default for GateLayout {
    /// Detectors A and B each read four signal gates followed by four idler
    /// gates; A and B alternate in time. Bins 1–4 of a mode go to A, bins 5–8
    /// to B.
    fn default() -> Self {
        let mut gates = Vec::with_capacity(2 * BINS_PER_MODE);
        for mode in Mode::BOTH {
            for bin in 0..BINS_PER_MODE {
                let detector = if bin < BINS_PER_MODE / 2 { Detector::A } else { Detector::B };
                let slot = bin % (BINS_PER_MODE / 2) + if mode == Mode::Idler { 4 } else { 0 };
                let time = 2 * slot + usize::from(detector == Detector::B);
                gates.push(Gate { detector, time: time as u8 });
            }
        }
        Self { gates }
    }
}

impl GateLayout {
    pub fn gate(&self, mode: Mode, bin: usize) -> Gate {
        self.gates[mode.offset() + bin]
    }

    pub fn validate(&self) -> Result<()> {
        if self.gates.len() != 2 * BINS_PER_MODE {
            return Err(domain(format!(
                "layout lists {} gates, expected {}",
                self.gates.len(),
                2 * BINS_PER_MODE
            )));
        }
        let mut seen = [false; 2 * BINS_PER_MODE];
        for g in &self.gates {
            let t = g.time as usize;
            if t >= seen.len() || seen[t] {
                return Err(domain("gate times must be a permutation of 0..16"));
            }
            seen[t] = true;
        }
        Ok(())
    }

    /// Bit mask (over the bins of `mode`) of the gates read by `detector`.
    pub fn detector_mask(&self, mode: Mode, detector: Detector) -> u8 {
        (0..BINS_PER_MODE)
            .filter(|&b| self.gate(mode, b).detector == detector)
            .fold(0u8, |m, b| m | 1 << b)
    }

    /// Gates in time order as `(mode, bin, detector, ordinal)` where
    /// `ordinal` counts earlier gates read by the same detector.
    pub(crate) fn timeline(&self) -> Vec<(Mode, usize, Detector, u8)> {
        let mut order: Vec<(u8, Mode, usize, Detector)> = Mode::BOTH
            .iter()
            .flat_map(|&mode| {
                (0..BINS_PER_MODE).map(move |bin| (mode, bin))
            })
            .map(|(mode, bin)| {
                let g = self.gate(mode, bin);
                (g.time, mode, bin, g.detector)
            })
            .collect();
        order.sort_by_key(|e| e.0);
        let mut seen_a = 0u8;
        let mut seen_b = 0u8;
        order
            .into_iter()
            .map(|(_, mode, bin, det)| {
                let counter = match det {
                    Detector::A => &mut seen_a,
                    Detector::B => &mut seen_b,
                };
                let ordinal = *counter;
                *counter += 1;
                (mode, bin, det, ordinal)
            })
            .collect()
    }
}

/// Afterpulse kernel: a gate fires spuriously with probability
/// `probability · decay^(Δ-1)`, `Δ` being the number of gates of the same
/// detector since its last click.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Afterpulse {
    pub probability: f64,
    pub decay: f64,
}

impl Afterpulse {
    pub const NONE: Afterpulse = Afterpulse { probability: 0.0, decay: 0.0 };

    pub fn is_enabled(&self) -> bool {
        self.probability > 0.0
    }

    pub fn at_distance(&self, delta: u32) -> f64 {
        debug_assert!(delta >= 1);
        self.probability * self.decay.powi(delta as i32 - 1)
    }
}

impl Default for Afterpulse {
    fn default() -> Self {
        Self { probability: 0.03, decay: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// Splitting-tree output weights of the signal bins.
    pub signal_bins: [f64; BINS_PER_MODE],
    pub idler_bins: [f64; BINS_PER_MODE],
    /// Detection efficiency shared by both detectors.
    pub efficiency: f64,
    /// Dark-count probability per gate.
    pub dark_count_prob: f64,
    pub afterpulse: Afterpulse,
    pub layout: GateLayout,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            signal_bins: [1.0 / BINS_PER_MODE as f64; BINS_PER_MODE],
            idler_bins: [1.0 / BINS_PER_MODE as f64; BINS_PER_MODE],
            efficiency: 0.22,
            dark_count_prob: 0.0,
            afterpulse: Afterpulse::default(),
            layout: GateLayout::default(),
        }
    }
}

impl DetectorConfig {
    /// Default detector with afterpulsing switched off.
    pub fn ideal_gating() -> Self {
        Self { afterpulse: Afterpulse::NONE, ..Self::default() }
    }

    pub fn with_efficiency(mut self, efficiency: f64) -> Self {
        self.efficiency = efficiency;
        self
    }

    pub fn without_afterpulse(mut self) -> Self {
        self.afterpulse = Afterpulse::NONE;
        self
    }

    pub fn bins(&self, mode: Mode) -> &[f64; BINS_PER_MODE] {
        match mode {
            Mode::Signal => &self.signal_bins,
            Mode::Idler => &self.idler_bins,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for mode in Mode::BOTH {
            let bins = self.bins(mode);
            if bins.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(domain(format!("{mode:?} bin probabilities must be nonnegative")));
            }
            let s: f64 = bins.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(domain(format!("{mode:?} bin probabilities sum to {s}, not 1")));
            }
        }
        for (name, v) in [
            ("efficiency", self.efficiency),
            ("dark count probability", self.dark_count_prob),
            ("afterpulse probability", self.afterpulse.probability),
            ("afterpulse decay", self.afterpulse.decay),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(domain(format!("{name} {v} outside [0, 1]")));
            }
        }
        self.layout.validate()
    }

    /// Short content hash used to tie histogram files to the detector that
    /// produced them.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("detector config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout_is_valid() {
        let cfg = DetectorConfig::default();
        cfg.validate().unwrap();
        let layout = &cfg.layout;
        assert_eq!(layout.detector_mask(Mode::Signal, Detector::A), 0x0f);
        assert_eq!(layout.detector_mask(Mode::Signal, Detector::B), 0xf0);
        // A reads its four signal gates before its four idler gates.
        let a_gates: Vec<_> = layout
            .timeline()
            .into_iter()
            .filter(|g| g.2 == Detector::A)
            .collect();
        assert_eq!(a_gates.len(), 8);
        assert!(a_gates[..4].iter().all(|g| g.0 == Mode::Signal));
        assert!(a_gates[4..].iter().all(|g| g.0 == Mode::Idler));
        assert_eq!(a_gates.iter().map(|g| g.3).collect::<Vec<_>>(), (0..8).collect::<Vec<u8>>());
    }

    #[test]
    fn validation_catches_bad_configs() {
        let mut cfg = DetectorConfig::default();
        cfg.signal_bins[0] += 0.01;
        assert!(cfg.validate().is_err());

        let mut cfg = DetectorConfig::default();
        cfg.layout.gates[3].time = cfg.layout.gates[4].time;
        assert!(cfg.validate().is_err());

        let cfg = DetectorConfig::default().with_efficiency(1.5);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = DetectorConfig::default();
        let b = DetectorConfig::default().with_efficiency(0.3);
        assert_eq!(a.hash(), DetectorConfig::default().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }

    #[test]
    fn afterpulse_kernel() {
        let ap = Afterpulse::default();
        assert_eq!(ap.at_distance(1), 0.03);
        assert_eq!(ap.at_distance(3), 0.03 * 0.25);
        assert!(!Afterpulse::NONE.is_enabled());
    }
}
