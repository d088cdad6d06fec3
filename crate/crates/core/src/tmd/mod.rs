//! The two-mode time-multiplexed detector.
//!
//! Each mode is split into [`BINS_PER_MODE`] time bins. A detection event is a
//! pair of 8-bit click masks (bit `i` set ⇔ click in bin `i + 1`), giving 256
//! single-mode and 65536 joint patterns. The sixteen (mode, bin) gates are
//! read out by two detectors, `A` and `B`, in a fixed global time order;
//! afterpulsing couples gates of the same detector along that order.

mod config;
mod exact;
mod histogram;
mod sampler;

pub use config::{Afterpulse, DetectorConfig, Detector, Gate, GateLayout, Mode};
pub use exact::{
    build_response_matrix, coherent_pattern_distribution, coherent_mode_distribution,
    exact_pattern_distribution, mode_response, ResponseMatrix, MAX_EXACT_CUTOFF,
};
pub use histogram::{
    marginalize, reduce_to_click_classes, total_variation, JointClickHistogram, JointHistogram,
    JointPatternDistribution, ModeHistogram, Weight,
};
pub use sampler::{sample_coherent_patterns, sample_patterns, sample_patterns_with, SAMPLER_CHUNK};

pub const BINS_PER_MODE: usize = 8;
pub const MODE_PATTERNS: usize = 1 << BINS_PER_MODE;
pub const JOINT_PATTERNS: usize = MODE_PATTERNS * MODE_PATTERNS;
/// Number of distinct click counts per mode, `0..=8`.
pub const CLICK_CLASSES: usize = BINS_PER_MODE + 1;

/// One joint detection outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClickPattern {
    pub signal: u8,
    pub idler: u8,
}

impl ClickPattern {
    pub fn new(signal: u8, idler: u8) -> Self {
        Self { signal, idler }
    }

    /// Joint index `signal · 256 + idler`.
    pub fn index(self) -> usize {
        (self.signal as usize) << BINS_PER_MODE | self.idler as usize
    }

    pub fn from_index(index: usize) -> Self {
        assert!(index < JOINT_PATTERNS, "pattern index {index} out of range");
        Self {
            signal: (index >> BINS_PER_MODE) as u8,
            idler: (index & 0xff) as u8,
        }
    }

    pub fn mask(self, mode: Mode) -> u8 {
        match mode {
            Mode::Signal => self.signal,
            Mode::Idler => self.idler,
        }
    }

    pub fn clicks(self, mode: Mode) -> u32 {
        self.mask(mode).count_ones()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_index_layout() {
        // Clicks in the first two idler bins, nothing in the signal.
        let p = ClickPattern::new(0, 0b0000_0011);
        assert_eq!(p.index(), 3);
        assert_eq!(ClickPattern::new(1, 0).index(), 256);
        assert_eq!(ClickPattern::new(255, 255).index(), 65535);
        for i in [0, 1, 255, 256, 4097, 65535] {
            assert_eq!(ClickPattern::from_index(i).index(), i);
        }
        assert_eq!(ClickPattern::new(0b1010_0001, 7).clicks(Mode::Signal), 3);
    }
}
