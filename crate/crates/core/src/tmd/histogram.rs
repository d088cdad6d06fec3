use std::iter::Sum;
use std::ops::AddAssign;

use super::{CLICK_CLASSES, JOINT_PATTERNS, MODE_PATTERNS};
use crate::error::{domain, Result};

/// Cell type of a histogram: integer event counts or real frequencies.
pub trait Weight: Copy + Default + AddAssign + Sum<Self> + PartialOrd + Send + Sync + 'static {
    fn to_f64(self) -> f64;
}

impl Weight for u64 {
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Weight for f64 {
    fn to_f64(self) -> f64 {
        self
    }
}

/// Weights over the 65536 joint click patterns.
#[derive(Clone, Debug, PartialEq)]
pub struct JointHistogram<T> {
    cells: Vec<T>,
}

/// Event counts `f_{αβ}·N`.
pub type JointClickHistogram = JointHistogram<u64>;
/// Pattern probabilities `p_{αβ}` (or relative frequencies).
pub type JointPatternDistribution = JointHistogram<f64>;

impl<T: Weight> JointHistogram<T> {
    pub fn zeros() -> Self {
        Self { cells: vec![T::default(); JOINT_PATTERNS] }
    }

    pub fn from_cells(cells: Vec<T>) -> Result<Self> {
        if cells.len() != JOINT_PATTERNS {
            return Err(domain(format!(
                "joint histogram needs {JOINT_PATTERNS} cells, got {}",
                cells.len()
            )));
        }
        Ok(Self { cells })
    }

    pub fn cells(&self) -> &[T] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [T] {
        &mut self.cells
    }

    pub fn get(&self, index: usize) -> T {
        self.cells[index]
    }

    pub fn total(&self) -> T {
        self.cells.iter().copied().sum()
    }

    /// Relative frequencies; an empty histogram stays all-zero.
    pub fn frequencies(&self) -> JointPatternDistribution {
        JointHistogram { cells: normalize(&self.cells) }
    }

    /// Adds another histogram cell by cell.
    pub fn merge(&mut self, other: &Self) {
        for (a, &b) in self.cells.iter_mut().zip(&other.cells) {
            *a += b;
        }
    }

    pub fn nonzero(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > T::default())
            .map(|(i, &c)| (i, c))
    }
}

impl JointHistogram<f64> {
    pub fn from_probabilities(probs: Vec<f64>) -> Result<Self> {
        let h = Self::from_cells(probs)?;
        if h.cells.iter().any(|&p| !(p >= 0.0)) {
            return Err(domain("pattern probabilities must be nonnegative"));
        }
        Ok(h)
    }
}

/// Weights over the 256 single-mode click patterns.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeHistogram<T> {
    cells: Vec<T>,
}

impl<T: Weight> ModeHistogram<T> {
    pub fn zeros() -> Self {
        Self { cells: vec![T::default(); MODE_PATTERNS] }
    }

    pub fn from_cells(cells: Vec<T>) -> Result<Self> {
        if cells.len() != MODE_PATTERNS {
            return Err(domain(format!(
                "mode histogram needs {MODE_PATTERNS} cells, got {}",
                cells.len()
            )));
        }
        Ok(Self { cells })
    }

    pub fn cells(&self) -> &[T] {
        &self.cells
    }

    pub fn get(&self, mask: u8) -> T {
        self.cells[mask as usize]
    }

    pub fn total(&self) -> T {
        self.cells.iter().copied().sum()
    }

    pub fn frequencies(&self) -> ModeHistogram<f64> {
        ModeHistogram { cells: normalize(&self.cells) }
    }

    pub(crate) fn add(&mut self, mask: u8, w: T) {
        self.cells[mask as usize] += w;
    }
}

fn normalize<T: Weight>(cells: &[T]) -> Vec<f64> {
    let total: f64 = cells.iter().map(|c| c.to_f64()).sum();
    if total <= 0.0 {
        return vec![0.0; cells.len()];
    }
    cells.iter().map(|c| c.to_f64() / total).collect()
}

/// Signal and idler marginals `f_α = Σ_β f_{αβ}` and `f_β = Σ_α f_{αβ}`.
pub fn marginalize<T: Weight>(h: &JointHistogram<T>) -> (ModeHistogram<T>, ModeHistogram<T>) {
    let mut signal = ModeHistogram::zeros();
    let mut idler = ModeHistogram::zeros();
    for (alpha, row) in h.cells.chunks_exact(MODE_PATTERNS).enumerate() {
        let mut row_sum = T::default();
        for (beta, &c) in row.iter().enumerate() {
            row_sum += c;
            idler.cells[beta] += c;
        }
        signal.cells[alpha] = row_sum;
    }
    (signal, idler)
}

/// Sums the patterns sharing a click count: entry `k` collects the
/// `C(8, k)` masks with `k` bits set.
pub fn reduce_to_click_classes<T: Weight>(h: &ModeHistogram<T>) -> [T; CLICK_CLASSES] {
    let mut classes = [T::default(); CLICK_CLASSES];
    for (mask, &c) in h.cells.iter().enumerate() {
        classes[mask.count_ones() as usize] += c;
    }
    classes
}

/// Total-variation distance `½ Σ |p - q|` between two weight vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
