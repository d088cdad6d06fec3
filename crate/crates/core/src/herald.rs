//! Heralding on the signal mode: click-pattern conditions, their photon-number
//! POVMs and the resulting conditional idler states.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exec::{derive_seed, Execution};
use crate::fock::{JointPhotonDistribution, PhotonDistribution};
use crate::tmd::{
    mode_response, sample_patterns_with, Detector, DetectorConfig, JointHistogram, Mode,
    ModeHistogram, Weight, MODE_PATTERNS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeraldKind {
    /// Exactly one click over all signal gates.
    Single,
    /// Exactly one signal click on each of the two detectors.
    Double,
}

impl std::str::FromStr for HeraldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(HeraldKind::Single),
            "double" => Ok(HeraldKind::Double),
            other => Err(domain(format!("unknown herald kind '{other}'"))),
        }
    }
}

/// A herald rule bound to a gate layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HeraldCondition {
    pub kind: HeraldKind,
    mask_a: u8,
    mask_b: u8,
}

impl HeraldCondition {
    pub fn new(kind: HeraldKind, cfg: &DetectorConfig) -> Self {
        Self {
            kind,
            mask_a: cfg.layout.detector_mask(Mode::Signal, Detector::A),
            mask_b: cfg.layout.detector_mask(Mode::Signal, Detector::B),
        }
    }

    pub fn accepts(&self, signal: u8) -> bool {
        match self.kind {
            HeraldKind::Single => signal.count_ones() == 1,
            HeraldKind::Double => {
                signal & !(self.mask_a | self.mask_b) == 0
                    && (signal & self.mask_a).count_ones() == 1
                    && (signal & self.mask_b).count_ones() == 1
            }
        }
    }
}

/// Diagonal POVM element of a herald: `E[m]` is the probability that the
/// condition fires given `m` signal photons.
#[derive(Clone, Debug, PartialEq)]
pub struct HeraldPovm {
    pub kind: HeraldKind,
    elements: Vec<f64>,
    /// Per-element standard error when estimated by Monte Carlo.
    std_error: Option<Vec<f64>>,
}

impl HeraldPovm {
    pub fn new(kind: HeraldKind, elements: Vec<f64>) -> Result<Self> {
        if elements.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(domain("POVM elements must lie in [0, 1]"));
        }
        Ok(Self { kind, elements, std_error: None })
    }

    pub fn elements(&self) -> &[f64] {
        &self.elements
    }

    pub fn cutoff(&self) -> usize {
        self.elements.len()
    }

    pub fn is_estimated(&self) -> bool {
        self.std_error.is_some()
    }

    pub fn std_error(&self) -> Option<&[f64]> {
        self.std_error.as_deref()
    }
}

/// Exact herald POVM for an afterpulse-free detector.
pub fn herald_povm(kind: HeraldKind, cfg: &DetectorConfig, d: usize) -> Result<HeraldPovm> {
    let cond = HeraldCondition::new(kind, cfg);
    let s = mode_response(Mode::Signal, cfg, d)?;
    let elements = s
        .iter()
        .map(|row| {
            (0..MODE_PATTERNS)
                .filter(|&a| cond.accepts(a as u8))
                .map(|a| row[a])
                .sum::<f64>()
                .min(1.0)
        })
        .collect();
    HeraldPovm::new(kind, elements)
}

/// Monte Carlo herald POVM with `events` simulated pulses per signal photon
/// number; valid with afterpulsing.
pub fn herald_povm_monte_carlo(
    kind: HeraldKind,
    cfg: &DetectorConfig,
    d: usize,
    events: u64,
    seed: u64,
    exec: Execution,
) -> Result<HeraldPovm> {
    let cond = HeraldCondition::new(kind, cfg);
    let mut elements = Vec::with_capacity(d);
    let mut std_error = Vec::with_capacity(d);
    for m in 0..d {
        let p = JointPhotonDistribution::delta(m, 0, d);
        let h = sample_patterns_with(&p, cfg, events, derive_seed(seed, m as u64), exec)?;
        let (_, count) = herald_select(&h, &cond);
        let e = count as f64 / events as f64;
        elements.push(e);
        std_error.push((e * (1.0 - e) / events as f64).sqrt());
    }
    Ok(HeraldPovm { kind, elements, std_error: Some(std_error) })
}

/// Idler state after the herald fired:
/// `P_i(n) = Σ_m E_m P(m, n) / Σ_mn E_m P(m, n)`.
pub fn post_measurement_idler(p: &JointPhotonDistribution, povm: &HeraldPovm) -> Result<PhotonDistribution> {
    let d = p.cutoff();
    if povm.cutoff() < d {
        return Err(domain(format!(
            "POVM covers {} photon numbers, state needs {d}",
            povm.cutoff()
        )));
    }
    let mut idler = vec![0.0; d];
    for m in 0..d {
        let e = povm.elements[m];
        if e == 0.0 {
            continue;
        }
        for (n, v) in idler.iter_mut().enumerate() {
            *v += e * p.get(m, n);
        }
    }
    let total: f64 = idler.iter().sum();
    if !(total > 0.0) {
        return Err(domain("herald probability is zero for this state"));
    }
    for v in &mut idler {
        *v /= total;
    }
    PhotonDistribution::new(idler)
}

/// Idler patterns of the events whose signal pattern satisfies `cond`,
/// together with the number (or weight) of such events.
pub fn herald_select<T: Weight>(h: &JointHistogram<T>, cond: &HeraldCondition) -> (ModeHistogram<T>, T) {
    let mut idler = ModeHistogram::zeros();
    let mut total = T::default();
    for (alpha, row) in h.cells().chunks_exact(MODE_PATTERNS).enumerate() {
        if !cond.accepts(alpha as u8) {
            continue;
        }
        for (beta, &c) in row.iter().enumerate() {
            idler.add(beta as u8, c);
            total += c;
        }
    }
    (idler, total)
}

/// Heralded idler states of an ensemble of two-mode reconstructions. Members
/// with zero herald probability are dropped with a warning.
pub fn simulate_heralding_from_reconstruction(
    members: &[JointPhotonDistribution],
    kind: HeraldKind,
    cfg: &DetectorConfig,
) -> Result<Vec<PhotonDistribution>> {
    let Some(d) = members.iter().map(|p| p.cutoff()).max() else {
        return Err(Error::InsufficientData("empty ensemble".into()));
    };
    let povm = herald_povm(kind, cfg, d)?;
    let mut out = Vec::with_capacity(members.len());
    for (k, p) in members.iter().enumerate() {
        match post_measurement_idler(p, &povm) {
            Ok(state) => out.push(state),
            Err(e) => log::warn!("ensemble member {k} dropped: {e}"),
        }
    }
    if out.is_empty() {
        return Err(Error::InsufficientData("no member has a nonzero herald probability".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::pdc_distribution;
    use crate::tmd::{ClickPattern, JointClickHistogram};

    #[test]
    fn povm_examples() {
        let cfg = DetectorConfig::ideal_gating();
        let single = herald_povm(HeraldKind::Single, &cfg, 6).unwrap();
        assert_eq!(single.elements()[0], 0.0);
        assert!((single.elements()[1] - 0.22).abs() < 1e-15);

        let perfect = DetectorConfig::ideal_gating().with_efficiency(1.0);
        let double = herald_povm(HeraldKind::Double, &perfect, 4).unwrap();
        assert!((double.elements()[2] - 0.5).abs() < 1e-15);
        assert_eq!(double.elements()[1], 0.0);
        assert!(!double.is_estimated());
    }

    #[test]
    fn conditions_are_disjoint() {
        let cfg = DetectorConfig::default();
        let s = HeraldCondition::new(HeraldKind::Single, &cfg);
        let d = HeraldCondition::new(HeraldKind::Double, &cfg);
        for mask in 0..=255u8 {
            assert!(!(s.accepts(mask) && d.accepts(mask)));
        }
        assert!(d.accepts(0b0001_0001));
        // Both clicks on detector A.
        assert!(!d.accepts(0b0000_0011));
        assert_eq!((0..=255u8).filter(|&m| d.accepts(m)).count(), 16);
    }

    #[test]
    fn selection() {
        let cfg = DetectorConfig::default();
        let single = HeraldCondition::new(HeraldKind::Single, &cfg);
        let double = HeraldCondition::new(HeraldKind::Double, &cfg);
        let mut h = JointClickHistogram::zeros();
        h.cells_mut()[ClickPattern::new(0b0000_0111, 5).index()] = 10;
        assert_eq!(herald_select(&h, &single).1, 0);

        let mut h = JointClickHistogram::zeros();
        h.cells_mut()[ClickPattern::new(0b0010_0001, 0x42).index()] = 7;
        let (idler, n) = herald_select(&h, &double);
        assert_eq!(n, 7);
        assert_eq!(idler.get(0x42), 7);
        assert_eq!(idler.total(), 7);
    }

    #[test]
    fn post_measurement_examples() {
        let p = pdc_distribution(0.5, 6).unwrap().normalized();
        let identity = HeraldPovm::new(HeraldKind::Single, vec![1.0; 6]).unwrap();
        let pi = post_measurement_idler(&p, &identity).unwrap();
        let marginal = p.idler_marginal();
        for n in 0..6 {
            assert!((pi.get(n) - marginal.get(n)).abs() < 1e-15);
        }
        let mut e = vec![0.0; 6];
        e[1] = 1.0;
        let projector = HeraldPovm::new(HeraldKind::Single, e).unwrap();
        let pi = post_measurement_idler(&p, &projector).unwrap();
        assert_eq!(pi.get(1), 1.0);

        let vac = JointPhotonDistribution::delta(0, 0, 6);
        let povm = herald_povm(HeraldKind::Single, &DetectorConfig::ideal_gating(), 6).unwrap();
        assert!(post_measurement_idler(&vac, &povm).is_err());
    }

    #[test]
    fn ensemble_heralding() {
        let cfg = DetectorConfig::ideal_gating();
        let p = pdc_distribution(0.76, 8).unwrap().normalized();
        let povm = herald_povm(HeraldKind::Single, &cfg, 8).unwrap();
        let direct = post_measurement_idler(&p, &povm).unwrap();
        let out = simulate_heralding_from_reconstruction(&[p.clone(), p.clone()], HeraldKind::Single, &cfg).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0], direct);
        assert_eq!(out[0], out[1]);
        let vac = JointPhotonDistribution::delta(0, 0, 8);
        let out = simulate_heralding_from_reconstruction(&[vac.clone(), p], HeraldKind::Single, &cfg).unwrap();
        assert_eq!(out.len(), 1);
        assert!(simulate_heralding_from_reconstruction(&[vac], HeraldKind::Single, &cfg).is_err());
    }
}
