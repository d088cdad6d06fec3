//! On-disk formats: histograms (CSV and binary), probe libraries, fit
//! results, ensemble summaries, plot data and the experiment configuration.
//!
//! CSV files start with `# key=value` metadata lines followed by a header
//! row. Floats are written in Rust's shortest round-trip form, so the same
//! data always produce the same bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fit::{FitResult, Reconstruction};
use crate::probes::{CoherentProbe, PatternLibrary, Response, Spacing};
use crate::stats::BootstrapEnsemble;
use crate::tmd::{DetectorConfig, JointClickHistogram, JointPatternDistribution, JOINT_PATTERNS};

/// Ordered `key=value` metadata of a CSV file.
pub type Metadata = BTreeMap<String, String>;

const BINARY_MAGIC: &[u8; 4] = b"TMDH";
const BINARY_VERSION: u32 = 1;

fn format_err(path: &Path, line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Format(format!("{}:{line}: {msg}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    Ok(BufWriter::new(fs::File::create(path)?))
}

fn write_metadata(w: &mut impl Write, meta: &Metadata) -> Result<()> {
    for (k, v) in meta {
        if k.contains(['=', '\n']) || v.contains('\n') {
            return Err(domain(format!("metadata entry '{k}' cannot be written")));
        }
        writeln!(w, "# {k}={v}")?;
    }
    Ok(())
}

/// A parsed CSV table: metadata, header and rows of fields.
struct Table {
    meta: Metadata,
    header: Vec<String>,
    rows: Vec<(usize, Vec<String>)>,
}

fn read_table(path: &Path) -> Result<Table> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut meta = Metadata::new();
    let mut header = None;
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        let fields: Vec<String> = trimmed.split(',').map(|f| f.trim().to_string()).collect();
        if header.is_none() {
            header = Some(fields);
        } else {
            rows.push((lineno, fields));
        }
    }
    let header = header.ok_or_else(|| format_err(path, 0, "missing header row"))?;
    Ok(Table { meta, header, rows })
}

impl Table {
    fn expect_header(&self, path: &Path, cols: &[&str]) -> Result<()> {
        if self.header != cols {
            return Err(format_err(
                path,
                0,
                format!("expected columns {}, found {}", cols.join(","), self.header.join(",")),
            ));
        }
        Ok(())
    }

    fn parse<T: std::str::FromStr>(path: &Path, line: usize, field: &str) -> Result<T> {
        field
            .parse()
            .map_err(|_| format_err(path, line, format!("cannot parse '{field}'")))
    }
}

fn meta_get<T: std::str::FromStr>(meta: &Metadata, path: &Path, key: &str) -> Result<Option<T>> {
    match meta.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| format_err(path, 0, format!("bad value '{v}' for {key}"))),
    }
}

/// Writes a probe or data response. Counts go to a `pattern_index,count`
/// table with an `events` entry; modeled probabilities to
/// `pattern_index,probability`. Only nonzero cells are listed.
pub fn write_response_csv(path: &Path, response: &Response, meta: &Metadata) -> Result<()> {
    let mut w = create(path)?;
    let mut meta = meta.clone();
    match response {
        Response::Counts(h) => {
            meta.insert("events".into(), h.total().to_string());
            write_metadata(&mut w, &meta)?;
            writeln!(w, "pattern_index,count")?;
            for (i, c) in h.nonzero() {
                writeln!(w, "{i},{c}")?;
            }
        }
        Response::Exact(p) => {
            write_metadata(&mut w, &meta)?;
            writeln!(w, "pattern_index,probability")?;
            for (i, v) in p.nonzero() {
                writeln!(w, "{i},{v}")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_response_csv(path: &Path) -> Result<(Response, Metadata)> {
    let table = read_table(path)?;
    let counts = match table.header.get(1).map(String::as_str) {
        Some("count") => true,
        Some("probability") => false,
        _ => {
            return Err(format_err(path, 0, "expected pattern_index,count or pattern_index,probability"));
        }
    };
    let mut ints = vec![0u64; if counts { JOINT_PATTERNS } else { 0 }];
    let mut reals = vec![0.0f64; if counts { 0 } else { JOINT_PATTERNS }];
    for (line, f) in &table.rows {
        if f.len() != 2 {
            return Err(format_err(path, *line, "expected two fields"));
        }
        let i: usize = Table::parse(path, *line, &f[0])?;
        if i >= JOINT_PATTERNS {
            return Err(format_err(path, *line, format!("pattern index {i} out of range")));
        }
        if counts {
            ints[i] += Table::parse::<u64>(path, *line, &f[1])?;
        } else {
            reals[i] += Table::parse::<f64>(path, *line, &f[1])?;
        }
    }
    let response = if counts {
        let h = JointClickHistogram::from_cells(ints)?;
        if let Some(events) = meta_get::<u64>(&table.meta, path, "events")? {
            if events != h.total() {
                return Err(format_err(path, 0, format!("events={events} but counts sum to {}", h.total())));
            }
        }
        Response::Counts(h)
    } else {
        Response::Exact(JointPatternDistribution::from_probabilities(reals)?)
    };
    Ok((response, table.meta))
}

pub fn write_histogram_csv(path: &Path, h: &JointClickHistogram, meta: &Metadata) -> Result<()> {
    write_response_csv(path, &Response::Counts(h.clone()), meta)
}

pub fn read_histogram_csv(path: &Path) -> Result<(JointClickHistogram, Metadata)> {
    match read_response_csv(path)? {
        (Response::Counts(h), meta) => Ok((h, meta)),
        (Response::Exact(_), _) => Err(format_err(path, 0, "file holds probabilities, not counts")),
    }
}

/// Binary histogram: `TMDH`, version (u32), event count (u64), 16 bytes of
/// config hash (ASCII, zero padded), then 65536 counts, all little endian.
pub fn write_histogram_bin(path: &Path, h: &JointClickHistogram, config_hash: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&BINARY_VERSION.to_le_bytes())?;
    w.write_all(&h.total().to_le_bytes())?;
    let mut hash = [0u8; 16];
    let bytes = config_hash.as_bytes();
    if bytes.len() > 16 {
        return Err(domain("config hash longer than 16 bytes"));
    }
    hash[..bytes.len()].copy_from_slice(bytes);
    w.write_all(&hash)?;
    for &c in h.cells() {
        w.write_all(&c.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_histogram_bin(path: &Path) -> Result<(JointClickHistogram, String)> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let mut head = [0u8; 32];
    r.read_exact(&mut head)?;
    if &head[..4] != BINARY_MAGIC {
        return Err(format_err(path, 0, "not a binary histogram"));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().expect("4 bytes"));
    if version != BINARY_VERSION {
        return Err(format_err(path, 0, format!("unsupported version {version}")));
    }
    let events = u64::from_le_bytes(head[8..16].try_into().expect("8 bytes"));
    let hash: String = head[16..32].iter().take_while(|&&b| b != 0).map(|&b| b as char).collect();
    let mut buf = vec![0u8; 8 * JOINT_PATTERNS];
    r.read_exact(&mut buf)?;
    let cells = buf
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let h = JointClickHistogram::from_cells(cells)?;
    if h.total() != events {
        return Err(format_err(path, 0, "event count does not match the counts"));
    }
    Ok((h, hash))
}

/// Reads a histogram in either format (binary detected by its magic).
pub fn read_histogram(path: &Path) -> Result<(Response, Metadata)> {
    let mut magic = [0u8; 4];
    let is_binary = fs::File::open(path)?.read_exact(&mut magic).is_ok() && &magic == BINARY_MAGIC;
    if is_binary {
        let (h, hash) = read_histogram_bin(path)?;
        let mut meta = Metadata::new();
        meta.insert("events".into(), h.total().to_string());
        meta.insert("config_hash".into(), hash);
        Ok((Response::Counts(h), meta))
    } else {
        read_response_csv(path)
    }
}

fn probe_file(dir: &Path, id: u32) -> PathBuf {
    dir.join("probes").join(format!("probe_{id}.csv"))
}

/// Writes `manifest.csv` (`probe_id,mu_signal,mu_idler,N`) and one response
/// file per probe under `probes/`. `N` is 0 for modeled responses.
pub fn write_library(dir: &Path, library: &PatternLibrary, meta: &Metadata) -> Result<()> {
    fs::create_dir_all(dir.join("probes"))?;
    let mut w = create(&dir.join("manifest.csv"))?;
    write_metadata(&mut w, meta)?;
    writeln!(w, "probe_id,mu_signal,mu_idler,N")?;
    for (p, r) in library.iter() {
        writeln!(w, "{},{},{},{}", p.id, p.mu_signal, p.mu_idler, r.events().unwrap_or(0))?;
        let mut pm = Metadata::new();
        pm.insert("probe_id".into(), p.id.to_string());
        if let Some(h) = meta.get("config_hash") {
            pm.insert("config_hash".into(), h.clone());
        }
        write_response_csv(&probe_file(dir, p.id), r, &pm)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_library(dir: &Path) -> Result<(PatternLibrary, Metadata)> {
    let manifest = dir.join("manifest.csv");
    let table = read_table(&manifest)?;
    table.expect_header(&manifest, &["probe_id", "mu_signal", "mu_idler", "N"])?;
    let mut probes = Vec::with_capacity(table.rows.len());
    let mut responses = Vec::with_capacity(table.rows.len());
    for (line, f) in &table.rows {
        if f.len() != 4 {
            return Err(format_err(&manifest, *line, "expected four fields"));
        }
        let id: u32 = Table::parse(&manifest, *line, &f[0])?;
        let probe = CoherentProbe::new(
            id,
            Table::parse(&manifest, *line, &f[1])?,
            Table::parse(&manifest, *line, &f[2])?,
        )?;
        let n: u64 = Table::parse(&manifest, *line, &f[3])?;
        let (response, _) = read_response_csv(&probe_file(dir, id))?;
        if response.events().unwrap_or(0) != n {
            return Err(format_err(&manifest, *line, format!("probe {id}: manifest N={n} disagrees with its file")));
        }
        probes.push(probe);
        responses.push(response);
    }
    Ok((PatternLibrary::new(probes, responses)?, table.meta))
}

fn index_columns(rec: &Reconstruction) -> (&'static str, Vec<String>) {
    match rec {
        Reconstruction::Joint(p) => {
            let d = p.cutoff();
            ("m,n", (0..d * d).map(|k| format!("{},{}", k / d, k % d)).collect())
        }
        Reconstruction::Single(p) => ("n", (0..p.cutoff()).map(|n| n.to_string()).collect()),
    }
}

/// Writes a fit as `m,n,p` (joint) or `n,p` rows with the solver summary in
/// the metadata.
pub fn write_fit_result(path: &Path, fit: &FitResult, meta: &Metadata) -> Result<()> {
    let mut meta = meta.clone();
    meta.insert("view".into(), fit.view.to_string());
    meta.insert("d".into(), fit.reconstruction.cutoff().to_string());
    meta.insert("residual".into(), fit.residual.to_string());
    meta.insert("iterations".into(), fit.iterations.to_string());
    meta.insert("converged".into(), fit.converged.to_string());
    meta.insert("kkt_residual".into(), fit.kkt_residual.to_string());
    meta.insert(
        "probe_ids".into(),
        fit.probe_ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" "),
    );
    let mut w = create(path)?;
    write_metadata(&mut w, &meta)?;
    let (cols, idx) = index_columns(&fit.reconstruction);
    writeln!(w, "{cols},p")?;
    for (i, v) in idx.iter().zip(fit.reconstruction.probs()) {
        writeln!(w, "{i},{v}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the distribution of a fit-result file.
pub fn read_fit_result(path: &Path) -> Result<(Reconstruction, Metadata)> {
    let table = read_table(path)?;
    let joint = match table.header.len() {
        3 => true,
        2 => false,
        _ => return Err(format_err(path, 0, "expected m,n,p or n,p columns")),
    };
    let probs: Vec<f64> = table
        .rows
        .iter()
        .map(|(line, f)| Table::parse(path, *line, f.last().map(String::as_str).unwrap_or("")))
        .collect::<Result<_>>()?;
    let rec = if joint {
        let d = (probs.len() as f64).sqrt().round() as usize;
        Reconstruction::Joint(crate::fock::JointPhotonDistribution::new(d, probs)?)
    } else {
        Reconstruction::Single(crate::fock::PhotonDistribution::new(probs)?)
    };
    Ok((rec, table.meta))
}

/// Ensemble summary as read back from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSummary {
    pub joint: bool,
    pub cutoff: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub theory: Option<Vec<f64>>,
    pub meta: Metadata,
}

/// Writes `m,n,mean,std[,theory]` (joint) or `n,mean,std[,theory]` rows.
pub fn write_ensemble(path: &Path, ensemble: &BootstrapEnsemble, theory: Option<&[f64]>, meta: &Metadata) -> Result<()> {
    if theory.is_some_and(|t| t.len() != ensemble.mean.len()) {
        return Err(domain("theory column has the wrong length"));
    }
    let mut meta = meta.clone();
    meta.insert("M".into(), ensemble.subset_size.to_string());
    meta.insert("reps".into(), ensemble.repetitions.to_string());
    meta.insert("members".into(), ensemble.members.len().to_string());
    meta.insert("d".into(), ensemble.cutoff().to_string());
    let mut w = create(path)?;
    write_metadata(&mut w, &meta)?;
    let (cols, idx) = index_columns(&ensemble.members[0]);
    writeln!(w, "{cols},mean,std{}", if theory.is_some() { ",theory" } else { "" })?;
    for (k, i) in idx.iter().enumerate() {
        write!(w, "{i},{},{}", ensemble.mean[k], ensemble.std[k])?;
        if let Some(t) = theory {
            write!(w, ",{}", t[k])?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ensemble(path: &Path) -> Result<EnsembleSummary> {
    let table = read_table(path)?;
    let h: Vec<&str> = table.header.iter().map(String::as_str).collect();
    let (joint, offset) = match h.first() {
        Some(&"m") => (true, 2),
        Some(&"n") => (false, 1),
        _ => return Err(format_err(path, 0, "expected m,n,... or n,... columns")),
    };
    let has_theory = h.last() == Some(&"theory");
    let width = offset + 2 + usize::from(has_theory);
    if h.len() != width || h[offset] != "mean" || h[offset + 1] != "std" {
        return Err(format_err(path, 0, "expected mean,std columns"));
    }
    let (mut mean, mut std, mut theory) = (Vec::new(), Vec::new(), Vec::new());
    for (line, f) in &table.rows {
        if f.len() != width {
            return Err(format_err(path, *line, format!("expected {width} fields")));
        }
        mean.push(Table::parse(path, *line, &f[offset])?);
        std.push(Table::parse(path, *line, &f[offset + 1])?);
        if has_theory {
            theory.push(Table::parse(path, *line, &f[offset + 2])?);
        }
    }
    let cutoff = if joint { (mean.len() as f64).sqrt().round() as usize } else { mean.len() };
    if cutoff == 0 || (joint && cutoff * cutoff != mean.len()) {
        return Err(format_err(path, 0, "table is not a square photon-number grid"));
    }
    Ok(EnsembleSummary {
        joint,
        cutoff,
        mean,
        std,
        theory: has_theory.then_some(theory),
        meta: table.meta,
    })
}

/// Bar-chart data: one row per photon-number bar with its error bar and the
/// model prediction.
pub fn write_plot_data(path: &Path, ensemble: &BootstrapEnsemble, theory: Option<&[f64]>, meta: &Metadata) -> Result<()> {
    let mut w = create(path)?;
    write_metadata(&mut w, meta)?;
    writeln!(w, "label,value,error,theory")?;
    let (_, idx) = index_columns(&ensemble.members[0]);
    for (k, i) in idx.iter().enumerate() {
        let label = if ensemble.is_joint() { format!("P({})", i.replace(',', ";")) } else { format!("P({i})") };
        let t = theory.map(|t| t[k].to_string()).unwrap_or_default();
        writeln!(w, "{label},{},{},{t}", ensemble.mean[k], ensemble.std[k])?;
    }
    w.flush()?;
    Ok(())
}

/// Probe grid and per-probe statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub alpha_max: f64,
    pub grid: [usize; 2],
    pub spacing: Spacing,
    pub events: u64,
    /// Common fractional error of the calibrated intensities.
    pub calibration_error: f64,
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self { alpha_max: 2.0, grid: [16, 16], spacing: Spacing::Amplitude, events: 4_200_000, calibration_error: 0.0 }
    }
}

/// Twin-beam sources to simulate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSection {
    pub mean_photon: Vec<f64>,
    /// Transmission from the source to the detector, signal and idler.
    pub coupling: [f64; 2],
    pub events: u64,
    /// Photon-number cutoff used to represent the source.
    pub cutoff: usize,
}

impl Default for SourceSection {
    fn default() -> Self {
        Self { mean_photon: vec![0.11, 0.76, 1.34], coupling: [0.75, 0.75], events: 4_200_000, cutoff: 30 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub view: String,
    pub d: usize,
    pub tolerance: f64,
    #[serde(rename = "M")]
    pub subset_size: usize,
    pub repetitions: usize,
}

impl Default for FitSection {
    fn default() -> Self {
        Self { view: "joint".into(), d: 8, tolerance: 1e-8, subset_size: 50, repetitions: 100 }
    }
}

/// Everything needed to run a synthetic experiment, stored as TOML.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub detector: DetectorConfig,
    pub probes: ProbeSection,
    pub source: SourceSection,
    pub fit: FitSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Format(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.detector.validate()?;
        let p = &self.probes;
        if !(p.alpha_max > 0.0) || p.grid.contains(&0) || p.events == 0 {
            return Err(domain("probes: alpha_max, grid sizes and events must be positive"));
        }
        if !(p.calibration_error > -1.0) {
            return Err(domain("probes: calibration_error must exceed -1"));
        }
        let s = &self.source;
        if s.mean_photon.iter().any(|&n| !(n >= 0.0)) {
            return Err(domain("source: mean photon numbers must be nonnegative"));
        }
        if s.coupling.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(domain("source: coupling must lie in [0, 1]"));
        }
        if s.events == 0 || s.cutoff == 0 {
            return Err(domain("source: events and cutoff must be positive"));
        }
        let f = &self.fit;
        crate::fit::View::parse(&f.view, &self.detector)?;
        if f.d == 0 || f.subset_size == 0 || f.repetitions == 0 || !(f.tolerance > 0.0) {
            return Err(domain("fit: d, M, repetitions and tolerance must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tmd::ClickPattern;

    fn sample_histogram() -> JointClickHistogram {
        let mut h = JointClickHistogram::zeros();
        h.cells_mut()[0] = 100;
        h.cells_mut()[ClickPattern::new(3, 0x80).index()] = 7;
        h.cells_mut()[JOINT_PATTERNS - 1] = 1;
        h
    }

    #[test]
    fn histogram_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        let mut meta = Metadata::new();
        meta.insert("config_hash".into(), "0123456789abcdef".into());
        write_histogram_csv(&path, &sample_histogram(), &meta).unwrap();
        let (h, m) = read_histogram_csv(&path).unwrap();
        assert_eq!(h, sample_histogram());
        assert_eq!(m["events"], "108");
        assert_eq!(m["config_hash"], "0123456789abcdef");
    }

    #[test]
    fn histogram_binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.bin");
        write_histogram_bin(&path, &sample_histogram(), "abc").unwrap();
        let (h, hash) = read_histogram_bin(&path).unwrap();
        assert_eq!(h, sample_histogram());
        assert_eq!(hash, "abc");
        let (r, meta) = read_histogram(&path).unwrap();
        assert_eq!(r, Response::Counts(sample_histogram()));
        assert_eq!(meta["events"], "108");
    }

    #[test]
    fn malformed_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "pattern_index,count\n70000,1\n").unwrap();
        assert!(matches!(read_histogram_csv(&path), Err(Error::Format(_))));
        fs::write(&path, "# events=5\npattern_index,count\n1,4\n").unwrap();
        assert!(read_histogram_csv(&path).is_err());
        fs::write(&path, "a,b\n").unwrap();
        assert!(read_histogram_csv(&path).is_err());
        assert!(matches!(read_histogram_csv(&dir.path().join("none.csv")), Err(Error::Io(_))));
    }

    #[test]
    fn config_round_trip() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml().unwrap();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(back.to_toml().unwrap(), text);

        let partial = ExperimentConfig::from_toml("seed = 5\n[detector]\nefficiency = 0.3\n[fit]\nM = 30\n").unwrap();
        assert_eq!(partial.seed, 5);
        assert_eq!(partial.detector.efficiency, 0.3);
        assert_eq!(partial.fit.subset_size, 30);
        assert_eq!(partial.probes, ProbeSection::default());
        assert!(ExperimentConfig::from_toml("[detector]\nefficiency = 2.0\n").is_err());
        assert!(ExperimentConfig::from_toml("bogus = 1\n").is_err());
        assert!(ExperimentConfig::from_toml("[fit]\nview = \"sideways\"\n").is_err());
    }
}
