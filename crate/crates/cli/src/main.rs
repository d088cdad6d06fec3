//! `tmdtomo`: synthetic twin-beam experiments with a time-multiplexed
//! detector and their data-pattern reconstruction.
//!
//! Exit codes: 0 success, 1 bad configuration or arguments, 2 unreadable or
//! unwritable files, 3 no reconstruction was possible (every repetition
//! failed, or no probe is usable for the view).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tmdtomo::exec::derive_seed;
use tmdtomo::fit::{assemble, solve, Reconstruction, SolveOptions, View};
use tmdtomo::fock::{apply_loss, pdc_distribution, wigner_at_origin, JointPhotonDistribution, LossChannel, PhotonDistribution};
use tmdtomo::herald::{herald_povm, post_measurement_idler};
use tmdtomo::io::{self, ExperimentConfig, Metadata};
use tmdtomo::probes::{estimate_efficiency, generate_probe_grid, simulate_library, PatternLibrary, Response, ResponseModel};
use tmdtomo::stats::{bootstrap_problem, scalar_summary, BootstrapOptions};
use tmdtomo::tmd::{sample_patterns_with, DetectorConfig, Mode};
use tmdtomo::{Error, Execution};

/// Tag mixed into the seed for the source histograms, so they never share a
/// stream with a probe.
const SOURCE_TAG: u64 = 1 << 40;

#[derive(Parser)]
#[command(name = "tmdtomo", version, about = "Click-detector simulation and data-pattern tomography")]
struct Cli {
    /// Run every loop on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a probe library and twin-beam data from a TOML config.
    Simulate {
        config: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        /// Also write the data histograms in the binary format.
        #[arg(long)]
        binary: bool,
    },
    /// Estimate the detector efficiency from a probe library.
    Calibrate { library: PathBuf },
    /// Bootstrap reconstruction of one data histogram.
    Reconstruct {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        library: PathBuf,
        /// Experiment config; defaults to config.toml beside the library.
        #[arg(long)]
        config: Option<PathBuf>,
        /// joint, marginal-signal, marginal-idler, class-signal, class-idler,
        /// heralded-single or heralded-double.
        #[arg(long)]
        view: Option<String>,
        /// Photon-number cutoff.
        #[arg(long)]
        d: Option<usize>,
        /// Probes per bootstrap repetition.
        #[arg(long = "M")]
        m: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Summarize ensemble files (or directories containing them).
    Report {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure { code: 1, message: e.to_string() }
}

fn io_err(e: impl std::fmt::Display) -> Failure {
    Failure { code: 2, message: e.to_string() }
}

/// Maps a library error from a computation step.
fn run_err(e: Error) -> Failure {
    match e {
        Error::Io(_) | Error::Format(_) => io_err(e),
        Error::Infeasible(_) | Error::InsufficientData(_) => Failure { code: 3, message: e.to_string() },
        _ => config_err(e),
    }
}

fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    ExperimentConfig::load(path).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn source_truth(mean_n: f64, cfg: &ExperimentConfig) -> tmdtomo::Result<JointPhotonDistribution> {
    let [s, i] = cfg.source.coupling;
    apply_loss(&pdc_distribution(mean_n, cfg.source.cutoff)?, LossChannel::new(s, i)?)
}

fn simulate(config: &Path, out: &Path, binary: bool, exec: Execution) -> CliResult {
    let cfg = load_config(config)?;
    fs::create_dir_all(out).map_err(|e| io_err(format!("{}: {e}", out.display())))?;
    let text = cfg.to_toml().map_err(config_err)?;
    fs::write(out.join("config.toml"), text).map_err(io_err)?;

    let hash = cfg.detector.hash();
    let p = &cfg.probes;
    let probes = generate_probe_grid(p.alpha_max, (p.grid[0], p.grid[1]), p.spacing).map_err(config_err)?;
    log::info!("simulating {} probes with {} events each", probes.len(), p.events);
    let model = ResponseModel::Sampled { events: p.events, seed: cfg.seed };
    let library = simulate_library(&probes, &cfg.detector, model, p.calibration_error, exec).map_err(run_err)?;
    let mut meta = Metadata::new();
    meta.insert("config_hash".into(), hash.clone());
    meta.insert("seed".into(), cfg.seed.to_string());
    io::write_library(&out.join("library"), &library, &meta).map_err(run_err)?;

    for (k, &mean_n) in cfg.source.mean_photon.iter().enumerate() {
        let truth = source_truth(mean_n, &cfg).map_err(config_err)?;
        let seed = derive_seed(cfg.seed, SOURCE_TAG + k as u64);
        let h = sample_patterns_with(&truth, &cfg.detector, cfg.source.events, seed, exec).map_err(run_err)?;
        let mut meta = Metadata::new();
        meta.insert("source_mean_n".into(), mean_n.to_string());
        meta.insert("coupling".into(), format!("{} {}", cfg.source.coupling[0], cfg.source.coupling[1]));
        meta.insert("config_hash".into(), hash.clone());
        meta.insert("seed".into(), seed.to_string());
        let stem = out.join("data").join(format!("pdc_{}", k + 1));
        io::write_histogram_csv(&stem.with_extension("csv"), &h, &meta).map_err(run_err)?;
        if binary {
            io::write_histogram_bin(&stem.with_extension("bin"), &h, &hash).map_err(run_err)?;
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn read_library(path: &Path) -> CliResult<(PatternLibrary, Metadata)> {
    io::read_library(path).map_err(|e| io_err(format!("{}: {e}", path.display())))
}

fn calibrate(library: &Path) -> CliResult {
    let (library, _) = read_library(library)?;
    let (eta, std) = estimate_efficiency(&library).map_err(config_err)?;
    println!("eta = {eta:.5} ± {std:.5} ({} probes)", library.len());
    Ok(())
}

/// Model prediction for the quantity a view reconstructs, from the data
/// file's `source_mean_n` and `coupling` entries.
fn theory(meta: &Metadata, view: View, det: &DetectorConfig, d: usize, source_cutoff: usize) -> Option<Vec<f64>> {
    let mean_n: f64 = meta.get("source_mean_n")?.parse().ok()?;
    let coupling: Vec<f64> = meta.get("coupling")?.split_whitespace().map(str::parse).collect::<Result<_, _>>().ok()?;
    let [s, i] = coupling[..] else { return None };
    let cutoff = source_cutoff.max(d);
    let truth = apply_loss(&pdc_distribution(mean_n, cutoff).ok()?, LossChannel::new(s, i).ok()?).ok()?;
    let single = |p: PhotonDistribution| p.probs()[..d].to_vec();
    Some(match view {
        View::Joint => truth.truncate(d).probs().to_vec(),
        View::Marginal(Mode::Signal) | View::ClassReduced(Mode::Signal) => single(truth.signal_marginal()),
        View::Marginal(Mode::Idler) | View::ClassReduced(Mode::Idler) => single(truth.idler_marginal()),
        View::Heralded(cond) => {
            // Afterpulses are ignored in the prediction.
            let povm = herald_povm(cond.kind, &det.clone().without_afterpulse(), cutoff).ok()?;
            single(post_measurement_idler(&truth, &povm).ok()?)
        }
    })
}

struct ReconstructArgs {
    data: PathBuf,
    library: PathBuf,
    config: Option<PathBuf>,
    view: Option<String>,
    d: Option<usize>,
    m: Option<usize>,
    reps: Option<usize>,
    seed: Option<u64>,
    tolerance: Option<f64>,
    out: PathBuf,
}

fn reconstruct(args: ReconstructArgs, exec: Execution) -> CliResult {
    let config_path = args.config.clone().or_else(|| {
        let beside = args.library.parent()?.join("config.toml");
        beside.exists().then_some(beside)
    });
    let cfg = match &config_path {
        Some(p) => load_config(p)?,
        None => {
            log::warn!("no config found; using the default detector");
            ExperimentConfig::default()
        }
    };
    let (library, lib_meta) = read_library(&args.library)?;
    let (data, data_meta) = io::read_histogram(&args.data).map_err(|e| io_err(format!("{}: {e}", args.data.display())))?;
    let hash = cfg.detector.hash();
    for (what, meta) in [("library", &lib_meta), ("data", &data_meta)] {
        if let Some(h) = meta.get("config_hash") {
            if *h != hash {
                return Err(config_err(format!("{what} was simulated with detector {h}, config has {hash}")));
            }
        }
    }

    let view = View::parse(args.view.as_deref().unwrap_or(&cfg.fit.view), &cfg.detector).map_err(config_err)?;
    let d = args.d.unwrap_or(cfg.fit.d);
    let solve_opts = SolveOptions { tolerance: args.tolerance.unwrap_or(cfg.fit.tolerance), ..SolveOptions::default() };
    let opts = BootstrapOptions {
        subset_size: args.m.unwrap_or(cfg.fit.subset_size),
        repetitions: args.reps.unwrap_or(cfg.fit.repetitions),
        seed: args.seed.unwrap_or(cfg.seed),
        solve: solve_opts,
    };
    let problem = match &data {
        Response::Counts(h) => assemble(&library, h, view, d),
        Response::Exact(p) => assemble(&library, p, view, d),
    }
    .map_err(run_err)?;
    let ensemble = bootstrap_problem(&problem, opts, exec).map_err(run_err)?;
    if !ensemble.dropped.is_empty() || ensemble.unconverged > 0 {
        log::warn!(
            "{} repetitions dropped, {} stopped before the tolerance",
            ensemble.dropped.len(),
            ensemble.unconverged
        );
    }
    let full = solve(&problem, solve_opts).map_err(run_err)?;
    let theory = theory(&data_meta, view, &cfg.detector, d, cfg.source.cutoff);

    let mut meta = Metadata::new();
    meta.insert("view".into(), view.to_string());
    meta.insert("seed".into(), opts.seed.to_string());
    meta.insert("data".into(), args.data.display().to_string());
    for key in ["source_mean_n", "coupling", "config_hash"] {
        if let Some(v) = data_meta.get(key) {
            meta.insert(key.into(), v.clone());
        }
    }
    meta.insert("dropped".into(), ensemble.dropped.len().to_string());
    meta.insert("unconverged".into(), ensemble.unconverged.to_string());
    if !ensemble.is_joint() {
        let w = |r: &Reconstruction| r.as_single().map_or(f64::NAN, wigner_at_origin);
        let (wm, ws) = scalar_summary(&ensemble.members, w);
        meta.insert("w0_mean".into(), wm.to_string());
        meta.insert("w0_std".into(), ws.to_string());
    }
    let out = &args.out;
    io::write_ensemble(&out.join("ensemble.csv"), &ensemble, theory.as_deref(), &meta).map_err(run_err)?;
    io::write_plot_data(&out.join("plot.csv"), &ensemble, theory.as_deref(), &meta).map_err(run_err)?;
    io::write_fit_result(&out.join("fit.csv"), &full, &meta).map_err(run_err)?;
    println!(
        "{view}: {} of {} repetitions, M = {}, d = {d}; wrote {}",
        ensemble.members.len(),
        opts.repetitions,
        opts.subset_size,
        out.display()
    );
    Ok(())
}

fn collect_ensembles(path: &Path, found: &mut Vec<PathBuf>) -> std::io::Result<()> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
        entries.sort();
        for p in entries {
            collect_ensembles(&p, found)?;
        }
    } else if path.file_name().is_some_and(|n| n.to_string_lossy().ends_with("ensemble.csv")) {
        found.push(path.to_path_buf());
    }
    Ok(())
}

fn report(paths: &[PathBuf]) -> CliResult {
    let mut files = Vec::new();
    for p in paths {
        if !p.exists() {
            return Err(io_err(format!("{}: no such file or directory", p.display())));
        }
        if p.is_file() {
            files.push(p.clone());
        } else {
            collect_ensembles(p, &mut files).map_err(|e| io_err(format!("{}: {e}", p.display())))?;
        }
    }
    if files.is_empty() {
        return Err(io_err("no ensemble files found"));
    }
    let mut table = String::new();
    writeln!(table, "{:<28} {:<16} {:>9} {:>9} {:>18} {:>9}", "file", "view", "<n_s>", "<n_i>", "W(0)", "fidelity").unwrap();
    for f in &files {
        let e = io::read_ensemble(f).map_err(|e| io_err(format!("{}: {e}", f.display())))?;
        let view = e.meta.get("view").map_or("?", String::as_str);
        let d = e.cutoff;
        let (ns, ni) = if e.joint {
            let mut ns = 0.0;
            let mut ni = 0.0;
            for (k, p) in e.mean.iter().enumerate() {
                ns += (k / d) as f64 * p;
                ni += (k % d) as f64 * p;
            }
            (format!("{ns:.4}"), format!("{ni:.4}"))
        } else {
            let n: f64 = e.mean.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
            if view.contains("signal") { (format!("{n:.4}"), "-".into()) } else { ("-".into(), format!("{n:.4}")) }
        };
        let w = match (e.meta.get("w0_mean"), e.meta.get("w0_std")) {
            (Some(m), Some(s)) => match (m.parse::<f64>(), s.parse::<f64>()) {
                (Ok(m), Ok(s)) => format!("{m:.3} ± {s:.3}"),
                _ => "-".into(),
            },
            _ => "-".into(),
        };
        let fid = match &e.theory {
            Some(t) => {
                let total: f64 = e.mean.iter().sum();
                let mean: Vec<f64> = e.mean.iter().map(|v| v / total).collect();
                tmdtomo::fock::fidelity(&mean, t).map_or("-".into(), |f| format!("{f:.4}"))
            }
            None => "-".into(),
        };
        let name = f.parent().and_then(|p| p.file_name()).map_or_else(|| f.display().to_string(), |n| n.to_string_lossy().into_owned());
        writeln!(table, "{name:<28} {view:<16} {ns:>9} {ni:>9} {w:>18} {fid:>9}").unwrap();
    }
    print!("{table}");
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    match cli.command {
        Command::Simulate { config, out, binary } => simulate(&config, &out, binary, exec),
        Command::Calibrate { library } => calibrate(&library),
        Command::Reconstruct { data, library, config, view, d, m, reps, seed, tolerance, out } => reconstruct(
            ReconstructArgs { data, library, config, view, d, m, reps, seed, tolerance, out },
            exec,
        ),
        Command::Report { paths } => report(&paths),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
