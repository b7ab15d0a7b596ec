//! Command-line front end: synthetic dataset generation, staged fits, and
//! analysis reports.
//!
//! Exit codes: 0 success, 2 schema error, 3 invalid model/data, 4 missing
//! dependency, 5 optimizer failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lindtomo::analysis::{compare_report, zz_from_device, zz_from_device_signed, DeviceParams};
use lindtomo::dynamics::jumps_from_lindblad;
use lindtomo::io::{
    read_json, write_json, write_series_csv, KrausFile, ModelFile, ReportFile, RunManifest,
    SpamFile,
};
use lindtomo::krausfit::fit_kraus;
use lindtomo::lindfit::{fit_lindblad, loglike_lt, steady_state, FitMode, LindbladEstimate};
use lindtomo::markov::{n_markov, n_markov_from_states, MarkovReport};
use lindtomo::optimize::OptimConfig;
use lindtomo::qcore::{trace_distance, PrepLabel, PREP_SYMBOLS};
use lindtomo::spamfit::{fit_spam, thermal_fit, SpamEstimate};
use lindtomo::synth::{
    exclude, generate, ideal_prep_state, Dataset, RecordFilter, SpamTruth, DEFAULT_SHOTS,
};
use lindtomo::{Error, Result};

const EXIT_SCHEMA: u8 = 2;
const EXIT_MODEL: u8 = 3;
const EXIT_DEPENDENCY: u8 = 4;
const EXIT_OPTIMIZER: u8 = 5;

#[derive(Parser)]
#[command(
    name = "lindtomo",
    version,
    about = "Lindblad tomography: simulate shot counts, fit SPAM/Kraus/Lindblad models, analyze"
)]
struct Cli {
    /// Worker thread cap (falls back to LINDTOMO_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic shot-count dataset from a ground-truth model.
    Simulate(SimulateArgs),
    /// Fit one estimation stage to a dataset.
    Fit(FitArgs),
    /// Produce analysis reports from fitted estimates.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Ground-truth model file (Hamiltonian + Lindblad matrix).
    #[arg(long)]
    model: PathBuf,
    /// Ground-truth SPAM file; perfect SPAM when omitted.
    #[arg(long)]
    spam: Option<PathBuf>,
    /// Expected qubit count; checked against the model when given.
    #[arg(long)]
    qubits: Option<usize>,
    /// Time grid: "lin:start:stop:n", "log:start:stop:n" (0 prepended), or a
    /// comma list, in microseconds. Must include 0.
    #[arg(long, default_value = "lin:0:80:20")]
    times: String,
    /// Shots per sequence.
    #[arg(long, default_value_t = DEFAULT_SHOTS)]
    shots: u64,
    /// PRNG seed; identical seeds reproduce identical datasets.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, ValueEnum)]
enum Stage {
    Spam,
    Kraus,
    Lindblad,
}

#[derive(Copy, Clone, ValueEnum)]
enum Mode {
    Free,
    Restricted,
}

#[derive(Args)]
struct FitArgs {
    /// Dataset file produced by `simulate` (or schema-compatible).
    #[arg(long)]
    data: PathBuf,
    /// Which stage to fit.
    #[arg(long, value_enum)]
    stage: Stage,
    /// Lindblad-matrix parameterization (lindblad stage only).
    #[arg(long, value_enum, default_value_t = Mode::Free)]
    mode: Mode,
    /// SPAM estimate file; required for the kraus and lindblad stages.
    #[arg(long)]
    spam: Option<PathBuf>,
    /// Drop matching records before fitting, e.g. "prep=-i" or
    /// "prep=-i,basis=y,time=3.0". Repeatable.
    #[arg(long)]
    exclude: Vec<String>,
    /// Optimizer configuration file (JSON OptimConfig); defaults when
    /// omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed the fit at each delay time from the previous time's optimum
    /// (kraus stage; default is fully independent per-time fits).
    #[arg(long)]
    warm_start: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, ValueEnum)]
enum AnalyzeKind {
    Markov,
    Zz,
    Compare,
    Steady,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long, value_enum)]
    kind: AnalyzeKind,
    /// Per-time channel estimate file (markov).
    #[arg(long)]
    kraus: Option<PathBuf>,
    /// SPAM estimate file (markov with --use-spam-preps, compare, steady).
    #[arg(long)]
    spam: Option<PathBuf>,
    /// Search over SPAM-corrected preparations instead of ideal pure ones
    /// (markov).
    #[arg(long)]
    use_spam_preps: bool,
    /// Fitted model file (zz, steady).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Free-mode model file (compare).
    #[arg(long)]
    free: Option<PathBuf>,
    /// Restricted-mode model file (compare).
    #[arg(long)]
    restricted: Option<PathBuf>,
    /// Dataset for log-likelihood comparison (compare; optional).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Time grid for the deviation table (compare).
    #[arg(long, default_value = "lin:0:80:20")]
    times: String,
    /// Device parameters "g,eta_a,eta_b,delta" in MHz (zz; alternative to
    /// --model).
    #[arg(long)]
    device: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("LINDTOMO_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("lindtomo: could not configure {n} threads: {e}");
            return ExitCode::from(EXIT_MODEL);
        }
    }
    let outcome = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Analyze(args) => cmd_analyze(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lindtomo: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Schema(_) | Error::Json(_) | Error::Io(_) => EXIT_SCHEMA,
        Error::Optimizer(_) => EXIT_OPTIMIZER,
        _ => EXIT_MODEL,
    }
}

/// Exit immediately with the dependency code; used where a flag combination
/// leaves a stage without its prerequisite estimate.
fn require<T>(opt: Option<T>, what: &str) -> std::result::Result<T, ExitHint> {
    opt.ok_or(ExitHint::Dependency(what.to_string()))
}

/// Internal control-flow for the dependency exit code.
enum ExitHint {
    Dependency(String),
}

/// Parse "lin:start:stop:n", "log:start:stop:n", or a comma list (us).
fn parse_times(spec: &str) -> Result<Vec<f64>> {
    let bad = |msg: &str| Error::Schema(format!("invalid --times {spec:?}: {msg}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let times = match parts.as_slice() {
        [kind @ ("lin" | "log"), a, b, n] => {
            let (start, stop): (f64, f64) = (
                a.parse().map_err(|_| bad("bad start"))?,
                b.parse().map_err(|_| bad("bad stop"))?,
            );
            let n: usize = n.parse().map_err(|_| bad("bad count"))?;
            if n < 2 || stop <= start {
                return Err(bad("need n >= 2 and stop > start"));
            }
            match *kind {
                "lin" => (0..n)
                    .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
                    .collect(),
                _ => {
                    // Logarithmic grid with 0 prepended so SPAM stays fittable.
                    if start <= 0.0 {
                        return Err(bad("log grid needs start > 0"));
                    }
                    let mut v = vec![0.0];
                    let (la, lb) = (start.ln(), stop.ln());
                    v.extend(
                        (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()),
                    );
                    v
                }
            }
        }
        [list] => list
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad("bad time value")))
            .collect::<Result<Vec<f64>>>()?,
        _ => return Err(bad("expected lin:start:stop:n, log:start:stop:n, or a comma list")),
    };
    if !times.contains(&0.0) {
        return Err(bad("grid must include 0"));
    }
    Ok(times)
}

/// Parse one --exclude spec: comma-separated key=value with keys
/// prep / basis / time.
fn parse_exclude(spec: &str) -> Result<RecordFilter> {
    let mut f = RecordFilter::default();
    for kv in spec.split(',') {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Schema(format!("bad --exclude entry {kv:?}")))?;
        match k.trim() {
            "prep" => f.prep = Some(v.trim().parse()?),
            "basis" => f.basis = Some(v.trim().parse()?),
            "time" => {
                f.time_us = Some(
                    v.trim()
                        .parse()
                        .map_err(|_| Error::Schema(format!("bad --exclude time {v:?}")))?,
                )
            }
            other => {
                return Err(Error::Schema(format!(
                    "unknown --exclude key {other:?} (expected prep, basis, or time)"
                )))
            }
        }
    }
    Ok(f)
}

fn load_config(path: &Option<PathBuf>) -> Result<OptimConfig> {
    match path {
        Some(p) => read_json(p),
        None => Ok(OptimConfig::default()),
    }
}

fn finish_manifest(mut m: RunManifest, t0: Instant) -> RunManifest {
    m.wall_time_s = t0.elapsed().as_secs_f64();
    m
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let t0 = Instant::now();
    let model_file: ModelFile = read_json(&args.model)?;
    let model = model_file.to_model()?;
    let n_qubits = model.dim().trailing_zeros() as usize;
    if let Some(q) = args.qubits {
        if q != n_qubits {
            return Err(Error::InvalidModel(format!(
                "--qubits {q} but the model acts on {n_qubits} qubit(s)"
            )));
        }
    }
    let spam = match &args.spam {
        Some(p) => {
            let f: SpamFile = read_json(p)?;
            let est = f.to_estimate()?;
            SpamTruth {
                rho0: est.rho0,
                povm: est.povm,
            }
        }
        None => SpamTruth::ideal(n_qubits)?,
    };
    let times = parse_times(&args.times)?;
    let mut ds = generate(&model, &spam, &times, args.shots, args.seed)?;
    let mut inputs = vec![path_str(&args.model)];
    if let Some(p) = &args.spam {
        inputs.push(path_str(p));
    }
    ds.manifest = Some(finish_manifest(
        RunManifest::new("simulate", &inputs, &OptimConfig::default(), args.seed),
        t0,
    ));
    write_json(&args.out, &ds)
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let t0 = Instant::now();
    let mut data: Dataset = read_json(&args.data)?;
    data.validate()?;
    if !args.exclude.is_empty() {
        let filters = args
            .exclude
            .iter()
            .map(|s| parse_exclude(s))
            .collect::<Result<Vec<_>>>()?;
        let before = data.records.len();
        data = exclude(&data, &filters)?;
        eprintln!(
            "lindtomo: excluded {} of {} records",
            before - data.records.len(),
            before
        );
    }
    let config = load_config(&args.config)?;
    let mut inputs = vec![path_str(&args.data)];
    if let Some(p) = &args.config {
        inputs.push(path_str(p));
    }

    let load_spam = |inputs: &mut Vec<String>| -> std::result::Result<SpamEstimate, ExitHint> {
        let p = require(args.spam.as_ref(), "--spam (SPAM estimate file)")?;
        inputs.push(path_str(p));
        read_json::<SpamFile>(p)
            .and_then(|f| f.to_estimate())
            .map_err(|e| ExitHint::Dependency(format!("--spam: {e}")))
    };

    let result = match args.stage {
        Stage::Spam => {
            let est = fit_spam(&data.records, &config)?;
            let manifest = finish_manifest(
                RunManifest::new("fit spam", &inputs, &config, config.seed),
                t0,
            );
            write_json(&args.out, &SpamFile::from_estimate(&est, Some(manifest)))
        }
        Stage::Kraus => {
            let spam = match load_spam(&mut inputs) {
                Ok(s) => s,
                Err(ExitHint::Dependency(what)) => return dependency_exit(&what),
            };
            let est = fit_kraus(&data, &spam, &config, args.warm_start)?;
            for (t, why) in &est.failures {
                eprintln!("lindtomo: fit failed at t = {t} us: {why}");
            }
            let manifest = finish_manifest(
                RunManifest::new("fit kraus", &inputs, &config, config.seed),
                t0,
            );
            write_json(&args.out, &KrausFile::from_estimate(&est, Some(manifest))?)
        }
        Stage::Lindblad => {
            let spam = match load_spam(&mut inputs) {
                Ok(s) => s,
                Err(ExitHint::Dependency(what)) => return dependency_exit(&what),
            };
            let mode = match args.mode {
                Mode::Free => FitMode::Free,
                Mode::Restricted => FitMode::Restricted,
            };
            let est = fit_lindblad(&data, &spam, mode, &config)?;
            let manifest = finish_manifest(
                RunManifest::new("fit lindblad", &inputs, &config, config.seed),
                t0,
            );
            write_json(&args.out, &ModelFile::from_model(&est.model, Some(manifest)))
        }
    };
    result
}

/// Print the dependency message and terminate with the dependency exit code.
fn dependency_exit(what: &str) -> Result<()> {
    eprintln!("lindtomo: missing dependency: {what}");
    std::process::exit(EXIT_DEPENDENCY as i32);
}

#[derive(Serialize)]
struct ZzReport {
    zz_mhz_magnitude: f64,
    zz_mhz_signed: Option<f64>,
    source: String,
}

#[derive(Serialize)]
struct SteadyReport {
    steady_state: lindtomo::io::MatrixJson,
    thermal_weight: Option<f64>,
    thermal_distance: Option<f64>,
    distance_to_rho0: Option<f64>,
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let t0 = Instant::now();
    let cfg = OptimConfig::default();
    match args.kind {
        AnalyzeKind::Markov => {
            let kraus_path = match args.kraus.as_ref() {
                Some(p) => p,
                None => return dependency_exit("--kraus (per-time channel estimates)"),
            };
            let kf: KrausFile = read_json(kraus_path)?;
            let est = kf.to_estimate()?;
            let n_qubits = est.entries[0].kraus.dim().trailing_zeros() as usize;
            let preps = candidate_preps(n_qubits);
            let mut inputs = vec![path_str(kraus_path)];
            let report: MarkovReport = if args.use_spam_preps {
                let spam_path = match args.spam.as_ref() {
                    Some(p) => p,
                    None => return dependency_exit("--spam (required by --use-spam-preps)"),
                };
                inputs.push(path_str(spam_path));
                let spam = read_json::<SpamFile>(spam_path)?.to_estimate()?;
                let states = preps
                    .iter()
                    .map(|p| Ok((p.to_string(), ideal_prep_state(p, &spam.rho0)?)))
                    .collect::<Result<Vec<_>>>()?;
                n_markov_from_states(&est, &states)?
            } else {
                n_markov(&est, &preps)?
            };
            let series = report.distance_series.clone();
            let manifest = finish_manifest(RunManifest::new("analyze markov", &inputs, &cfg, 0), t0);
            write_json(&args.out, &ReportFile::new(report, Some(manifest)))?;
            write_series_csv(&args.out.with_extension("csv"), "trace_distance", &series)
        }
        AnalyzeKind::Zz => {
            let (report, inputs) = match (&args.model, &args.device) {
                (Some(path), None) => {
                    let model = read_json::<ModelFile>(path)?.to_model()?;
                    let zz = lindtomo::analysis::zz_from_hamiltonian(model.hamiltonian())?;
                    (
                        ZzReport {
                            zz_mhz_magnitude: zz.abs(),
                            zz_mhz_signed: Some(zz),
                            source: "hamiltonian".into(),
                        },
                        vec![path_str(path)],
                    )
                }
                (None, Some(spec)) => {
                    let vals: Vec<f64> = spec
                        .split(',')
                        .map(|v| {
                            v.trim()
                                .parse()
                                .map_err(|_| Error::Schema(format!("bad --device value {v:?}")))
                        })
                        .collect::<Result<_>>()?;
                    if vals.len() != 4 {
                        return Err(Error::Schema(
                            "--device expects g,eta_a,eta_b,delta (MHz)".into(),
                        ));
                    }
                    let p = DeviceParams {
                        g_mhz: vals[0],
                        eta_a_mhz: vals[1],
                        eta_b_mhz: vals[2],
                        delta_mhz: vals[3],
                    };
                    (
                        ZzReport {
                            zz_mhz_magnitude: zz_from_device(&p)?,
                            zz_mhz_signed: Some(zz_from_device_signed(&p)?),
                            source: "device".into(),
                        },
                        vec![],
                    )
                }
                _ => return dependency_exit("exactly one of --model or --device"),
            };
            let manifest = finish_manifest(RunManifest::new("analyze zz", &inputs, &cfg, 0), t0);
            write_json(&args.out, &ReportFile::new(report, Some(manifest)))
        }
        AnalyzeKind::Compare => {
            let (free_p, restricted_p, spam_p) =
                match (&args.free, &args.restricted, &args.spam) {
                    (Some(f), Some(r), Some(s)) => (f, r, s),
                    _ => return dependency_exit("--free, --restricted, and --spam"),
                };
            let free_model = read_json::<ModelFile>(free_p)?.to_model()?;
            let restricted_model = read_json::<ModelFile>(restricted_p)?.to_model()?;
            let spam = read_json::<SpamFile>(spam_p)?.to_estimate()?;
            let times = parse_times(&args.times)?;
            let mut inputs = vec![path_str(free_p), path_str(restricted_p), path_str(spam_p)];
            // Log-likelihoods need the dataset; 0.0 placeholders otherwise.
            let (ll_f, ll_r) = match &args.data {
                Some(dp) => {
                    inputs.push(path_str(dp));
                    let data: Dataset = read_json(dp)?;
                    data.validate()?;
                    (
                        loglike_lt(&free_model, &spam, &data)?,
                        loglike_lt(&restricted_model, &spam, &data)?,
                    )
                }
                None => (0.0, 0.0),
            };
            let wrap = |model: lindtomo::dynamics::LindbladModel,
                        mode: FitMode,
                        loglike: f64|
             -> Result<LindbladEstimate> {
                let jumps = jumps_from_lindblad(&model)?;
                Ok(LindbladEstimate {
                    model,
                    jumps,
                    loglike,
                    mode,
                    report: lindtomo::optimize::FitReport {
                        best_loglike: loglike,
                        params: vec![],
                        starts_tried: 0,
                        converged: true,
                        iterations: 0,
                        wall_time_s: 0.0,
                    },
                })
            };
            let free = wrap(free_model, FitMode::Free, ll_f)?;
            let restricted = wrap(restricted_model, FitMode::Restricted, ll_r)?;
            let report = compare_report(&free, &restricted, &spam, &times)?;
            let deltas = report.deltas.clone();
            let manifest =
                finish_manifest(RunManifest::new("analyze compare", &inputs, &cfg, 0), t0);
            write_json(&args.out, &ReportFile::new(report, Some(manifest)))?;
            write_series_csv(&args.out.with_extension("csv"), "delta_diamond", &deltas)
        }
        AnalyzeKind::Steady => {
            let model_p = match args.model.as_ref() {
                Some(p) => p,
                None => return dependency_exit("--model"),
            };
            let model = read_json::<ModelFile>(model_p)?.to_model()?;
            let ss = steady_state(&model)?;
            let mut inputs = vec![path_str(model_p)];
            let distance_to_rho0 = match &args.spam {
                Some(sp) => {
                    inputs.push(path_str(sp));
                    let spam = read_json::<SpamFile>(sp)?.to_estimate()?;
                    Some(trace_distance(&ss, &spam.rho0)?)
                }
                None => None,
            };
            let (thermal_weight, thermal_distance) = if ss.dim() == 2 {
                let (a, d) = thermal_fit(&ss)?;
                (Some(a), Some(d))
            } else {
                (None, None)
            };
            let report = SteadyReport {
                steady_state: lindtomo::io::matrix_to_json(ss.matrix()),
                thermal_weight,
                thermal_distance,
                distance_to_rho0,
            };
            let manifest = finish_manifest(RunManifest::new("analyze steady", &inputs, &cfg, 0), t0);
            write_json(&args.out, &ReportFile::new(report, Some(manifest)))
        }
    }
}

/// All per-qubit preparation labels for 1 or 2 qubits.
fn candidate_preps(n_qubits: usize) -> Vec<PrepLabel> {
    match n_qubits {
        1 => PREP_SYMBOLS.iter().map(|&s| PrepLabel(vec![s])).collect(),
        _ => PREP_SYMBOLS
            .iter()
            .flat_map(|&a| PREP_SYMBOLS.iter().map(move |&b| PrepLabel(vec![a, b])))
            .collect(),
    }
}
