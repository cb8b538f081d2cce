//! `facedyn` — classify image sequences by their appearance dynamics.
//!
//! Subcommands: `extract` (feature cache), `evaluate` (leave-one-subject-
//! out cross validation with the Hankel or DTW route) and `synth-bench`
//! (seeded synthetic benchmark comparing both routes).
//!
//! Exit codes: 0 success, 2 usage, 3 ingestion failure, 4 protocol
//! failure, 5 computation failure.

mod frames;
mod output;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use facedyn_core::appearance::{ExtractionConfig, HaarKind};
use facedyn_core::cache::config_hash;
use facedyn_core::dynamics::SystemOrder;
use facedyn_core::error::ErrorCategory;
use facedyn_core::eval::bench::{run_bench, BenchSpec};
use facedyn_core::eval::{
    evaluate, extract_or_load, CacheStatus, DatasetManifest, EvalConfig, EvalError, Method,
};

use frames::ImageFrameSource;
use output::ResolvedConfig;

const EXIT_USAGE: u8 = 2;
const EXIT_INGESTION: u8 = 3;
const EXIT_PROTOCOL: u8 = 4;
const EXIT_COMPUTATION: u8 = 5;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io { path: PathBuf, source: std::io::Error },
    Eval(EvalError),
    Internal(String),
}

impl CliError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_INGESTION,
            CliError::Eval(e) => match e.category() {
                ErrorCategory::Ingestion => EXIT_INGESTION,
                ErrorCategory::Protocol => EXIT_PROTOCOL,
                ErrorCategory::Computation => EXIT_COMPUTATION,
            },
            CliError::Internal(_) => EXIT_COMPUTATION,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Io { path, source } => write!(f, "io error at {}: {source}", path.display()),
            CliError::Eval(e) => write!(f, "{e}"),
            CliError::Internal(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        Self::Eval(e)
    }
}

#[derive(Parser)]
#[command(
    name = "facedyn",
    version,
    about = "Classify image sequences by the dynamics of multi-scale Haar-like appearance features"
)]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract Haar-like feature time series for every sequence of a
    /// manifest into the feature cache (idempotent per config).
    Extract(ExtractArgs),
    /// Leave-one-subject-out evaluation of a manifest; writes accuracy,
    /// confusion, per-sequence predictions, and the resolved config.
    Evaluate(EvaluateArgs),
    /// Seeded synthetic benchmark comparing the Hankel route against the
    /// DTW baseline across noise levels.
    SynthBench(SynthBenchArgs),
}

#[derive(Args)]
struct FeatureOpts {
    /// Comma-separated Haar kinds: edge-horizontal, edge-vertical,
    /// line-horizontal, line-vertical, diagonal, center-surround
    /// (default: all six).
    #[arg(long, value_delimiter = ',')]
    kinds: Vec<String>,

    /// Comma-separated window scales as fractions of the face region
    /// (default: 0.30,0.35,0.40,0.50,0.60).
    #[arg(long, value_delimiter = ',')]
    scales: Vec<f64>,

    /// Grid step as a fraction of the face region (default: 0.10).
    #[arg(long)]
    step: Option<f64>,

    /// Maximal system order n; Hankel matrices get n+1 block rows
    /// (default: 2).
    #[arg(long)]
    order: Option<usize>,
}

impl FeatureOpts {
    fn extraction(&self) -> Result<ExtractionConfig, CliError> {
        let mut config = ExtractionConfig::default();
        if !self.kinds.is_empty() {
            config.kinds = self
                .kinds
                .iter()
                .map(|name| {
                    HaarKind::parse(name)
                        .ok_or_else(|| CliError::Usage(format!("unknown Haar kind `{name}`")))
                })
                .collect::<Result<_, _>>()?;
        }
        if !self.scales.is_empty() {
            config.scales = self.scales.clone();
        }
        if let Some(step) = self.step {
            config.step_frac = step;
        }
        config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }

    fn order(&self) -> Result<SystemOrder, CliError> {
        SystemOrder::new(self.order.unwrap_or(2)).map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Args)]
struct ExtractArgs {
    /// Dataset manifest (line-oriented JSON, see README).
    #[arg(long)]
    manifest: PathBuf,

    /// Directory for feature cache files.
    #[arg(long)]
    cache_dir: PathBuf,

    #[command(flatten)]
    features: FeatureOpts,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Dataset manifest (line-oriented JSON, see README).
    #[arg(long)]
    manifest: PathBuf,

    /// Classification route: hankel | dtw.
    #[arg(long, default_value = "hankel")]
    method: String,

    /// Output directory for reports.
    #[arg(long)]
    out_dir: PathBuf,

    /// Optional feature cache directory (reused across runs and methods).
    #[arg(long)]
    cache_dir: Option<PathBuf>,

    #[command(flatten)]
    features: FeatureOpts,
}

#[derive(Args)]
struct SynthBenchArgs {
    /// Benchmark spec file (JSON); defaults to the built-in spec.
    #[arg(long)]
    spec: Option<PathBuf>,

    /// Output directory for reports.
    #[arg(long)]
    out_dir: PathBuf,

    /// Override the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(EXIT_COMPUTATION);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Extract(args) => cmd_extract(args, cli.jobs),
        Command::Evaluate(args) => cmd_evaluate(args, cli.jobs),
        Command::SynthBench(args) => cmd_synth_bench(args, cli.jobs),
    }
}

fn cmd_extract(args: ExtractArgs, _jobs: Option<usize>) -> Result<(), CliError> {
    let order = args.features.order()?;
    let extraction = args.features.extraction()?;
    let manifest = DatasetManifest::load(&args.manifest, order)?;
    let (sequences, status) =
        extract_or_load(&manifest, &ImageFrameSource, &extraction, Some(&args.cache_dir))?;
    let degenerate: u64 = sequences.iter().map(|s| s.features.degenerate_windows).sum();
    let channels = sequences.first().map(|s| s.features.channels.len()).unwrap_or(0);
    match status {
        CacheStatus::Hit(path) => {
            println!("cache hit: {}", path.display());
        }
        CacheStatus::Written(path) => {
            println!("extracted and cached: {}", path.display());
        }
        CacheStatus::Disabled => unreachable!("extract always uses a cache dir"),
    }
    println!(
        "{} sequences, {} channels each (manifest hash {:016x}, config hash {:016x})",
        sequences.len(),
        channels,
        manifest.source_hash(),
        config_hash(&extraction)
    );
    if degenerate > 0 {
        eprintln!("warning: {degenerate} degenerate windows were substituted with 0");
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs, jobs: Option<usize>) -> Result<(), CliError> {
    let method = Method::parse(&args.method)
        .ok_or_else(|| CliError::Usage(format!("unknown method `{}`", args.method)))?;
    let order = args.features.order()?;
    let extraction = args.features.extraction()?;
    let manifest = DatasetManifest::load(&args.manifest, order)?;
    if manifest.is_empty() {
        return Err(CliError::Eval(EvalError::ingestion(vec!["manifest has no sequences".into()])));
    }
    let config = EvalConfig { method, extraction, order };

    let evaluation =
        evaluate(&manifest, &config, &ImageFrameSource, args.cache_dir.as_deref())?;

    let resolved = ResolvedConfig {
        command: "evaluate".into(),
        method: Some(method.name().into()),
        kinds: config.extraction.kinds.iter().map(|k| k.name().to_string()).collect(),
        scales: config.extraction.scales.clone(),
        step_frac: config.extraction.step_frac,
        order: order.n(),
        manifest: Some(args.manifest.display().to_string()),
        manifest_hash: Some(format!("{:016x}", manifest.source_hash())),
        extraction_config_hash: Some(format!("{:016x}", config_hash(&config.extraction))),
        cache_dir: args.cache_dir.as_ref().map(|p| p.display().to_string()),
        labels: manifest.vocab().names().to_vec(),
        jobs,
    };
    output::write_json(&args.out_dir.join("config.json"), &resolved)?;
    output::write_evaluation(&args.out_dir, &evaluation)?;

    if evaluation.degenerate_windows > 0 {
        eprintln!(
            "warning: {} degenerate windows were substituted with 0",
            evaluation.degenerate_windows
        );
    }
    println!(
        "{}: average accuracy {:.1}% over {} sequences ({} folds)",
        method.name(),
        evaluation.accuracy.average_pct,
        evaluation.predictions.len(),
        evaluation.accuracy.folds.len()
    );
    println!("reports written to {}", args.out_dir.display());
    Ok(())
}

fn cmd_synth_bench(args: SynthBenchArgs, jobs: Option<usize>) -> Result<(), CliError> {
    let mut spec = match &args.spec {
        None => BenchSpec::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            BenchSpec::from_json(&text)?
        }
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    spec.validate()?;

    let outcome = run_bench(&spec)?;

    let resolved = ResolvedConfig {
        command: "synth-bench".into(),
        method: None,
        kinds: Vec::new(),
        scales: Vec::new(),
        step_frac: 0.0,
        order: spec.order,
        manifest: None,
        manifest_hash: None,
        extraction_config_hash: None,
        cache_dir: None,
        labels: spec.label_vocab().names().to_vec(),
        jobs,
    };
    output::write_json(&args.out_dir.join("config.json"), &resolved)?;
    output::write_json(&args.out_dir.join("bench_spec.json"), &spec)?;
    output::write_bench(&args.out_dir, &outcome)?;

    for level in &outcome.levels {
        println!(
            "noise {:>5.2}: hankel {:>6.2}%  dtw {:>6.2}%",
            level.noise_std,
            level.hankel.accuracy.average_pct,
            level.dtw.accuracy.average_pct
        );
    }
    println!("reports written to {}", args.out_dir.display());
    Ok(())
}
