mod answer;
mod input;

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use rangeclust::data::{generate, read_bundle, write_bundle};
use rangeclust::validate::{self, Suite};
use rangeclust::{BuildParams, Error, GenSpec, Mixture, Point, RangeIndex};
use rayon::prelude::*;
use serde::Deserialize;

use answer::{Answer, QueryType};
use input::RangeSpec;

#[derive(Parser)]
#[command(name = "rangeclust", version, about = "Clustering and extent queries over orthogonal ranges")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset as CSV.
    Gen(GenArgs),
    /// Build an index bundle from a CSV file or a synthetic dataset.
    Build(BuildArgs),
    /// Answer queries against a bundle.
    Query(QueryArgs),
    /// Check a bundle's structures and answers against brute force.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MixtureKind {
    Uniform,
    Gaussians,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of points.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    mixture: MixtureKind,
    /// Number of Gaussian components.
    #[arg(long, default_value_t = 5)]
    m: usize,
    /// Standard deviation of each Gaussian component.
    #[arg(long, default_value_t = 0.05)]
    sigma: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl SynthArgs {
    fn spec(&self) -> Result<GenSpec, Failure> {
        let n = self.n.ok_or_else(|| Failure::Usage("--n is required".into()))?;
        let mixture = match self.mixture {
            MixtureKind::Uniform => Mixture::Uniform,
            MixtureKind::Gaussians => Mixture::Gaussians { m: self.m, sigma: self.sigma },
        };
        Ok(GenSpec { n, d: self.d, mixture, seed: self.seed })
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    synth: SynthArgs,
    /// Output CSV file; stdout when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BuildArgs {
    /// CSV input: one point per row, optional header.
    #[arg(short, long, conflicts_with = "n")]
    input: Option<PathBuf>,
    #[command(flatten)]
    synth: SynthArgs,
    /// Bundle to write.
    #[arg(short, long)]
    out: PathBuf,
    /// Accuracy of the per-node coresets.
    #[arg(long, default_value_t = BuildParams::default().delta)]
    delta: f64,
    /// Largest k (a power of two) with precomputed coresets.
    #[arg(long, default_value_t = BuildParams::default().k_max)]
    k_max: usize,
    /// Seed of the randomized solvers.
    #[arg(long, default_value_t = BuildParams::default().seed)]
    solver_seed: u64,
    /// Approximation factor assumed for query-time centers.
    #[arg(long, default_value_t = BuildParams::default().c1)]
    c1: f64,
    /// Local search swap width.
    #[arg(long, default_value_t = BuildParams::default().swap_width)]
    swap_width: usize,
    /// Local search stopping tolerance.
    #[arg(long, default_value_t = BuildParams::default().tol)]
    tol: f64,
    /// Range tree nodes below this size keep raw points.
    #[arg(long, default_value_t = BuildParams::default().coreset_min_node)]
    coreset_min_node: usize,
    /// Skip the per-node coresets.
    #[arg(long)]
    no_coreset_tree: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct QueryArgs {
    /// Bundle written by `build`.
    #[arg(short, long)]
    index: PathBuf,
    #[arg(long = "type", value_enum, required_unless_present = "batch")]
    kind: Option<QueryType>,
    /// Query box as lo1,lo2,...xhi1,hi2,...
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["range_file", "batch"])]
    range: Option<String>,
    /// JSON file holding {"lo": [...], "hi": [...]}.
    #[arg(long, conflicts_with = "batch")]
    range_file: Option<PathBuf>,
    #[arg(short, long)]
    k: Option<usize>,
    #[arg(long, required_unless_present = "batch")]
    eps: Option<f64>,
    /// File of JSON lines {"type", "range", "k", "eps"}, answered in parallel.
    #[arg(long)]
    batch: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Leave wall-clock times out of the output.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(short, long)]
    index: PathBuf,
    /// structures, coresets, clustering, extent or all.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Trials per property.
    #[arg(long, default_value_t = 100)]
    budget: usize,
    /// Leave the wall-clock time out of the report.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Deserialize)]
struct BatchQuery {
    #[serde(rename = "type")]
    kind: QueryType,
    range: RangeSpec,
    k: Option<usize>,
    eps: f64,
}

enum Failure {
    Usage(String),
    Data(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::InvalidParameter(_) | Error::InvalidRect(_) | Error::DimensionMismatch { .. } => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Failure {
        Failure::Data(e.to_string())
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<RangeIndex, Failure> {
    read_bundle(&mut open(path)?).map_err(|e| match e {
        Error::Io(io) => Failure::Data(format!("{}: {io}", path.display())),
        e => e.into(),
    })
}

fn cmd_gen(args: &GenArgs) -> Result<(), Failure> {
    let points = generate(&args.synth.spec()?)?;
    match &args.out {
        Some(path) => input::write_csv(create(path)?, &points)?,
        None => input::write_csv(io::stdout().lock(), &points)?,
    }
    Ok(())
}

fn cmd_build(args: &BuildArgs) -> Result<(), Failure> {
    let points: Vec<Point> = match &args.input {
        Some(path) => input::read_csv(open(path)?).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?,
        None if args.synth.n.is_some() => generate(&args.synth.spec()?)?,
        None => return Err(Failure::Usage("give --input or a synthetic dataset via --n".into())),
    };
    let params = BuildParams {
        delta: args.delta,
        k_max: args.k_max,
        seed: args.solver_seed,
        c1: args.c1,
        swap_width: args.swap_width,
        tol: args.tol,
        coreset_min_node: args.coreset_min_node,
        coreset_tree: !args.no_coreset_tree,
    };
    params.validate()?;
    let index = RangeIndex::build(&points, params)?;
    let s = index.stats();
    info!(
        "n = {}, distinct = {}, d = {}, quadtree nodes = {} (depth {}), stored coresets = {}",
        s.n, s.distinct, s.d, s.quadtree_nodes, s.quadtree_depth, s.stored_coresets
    );
    info!(
        "build {:.1} ms, about {:.1} MiB",
        s.build_ms as f64,
        s.memory_bytes as f64 / (1u64 << 20) as f64
    );
    let mut w = create(&args.out)?;
    write_bundle(&mut w, &index)?;
    w.flush()?;
    Ok(())
}

fn batch_queries(path: &Path) -> Result<Vec<(QueryType, rangeclust::Rect, usize, f64)>, Failure> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let at = |msg: String| Failure::Usage(format!("{}:{}: {msg}", path.display(), i + 1));
        let b: BatchQuery = serde_json::from_str(&line).map_err(|e| at(e.to_string()))?;
        let q = b.range.to_rect().map_err(at)?;
        if b.kind.needs_k() && b.k.is_none() {
            return Err(at(format!("{} queries need k", serde_json::to_string(&b.kind).unwrap_or_default())));
        }
        out.push((b.kind, q, b.k.unwrap_or(1), b.eps));
    }
    Ok(out)
}

fn cmd_query(args: &QueryArgs) -> Result<(), Failure> {
    let queries = match &args.batch {
        Some(path) => batch_queries(path)?,
        None => {
            let kind = args.kind.expect("required by clap");
            let q = match (&args.range, &args.range_file) {
                (Some(s), None) => input::parse_range(s).map_err(Failure::Usage)?,
                (None, Some(path)) => {
                    let spec: RangeSpec = serde_json::from_reader(open(path)?)
                        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
                    spec.to_rect().map_err(Failure::Usage)?
                }
                _ => return Err(Failure::Usage("give --range or --range-file".into())),
            };
            let k = match (kind.needs_k(), args.k) {
                (true, None) => return Err(Failure::Usage("--k is required for clustering queries".into())),
                (_, k) => k.unwrap_or(1),
            };
            vec![(kind, q, k, args.eps.expect("required by clap"))]
        }
    };
    let index = load(&args.index)?;
    let timing = !args.no_timing;
    let answers: Vec<Answer> = queries
        .par_iter()
        .map(|(kind, q, k, eps)| answer::answer(&index, *kind, q, *k, *eps, timing))
        .collect::<rangeclust::Result<_>>()?;
    let mut out = io::stdout().lock();
    match args.format {
        Format::Json => {
            for a in &answers {
                serde_json::to_writer(&mut out, a).map_err(|e| Failure::Internal(e.to_string()))?;
                writeln!(out)?;
            }
        }
        Format::Csv => answer::write_csv(&mut out, &answers, index.dim(), timing)
            .map_err(|e| Failure::Data(e.to_string()))?,
    }
    Ok(())
}

/// Returns whether every property passed.
fn cmd_validate(args: &ValidateArgs) -> Result<bool, Failure> {
    let suites = Suite::parse(&args.suite).ok_or_else(|| Failure::Usage(format!("unknown suite {:?}", args.suite)))?;
    let index = load(&args.index)?;
    let report = validate::run(&index, &suites, args.budget, !args.no_timing)?;
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &report).map_err(|e| Failure::Internal(e.to_string()))?;
    writeln!(out)?;
    Ok(report.pass)
}

fn set_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("RC_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("RC_THREADS={v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Internal(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    set_threads()?;
    match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Build(a) => cmd_build(a),
        Command::Query(a) => cmd_query(a),
        Command::Validate(a) => match cmd_validate(a)? {
            true => Ok(()),
            false => Err(Failure::Internal("validation failed".into())),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    // Build reports its statistics; other commands only warn.
    let level = if matches!(cli.command, Command::Build(_)) { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let outcome = std::panic::catch_unwind(|| run(cli)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| p.downcast_ref::<String>().cloned())
            .unwrap_or_default();
        Err(Failure::Internal(format!("internal error: {msg}")))
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
