//! `maglab` command-line front end.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use maglab::asymptotics::{classify_regime, PredictedLimit, ScalingSpec};
use maglab::experiments::{
    default_identity_battery, run_sweep, verify_identities, verify_oracle_grid, write_csv, write_sweep_json,
    IdentityReport, SweepConfig, SweepMode,
};
use maglab::moments::moment_report;
use maglab::output::{format_f64, to_json_string};
use maglab::sampler::{isolation_census, replication_stream, sample_graph};
use maglab::{AffinityMatrix, AttributePmf, MagParams};

/// Seed used when neither `--seed` nor `MAGLAB_SEED` is given.
const DEFAULT_SEED: u64 = 7;

/// Exit status of `regime` when the parameters sit on the excluded boundary.
const BOUNDARY_EXIT: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "maglab", version, about = "Binary multiplicative attribute graphs: sampling, isolated-node moments, zero-one laws")]
struct Cli {
    /// Worker threads for Monte Carlo replications (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample one graph, write it to disk and print its isolation census.
    Sample(SampleArgs),
    /// Print the exact moments of the isolated-node count.
    Moments(MomentsArgs),
    /// Classify which zero-one law applies at a given rho.
    Regime(RegimeArgs),
    /// Run the brute-force oracle grid and the identity battery.
    Verify(VerifyArgs),
    /// Monte Carlo sweep of P[no isolated nodes] over (rho, n).
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// P[attribute = 1].
    #[arg(long, default_value_t = 0.5)]
    mu1: f64,
    /// Kernel entries as q11,q10,q00.
    #[arg(long, default_value = "0.8,0.5,0.2", value_parser = parse_kernel)]
    q: (f64, f64, f64),
    /// Random seed; falls back to MAGLAB_SEED, then to 7.
    #[arg(long, env = "MAGLAB_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
}

impl ModelArgs {
    fn pmf(&self) -> maglab::Result<AttributePmf> {
        AttributePmf::new(self.mu1)
    }

    fn kernel(&self) -> maglab::Result<AffinityMatrix> {
        AffinityMatrix::new(self.q.0, self.q.1, self.q.2)
    }

    fn params(&self, n: usize, levels: usize) -> maglab::Result<MagParams> {
        MagParams::new(n, levels, self.pmf()?, self.kernel()?)
    }
}

/// Graph size: `--L` directly, or `--rho` through `L = round(rho ln n)`.
#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
struct LevelArgs {
    #[arg(long = "L")]
    levels: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
}

impl LevelArgs {
    fn resolve(&self, n: usize) -> maglab::Result<usize> {
        match (self.levels, self.rho) {
            (Some(l), _) => Ok(l),
            (None, Some(rho)) => Ok(ScalingSpec::new(rho)?.levels(n)),
            (None, None) => unreachable!("clap requires one of --L / --rho"),
        }
    }
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    size: LevelArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Directory receiving edges.txt and attributes.txt.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct MomentsArgs {
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    size: LevelArgs,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args, Debug)]
struct RegimeArgs {
    #[arg(long)]
    rho: f64,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Nodes for the identity battery (with --L and --nu); defaults to config A at n=10, L=3.
    #[arg(long, requires = "levels")]
    n: Option<usize>,
    #[arg(long = "L", id = "levels", requires = "n")]
    levels: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.5,0.7")]
    nu: Vec<f64>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Census,
    Full,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    rho: Vec<f64>,
    /// Node counts: a comma list, or `a..b` for the powers of two from a to b.
    #[arg(long, value_parser = parse_n_list)]
    n: NList,
    #[arg(long, default_value_t = 2000)]
    reps: usize,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, value_enum, default_value_t = ModeArg::Census)]
    mode: ModeArg,
    /// Output file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    max_seconds: Option<u64>,
    #[arg(long)]
    max_rows: Option<usize>,
}

#[derive(Debug, Clone)]
struct NList(Vec<usize>);

fn parse_kernel(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [q11, q10, q00] => Ok((q11, q10, q00)),
        _ => Err(format!("expected three comma-separated values q11,q10,q00, got {}", parts.len())),
    }
}

fn parse_n_list(s: &str) -> Result<NList, String> {
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|e| format!("{lo:?}: {e}"))?;
        let hi: usize = hi.trim().parse().map_err(|e| format!("{hi:?}: {e}"))?;
        if lo < 2 || lo > hi {
            return Err(format!("range {lo}..{hi} must satisfy 2 <= lo <= hi"));
        }
        Ok(NList(std::iter::successors(Some(lo), |&n| n.checked_mul(2)).take_while(|&n| n <= hi).collect()))
    } else {
        s.split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<Result<_, _>>()
            .map(NList)
    }
}

#[derive(Serialize)]
struct SampleOutput {
    seed: u64,
    n: usize,
    #[serde(rename = "L")]
    levels: usize,
    edges: usize,
    total: usize,
    by_level: Vec<usize>,
}

#[derive(Serialize)]
struct WithSeed<'a, T: Serialize> {
    seed: u64,
    n: usize,
    #[serde(rename = "L")]
    levels: usize,
    #[serde(flatten)]
    report: &'a T,
}

#[derive(Serialize)]
struct RegimeOutput<'a> {
    seed: u64,
    #[serde(flatten)]
    report: &'a maglab::asymptotics::RegimeReport,
}

type CliResult = Result<ExitCode, Box<dyn std::error::Error>>;

fn cmd_sample(args: &SampleArgs) -> CliResult {
    let params = args.model.params(args.n, args.size.resolve(args.n)?)?;
    let graph = sample_graph(&params, &replication_stream(args.model.seed, 0))?;
    fs::create_dir_all(&args.out_dir)?;
    let mut edges = BufWriter::new(File::create(args.out_dir.join("edges.txt"))?);
    graph.write_edge_list(&mut edges)?;
    edges.flush()?;
    let mut attrs = BufWriter::new(File::create(args.out_dir.join("attributes.txt"))?);
    graph.write_attribute_matrix(&mut attrs)?;
    attrs.flush()?;
    let census = isolation_census(&graph);
    let out = SampleOutput {
        seed: args.model.seed,
        n: params.n(),
        levels: params.levels(),
        edges: graph.edge_count(),
        total: census.total,
        by_level: census.by_level,
    };
    println!("{}", to_json_string(&out));
    Ok(ExitCode::SUCCESS)
}

fn cmd_moments(args: &MomentsArgs) -> CliResult {
    let params = args.model.params(args.n, args.size.resolve(args.n)?)?;
    let report = moment_report(&params)?;
    let out = WithSeed {
        seed: args.model.seed,
        n: params.n(),
        levels: params.levels(),
        report: &report,
    };
    println!("{}", to_json_string(&out));
    Ok(ExitCode::SUCCESS)
}

fn cmd_regime(args: &RegimeArgs) -> CliResult {
    // n and L do not enter the classification.
    let params = args.model.params(2, 1)?;
    let report = classify_regime(args.rho, &params)?;
    println!("{}", to_json_string(&RegimeOutput { seed: args.model.seed, report: &report }));
    if report.predicted_limit == PredictedLimit::Boundary {
        eprintln!("boundary: 1 + rho ln mu(0) or the threshold is zero; no zero-one law is predicted");
        return Ok(ExitCode::from(BOUNDARY_EXIT));
    }
    Ok(ExitCode::SUCCESS)
}

fn print_report(title: &str, report: &IdentityReport) {
    println!("# {title}");
    for c in &report.checks {
        println!(
            "{} {} residual={} tol={}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            format_f64(c.residual),
            format_f64(c.tolerance)
        );
    }
}

fn cmd_verify(args: &VerifyArgs) -> CliResult {
    println!("seed={}", args.model.seed);
    let grid = verify_oracle_grid();
    print_report("oracle grid", &grid);
    let battery = match (args.n, args.levels) {
        (Some(n), Some(levels)) => verify_identities(&args.model.params(n, levels)?, &args.nu),
        _ => default_identity_battery(),
    };
    print_report("identity battery", &battery);
    let failed = grid.failures().count() + battery.failures().count();
    if failed > 0 {
        eprintln!("{failed} check(s) failed");
        return Ok(ExitCode::FAILURE);
    }
    println!("all {} checks passed", grid.checks.len() + battery.checks.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: &SweepArgs) -> CliResult {
    let mut config = SweepConfig::new(
        args.model.pmf()?,
        args.model.kernel()?,
        args.rho.clone(),
        args.n.0.clone(),
        args.reps,
        args.model.seed,
    );
    config.mode = match args.mode {
        ModeArg::Census => SweepMode::CensusOnly,
        ModeArg::Full => SweepMode::FullGraph,
    };
    config.max_rows = args.max_rows;
    config.max_wall_clock = args.max_seconds.map(Duration::from_secs);
    for warning in config.warnings() {
        eprintln!("warning: {warning}");
    }
    let rows = run_sweep(&config)?;
    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut sink = BufWriter::new(sink);
    match args.format {
        Format::Csv => write_csv(&rows, &mut sink)?,
        Format::Json => {
            write_sweep_json(&rows, &config, &mut sink)?;
            writeln!(sink)?;
        }
    }
    sink.flush()?;
    eprintln!("seed={} rows={}", config.seed, rows.len());
    Ok(ExitCode::SUCCESS)
}

fn run(cli: &Cli) -> CliResult {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    match &cli.command {
        Command::Sample(a) => cmd_sample(a),
        Command::Moments(a) => cmd_moments(a),
        Command::Regime(a) => cmd_regime(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
