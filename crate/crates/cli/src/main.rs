use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use odtn::bounds::{compute_bounds, Caps};
use odtn::harness::algo::{build_strategy, AlgoOptions, Algorithm, Gains};
use odtn::harness::generate::{generate_instance, GenParams, Kind, PriorKind};
use odtn::harness::oracle::InteractiveOracle;
use odtn::harness::regress::regress;
use odtn::harness::report::{csv_string, evaluate, EvalConfig, ExactMode};
use odtn::{read_instance, write_instance, Error, InstanceDocument, Verdict};

/// Sequential identification under persistent noise: instance generation,
/// strategy evaluation, lower bounds and corpus regression.
#[derive(Parser)]
#[command(name = "odtn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance (JSON, schema odtn.instance/1).
    Gen(GenArgs),
    /// Evaluate one algorithm on an instance and emit a CSV report row.
    Run(RunArgs),
    /// Compute lower bounds and small-instance optima (JSON, schema odtn.bounds/1).
    Bounds(BoundsArgs),
    /// Identify a hypothesis by answering test prompts on the terminal.
    Interactive(InteractiveArgs),
    /// Replay a corpus directory and compare against its stored expectations.
    Regress(RegressArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Noiseless,
    LowNoise,
    Sparse,
    Nonident,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Number of hypotheses.
    #[arg(long)]
    m: usize,
    /// Number of tests.
    #[arg(long)]
    n: usize,
    /// Maximum stars per hypothesis (low-noise).
    #[arg(long, default_value_t = 1)]
    c: usize,
    /// Maximum stars per test (low-noise).
    #[arg(long, default_value_t = 1)]
    r: usize,
    /// Sparsity exponent: every test side has at most ceil(m^alpha) hypotheses (sparse).
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Maximum similarity degree (nonident).
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Size of the outcome alphabet.
    #[arg(long, default_value_t = 2)]
    outcomes: usize,
    /// `uniform`, `dirichlet` or `dirichlet:<concentration>`.
    #[arg(long, default_value = "uniform")]
    prior: String,
    #[arg(long)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CapArgs {
    /// Most star entries per hypothesis that exact enumeration accepts.
    #[arg(long, env = "ODTN_ENUM_CAP", default_value_t = 16)]
    enum_cap: u32,
    /// Most memoized states for the optimal-policy dynamic program.
    #[arg(long, env = "ODTN_DP_STATE_CAP", default_value_t = 10_000_000)]
    dp_state_cap: usize,
}

impl CapArgs {
    fn caps(&self) -> Caps {
        Caps { dp_states: self.dp_state_cap, stars: self.enum_cap, ..Caps::default() }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    algo: String,
    #[arg(long)]
    instance: PathBuf,
    /// Monte Carlo trials; 0 skips sampling.
    #[arg(long, default_value_t = 0)]
    trials: u64,
    /// Required whenever anything is sampled.
    #[arg(long)]
    seed: Option<u64>,
    /// Fail unless the expected cost can be enumerated exactly.
    #[arg(long)]
    exact: bool,
    /// Skip exact enumeration even when it is feasible.
    #[arg(long, conflicts_with = "exact")]
    no_exact: bool,
    /// Estimate non-adaptive gains from this many samples per candidate.
    #[arg(long, conflicts_with = "formula_samples")]
    samples: Option<u64>,
    /// Estimate non-adaptive gains with ceil(m^3 n^4 / eps) samples.
    #[arg(long)]
    formula_samples: bool,
    /// Score in f64 instead of exact rationals.
    #[arg(long)]
    fast: bool,
    /// Instance id written to the report; defaults to the file stem.
    #[arg(long)]
    id: Option<String>,
    /// CSV output; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write the full report (per-hypothesis costs, ratios) as JSON.
    #[arg(long)]
    detail: Option<PathBuf>,
    #[command(flatten)]
    caps: CapArgs,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    caps: CapArgs,
}

#[derive(Args)]
struct InteractiveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "meta")]
    algo: String,
    /// Needed only for sampled non-adaptive gains.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RegressArgs {
    /// Directory holding corpus.json, the instances and expected.csv.
    #[arg(long)]
    corpus: PathBuf,
    /// Overwrite expected.csv with the computed rows.
    #[arg(long)]
    bless: bool,
    /// Also write the computed rows here.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    caps: CapArgs,
}

enum Failure {
    Usage(String),
    Core(Error),
    Regressed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::InvalidInstance(_) | Error::Json(_) | Error::Csv(_) | Error::Io(_) => 3,
        Error::Infeasible { .. } => 4,
        Error::Invariant(_) | Error::Inconsistent => 5,
        Error::Aborted => 1,
        _ => 2,
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_gen(args: &GenArgs) -> Result<(), Failure> {
    let kind = match args.kind {
        KindArg::Noiseless => Kind::Noiseless,
        KindArg::LowNoise => Kind::LowNoise { c: args.c, r: args.r },
        KindArg::Sparse => Kind::Sparse { alpha: args.alpha },
        KindArg::Nonident => Kind::Nonident { d: args.d },
    };
    let params = GenParams {
        kind,
        m: args.m,
        n: args.n,
        outcomes: args.outcomes,
        prior: args.prior.parse::<PriorKind>().map_err(|e| Failure::Usage(e.to_string()))?,
        seed: args.seed,
    };
    let inst = generate_instance(&params)?;
    match &args.output {
        Some(path) => write_instance(path, &inst)?,
        None => emit(None, &(InstanceDocument::from_instance(&inst).to_json() + "\n"))?,
    }
    Ok(())
}

fn parse_algo(s: &str) -> Result<Algorithm, Failure> {
    s.parse().map_err(|_| {
        let ids: Vec<_> = Algorithm::ALL.iter().map(|a| a.id()).collect();
        Failure::Usage(format!("unknown algorithm {s:?}; expected one of {}", ids.join(", ")))
    })
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let alg = parse_algo(&args.algo)?;
    let gains = match (args.samples, args.formula_samples) {
        (Some(n), _) => Gains::Samples(n),
        (None, true) => Gains::Formula,
        (None, false) => Gains::Exact,
    };
    if args.seed.is_none() && (args.trials > 0 || alg.needs_seed(gains)) {
        return Err(Failure::Usage("this run samples random numbers; pass --seed".into()));
    }
    let caps = args.caps.caps();
    let table = read_instance(&args.instance)?;
    let opts = AlgoOptions { gains, seed: args.seed, star_cap: caps.stars, fast: args.fast };
    let strategy = build_strategy(alg, &table, &opts)?;
    let bounds = compute_bounds(&table, &caps)?;
    let exact = if args.exact {
        ExactMode::Required
    } else if args.no_exact {
        ExactMode::Off
    } else {
        ExactMode::IfFeasible
    };
    let cfg = EvalConfig { trials: args.trials, seed: args.seed, exact, star_cap: caps.stars };
    let id = args.id.clone().unwrap_or_else(|| odtn::harness::regress::instance_id(&args.instance.to_string_lossy()));
    let report = evaluate(&id, &table, strategy.as_ref(), &cfg, &bounds)?;
    if let Some(path) = &args.detail {
        fs::write(path, report.to_json() + "\n")?;
    }
    emit(args.output.as_deref(), &csv_string(&[report.row()]))
}

fn cmd_bounds(args: &BoundsArgs) -> Result<(), Failure> {
    let table = read_instance(&args.instance)?;
    let report = compute_bounds(&table, &args.caps.caps())?;
    emit(args.output.as_deref(), &(report.to_json() + "\n"))
}

fn cmd_interactive(args: &InteractiveArgs) -> Result<(), Failure> {
    let alg = parse_algo(&args.algo)?;
    let opts = AlgoOptions { seed: args.seed, ..AlgoOptions::default() };
    if args.seed.is_none() && alg.needs_seed(opts.gains) {
        return Err(Failure::Usage("this algorithm samples random numbers; pass --seed".into()));
    }
    let table = read_instance(&args.instance)?;
    let strategy = build_strategy(alg, &table, &opts)?;
    let stdin = io::stdin();
    let mut stdout = io::stdout();
    let mut oracle = InteractiveOracle::new(&table, stdin.lock(), &mut stdout);
    let transcript = strategy.run(&mut oracle)?;
    let line = match &transcript.verdict {
        Verdict::Identified(i) => format!("identified hypothesis {i}"),
        Verdict::Candidates(k) => {
            format!("candidates {}", k.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" "))
        }
        Verdict::AllCovered => "all scenarios covered".to_string(),
    };
    println!("{line} after {} tests", transcript.test_count());
    Ok(())
}

fn cmd_regress(args: &RegressArgs) -> Result<(), Failure> {
    let outcome = regress(&args.corpus, &args.caps.caps(), args.bless)?;
    if let Some(path) = &args.output {
        fs::write(path, &outcome.csv)?;
    }
    print!("{}", outcome.summary());
    if outcome.passed() {
        Ok(())
    } else {
        Err(Failure::Regressed)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Run(a) => cmd_run(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Interactive(a) => cmd_interactive(a),
        Command::Regress(a) => cmd_regress(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Regressed) => ExitCode::from(1),
    }
}
