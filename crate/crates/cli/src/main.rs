use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bbhc_core::bench::{
    compare_baseline, emit_outputs, fit_scaling, run_sweep, summarize, write_json, write_trace_jsonl,
    SweepSpec, SweepSummary,
};
use bbhc_core::{run_bbhc, BbhcError, LevelWeight, Problem, ProblemKind, ProblemSpec, RunConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "bbhc",
    version,
    about = "Building block hill-climber on hierarchical test functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print a JSON summary.
    Run(RunArgs),
    /// Run a scaling sweep described by a JSON file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a * x^b * ln(x) to the per-size means of a sweep summary.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Random-restart bit-flip hill-climber with a fixed budget per run.
    Baseline(BaselineArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Weight {
    BlockSize,
    Uniform,
}

impl From<Weight> for LevelWeight {
    fn from(w: Weight) -> Self {
        match w {
            Weight::BlockSize => LevelWeight::BlockSize,
            Weight::Uniform => LevelWeight::Uniform,
        }
    }
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long)]
    problem: ProblemKind,
    /// String length; a power of 2 (hiff, hxor) or 3 (htrap).
    #[arg(long)]
    size: usize,
    #[arg(long)]
    shuffle_seed: Option<u64>,
    /// hTrap level weighting.
    #[arg(long, value_enum, default_value = "block-size")]
    level_weight: Weight,
}

impl ProblemArgs {
    fn spec(&self) -> Result<ProblemSpec, Failure> {
        let mut spec = ProblemSpec::with_length(self.problem, self.size)?;
        spec.shuffle_seed = self.shuffle_seed;
        spec.level_weight = self.level_weight.into();
        Ok(spec)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    memory_const: Option<usize>,
    #[arg(long)]
    max_evals: Option<u64>,
    #[arg(long)]
    stagnation_epochs: Option<usize>,
    /// Write the epoch trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the final block structure as JSON.
    #[arg(long)]
    structure_out: Option<PathBuf>,
    /// Export structure loci in unshuffled coordinates.
    #[arg(long)]
    unshuffled_coords: bool,
    /// Exit with status 3 if no global optimum is found.
    #[arg(long)]
    require_optimum: bool,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    budget: u64,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Include per-run rows in the report.
    #[arg(long)]
    rows: bool,
}

enum Failure {
    Invalid(String),
    Other(String),
    NotSolved,
}

impl From<BbhcError> for Failure {
    fn from(e: BbhcError) -> Self {
        match e {
            BbhcError::InvalidInput(_) | BbhcError::InvalidArgument(_) | BbhcError::InvalidState(_) => {
                Failure::Invalid(e.to_string())
            }
            _ => Failure::Other(e.to_string()),
        }
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Failure> {
    let s = serde_json::to_string_pretty(value).map_err(|e| Failure::Other(e.to_string()))?;
    println!("{s}");
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let problem = Problem::new(args.problem.spec()?)?;
    let mut config = RunConfig::for_problem(&problem, args.seed);
    if let Some(c) = args.memory_const {
        config.memory_const = c;
    }
    if let Some(b) = args.max_evals {
        config.max_evals = b;
    }
    if let Some(t) = args.stagnation_epochs {
        config.stagnation_epochs = t;
    }
    let result = run_bbhc(&problem, &config)?;
    if let Some(path) = &args.trace {
        write_trace_jsonl(path, &result.trace)?;
    }
    if let Some(path) = &args.structure_out {
        let unshuffle = args.unshuffled_coords.then_some(&problem);
        write_json(path, &result.final_structure.export(unshuffle))?;
    }
    print_json(&result.summary())?;
    if args.require_optimum && !result.reached_optimum {
        return Err(Failure::NotSolved);
    }
    Ok(())
}

fn sweep(config: &Path, out: &Path) -> Result<(), Failure> {
    let spec: SweepSpec = read_json(config)?;
    let outcome = run_sweep(&spec)?;
    let summary = summarize(spec.problem, &outcome.rows);
    let written = emit_outputs(out, &outcome, &summary)?;
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    print_json(&summary)
}

fn fit(input: &Path) -> Result<(), Failure> {
    let summary: SweepSummary = read_json(input)?;
    print_json(&fit_scaling(&summary.mean_points())?)
}

fn baseline(args: BaselineArgs) -> Result<(), Failure> {
    let spec = args.problem.spec()?;
    let mut report = compare_baseline(&spec, args.budget, args.runs, args.seed)?;
    if !args.rows {
        report.rows.clear();
    }
    print_json(&report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Sweep { config, out } => sweep(&config, &out),
        Command::Fit { input } => fit(&input),
        Command::Baseline(args) => baseline(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
        Err(Failure::NotSolved) => {
            eprintln!("error: evaluation budget exhausted before reaching a global optimum");
            ExitCode::from(3)
        }
    }
}
