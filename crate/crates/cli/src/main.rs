//! Command-line front end: `stochreach run <options_file> <model_file>`.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use stochreach::dsl::{load_model, parse_test_options, SourceText, TestSpecAst};
use stochreach::engine::{run, unfoldings, ExecMode, RunConfig, SolverChoice};
use stochreach::model::{extract_rvs, HybridModel};
use stochreach::sampler::{sample_all, RandomStream, DEFAULT_SEED};
use stochreach::solver::ExternalSolver;
use stochreach::stats::DEFAULT_NSAM_CONFIDENCE;

use report::Record;

/// Added per test spec so that specs in one file draw independent streams.
const SPEC_SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

const EXIT_USAGE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_RUN: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "stochreach", version, about = "Statistical bounded reachability for stochastic hybrid automata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every test spec in OPTIONS_FILE against MODEL_FILE.
    Run(RunArgs),
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    options_file: PathBuf,
    model_file: PathBuf,
    /// Largest number of jumps considered.
    #[arg(long, default_value_t = 0)]
    k: usize,
    /// Precision of the δ-decisions.
    #[arg(long, default_value_t = 0.001)]
    delta: f64,
    /// Decide samples on a worker pool; defaults to one worker per core.
    #[arg(long, value_name = "WORKERS")]
    parallel: Option<Option<usize>>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Command called as `<command> <model.drh> <k> <delta>` instead of the built-in solver.
    #[arg(long, value_name = "COMMAND")]
    external_solver: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Print the unfolded constraint systems of the first sample to stderr.
    #[arg(long)]
    dump_unfolding: bool,
    /// Stop a run after this many samples, leaving it inconclusive.
    #[arg(long)]
    max_samples: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_NSAM_CONFIDENCE)]
    nsam_confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Tsv,
    Json,
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn read(path: &Path) -> Result<SourceText, Failure> {
    SourceText::from_file(path).map_err(|e| fail(EXIT_PARSE, format!("cannot read {}: {e}", path.display())))
}

fn config(a: &RunArgs) -> Result<RunConfig, Failure> {
    if !(a.delta > 0.0 && a.delta.is_finite()) {
        return Err(fail(EXIT_USAGE, format!("--delta must be positive, got {}", a.delta)));
    }
    if !(a.nsam_confidence > 0.0 && a.nsam_confidence < 1.0) {
        return Err(fail(EXIT_USAGE, format!("--nsam-confidence must lie in (0, 1), got {}", a.nsam_confidence)));
    }
    let mut cfg = RunConfig::new(a.k, a.delta, a.seed);
    cfg.mode = match a.parallel {
        None => ExecMode::Sequential,
        Some(Some(0)) => return Err(fail(EXIT_USAGE, "--parallel needs at least one worker")),
        Some(Some(w)) => ExecMode::Parallel(w),
        Some(None) => ExecMode::Parallel(std::thread::available_parallelism().map_or(1, |n| n.get())),
    };
    if let Some(cmd) = &a.external_solver {
        let mut words = cmd.split_whitespace().map(str::to_string);
        let program = words.next().ok_or_else(|| fail(EXIT_USAGE, "--external-solver is empty"))?;
        cfg.solver = SolverChoice::External(ExternalSolver { program, args: words.collect() });
    }
    cfg.max_samples = a.max_samples;
    cfg.nsam_confidence = a.nsam_confidence;
    Ok(cfg)
}

fn dump(m: &HybridModel, cfg: &RunConfig) -> Result<(), Failure> {
    let rvs = extract_rvs(m).map_err(|e| fail(EXIT_RUN, e.to_string()))?;
    match sample_all(&rvs, &mut RandomStream::for_index(cfg.seed, 0)) {
        Ok(s) => {
            let problems = unfoldings(m, &s, cfg.k, cfg.delta).map_err(|e| fail(EXIT_RUN, e.to_string()))?;
            eprintln!("; sample 0: {s:?}");
            for p in problems {
                eprint!("{p}");
            }
        }
        Err(e) => eprintln!("; sample 0 rejected: {e}"),
    }
    Ok(())
}

fn emit(format: Format, index: usize, rec: &Record) {
    match format {
        Format::Text => {
            if index > 0 {
                println!();
            }
            print!("{}", rec.text());
        }
        Format::Tsv => {
            if index == 0 {
                println!("{}", Record::tsv_header());
            }
            println!("{}", rec.tsv());
        }
        Format::Json => println!("{}", rec.json()),
    }
}

fn run_command(a: &RunArgs) -> Result<(), Failure> {
    let cfg = config(a)?;
    let specs: Vec<TestSpecAst> = parse_test_options(&read(&a.options_file)?).map_err(|e| fail(EXIT_PARSE, e.to_string()))?;
    let ast = load_model(&read(&a.model_file)?).map_err(|e| fail(EXIT_PARSE, e.to_string()))?;
    let model = HybridModel::from_ast(&ast).map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", a.model_file.display())))?;
    if a.dump_unfolding {
        dump(&model, &cfg)?;
    }
    for (j, spec) in specs.into_iter().enumerate() {
        let seeded = RunConfig { seed: cfg.seed.wrapping_add((j as u64).wrapping_mul(SPEC_SEED_STRIDE)), ..cfg.clone() };
        let report = run(&model, spec, &seeded).map_err(|e| fail(EXIT_RUN, format!("{spec}: {e}")))?;
        emit(a.format, j, &Record::from_report(&report));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let Command::Run(args) = &cli.command;
    match run_command(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
