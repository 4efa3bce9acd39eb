use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use clap::{ArgAction, Args, Parser, Subcommand};
use rieffel_lab::experiment::{run_experiment, ExperimentOutcome, RunOptions};
use rieffel_lab::scenario::{builtin_config, load_scenario_with, print_catalog, Experiment, Scenario};
use rieffel_lab::Error;

/// Run quantization experiments described by scenario configs.
#[derive(Parser, Debug)]
#[command(name = "rieffel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every experiment the scenario lists.
    Run(RunArgs),
    /// Eigenvalues of H_σ at every base point.
    Spectrum(RunArgs),
    /// Predicted against truncation-stable essential spectrum.
    Ess(RunArgs),
    /// Distance to the classical range along the ħ schedule.
    Sweep(RunArgs),
    /// Spectra at seeded random base points of an ergodic action.
    Random(RunArgs),
    /// Morphism and second-order expansion of the deformed product.
    MoyalCheck(RunArgs),
    /// List the built-in scenarios.
    Catalog,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Scenario config path, or `builtin:NAME`. Repeat to run several.
    #[arg(long, required = true)]
    config: Vec<String>,
    /// Override a config value, e.g. `--set grid.N=256`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    /// Output root; CSVs go to OUT/<scenario name>/.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed of every random draw; overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Scenarios run concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Exit with 3 when an acceptance threshold is missed.
    #[arg(long)]
    check: bool,
    /// Also write the matrices of the spectrum experiment.
    #[arg(long)]
    dump_matrix: bool,
    #[arg(short, action = ArgAction::Count)]
    verbose: u8,
}

const EXIT_INPUT: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_CHECK: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INPUT
    }
}

fn load(source: &str, args: &RunArgs) -> Result<Scenario, Error> {
    let text = match source.strip_prefix("builtin:") {
        Some(name) => builtin_config(name)
            .ok_or_else(|| Error::Invalid(format!("no built-in scenario `{name}`; see `rieffel catalog`")))?
            .to_string(),
        None => std::fs::read_to_string(source).map_err(|e| Error::Io {
            path: source.to_string(),
            source: e,
        })?,
    };
    let mut overrides = args.overrides.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("run.seed={seed}"));
    }
    load_scenario_with(&text, &overrides)
}

fn report(scenario: &Scenario, outcome: &ExperimentOutcome, args: &RunArgs) {
    if args.verbose > 0 {
        for f in &outcome.files {
            println!("{}: wrote {}", scenario.name, f.display());
        }
    }
    if args.check || args.verbose > 0 {
        for c in &outcome.checks {
            println!("{} {}: {c}", scenario.name, outcome.experiment);
        }
    }
}

/// Runs one scenario; returns its exit code.
fn run_one(source: &str, experiments: Option<Experiment>, args: &RunArgs, out: &Path) -> u8 {
    let scenario = match load(source, args) {
        Ok(s) => s,
        Err(e @ Error::Io { .. }) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
        Err(e) => {
            eprintln!("error: {source}: {e}");
            return exit_code(&e);
        }
    };
    let list = match experiments {
        Some(e) => vec![e],
        None => scenario.experiments.clone(),
    };
    let options = RunOptions {
        dump_matrix: args.dump_matrix,
    };
    let mut code = 0;
    for experiment in list {
        if args.verbose > 1 {
            eprintln!("{}: running {experiment}", scenario.name);
        }
        match run_experiment(&scenario, experiment, out, &options) {
            Ok(outcome) => {
                report(&scenario, &outcome, args);
                if args.check && !outcome.passed() {
                    code = code.max(EXIT_CHECK);
                }
            }
            Err(e) => {
                eprintln!("error: {} {experiment}: {e}", scenario.name);
                code = code.max(exit_code(&e));
            }
        }
    }
    code
}

fn run(args: &RunArgs, experiment: Option<Experiment>) -> u8 {
    let queue = Mutex::new(args.config.iter());
    let worst = Mutex::new(0u8);
    std::thread::scope(|s| {
        for _ in 0..args.jobs.clamp(1, args.config.len()) {
            s.spawn(|| loop {
                let Some(source) = queue.lock().unwrap().next() else { break };
                let code = run_one(source, experiment, args, &args.out);
                let mut w = worst.lock().unwrap();
                *w = (*w).max(code);
            });
        }
    });
    worst.into_inner().unwrap()
}

fn main() -> ExitCode {
    // Usage errors map to 1 like any other input error; clap's default of
    // 2 is reserved for numerical failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    let code = match &cli.command {
        Command::Run(a) => run(a, None),
        Command::Spectrum(a) => run(a, Some(Experiment::Spectrum)),
        Command::Ess(a) => run(a, Some(Experiment::Ess)),
        Command::Sweep(a) => run(a, Some(Experiment::Sweep)),
        Command::Random(a) => run(a, Some(Experiment::Random)),
        Command::MoyalCheck(a) => run(a, Some(Experiment::MoyalCheck)),
        Command::Catalog => {
            print!("{}", print_catalog());
            0
        }
    };
    ExitCode::from(code)
}
