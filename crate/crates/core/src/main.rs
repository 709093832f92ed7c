//! Benchmark CLI: `run` sweeps (family × planner × seed) and writes CSV +
//! summary; `dump` writes scenario/trunk/plan JSON and an SVG overlay for
//! one trial. Exit codes: 0 ok, 1 validation failure, 2 config error.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use vcst::experiment::{
    dump_artifacts, run_experiment, summary_text, to_csv, ExperimentConfig, ExperimentError,
    Planner, DEFAULT_LAMBDA_SVC,
};
use vcst::scenarios::{generate, Family, ScenarioSpec};

#[derive(Parser)]
#[command(name = "vcst", about = "Relay-coordinated multi-robot delivery benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a paired-seed experiment sweep and write results.csv + summary.
    Run(RunArgs),
    /// Dump scenario, trunk, plan, and SVG overlay for a single trial.
    Dump(DumpArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Comma-separated families (default: all seven presets).
    #[arg(long, value_delimiter = ',')]
    family: Vec<String>,
    /// Comma-separated planners: vcst, hungarian, cvrp.
    #[arg(long, value_delimiter = ',', default_value = "vcst,hungarian,cvrp")]
    planners: Vec<String>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Base seed; trial i uses seed + i, shared across planners.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the family's preset capacity.
    #[arg(long)]
    capacity: Option<u32>,
    #[arg(long, default_value_t = DEFAULT_LAMBDA_SVC)]
    lambda_svc: f64,
    /// Output directory for results.csv and summary.txt.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DumpArgs {
    #[arg(long, default_value = "small_dense")]
    family: String,
    #[arg(long, default_value = "vcst")]
    planner: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    capacity: Option<u32>,
    #[arg(long, default_value_t = DEFAULT_LAMBDA_SVC)]
    lambda_svc: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Print the trunk JSON to stdout as well.
    #[arg(long)]
    dump_trunk: bool,
    /// Print the plan JSON to stdout as well.
    #[arg(long)]
    dump_plan: bool,
}

fn parse_families(names: &[String]) -> Result<Vec<Family>, String> {
    if names.is_empty() {
        return Ok(Family::ALL.to_vec());
    }
    names
        .iter()
        .map(|n| Family::parse(n).ok_or_else(|| format!("unknown family: {n}")))
        .collect()
}

fn parse_planners(names: &[String]) -> Result<Vec<Planner>, String> {
    names
        .iter()
        .map(|n| Planner::parse(n).ok_or_else(|| format!("unknown planner: {n}")))
        .collect()
}

fn cmd_run(args: &RunArgs) -> ExitCode {
    let (families, planners) = match (parse_families(&args.family), parse_planners(&args.planners))
    {
        (Ok(f), Ok(p)) => (f, p),
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let config = ExperimentConfig {
        families,
        planners,
        trials: args.trials,
        seed_base: args.seed,
        lambda_svc: args.lambda_svc,
        capacity: args.capacity,
    };
    let results = match run_experiment(&config) {
        Ok(r) => r,
        Err(e @ ExperimentError::InvalidConfig(_)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let csv = to_csv(&results, Some(timestamp));
    let summary = summary_text(&results);
    match &args.out {
        Some(dir) => {
            if let Err(e) = std::fs::create_dir_all(dir)
                .and_then(|_| std::fs::write(dir.join("results.csv"), &csv))
                .and_then(|_| std::fs::write(dir.join("summary.txt"), &summary))
            {
                eprintln!("error writing to {}: {e}", dir.display());
                return ExitCode::from(1);
            }
            println!("wrote {} and summary.txt", dir.join("results.csv").display());
            print!("{summary}");
        }
        None => {
            print!("{csv}");
            eprint!("{summary}");
        }
    }
    ExitCode::SUCCESS
}

fn cmd_dump(args: &DumpArgs) -> ExitCode {
    let family = match Family::parse(&args.family) {
        Some(f) => f,
        None => {
            eprintln!("error: unknown family: {}", args.family);
            return ExitCode::from(2);
        }
    };
    let planner = match Planner::parse(&args.planner) {
        Some(p) => p,
        None => {
            eprintln!("error: unknown planner: {}", args.planner);
            return ExitCode::from(2);
        }
    };
    let mut spec = ScenarioSpec::preset(family, args.seed);
    if let Some(c) = args.capacity {
        spec.capacity = c;
    }
    let scenario = match generate(&spec) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match dump_artifacts(&scenario, planner, args.lambda_svc, &args.out) {
        Ok(paths) => {
            println!("wrote {}", paths.scenario.display());
            if let Some(t) = &paths.trunk {
                println!("wrote {}", t.display());
                if args.dump_trunk {
                    if let Ok(s) = std::fs::read_to_string(t) {
                        println!("{s}");
                    }
                }
            }
            println!("wrote {}", paths.plan.display());
            if args.dump_plan {
                if let Ok(s) = std::fs::read_to_string(&paths.plan) {
                    println!("{s}");
                }
            }
            println!("wrote {}", paths.svg.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(&args),
        Command::Dump(args) => cmd_dump(&args),
    }
}
