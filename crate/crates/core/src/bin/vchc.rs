use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vchc::assignment::{recover_assignment, verify_cover};
use vchc::harness::{bench_run, brute_force_opt, Algorithm, BenchConfig, Profile, DEFAULT_BUDGET};
use vchc::instance::{generate_random, parse_instance, serialize_instance, GenParams};
use vchc::trace::Checker;
use vchc::{CoverSolution, Error, Instance};

/// Vertex cover with hard capacities: LP rounding, oracle and benchmarks.
#[derive(Parser)]
#[command(name = "vchc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Round an instance and print a solution document.
    Solve {
        #[arg(long)]
        algo: Algorithm,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Write the run trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Check every lemma invariant while running.
        #[arg(long)]
        check: bool,
    },
    /// Exact optimum by enumeration.
    Oracle {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
    },
    /// Generate a random coverable instance.
    Gen {
        #[arg(long)]
        vertices: usize,
        #[arg(long)]
        edges: usize,
        #[arg(long)]
        max_edge_size: usize,
        #[arg(long, default_value_t = 1)]
        min_edge_size: usize,
        #[arg(long)]
        max_capacity: u64,
        #[arg(long)]
        max_mult: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check a solution document against an instance.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Run algorithms over generated instances and report ratios.
    Bench {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        /// Comma-separated; defaults to every algorithm valid for the profile.
        #[arg(long, value_delimiter = ',')]
        algo: Vec<Algorithm>,
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value = "small-graphs")]
        profile: Profile,
        /// Skip the lemma checks.
        #[arg(long)]
        no_checks: bool,
        /// Record wall-clock times (breaks byte-identical reports).
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn infeasible(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    fn internal(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Infeasible => Failure::infeasible(e.to_string()),
            Error::Instance(_) | Error::RankTooLarge(_) | Error::EnumerationBudget { .. } => {
                Failure::usage(e.to_string())
            }
            Error::RetryBudgetExhausted(_) => Failure::infeasible(e.to_string()),
            _ => Failure::internal(e.to_string()),
        }
    }
}

type CliResult = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn write_or_print(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => fs::write(p, format!("{text}\n"))
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    parse_instance(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn solve(algo: Algorithm, input: &Path, output: Option<&Path>, trace: Option<&Path>, check: bool) -> CliResult {
    let inst = load_instance(input)?;
    let mut checker = Checker::new(check);
    let out = algo.run(&inst, &mut checker)?;
    let sol = recover_assignment(&inst, &out.x)
        .map_err(|e| Failure::internal(format!("rounded copies admit no assignment: {e}")))?;
    if let Some(path) = trace {
        let text = serde_json::to_string_pretty(&out.trace).expect("trace serializes");
        write_or_print(Some(path), &text)?;
    }
    write_or_print(output, &sol.to_document())
}

fn oracle(input: &Path, budget: u128) -> CliResult {
    let inst = load_instance(input)?;
    let r = brute_force_opt(&inst, budget)?;
    let doc = serde_json::json!({ "opt": r.opt, "x": r.witness });
    println!("{doc}");
    Ok(())
}

fn verify(input: &Path, solution: &Path) -> CliResult {
    let inst = load_instance(input)?;
    let sol = CoverSolution::parse(&read(solution)?)
        .map_err(|e| Failure::usage(format!("{}: {e}", solution.display())))?;
    match verify_cover(&inst, &sol) {
        Ok(()) => {
            println!("ok: cost {}", sol.cost());
            Ok(())
        }
        Err(v) => Err(Failure::infeasible(format!("invalid solution: {v}"))),
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Solve { algo, input, output, trace, check } => {
            solve(algo, &input, output.as_deref(), trace.as_deref(), check)
        }
        Command::Oracle { input, budget } => oracle(&input, budget),
        Command::Gen { vertices, edges, max_edge_size, min_edge_size, max_capacity, max_mult, seed, output } => {
            let mut params = GenParams::new(vertices, edges, max_edge_size, max_capacity, max_mult);
            params.min_edge_size = min_edge_size;
            let inst = generate_random(&params, seed)?;
            write_or_print(output.as_deref(), &serialize_instance(&inst))
        }
        Command::Verify { input, solution } => verify(&input, &solution),
        Command::Bench { count, seed, algo, oracle, profile, no_checks, timing, output } => {
            let mut config = BenchConfig::new(count, seed, profile);
            if !algo.is_empty() {
                if profile == Profile::SmallHypergraphs && algo.contains(&Algorithm::IterLp4) {
                    return Err(Failure::usage("iter-lp4 needs a graph profile"));
                }
                config.algorithms = algo;
            }
            config.oracle = oracle;
            config.checks = !no_checks;
            config.timing = timing;
            let report = bench_run(&config);
            write_or_print(output.as_deref(), &report.to_json())?;
            let s = &report.summary;
            if s.violations > 0 {
                return Err(Failure::internal(format!("{} violation(s) in {} instances", s.violations, s.instances)));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("vchc: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
