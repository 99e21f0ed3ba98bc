use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rho_core::harness::{emit_table, run_experiment, ExperimentConfig, HarnessError};
use rho_core::model::cassandra::parse_cassandra_pomdp;
use rho_core::model::GenerativeModel;
use rho_core::problems::{problem_parameters, ProblemError, PROBLEM_NAMES};

const EXIT_CONFIG: u8 = 2;
const EXIT_PARSE: u8 = 3;

#[derive(Parser)]
#[command(name = "rho-plan", version, about = "Run belief-reward POMDP planning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run episodes and print one summary row.
    Run(RunArgs),
    /// Validate a Cassandra .POMDP file and summarize it.
    ParsePomdp { file: PathBuf },
    /// List the built-in problems and their parameters.
    ListProblems,
}

#[derive(clap::Args)]
struct RunArgs {
    /// `key = value` experiment file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// Problem parameter as `name=value`; repeatable.
    #[arg(long = "problem-arg", value_name = "K=V")]
    problem_args: Vec<String>,
    /// random, lookahead, rho-pomcp or rho-belief-uct.
    #[arg(long)]
    planner: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long, conflicts_with = "time_ms")]
    descents: Option<String>,
    #[arg(long = "time-ms")]
    time_ms: Option<String>,
    #[arg(long)]
    ucb: Option<String>,
    /// vanilla, lru or lvu.
    #[arg(long)]
    variant: Option<String>,
    /// importance or rejection.
    #[arg(long)]
    sampling: Option<String>,
    /// none or random.
    #[arg(long)]
    rollout: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    episodes: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// csv or markdown.
    #[arg(long)]
    format: Option<String>,
}

impl RunArgs {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        let mut kv = Vec::new();
        let flags: [(&'static str, &Option<String>); 16] = [
            ("problem", &self.problem),
            ("planner", &self.planner),
            ("horizon", &self.horizon),
            ("beta", &self.beta),
            ("descents", &self.descents),
            ("time_ms", &self.time_ms),
            ("ucb", &self.ucb),
            ("variant", &self.variant),
            ("sampling", &self.sampling),
            ("rollout", &self.rollout),
            ("gamma", &self.gamma),
            ("episodes", &self.episodes),
            ("steps", &self.steps),
            ("seed", &self.seed),
            ("out", &self.out),
            ("format", &self.format),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                kv.push((k, v.as_str()));
            }
        }
        kv.extend(self.problem_args.iter().map(|a| ("problem_arg", a.as_str())));
        kv
    }
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn run(args: RunArgs) -> ExitCode {
    let mut config = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match ExperimentConfig::from_text(&text) {
                Ok(c) => c,
                Err(e) => return fail(EXIT_CONFIG, format!("{}: {e}", path.display())),
            },
            Err(e) => return fail(EXIT_CONFIG, format!("{}: {e}", path.display())),
        },
        None => ExperimentConfig::default(),
    };
    for (k, v) in args.overrides() {
        if let Err(e) = config.apply(k, v) {
            return fail(EXIT_CONFIG, e);
        }
    }
    let row = match run_experiment(&config) {
        Ok(row) => row,
        Err(HarnessError::Problem(e @ ProblemError::Parse(_))) => return fail(EXIT_PARSE, e),
        Err(e @ (HarnessError::Config(_) | HarnessError::Problem(_))) => return fail(EXIT_CONFIG, e),
        Err(HarnessError::Plan(e @ rho_core::planner::PlanError::EmptyBudget))
        | Err(HarnessError::Plan(e @ rho_core::planner::PlanError::InvalidConfig(_))) => return fail(EXIT_CONFIG, e),
        Err(e) => return fail(1, e),
    };
    let table = emit_table(&[row], config.format);
    match &config.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &table) {
                return fail(1, format!("{}: {e}", path.display()));
            }
        }
        None => print!("{table}"),
    }
    ExitCode::SUCCESS
}

fn parse_pomdp(file: PathBuf) -> ExitCode {
    let text = match std::fs::read_to_string(&file) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_PARSE, format!("{}: {e}", file.display())),
    };
    let m = match parse_cassandra_pomdp(&text) {
        Ok(m) => m,
        Err(e) => return fail(EXIT_PARSE, format!("{}: {e}", file.display())),
    };
    println!("file: {}", file.display());
    println!("states: {}", m.n_states());
    println!("actions: {}", m.n_actions());
    println!("observations: {}", m.n_obs());
    println!("discount: {}", m.gamma());
    println!("initial belief support: {}", m.initial_belief().support_len());
    println!("state rewards: {}", if m.state_reward_matrix().is_some() { "yes" } else { "no" });
    ExitCode::SUCCESS
}

fn list_problems() -> ExitCode {
    for name in PROBLEM_NAMES {
        let params = problem_parameters(name);
        let mut all = vec!["gamma"];
        all.extend_from_slice(params);
        println!("{name:<18} params: {}", all.join(", "));
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::ParsePomdp { file } => parse_pomdp(file),
        Command::ListProblems => list_problems(),
    }
}
