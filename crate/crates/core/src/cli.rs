//! Command-line front end.
//!
//! Exit codes: 0 all checks pass, 1 model violation, 2 input error,
//! 3 exploration budget exhausted.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

use crate::oracle::enumerate::exhaustive_seeds;
use crate::oracle::explore::{self, render_table, ExplorationReport, ExploreConfig, ExploreError};
use crate::routing::RoutingState;
use crate::sim::{self, Scenario, SimError};
use crate::topology::Topology;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

pub const MAX_BUDGET: u64 = 10_000_000;

#[derive(Debug, Parser)]
#[command(name = "manet", version, about = "Contract-checked MANET route management model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Input file (may also be given positionally)
    #[arg(short, long, global = true)]
    pub input: Option<PathBuf>,
    /// Output file; standard output when absent
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    /// Age threshold override (scenario default 30, exploration default 1)
    #[arg(long, global = true)]
    pub ttl_threshold: Option<u32>,
    /// Exploration depth
    #[arg(long, global = true, default_value_t = explore::DEFAULT_DEPTH as u64,
          value_parser = clap::value_parser!(u64).range(0..=explore::MAX_DEPTH as u64))]
    pub depth: u64,
    /// Exploration state budget
    #[arg(long, global = true, default_value_t = explore::DEFAULT_BUDGET,
          value_parser = clap::value_parser!(u64).range(1..=MAX_BUDGET))]
    pub budget: u64,
    /// Worker threads for exploration
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write its JSON-lines trace
    Run {
        file: Option<PathBuf>,
        /// Also write the final routing state as JSON
        #[arg(long)]
        state_out: Option<PathBuf>,
    },
    /// Check the invariants of a serialized routing state
    Check { file: Option<PathBuf> },
    /// Explore seed topologies (built-in 2- and 3-node seeds by default)
    Explore { file: Option<PathBuf> },
    /// Render the property table of a saved exploration report
    Report { file: Option<PathBuf> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Run,
    Check,
    Explore,
    Report,
}

/// Resolved invocation settings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliConfig {
    pub subcommand: Action,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub state_out: Option<PathBuf>,
    pub ttl_threshold: Option<u32>,
    pub depth: usize,
    pub budget: u64,
    pub threads: Option<usize>,
    pub verbose: bool,
}

impl CliConfig {
    pub fn new(subcommand: Action) -> Self {
        CliConfig {
            subcommand,
            input: None,
            output: None,
            state_out: None,
            ttl_threshold: None,
            depth: explore::DEFAULT_DEPTH,
            budget: explore::DEFAULT_BUDGET,
            threads: None,
            verbose: false,
        }
    }

    pub fn with_input(mut self, path: impl Into<PathBuf>) -> Self {
        self.input = Some(path.into());
        self
    }
}

impl From<Cli> for CliConfig {
    fn from(cli: Cli) -> Self {
        let (subcommand, file, state_out) = match cli.command {
            Command::Run { file, state_out } => (Action::Run, file, state_out),
            Command::Check { file } => (Action::Check, file, None),
            Command::Explore { file } => (Action::Explore, file, None),
            Command::Report { file } => (Action::Report, file, None),
        };
        CliConfig {
            subcommand,
            input: cli.input.or(file),
            output: cli.output,
            state_out,
            ttl_threshold: cli.ttl_threshold,
            depth: cli.depth as usize,
            budget: cli.budget,
            threads: cli.threads,
            verbose: cli.verbose,
        }
    }
}

/// Dispatches to the subcommand and returns its exit code.
pub fn execute(config: &CliConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match config.subcommand {
        Action::Run => cmd_run(config, out, err),
        Action::Check => cmd_check(config, out, err),
        Action::Explore => cmd_explore(config, out, err),
        Action::Report => cmd_report(config, out, err),
    }
}

struct InputError(String);

fn read_input(config: &CliConfig) -> Result<(String, String), InputError> {
    match &config.input {
        Some(path) => fs::read_to_string(path)
            .map(|text| (path.display().to_string(), text))
            .map_err(|e| InputError(format!("{}: {e}", path.display()))),
        None => {
            let mut text = String::new();
            io::Read::read_to_string(&mut io::stdin(), &mut text)
                .map_err(|e| InputError(format!("<stdin>: {e}")))?;
            Ok(("<stdin>".into(), text))
        }
    }
}

fn parse_input<T: DeserializeOwned>(config: &CliConfig) -> Result<T, InputError> {
    let (name, text) = read_input(config)?;
    serde_json::from_str(&text).map_err(|e| InputError(format!("{name}: {e}")))
}

fn emit(path: Option<&Path>, out: &mut dyn Write, text: &str) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => out.write_all(text.as_bytes()),
    }
}

fn diag(err: &mut dyn Write, msg: impl AsRef<str>) {
    let _ = writeln!(err, "manet: {}", msg.as_ref());
}

pub fn cmd_run(config: &CliConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut scenario: Scenario = match parse_input(config) {
        Ok(s) => s,
        Err(InputError(msg)) => {
            diag(err, msg);
            return EXIT_INPUT;
        }
    };
    if let Some(t) = config.ttl_threshold {
        scenario.ttl_threshold = t;
    }
    let (state, trace, code) = match sim::run_to_end(&scenario) {
        Ok((state, trace)) => (Some(state), trace, EXIT_PASS),
        Err(SimError::Scenario(msg)) => {
            diag(err, format!("scenario error: {msg}"));
            return EXIT_INPUT;
        }
        Err(SimError::InvariantViolated { tick, check, witness, trace }) => {
            diag(err, format!("invariant {check} violated at tick {tick}: {witness}"));
            (None, trace, EXIT_VIOLATION)
        }
    };
    if let Err(e) = emit(config.output.as_deref(), out, &trace.to_jsonl()) {
        diag(err, format!("writing trace: {e}"));
        return EXIT_INPUT;
    }
    if let (Some(path), Some(state)) = (&config.state_out, state) {
        let json = serde_json::to_string_pretty(&state).expect("state serializes");
        if let Err(e) = fs::write(path, json + "\n") {
            diag(err, format!("{}: {e}", path.display()));
            return EXIT_INPUT;
        }
    }
    if config.verbose {
        diag(err, format!("{} trace entries", trace.entries.len()));
    }
    code
}

pub fn cmd_check(config: &CliConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let state: RoutingState = match parse_input(config) {
        Ok(s) => s,
        Err(InputError(msg)) => {
            diag(err, msg);
            return EXIT_INPUT;
        }
    };
    let report = state.check_state_invariant();
    let failed = report.failures().count();
    let text = format!(
        "{report}{} of {} checks passed\n",
        report.checks.len() - failed,
        report.checks.len()
    );
    if let Err(e) = emit(config.output.as_deref(), out, &text) {
        diag(err, format!("writing report: {e}"));
        return EXIT_INPUT;
    }
    if report.all_passed() {
        EXIT_PASS
    } else {
        EXIT_VIOLATION
    }
}

fn write_report(config: &CliConfig, out: &mut dyn Write, err: &mut dyn Write, report: &ExplorationReport) -> bool {
    let json = serde_json::to_string_pretty(report).expect("report serializes") + "\n";
    if let Err(e) = emit(config.output.as_deref(), out, &json) {
        diag(err, format!("writing report: {e}"));
        return false;
    }
    let _ = err.write_all(render_table(report).as_bytes());
    true
}

pub fn cmd_explore(config: &CliConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let seeds: Vec<Topology> = if config.input.is_some() {
        match parse_input(config) {
            Ok(s) => s,
            Err(InputError(msg)) => {
                diag(err, msg);
                return EXIT_INPUT;
            }
        }
    } else {
        exhaustive_seeds(2, 3)
    };
    let explore_config = ExploreConfig {
        max_depth: config.depth,
        budget: config.budget,
        ttl_threshold: config.ttl_threshold.unwrap_or(explore::EXPLORE_TTL_THRESHOLD),
        threads: config.threads,
    };
    if config.verbose {
        diag(err, format!("exploring {} seeds to depth {}", seeds.len(), config.depth));
    }
    match explore::explore(&seeds, &explore_config) {
        Ok(report) => {
            if !write_report(config, out, err, &report) {
                return EXIT_INPUT;
            }
            if report.violations.is_empty() {
                EXIT_PASS
            } else {
                EXIT_VIOLATION
            }
        }
        Err(ExploreError::BudgetExceeded { budget, report }) => {
            diag(err, format!("state budget of {budget} exhausted; report is partial"));
            write_report(config, out, err, &report);
            EXIT_BUDGET
        }
        Err(e) => {
            diag(err, e.to_string());
            EXIT_INPUT
        }
    }
}

pub fn cmd_report(config: &CliConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let report: ExplorationReport = match parse_input(config) {
        Ok(r) => r,
        Err(InputError(msg)) => {
            diag(err, msg);
            return EXIT_INPUT;
        }
    };
    if let Err(e) = emit(config.output.as_deref(), out, &render_table(&report)) {
        diag(err, format!("writing table: {e}"));
        return EXIT_INPUT;
    }
    if report.budget_exceeded {
        EXIT_BUDGET
    } else if report.violations.is_empty() {
        EXIT_PASS
    } else {
        EXIT_VIOLATION
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_resolve() {
        let cli = Cli::try_parse_from(["manet", "run", "baseline.json", "--ttl-threshold", "5", "-o", "t.jsonl"]).unwrap();
        let config = CliConfig::from(cli);
        assert_eq!(config.subcommand, Action::Run);
        assert_eq!(config.input, Some(PathBuf::from("baseline.json")));
        assert_eq!(config.output, Some(PathBuf::from("t.jsonl")));
        assert_eq!(config.ttl_threshold, Some(5));
        assert_eq!(config.depth, 4);
        assert_eq!(config.budget, 1_000_000);
    }

    #[test]
    fn bounds_enforced_by_parser() {
        assert!(Cli::try_parse_from(["manet", "explore", "--depth", "7"]).is_err());
        assert!(Cli::try_parse_from(["manet", "explore", "--budget", "10000001"]).is_err());
        assert!(Cli::try_parse_from(["manet", "explore", "--depth", "6"]).is_ok());
    }

    #[test]
    fn input_flag_wins_over_positional() {
        let cli = Cli::try_parse_from(["manet", "check", "a.json", "-i", "b.json"]).unwrap();
        assert_eq!(CliConfig::from(cli).input, Some(PathBuf::from("b.json")));
    }
}
