//! `vms-ldr`: train linear-decision-rule controllers, evaluate and compare
//! control strategies, and generate synthetic scenarios.
//!
//! Exit codes: 0 success, 1 internal error, 2 usage or precondition error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vms_ldr::scenario::{SignalMode, VmsMode};

#[derive(Parser)]
#[command(name = "vms-ldr", version, about = "VMS and signal control experiments on a mesoscopic simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the linear-rule controllers of a strategy on the training days.
    Train(TrainArgs),
    /// Evaluate one strategy on the test days, one CSV row per day.
    Evaluate(EvaluateArgs),
    /// Evaluate the four study strategies over a compliance sweep.
    Compare(CompareArgs),
    /// Write a scenario bundle with synthetic demand days.
    Synth(SynthArgs),
    /// Run one day and write the per-step trace.
    Simulate(SimulateArgs),
}

#[derive(Args, Clone)]
struct ScenarioArg {
    /// Scenario bundle; the bundled synthetic scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct StrategyArgs {
    #[arg(long, value_parser = parse_vms)]
    vms: VmsMode,
    #[arg(long, value_parser = parse_signal, default_value = "default")]
    signal: SignalMode,
}

#[derive(Args, Clone)]
struct PsoArgs {
    #[arg(long, default_value_t = 20)]
    particles: usize,
    #[arg(long, default_value_t = 30)]
    iterations: usize,
    /// History depth of the linear rules.
    #[arg(long, default_value_t = 1)]
    delta: usize,
    /// Monte-Carlo replications per training day.
    #[arg(long, default_value_t = vms_ldr::trainer::DEFAULT_REPLICATIONS)]
    replications: usize,
    /// Keep the default message thresholds instead of training offsets.
    #[arg(long)]
    fixed_thresholds: bool,
    /// Store wall-clock training time in the report.
    #[arg(long)]
    record_timing: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    #[command(flatten)]
    strategy: StrategyArgs,
    #[command(flatten)]
    pso: PsoArgs,
    /// Compliance profile "c1,c2,c3,c4,c5" in ascending order.
    #[arg(long, default_value = commands::DEFAULT_COMPLIANCE)]
    compliance: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Policy record to write; the report goes next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    #[command(flatten)]
    strategy: StrategyArgs,
    /// Policy record, required for LDR strategies.
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long, default_value = commands::DEFAULT_COMPLIANCE)]
    compliance: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    replications: usize,
    /// Evaluate on the training days instead of the test days.
    #[arg(long)]
    training_days: bool,
    /// CSV file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    /// Directory holding `<strategy>_<profile>.policy` records.
    #[arg(long)]
    policy_dir: PathBuf,
    /// Compliance profiles to sweep, repeatable or separated by ';'.
    /// Defaults to the scenario's profiles.
    #[arg(long)]
    compliance: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replications per test day.
    #[arg(long, default_value_t = 1)]
    eval_replications: usize,
    /// Train missing policies into the policy directory first.
    #[arg(long)]
    train: bool,
    #[command(flatten)]
    pso: PsoArgs,
    /// Seed for training missing policies.
    #[arg(long, default_value_t = 0)]
    train_seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    days: u32,
    /// Log-normal sigma of the day-level demand factor.
    #[arg(long, default_value_t = vms_ldr::scenario::haining::BUNDLED_SIGMA)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    #[command(flatten)]
    strategy: StrategyArgs,
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long, default_value = commands::DEFAULT_COMPLIANCE)]
    compliance: String,
    /// Label of the day to run, training or test.
    #[arg(long)]
    day: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_vms(s: &str) -> Result<VmsMode, String> {
    s.parse().map_err(|_| format!("expected one of ldr, genuine, none; got {s:?}"))
}

fn parse_signal(s: &str) -> Result<SignalMode, String> {
    s.parse().map_err(|_| format!("expected one of ldr, default; got {s:?}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Compare(a) => commands::compare(a),
        Command::Synth(a) => commands::synth(a),
        Command::Simulate(a) => commands::simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn flags_are_consistent() {
        Cli::command().debug_assert();
    }
}
