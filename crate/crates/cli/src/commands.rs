use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use vms_ldr::experiment::{evaluate_days, message_volume_log, summarize, Controllers, RunSetup};
use vms_ldr::scenario::haining::{bundled_scenario_text, haining_bundle};
use vms_ldr::scenario::{PolicyRecord, Strategy};
use vms_ldr::trainer::{self, sha256_hex, PsoConfig, TrainOptions, TrainingSet};
use vms_ldr::{ComplianceProfile, DemandDay, ScenarioBundle, SimConfig, Simulator};

use crate::output::{format_f64, write_csv, write_text};
use crate::{CompareArgs, EvaluateArgs, PsoArgs, ScenarioArg, SimulateArgs, StrategyArgs, SynthArgs, TrainArgs};

pub const DEFAULT_COMPLIANCE: &str = "0.1,0.3,0.5,0.7,0.9";

/// Bad flags or a missing input the user has to supply.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if let Some(err) = cause.downcast_ref::<vms_ldr::Error>() {
            if matches!(
                err,
                vms_ldr::Error::NothingTrainable(_) | vms_ldr::Error::Contract(_) | vms_ldr::Error::Config(_)
            ) {
                return 2;
            }
        }
    }
    1
}

struct Loaded {
    bundle: ScenarioBundle,
    sha256: String,
}

fn load_scenario(arg: &ScenarioArg) -> Result<Loaded> {
    let text = match &arg.scenario {
        Some(path) => {
            std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read scenario {}: {e}", path.display())))?
        }
        None => bundled_scenario_text().to_owned(),
    };
    let bundle = ScenarioBundle::from_toml_str(&text).context("loading scenario")?;
    Ok(Loaded { bundle, sha256: sha256_hex(text.as_bytes()) })
}

pub fn parse_compliance(s: &str) -> Result<ComplianceProfile> {
    let values: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| usage(format!("bad compliance profile {s:?}: {e}")))?;
    let arr: [f64; 5] =
        values.try_into().map_err(|v: Vec<f64>| usage(format!("compliance profile needs 5 rates, got {}", v.len())))?;
    ComplianceProfile::new(arr).map_err(|e| usage(e.to_string()))
}

fn strategy_of(args: &StrategyArgs) -> Strategy {
    Strategy::new(args.vms, args.signal)
}

fn load_policy(strategy: Strategy, path: Option<&Path>) -> Result<Option<PolicyRecord>> {
    if !strategy.is_trainable() {
        return Ok(None);
    }
    let path = path.ok_or_else(|| usage(format!("{strategy} needs --policy")))?;
    if !path.exists() {
        return Err(usage(format!("policy file {} not found", path.display())));
    }
    let record = PolicyRecord::load(path).with_context(|| format!("reading policy {}", path.display()))?;
    Ok(Some(record))
}

fn pso_config(args: &PsoArgs, seed: u64) -> PsoConfig {
    PsoConfig { particles: args.particles, iterations: args.iterations, seed, ..PsoConfig::default() }
}

fn train_options(args: &PsoArgs, seed: u64) -> TrainOptions {
    TrainOptions {
        delta: args.delta,
        train_thresholds: !args.fixed_thresholds,
        seed,
        record_timing: args.record_timing,
        ..TrainOptions::default()
    }
}

/// Report path next to a policy record: `x.policy` -> `x.report.toml`.
pub fn report_path(policy: &Path) -> PathBuf {
    policy.with_extension("report.toml")
}

/// Policy file name used by `compare`.
pub fn policy_file_name(strategy: Strategy, profile: &ComplianceProfile) -> String {
    format!("{}_{}.policy", strategy.tag(), profile.tag())
}

fn run_training(
    loaded: &Loaded,
    strategy: Strategy,
    profile: &ComplianceProfile,
    pso: &PsoArgs,
    seed: u64,
    out: &Path,
) -> Result<f64> {
    let b = &loaded.bundle;
    let sim = Simulator::new(&b.network)?;
    let setup = RunSetup { simulator: &sim, config: &b.sim, profile };
    let training = TrainingSet::new(b.train_days.clone(), pso.replications)?;
    let mut trained =
        trainer::train(setup, b.genuine_bands, strategy, &training, &pso_config(pso, seed), &train_options(pso, seed))?;
    trained.report.scenario_sha256 = Some(loaded.sha256.clone());
    trained.record.save(out).with_context(|| format!("writing {}", out.display()))?;
    write_text(&report_path(out), &trained.report.to_text()?)?;
    Ok(trained.report.best_objective)
}

pub fn train(a: TrainArgs) -> Result<()> {
    let loaded = load_scenario(&a.scenario)?;
    let profile = parse_compliance(&a.compliance)?;
    let strategy = strategy_of(&a.strategy);
    let best = run_training(&loaded, strategy, &profile, &a.pso, a.seed, &a.out)?;
    eprintln!("{strategy}: training objective {} s, policy written to {}", format_f64(best), a.out.display());
    Ok(())
}

fn evaluation_rows(
    b: &ScenarioBundle,
    strategy: Strategy,
    record: Option<&PolicyRecord>,
    profile: &ComplianceProfile,
    days: &[DemandDay],
    replications: usize,
    seed: u64,
) -> Result<(Vec<Vec<String>>, Option<f64>)> {
    if replications == 0 {
        return Err(usage("need at least one replication per day"));
    }
    let sim = Simulator::new(&b.network)?;
    let setup = RunSetup { simulator: &sim, config: &b.sim, profile };
    let controllers = Controllers::for_strategy(strategy, record, b.genuine_bands)?;
    let outcomes = evaluate_days(setup, &controllers, days, replications, seed)?;
    let mean = summarize(&outcomes);
    let mut rows: Vec<Vec<String>> = outcomes
        .iter()
        .map(|o| {
            vec![
                o.label.clone(),
                strategy.tag(),
                profile.tag(),
                o.mean_travel_time.map(format_f64).unwrap_or_default(),
                format_f64(o.completed),
            ]
        })
        .collect();
    let completed = outcomes.iter().map(|o| o.completed).sum::<f64>() / outcomes.len().max(1) as f64;
    rows.push(vec![
        "mean".into(),
        strategy.tag(),
        profile.tag(),
        mean.map(format_f64).unwrap_or_default(),
        format_f64(completed),
    ]);
    Ok((rows, mean))
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    let loaded = load_scenario(&a.scenario)?;
    let b = &loaded.bundle;
    let profile = parse_compliance(&a.compliance)?;
    let strategy = strategy_of(&a.strategy);
    let record = load_policy(strategy, a.policy.as_deref())?;
    let days = if a.training_days { &b.train_days } else { &b.test_days };
    let (rows, _) = evaluation_rows(b, strategy, record.as_ref(), &profile, days, a.replications, a.seed)?;
    write_csv(a.out.as_deref(), &["day", "strategy", "compliance", "mean_travel_time_s", "completed"], &rows)
}

pub fn compare(a: CompareArgs) -> Result<()> {
    let loaded = load_scenario(&a.scenario)?;
    let b = &loaded.bundle;
    let profiles: Vec<ComplianceProfile> = if a.compliance.is_empty() {
        b.compliance_profiles.clone()
    } else {
        a.compliance
            .iter()
            .flat_map(|s| s.split(';'))
            .filter(|s| !s.trim().is_empty())
            .map(parse_compliance)
            .collect::<Result<_>>()?
    };
    if profiles.is_empty() {
        return Err(usage("the compliance sweep is empty"));
    }
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    if a.train {
        std::fs::create_dir_all(&a.policy_dir)?;
    }

    let mut matrix: Vec<Vec<String>> = Vec::new();
    let mut day_rows: Vec<Vec<String>> = Vec::new();
    let mut log_rows: Vec<Vec<String>> = Vec::new();
    for strategy in Strategy::STUDY {
        let mut row = vec![strategy.tag()];
        for profile in &profiles {
            let path = a.policy_dir.join(policy_file_name(strategy, profile));
            if strategy.is_trainable() && a.train && !path.exists() {
                eprintln!("training {strategy} for compliance {}", profile.tag());
                run_training(&loaded, strategy, profile, &a.pso, a.train_seed, &path)?;
            }
            let record = load_policy(strategy, Some(&path))?;
            let (rows, mean) =
                evaluation_rows(b, strategy, record.as_ref(), profile, &b.test_days, a.eval_replications, a.seed)?;
            row.push(mean.map(format_f64).unwrap_or_default());
            day_rows.extend(rows);

            let sim = Simulator::new(&b.network)?;
            let setup = RunSetup { simulator: &sim, config: &b.sim, profile };
            let controllers = Controllers::for_strategy(strategy, record.as_ref(), b.genuine_bands)?;
            for r in message_volume_log(setup, &controllers, &b.test_days, a.seed)? {
                log_rows.push(vec![
                    strategy.tag(),
                    profile.tag(),
                    r.day.clone(),
                    r.step.to_string(),
                    r.message.as_str().to_owned(),
                    r.route1_volume.to_string(),
                    r.route2_volume.to_string(),
                    r.volume_difference().to_string(),
                    r.recommends_busier_route().to_string(),
                ]);
            }
        }
        matrix.push(row);
    }

    let mut header = vec!["strategy".to_owned()];
    header.extend(profiles.iter().map(ComplianceProfile::tag));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(Some(&a.out.join("matrix.csv")), &header, &matrix)?;
    write_csv(
        Some(&a.out.join("days.csv")),
        &["day", "strategy", "compliance", "mean_travel_time_s", "completed"],
        &day_rows,
    )?;
    write_csv(
        Some(&a.out.join("message_volume.csv")),
        &[
            "strategy",
            "compliance",
            "day",
            "step",
            "message",
            "route1_volume",
            "route2_volume",
            "volume_difference",
            "recommends_busier_route",
        ],
        &log_rows,
    )
}

pub fn synth(a: SynthArgs) -> Result<()> {
    if !(a.sigma.is_finite() && a.sigma >= 0.0) {
        return Err(usage(format!("--sigma must be a non-negative number, got {}", a.sigma)));
    }
    let bundle = haining_bundle(a.days as usize, a.sigma, a.seed)?;
    write_text(&a.out, &bundle.to_toml_string()?)
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let loaded = load_scenario(&a.scenario)?;
    let b = &loaded.bundle;
    let profile = parse_compliance(&a.compliance)?;
    let strategy = strategy_of(&a.strategy);
    let record = load_policy(strategy, a.policy.as_deref())?;
    let day = b
        .train_days
        .iter()
        .chain(&b.test_days)
        .find(|d| d.label == a.day)
        .ok_or_else(|| usage(format!("no day labelled {:?} in the scenario", a.day)))?;
    let sim = Simulator::new(&b.network)?;
    let controllers = Controllers::for_strategy(strategy, record.as_ref(), b.genuine_bands)?;
    let config = SimConfig { rng_seed: a.seed, record_trace: true, ..b.sim.clone() };
    let res = sim.run(day, controllers.vms.as_ref(), controllers.signal.as_ref(), &profile, &config)?;

    let ix = sim.index();
    let mut header = vec!["step".to_owned(), "message".into(), "route1_volume".into(), "route2_volume".into()];
    header.extend(ix.link_ids.iter().map(|l| format!("q_{l}")));
    for (node, &phases) in ix.signal_nodes.iter().zip(&ix.phase_counts) {
        header.extend((0..phases).map(|p| format!("g_{node}_{p}")));
    }
    let rows: Vec<Vec<String>> = res
        .decisions
        .iter()
        .zip(&res.trace)
        .map(|(d, q)| {
            let mut row = vec![
                d.step.to_string(),
                d.message.as_str().to_owned(),
                d.route_volumes.0.to_string(),
                d.route_volumes.1.to_string(),
            ];
            row.extend(q.iter().map(u32::to_string));
            row.extend(d.splits.iter().flatten().map(|&g| format_f64(g)));
            row
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(a.out.as_deref(), &header, &rows)?;
    match res.mean_travel_time {
        Some(phi) => eprintln!("{}: mean travel time {} s, {} completed", day.label, format_f64(phi), res.completed),
        None => bail!("day {} has no vehicle counted toward the objective", day.label),
    }
    Ok(())
}
