//! Offline training: sample-average estimates of the expected objective over
//! demand days, and particle swarm search over the decision vector.
//!
//! The decision vector is laid out as
//! `[A | threshold offsets | B_1 rows | B_2 rows | ...]`, where each segment
//! is present only if the matching controller is trained. Threshold offsets
//! are added to the default thresholds, so the zero vector decodes to the
//! no-guidance sign (`A = 0`, default thresholds) and the equal-split signal
//! plan (`B = 0`).

mod pso;

pub use pso::{pso_minimize, pso_minimize_observed, PsoConfig, PsoOutcome};

use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::demand::DemandDay;
use crate::error::{Error, Result};
use crate::experiment::{run_days, Controllers, RunSetup};
use crate::scenario::{PolicyRecord, SignalMode, Strategy, VmsMode};
use crate::signal::{LdrSignalPolicy, DEFAULT_MIN_GREEN};
use crate::vms::{GenuineBands, LdrVmsPolicy, DEFAULT_THRESHOLDS};

/// Smallest gap kept between consecutive decoded thresholds.
pub const THRESHOLD_GAP: f64 = 1e-6;

/// Which segments of the decision vector are trained, and their sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub link_count: usize,
    pub delta: usize,
    pub vms: bool,
    pub thresholds: bool,
    /// Phases per signalized intersection when the signal rule is trained.
    pub signal: Option<Vec<usize>>,
    pub g_min: f64,
}

impl Layout {
    pub fn new(strategy: Strategy, link_count: usize, phase_counts: &[usize], options: &TrainOptions) -> Result<Self> {
        if !strategy.is_trainable() {
            return Err(Error::NothingTrainable(format!("{strategy} has no linear-rule controller")));
        }
        if options.delta == 0 {
            return Err(Error::Config("history depth must be at least 1".into()));
        }
        let signal = (strategy.signal == SignalMode::Ldr).then(|| phase_counts.to_vec());
        if signal.as_ref().is_some_and(|p| p.is_empty()) {
            return Err(Error::NothingTrainable("network has no signalized intersection".into()));
        }
        let vms = strategy.vms == VmsMode::Ldr;
        Ok(Self {
            link_count,
            delta: options.delta,
            vms,
            thresholds: vms && options.train_thresholds,
            signal,
            g_min: options.g_min,
        })
    }

    fn width(&self) -> usize {
        self.link_count * self.delta
    }

    pub fn vms_len(&self) -> usize {
        if self.vms {
            self.width()
        } else {
            0
        }
    }

    pub fn threshold_len(&self) -> usize {
        if self.thresholds {
            4
        } else {
            0
        }
    }

    pub fn signal_len(&self) -> usize {
        self.signal.as_ref().map_or(0, |p| p.iter().sum::<usize>() * self.width())
    }

    pub fn len(&self) -> usize {
        self.vms_len() + self.threshold_len() + self.signal_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Initial box: coefficients in `[-c, c]`, threshold offsets in `[-m, m]`.
    pub fn init_box(&self, coefficient_range: f64, threshold_range: f64) -> Vec<(f64, f64)> {
        let mut b = vec![(-coefficient_range, coefficient_range); self.vms_len()];
        b.extend(std::iter::repeat_n((-threshold_range, threshold_range), self.threshold_len()));
        b.extend(std::iter::repeat_n((-coefficient_range, coefficient_range), self.signal_len()));
        b
    }

    pub fn decode(&self, x: &[f64]) -> Result<(Option<LdrVmsPolicy>, Option<LdrSignalPolicy>)> {
        if x.len() != self.len() {
            return Err(Error::Contract(format!(
                "decision vector has {} entries, layout expects {}",
                x.len(),
                self.len()
            )));
        }
        let (a, rest) = x.split_at(self.vms_len());
        let (m, b) = rest.split_at(self.threshold_len());
        let vms = if self.vms {
            let thresholds = if self.thresholds { thresholds_from_offsets(m)? } else { DEFAULT_THRESHOLDS };
            Some(LdrVmsPolicy::new(self.delta, thresholds, a.to_vec())?)
        } else {
            None
        };
        let signal = match &self.signal {
            Some(phases) => {
                let mut rows = b.chunks(self.width());
                let matrices = phases.iter().map(|&p| rows.by_ref().take(p).map(<[f64]>::to_vec).collect()).collect();
                Some(LdrSignalPolicy::new(self.delta, self.g_min, matrices)?)
            }
            None => None,
        };
        Ok((vms, signal))
    }
}

/// Default thresholds shifted by `offsets`, sorted, then spread so they are
/// strictly increasing.
pub fn thresholds_from_offsets(offsets: &[f64]) -> Result<[f64; 4]> {
    if offsets.len() != 4 || offsets.iter().any(|o| !o.is_finite()) {
        return Err(Error::Contract(format!("bad threshold offsets {offsets:?}")));
    }
    let mut m = [0.0; 4];
    for i in 0..4 {
        m[i] = DEFAULT_THRESHOLDS[i] + offsets[i];
    }
    m.sort_by(f64::total_cmp);
    for i in 1..4 {
        if m[i] < m[i - 1] + THRESHOLD_GAP {
            m[i] = m[i - 1] + THRESHOLD_GAP;
        }
    }
    Ok(m)
}

/// Demand days sampled for training, each simulated `replications` times
/// per evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub days: Vec<DemandDay>,
    pub replications: usize,
}

pub const DEFAULT_REPLICATIONS: usize = 3;

impl TrainingSet {
    pub fn new(days: Vec<DemandDay>, replications: usize) -> Result<Self> {
        if days.is_empty() || replications == 0 {
            return Err(Error::Contract("training needs at least one day and one replication".into()));
        }
        Ok(Self { days, replications })
    }

    /// SHA-256 over the canonical text form of the days.
    pub fn fingerprint(&self) -> String {
        #[derive(Serialize)]
        struct Days<'a> {
            days: &'a [DemandDay],
        }
        let text = toml::to_string(&Days { days: &self.days }).unwrap_or_default();
        sha256_hex(text.as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Mean objective over every day and replication of `training`, each run
/// under its own derived seed. Identical arguments give identical values.
pub fn estimate_objective(
    setup: RunSetup<'_>,
    controllers: &Controllers,
    training: &TrainingSet,
    seed: u64,
) -> Result<f64> {
    let runs = run_days(setup, controllers, &training.days, training.replications, seed)?;
    let mut total = 0.0;
    for r in &runs {
        match r.mean_travel_time {
            Some(phi) => total += phi,
            None => {
                return Err(Error::Day {
                    day: r.day,
                    source: Box::new(Error::Data("no vehicle counted toward the objective".into())),
                })
            }
        }
    }
    Ok(total / runs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub delta: usize,
    pub train_thresholds: bool,
    pub g_min: f64,
    pub coefficient_range: f64,
    pub threshold_range: f64,
    /// Base seed of the per-run sub-seeds shared by all particles.
    pub seed: u64,
    /// Put wall-clock time in the report (makes it non-reproducible).
    pub record_timing: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            delta: 1,
            train_thresholds: true,
            g_min: DEFAULT_MIN_GREEN,
            coefficient_range: 1.0,
            threshold_range: 0.5,
            seed: 0,
            record_timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub strategy: String,
    pub compliance: Vec<f64>,
    pub delta: usize,
    pub train_thresholds: bool,
    pub g_min: f64,
    pub dimension: usize,
    pub pso: PsoConfig,
    pub objective_seed: u64,
    pub replications: usize,
    pub training_days: Vec<String>,
    pub training_data_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario_sha256: Option<String>,
    /// Objective of the all-zero decision vector.
    pub zero_policy_objective: f64,
    pub best_objective: f64,
    pub evaluations: usize,
    /// Best objective after each iteration, seconds per vehicle.
    pub trace: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

impl TrainingReport {
    pub fn to_text(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Data(format!("cannot serialize report: {e}")))
    }
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub record: PolicyRecord,
    pub report: TrainingReport,
    pub best: Vec<f64>,
}

/// Fits the linear-rule controllers of `strategy` on `training`.
pub fn train(
    setup: RunSetup<'_>,
    bands: GenuineBands,
    strategy: Strategy,
    training: &TrainingSet,
    pso: &PsoConfig,
    options: &TrainOptions,
) -> Result<Trained> {
    let started = Instant::now();
    let ix = setup.simulator.index();
    let layout = Layout::new(strategy, ix.link_count(), &ix.phase_counts, options)?;
    if training.days.iter().all(|d| d.total() == 0) {
        return Err(Error::NothingTrainable("every training day has zero demand".into()));
    }
    setup.config.validate(options.delta)?;

    let record_for = |x: &[f64]| -> Result<PolicyRecord> {
        let (vms, signal) = layout.decode(x)?;
        Ok(PolicyRecord { strategy, link_count: layout.link_count, delta: layout.delta, vms, signal })
    };
    let objective = |x: &[f64]| -> Result<f64> {
        let record = record_for(x)?;
        let controllers = Controllers::for_strategy(strategy, Some(&record), bands)?;
        estimate_objective(setup, &controllers, training, options.seed)
    };

    let zero_policy_objective = objective(&vec![0.0; layout.len()])?;
    let bounds = layout.init_box(options.coefficient_range, options.threshold_range);
    let outcome = pso_minimize(objective, &bounds, pso)?;
    let record = record_for(&outcome.best)?;
    let report = TrainingReport {
        strategy: strategy.tag(),
        compliance: setup.profile.ascending().to_vec(),
        delta: layout.delta,
        train_thresholds: layout.thresholds,
        g_min: layout.g_min,
        dimension: layout.len(),
        pso: pso.clone(),
        objective_seed: options.seed,
        replications: training.replications,
        training_days: training.days.iter().map(|d| d.label.clone()).collect(),
        training_data_sha256: training.fingerprint(),
        scenario_sha256: None,
        zero_policy_objective,
        best_objective: outcome.value,
        evaluations: outcome.evaluations,
        trace: outcome.trace,
        wall_clock_seconds: options.record_timing.then(|| started.elapsed().as_secs_f64()),
    };
    Ok(Trained { record, report, best: outcome.best })
}
