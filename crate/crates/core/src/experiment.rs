//! Strategy evaluation shared by the trainer and the experiment runner:
//! building controller pairs, running days under derived seeds, and the
//! per-step message versus route-volume log.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{SignalController, VmsController};
use crate::demand::DemandDay;
use crate::error::{Error, Result};
use crate::scenario::{PolicyRecord, SignalMode, Strategy, VmsMode};
use crate::seed;
use crate::signal::EqualSplit;
use crate::sim::{SimConfig, Simulator};
use crate::vms::{ComplianceProfile, FixedDisplay, GenuineBands, GenuineDisplay, RouteChoice, VmsMessage};

pub struct Controllers {
    pub vms: Box<dyn VmsController>,
    pub signal: Box<dyn SignalController>,
}

impl Controllers {
    /// Controllers for `strategy`; LDR segments come from `record`.
    pub fn for_strategy(strategy: Strategy, record: Option<&PolicyRecord>, bands: GenuineBands) -> Result<Self> {
        let vms: Box<dyn VmsController> = match strategy.vms {
            VmsMode::None => Box::new(FixedDisplay(VmsMessage::NoDisplay)),
            VmsMode::Genuine => Box::new(GenuineDisplay { bands }),
            VmsMode::Ldr => Box::new(
                record
                    .and_then(|r| r.vms.clone())
                    .ok_or_else(|| Error::Contract(format!("{strategy} needs a trained VMS rule")))?,
            ),
        };
        let signal: Box<dyn SignalController> = match strategy.signal {
            SignalMode::Default => Box::new(EqualSplit),
            SignalMode::Ldr => Box::new(
                record
                    .and_then(|r| r.signal.clone())
                    .ok_or_else(|| Error::Contract(format!("{strategy} needs a trained signal rule")))?,
            ),
        };
        Ok(Self { vms, signal })
    }
}

/// Everything fixed across the runs of one evaluation.
#[derive(Clone, Copy)]
pub struct RunSetup<'a> {
    pub simulator: &'a Simulator,
    pub config: &'a SimConfig,
    pub profile: &'a ComplianceProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub day: usize,
    pub replication: usize,
    pub mean_travel_time: Option<f64>,
    pub completed: usize,
    pub stranded: usize,
}

/// Runs every `(day, replication)` pair; replication `r` of day `i` uses the
/// sub-seed `seed::derive(seed, i, r)`. Results come back in day-major order
/// whatever the scheduling.
pub fn run_days(
    setup: RunSetup<'_>,
    controllers: &Controllers,
    days: &[DemandDay],
    replications: usize,
    seed: u64,
) -> Result<Vec<RunSummary>> {
    let jobs: Vec<(usize, usize)> = (0..days.len()).flat_map(|d| (0..replications).map(move |r| (d, r))).collect();
    jobs.par_iter()
        .map(|&(d, r)| {
            let config = SimConfig { rng_seed: seed::derive(seed, d, r), ..setup.config.clone() };
            let res = setup
                .simulator
                .run(&days[d], controllers.vms.as_ref(), controllers.signal.as_ref(), setup.profile, &config)
                .map_err(|e| Error::Day { day: d, source: Box::new(e) })?;
            Ok(RunSummary {
                day: d,
                replication: r,
                mean_travel_time: res.mean_travel_time,
                completed: res.completed,
                stranded: res.stranded,
            })
        })
        .collect()
}

/// Per-day result averaged over replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayOutcome {
    pub label: String,
    /// `None` when no run of the day counted any vehicle.
    pub mean_travel_time: Option<f64>,
    pub completed: f64,
}

pub fn evaluate_days(
    setup: RunSetup<'_>,
    controllers: &Controllers,
    days: &[DemandDay],
    replications: usize,
    seed: u64,
) -> Result<Vec<DayOutcome>> {
    if replications == 0 {
        return Err(Error::Contract("need at least one replication".into()));
    }
    let runs = run_days(setup, controllers, days, replications, seed)?;
    Ok(days
        .iter()
        .zip(runs.chunks(replications))
        .map(|(day, runs)| {
            let phis: Vec<f64> = runs.iter().filter_map(|r| r.mean_travel_time).collect();
            DayOutcome {
                label: day.label.clone(),
                mean_travel_time: (!phis.is_empty()).then(|| phis.iter().sum::<f64>() / phis.len() as f64),
                completed: runs.iter().map(|r| r.completed as f64).sum::<f64>() / runs.len() as f64,
            }
        })
        .collect())
}

/// Mean of the defined per-day objectives.
pub fn summarize(days: &[DayOutcome]) -> Option<f64> {
    let phis: Vec<f64> = days.iter().filter_map(|d| d.mean_travel_time).collect();
    (!phis.is_empty()).then(|| phis.iter().sum::<f64>() / phis.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageVolumeRow {
    pub day: String,
    pub step: u32,
    pub message: VmsMessage,
    pub route1_volume: u32,
    pub route2_volume: u32,
}

impl MessageVolumeRow {
    pub fn volume_difference(&self) -> i64 {
        i64::from(self.route1_volume) - i64::from(self.route2_volume)
    }

    /// The message points drivers at the currently busier route.
    pub fn recommends_busier_route(&self) -> bool {
        match self.message.recommended() {
            Some(RouteChoice::Route1) => self.route1_volume > self.route2_volume,
            Some(RouteChoice::Route2) => self.route2_volume > self.route1_volume,
            None => false,
        }
    }
}

/// One replication per day, logging what the sign showed against the route
/// volumes it saw.
pub fn message_volume_log(
    setup: RunSetup<'_>,
    controllers: &Controllers,
    days: &[DemandDay],
    seed: u64,
) -> Result<Vec<MessageVolumeRow>> {
    let per_day: Vec<Vec<MessageVolumeRow>> = days
        .par_iter()
        .enumerate()
        .map(|(d, day)| {
            let config = SimConfig { rng_seed: seed::derive(seed, d, 0), ..setup.config.clone() };
            let res = setup
                .simulator
                .run(day, controllers.vms.as_ref(), controllers.signal.as_ref(), setup.profile, &config)
                .map_err(|e| Error::Day { day: d, source: Box::new(e) })?;
            Ok(res
                .decisions
                .iter()
                .map(|s| MessageVolumeRow {
                    day: day.label.clone(),
                    step: s.step,
                    message: s.message,
                    route1_volume: s.route_volumes.0,
                    route2_volume: s.route_volumes.1,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_day.into_iter().flatten().collect())
}
