//! Mesoscopic agent-based traffic simulation with pluggable variable message
//! sign (VMS) and signal controllers, and an offline trainer that fits
//! linear-decision-rule controllers by particle swarm optimization over
//! Monte-Carlo samples of demand days.
//!
//! The main entry points:
//!
//! - [`Network`] and [`Simulator`] load a road network and run one demand day
//!   under a pair of controllers, returning a [`SimResult`] whose
//!   `mean_travel_time` is the objective.
//! - [`vms`] and [`signal`] hold the controllers: genuine and linear-rule
//!   sign displays, equal-split and linear-rule signal plans.
//! - [`trainer`] estimates the expected objective of a decision vector and
//!   minimizes it with [`trainer::pso_minimize`].
//! - [`scenario`] reads and writes scenario bundles and policy records, and
//!   ships the bundled synthetic scenario.

// `!(x >= 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod demand;
pub mod error;
pub mod experiment;
pub mod history;
pub mod network;
pub mod scenario;
pub mod seed;
pub mod signal;
pub mod sim;
pub mod trainer;
pub mod vms;

pub use control::{Observation, SignalController, VmsController};
pub use demand::{DemandDay, DemandModel, Provenance};
pub use error::{Error, Result};
pub use history::StateHistory;
pub use network::{Link, Network, NetworkIndex, ValidationReport};
pub use scenario::ScenarioBundle;
pub use signal::{EqualSplit, LdrSignalPolicy, SignalPlan};
pub use sim::{SimConfig, SimResult, Simulator};
pub use vms::{ComplianceProfile, GenuineBands, GenuineDisplay, LdrVmsPolicy, VmsMessage};
