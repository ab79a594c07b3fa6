//! Controller interfaces queried by the simulator once per step.

use crate::history::StateHistory;
use crate::signal::SignalPlan;
use crate::vms::VmsMessage;

/// What a controller may look at when deciding for step `step`.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub step: u32,
    /// Normalized occupancies of the previous steps, newest first.
    pub history: &'a StateHistory,
    /// Raw vehicle counts per link at the end of the previous step.
    pub occupancy: &'a [u32],
    /// Vehicles currently on Route 1 and Route 2.
    pub route_volumes: (u32, u32),
}

impl Observation<'_> {
    /// `V_route1 - V_route2`.
    pub fn volume_difference(&self) -> i64 {
        i64::from(self.route_volumes.0) - i64::from(self.route_volumes.1)
    }
}

pub trait VmsController: Sync {
    /// Length of the per-step state vector the controller expects, if it
    /// depends on one.
    fn state_width(&self) -> Option<usize> {
        None
    }

    /// History depth the controller reads.
    fn history_depth(&self) -> usize {
        1
    }

    fn message(&self, obs: &Observation<'_>) -> VmsMessage;
}

pub trait SignalController: Sync {
    fn state_width(&self) -> Option<usize> {
        None
    }

    fn history_depth(&self) -> usize {
        1
    }

    /// Phase counts per signalized intersection the controller was built for.
    fn phase_counts(&self) -> Option<Vec<usize>> {
        None
    }

    fn plan(&self, obs: &Observation<'_>, phase_counts: &[usize]) -> SignalPlan;
}
