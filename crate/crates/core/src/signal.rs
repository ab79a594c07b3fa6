//! Signal controllers: the equal-split default plan and a linear decision
//! rule that turns the occupancy history into per-phase green splits.
//!
//! The rule scores each phase linearly, `s = B . [q(t-1); ...; q(t-delta)]`,
//! then maps the scores onto `{g : g_p >= g_min, sum g = 1}` by shifting to
//! a minimum of one, normalizing, and blending with the minimum green.

use serde::{Deserialize, Serialize};

use crate::control::{Observation, SignalController};
use crate::error::{Error, Result};
use crate::history::StateHistory;

pub const DEFAULT_MIN_GREEN: f64 = 0.1;

/// Green fractions per phase for each signalized intersection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalPlan {
    pub splits: Vec<Vec<f64>>,
}

impl SignalPlan {
    pub fn equal(phase_counts: &[usize]) -> Self {
        Self { splits: phase_counts.iter().map(|&p| default_plan(p)).collect() }
    }

    /// Share of the step during which `phases` of intersection `k` are green.
    pub fn green_fraction(&self, k: usize, phases: &[usize]) -> f64 {
        phases.iter().map(|&p| self.splits[k][p]).sum::<f64>().min(1.0)
    }
}

/// Equal green for every phase.
pub fn default_plan(phase_count: usize) -> Vec<f64> {
    vec![1.0 / phase_count as f64; phase_count]
}

/// Projects raw phase scores onto the min-green simplex.
pub fn project_splits(scores: &[f64], g_min: f64) -> Vec<f64> {
    let n = scores.len();
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        // Uniform (or degenerate) scores project onto the equal split.
        return default_plan(n);
    }
    let shifted: Vec<f64> = scores.iter().map(|s| s - lo + 1.0).collect();
    let total: f64 = shifted.iter().sum();
    if !total.is_finite() {
        return default_plan(n);
    }
    let spare = 1.0 - n as f64 * g_min;
    shifted.iter().map(|s| g_min + spare * (s / total)).collect()
}

/// Per-intersection coefficient matrices, one row per phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdrSignalPolicy {
    pub delta: usize,
    pub g_min: f64,
    /// `matrices[k][p]` holds phase `p`'s weights for intersection `k`,
    /// each of length `link_count * delta`.
    pub matrices: Vec<Vec<Vec<f64>>>,
}

impl LdrSignalPolicy {
    pub fn new(delta: usize, g_min: f64, matrices: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if delta == 0 {
            return Err(Error::Config("history depth must be at least 1".into()));
        }
        let width = matrices
            .iter()
            .flat_map(|m| m.iter())
            .map(Vec::len)
            .next()
            .ok_or_else(|| Error::Config("signal policy has no phases".into()))?;
        if width == 0 || width % delta != 0 {
            return Err(Error::Config(format!("row length {width} does not fit history depth {delta}")));
        }
        for (k, m) in matrices.iter().enumerate() {
            if m.is_empty() {
                return Err(Error::Config(format!("intersection {k} has no phases")));
            }
            if m.iter().any(|row| row.len() != width) {
                return Err(Error::Config(format!("intersection {k} has ragged rows")));
            }
            if !(g_min >= 0.0) || g_min * m.len() as f64 >= 1.0 {
                return Err(Error::Config(format!("minimum green {g_min} infeasible for {} phases", m.len())));
            }
        }
        Ok(Self { delta, g_min, matrices })
    }

    pub fn zero(phase_counts: &[usize], link_count: usize, delta: usize, g_min: f64) -> Self {
        Self { delta, g_min, matrices: phase_counts.iter().map(|&p| vec![vec![0.0; link_count * delta]; p]).collect() }
    }

    pub fn link_count(&self) -> usize {
        self.matrices[0][0].len() / self.delta
    }

    pub fn phase_counts(&self) -> Vec<usize> {
        self.matrices.iter().map(Vec::len).collect()
    }

    pub fn coefficient_count(&self) -> usize {
        self.matrices.iter().map(|m| m.len() * m[0].len()).sum()
    }
}

pub fn ldr_splits(policy: &LdrSignalPolicy, history: &StateHistory) -> Result<SignalPlan> {
    if history.depth() != policy.delta || history.width() != policy.link_count() {
        return Err(Error::Config(format!(
            "signal policy expects {} links x depth {}, history has {} x {}",
            policy.link_count(),
            policy.delta,
            history.width(),
            history.depth()
        )));
    }
    Ok(splits_unchecked(policy, history))
}

fn splits_unchecked(policy: &LdrSignalPolicy, history: &StateHistory) -> SignalPlan {
    let splits = policy
        .matrices
        .iter()
        .map(|rows| {
            let scores: Vec<f64> = rows.iter().map(|row| history.dot(row)).collect();
            project_splits(&scores, policy.g_min)
        })
        .collect();
    SignalPlan { splits }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EqualSplit;

impl SignalController for EqualSplit {
    fn plan(&self, _: &Observation<'_>, phase_counts: &[usize]) -> SignalPlan {
        SignalPlan::equal(phase_counts)
    }
}

impl SignalController for LdrSignalPolicy {
    fn state_width(&self) -> Option<usize> {
        Some(self.link_count())
    }

    fn history_depth(&self) -> usize {
        self.delta
    }

    fn phase_counts(&self) -> Option<Vec<usize>> {
        Some(LdrSignalPolicy::phase_counts(self))
    }

    fn plan(&self, obs: &Observation<'_>, _: &[usize]) -> SignalPlan {
        splits_unchecked(self, obs.history)
    }
}
