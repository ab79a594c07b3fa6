//! Variable message sign control: the five-message display set, the driver
//! compliance model, the linear decision rule controller and the genuine
//! (condition-reflecting) baseline.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::control::{Observation, VmsController};
use crate::error::{Error, Result};
use crate::history::StateHistory;

/// Default projection thresholds `m1 < m2 < m3 < m4`.
pub const DEFAULT_THRESHOLDS: [f64; 4] = [-2.0, -0.5, 0.5, 2.0];

/// Messages in threshold-bin order, left to right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VmsMessage {
    Route1Strong,
    Route1Moderate,
    NoDisplay,
    Route2Moderate,
    Route2Strong,
}

impl VmsMessage {
    pub const ALL: [VmsMessage; 5] = [
        VmsMessage::Route1Strong,
        VmsMessage::Route1Moderate,
        VmsMessage::NoDisplay,
        VmsMessage::Route2Moderate,
        VmsMessage::Route2Strong,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// The same advice for the other route.
    pub fn mirror(self) -> Self {
        Self::ALL[4 - self.index()]
    }

    /// Route the message advises, if any.
    pub fn recommended(self) -> Option<RouteChoice> {
        match self {
            VmsMessage::Route1Strong | VmsMessage::Route1Moderate => Some(RouteChoice::Route1),
            VmsMessage::NoDisplay => None,
            VmsMessage::Route2Moderate | VmsMessage::Route2Strong => Some(RouteChoice::Route2),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VmsMessage::Route1Strong => "route1_strong",
            VmsMessage::Route1Moderate => "route1_moderate",
            VmsMessage::NoDisplay => "no_display",
            VmsMessage::Route2Moderate => "route2_moderate",
            VmsMessage::Route2Strong => "route2_strong",
        }
    }
}

impl fmt::Display for VmsMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VmsMessage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| Error::Data(format!("unknown VMS message {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RouteChoice {
    Route1,
    Route2,
}

impl RouteChoice {
    pub fn index(self) -> usize {
        match self {
            RouteChoice::Route1 => 0,
            RouteChoice::Route2 => 1,
        }
    }
}

/// Probability that a target agent picks Route 1 under each message.
///
/// Written in the conventional ascending form `(c1, ..., c5)`, e.g.
/// `(0.1, 0.3, 0.5, 0.7, 0.9)`; the largest share belongs to
/// [`VmsMessage::Route1Strong`] and the smallest to
/// [`VmsMessage::Route2Strong`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ComplianceProfile {
    ascending: [f64; 5],
}

impl ComplianceProfile {
    pub fn new(ascending: [f64; 5]) -> Result<Self> {
        for c in ascending {
            if !(c > 0.0 && c < 1.0) {
                return Err(Error::Data(format!("compliance rate {c} outside the open interval (0, 1)")));
            }
        }
        if ascending.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Data(format!("compliance rates must be listed in ascending order, got {ascending:?}")));
        }
        Ok(Self { ascending })
    }

    /// The three profiles of the sensitivity study.
    pub fn study_profiles() -> [ComplianceProfile; 3] {
        [
            Self { ascending: [0.3, 0.4, 0.5, 0.6, 0.7] },
            Self { ascending: [0.2, 0.4, 0.5, 0.6, 0.8] },
            Self { ascending: [0.1, 0.3, 0.5, 0.7, 0.9] },
        ]
    }

    pub fn ascending(&self) -> [f64; 5] {
        self.ascending
    }

    /// P(Route 1 | message).
    pub fn route1_share(&self, message: VmsMessage) -> f64 {
        self.ascending[4 - message.index()]
    }

    /// Compact label such as `0.1-0.3-0.5-0.7-0.9`.
    pub fn tag(&self) -> String {
        self.ascending.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("-")
    }
}

impl TryFrom<Vec<f64>> for ComplianceProfile {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        let arr: [f64; 5] =
            v.try_into().map_err(|v: Vec<f64>| Error::Data(format!("expected 5 compliance rates, got {}", v.len())))?;
        Self::new(arr)
    }
}

impl From<ComplianceProfile> for Vec<f64> {
    fn from(p: ComplianceProfile) -> Self {
        p.ascending.to_vec()
    }
}

impl FromStr for ComplianceProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let values = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| Error::Data(format!("bad compliance rate {p:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::try_from(values)
    }
}

impl fmt::Display for ComplianceProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.ascending.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Draws a target agent's route under the displayed message. Consumes
/// exactly one uniform draw.
pub fn choose_route<R: Rng + ?Sized>(message: VmsMessage, profile: &ComplianceProfile, rng: &mut R) -> RouteChoice {
    let u: f64 = rng.random();
    if u < profile.route1_share(message) {
        RouteChoice::Route1
    } else {
        RouteChoice::Route2
    }
}

/// Maps a score onto the five messages through half-open bins
/// `(-inf, m1], (m1, m2], (m2, m3], (m3, m4], (m4, inf)`.
pub fn project(score: f64, thresholds: &[f64; 4]) -> VmsMessage {
    let bin = thresholds.iter().take_while(|&&m| score > m).count();
    VmsMessage::ALL[bin]
}

/// Linear decision rule for the sign: `score = A . [q(t-1); ...; q(t-delta)]`
/// followed by [`project`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdrVmsPolicy {
    pub delta: usize,
    pub thresholds: [f64; 4],
    pub coefficients: Vec<f64>,
}

impl LdrVmsPolicy {
    pub fn new(delta: usize, thresholds: [f64; 4], coefficients: Vec<f64>) -> Result<Self> {
        if delta == 0 {
            return Err(Error::Config("history depth must be at least 1".into()));
        }
        if coefficients.is_empty() || !coefficients.len().is_multiple_of(delta) {
            return Err(Error::Config(format!(
                "{} coefficients cannot cover a history of depth {delta}",
                coefficients.len()
            )));
        }
        if thresholds.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config(format!("thresholds must be strictly increasing, got {thresholds:?}")));
        }
        Ok(Self { delta, thresholds, coefficients })
    }

    /// The no-guidance member of the family: zero weights, default thresholds.
    pub fn zero(link_count: usize, delta: usize) -> Self {
        Self { delta, thresholds: DEFAULT_THRESHOLDS, coefficients: vec![0.0; link_count * delta] }
    }

    pub fn link_count(&self) -> usize {
        self.coefficients.len() / self.delta
    }
}

pub fn ldr_score(policy: &LdrVmsPolicy, history: &StateHistory) -> Result<f64> {
    if history.depth() != policy.delta || history.width() * policy.delta != policy.coefficients.len() {
        return Err(Error::Config(format!(
            "policy expects {} links x depth {}, history has {} x {}",
            policy.link_count(),
            policy.delta,
            history.width(),
            history.depth()
        )));
    }
    Ok(history.dot(&policy.coefficients))
}

impl VmsController for LdrVmsPolicy {
    fn state_width(&self) -> Option<usize> {
        Some(self.link_count())
    }

    fn history_depth(&self) -> usize {
        self.delta
    }

    fn message(&self, obs: &Observation<'_>) -> VmsMessage {
        project(obs.history.dot(&self.coefficients), &self.thresholds)
    }
}

/// Volume-difference bands of the genuine display, in vehicles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenuineBands {
    /// `|d| <= moderate` shows nothing.
    pub moderate: f64,
    /// `|d| > strong` gives strong advice.
    pub strong: f64,
}

impl Default for GenuineBands {
    fn default() -> Self {
        Self { moderate: 10.0, strong: 30.0 }
    }
}

/// Recommends the emptier route given `d = V_route1 - V_route2`.
pub fn genuine_message(volume_difference: f64, bands: &GenuineBands) -> VmsMessage {
    let d = volume_difference;
    if d > bands.strong {
        VmsMessage::Route2Strong
    } else if d > bands.moderate {
        VmsMessage::Route2Moderate
    } else if d >= -bands.moderate {
        VmsMessage::NoDisplay
    } else if d >= -bands.strong {
        VmsMessage::Route1Moderate
    } else {
        VmsMessage::Route1Strong
    }
}

/// Sum of current occupancy over each route's links.
pub fn route_volumes(occupancy: &[u32], routes: &[Vec<usize>; 2]) -> (u32, u32) {
    let sum = |r: &Vec<usize>| r.iter().map(|&l| occupancy[l]).sum();
    (sum(&routes[0]), sum(&routes[1]))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GenuineDisplay {
    pub bands: GenuineBands,
}

impl VmsController for GenuineDisplay {
    fn message(&self, obs: &Observation<'_>) -> VmsMessage {
        genuine_message(obs.volume_difference() as f64, &self.bands)
    }
}

/// Shows the same message every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedDisplay(pub VmsMessage);

impl Default for FixedDisplay {
    fn default() -> Self {
        Self(VmsMessage::NoDisplay)
    }
}

impl VmsController for FixedDisplay {
    fn message(&self, _: &Observation<'_>) -> VmsMessage {
        self.0
    }
}

/// Open-loop schedule: message `i` is shown at step `i + 1`; the last entry
/// repeats past the end.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledDisplay(pub Vec<VmsMessage>);

impl VmsController for ScheduledDisplay {
    fn message(&self, obs: &Observation<'_>) -> VmsMessage {
        let i = (obs.step as usize).saturating_sub(1).min(self.0.len().saturating_sub(1));
        self.0.get(i).copied().unwrap_or(VmsMessage::NoDisplay)
    }
}
