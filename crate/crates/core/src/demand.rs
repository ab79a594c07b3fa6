//! Demand days: per-origin entry counts per time step, a generator of
//! synthetic day ensembles, and gap filling for raw counts.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{round_half_up, ZoneId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Synthetic,
    Measured,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OriginCounts {
    pub origin: ZoneId,
    /// Entering vehicles per step; index 0 is step 1.
    pub counts: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemandDay {
    pub label: String,
    pub provenance: Provenance,
    pub origins: Vec<OriginCounts>,
}

impl DemandDay {
    /// Common series length, or an error if origins disagree.
    pub fn horizon(&self) -> Result<usize> {
        let mut lens = self.origins.iter().map(|o| o.counts.len());
        let first = lens.next().unwrap_or(0);
        if lens.any(|l| l != first) {
            return Err(Error::Data(format!("day {}: origins have different lengths", self.label)));
        }
        Ok(first)
    }

    pub fn total(&self) -> u64 {
        self.origins.iter().flat_map(|o| &o.counts).map(|&c| u64::from(c)).sum()
    }

    pub fn counts_for(&self, origin: &str) -> Option<&[u32]> {
        self.origins.iter().find(|o| o.origin == origin).map(|o| o.counts.as_slice())
    }

    /// Every count multiplied by `factor`.
    pub fn scaled(&self, factor: u32) -> Self {
        let mut out = self.clone();
        for o in &mut out.origins {
            for c in &mut o.counts {
                *c *= factor;
            }
        }
        out
    }
}

/// Smooth within-hour rate shape: `rate * (1 + amplitude * cos(2 pi (t / T - peak)))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginRate {
    pub origin: ZoneId,
    /// Mean vehicles per step.
    pub rate: f64,
    #[serde(default)]
    pub amplitude: f64,
    /// Peak position as a fraction of the horizon.
    #[serde(default)]
    pub peak: f64,
}

impl OriginRate {
    pub fn base_rate(&self, step: usize, horizon: usize) -> f64 {
        let phase = 2.0 * PI * (step as f64 / horizon as f64 - self.peak);
        (self.rate * (1.0 + self.amplitude * phase.cos())).max(0.0)
    }
}

/// Generative model: day multiplier `~ LogNormal(-sigma^2 / 2, sigma)` (mean
/// one) shared by all origins, then Poisson counts around the scaled rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandModel {
    pub origins: Vec<OriginRate>,
    pub day_sigma: f64,
}

impl DemandModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.day_sigma >= 0.0) {
            return Err(Error::Data(format!("day sigma must be >= 0, got {}", self.day_sigma)));
        }
        for o in &self.origins {
            if !(o.rate >= 0.0) || !(o.amplitude >= 0.0 && o.amplitude <= 1.0) {
                return Err(Error::Data(format!("origin {}: bad rate profile", o.origin)));
            }
        }
        Ok(())
    }
}

pub fn synthesize_days(model: &DemandModel, n_days: usize, horizon: usize, seed: u64) -> Result<Vec<DemandDay>> {
    if n_days == 0 {
        return Err(Error::Contract("at least one day must be synthesized".into()));
    }
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let multiplier = if model.day_sigma > 0.0 {
        let s = model.day_sigma;
        Some(LogNormal::new(-0.5 * s * s, s).map_err(|e| Error::Data(e.to_string()))?)
    } else {
        None
    };
    let width = n_days.to_string().len().max(2);
    let mut days = Vec::with_capacity(n_days);
    for d in 0..n_days {
        let m = multiplier.map_or(1.0, |dist| dist.sample(&mut rng));
        let origins = model
            .origins
            .iter()
            .map(|o| {
                let counts = (1..=horizon)
                    .map(|t| {
                        let lambda = m * o.base_rate(t, horizon);
                        if lambda > 0.0 {
                            Poisson::new(lambda).map(|p| p.sample(&mut rng) as u32).unwrap_or(0)
                        } else {
                            0
                        }
                    })
                    .collect();
                OriginCounts { origin: o.origin.clone(), counts }
            })
            .collect();
        days.push(DemandDay { label: format!("day-{:0width$}", d + 1), provenance: Provenance::Synthetic, origins });
    }
    Ok(days)
}

/// Largest tolerated share of missing entries per origin.
pub const MAX_GAP_FRACTION: f64 = 0.5;

/// Fills missing entries by linear interpolation between the nearest present
/// neighbours (nearest value at the edges) and rounds half-up.
pub fn fill_series(raw: &[Option<f64>]) -> Result<Vec<u32>> {
    let present: Vec<(usize, f64)> = raw.iter().enumerate().filter_map(|(i, v)| v.map(|v| (i, v))).collect();
    let missing = raw.len() - present.len();
    if raw.is_empty() || missing as f64 > MAX_GAP_FRACTION * raw.len() as f64 {
        return Err(Error::Data(format!("{missing} of {} entries missing", raw.len())));
    }
    if let Some((i, v)) = present.iter().find(|(_, v)| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::Data(format!("entry {i} has invalid count {v}")));
    }
    let mut out = Vec::with_capacity(raw.len());
    let mut next = 0;
    for i in 0..raw.len() {
        while next < present.len() && present[next].0 < i {
            next += 1;
        }
        let value = match (next.checked_sub(1).map(|p| present[p]), present.get(next)) {
            (_, Some(&(j, v))) if j == i => v,
            (Some((a, va)), Some(&(b, vb))) => va + (vb - va) * (i - a) as f64 / (b - a) as f64,
            (Some((_, va)), None) => va,
            (None, Some(&(_, vb))) => vb,
            (None, None) => unreachable!("at least one entry is present"),
        };
        out.push(round_half_up(value) as u32);
    }
    Ok(out)
}

/// Builds a measured day from raw per-origin series with missing markers.
pub fn fill_gaps(label: &str, raw: &[(ZoneId, Vec<Option<f64>>)]) -> Result<DemandDay> {
    let mut origins = Vec::with_capacity(raw.len());
    let mut problems = Vec::new();
    for (origin, series) in raw {
        match fill_series(series) {
            Ok(counts) => origins.push(OriginCounts { origin: origin.clone(), counts }),
            Err(e) => problems.push(format!("origin {origin}: {e}")),
        }
    }
    if !problems.is_empty() {
        return Err(Error::Data(format!("day {label}: gap limit exceeded\n{}", problems.join("\n"))));
    }
    let day = DemandDay { label: label.to_string(), provenance: Provenance::Measured, origins };
    day.horizon()?;
    Ok(day)
}
