//! Particle swarm optimization in its original form: no inertia weight,
//! `v <- v + c1 r1 (P - X) + c2 r2 (G - X)`, positions moved before they are
//! evaluated, bests replaced on strict improvement only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoConfig {
    pub particles: usize,
    pub iterations: usize,
    pub c1: f64,
    pub c2: f64,
    /// Per-coordinate speed limit as a share of the coordinate's init range.
    pub clamp_fraction: f64,
    /// Absolute speed limit; overrides `clamp_fraction` when set.
    #[serde(default)]
    pub velocity_clamp: Option<f64>,
    /// Put the first particle at the origin instead of a random point.
    pub seed_origin: bool,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            particles: 20,
            iterations: 30,
            c1: 2.0,
            c2: 2.0,
            clamp_fraction: 0.2,
            velocity_clamp: None,
            seed_origin: true,
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles < 2 {
            return Err(Error::Config(format!("need at least 2 particles, got {}", self.particles)));
        }
        if self.iterations == 0 {
            return Err(Error::Config("need at least one iteration".into()));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return Err(Error::Config("acceleration coefficients must be positive".into()));
        }
        let clamp_ok = match self.velocity_clamp {
            Some(v) => v > 0.0,
            None => self.clamp_fraction > 0.0,
        };
        if !clamp_ok {
            return Err(Error::Config("velocity clamp must be positive".into()));
        }
        Ok(())
    }

    /// Speed limit for each coordinate of `bounds`.
    pub fn clamps(&self, bounds: &[(f64, f64)]) -> Vec<f64> {
        bounds.iter().map(|(lo, hi)| self.velocity_clamp.unwrap_or(self.clamp_fraction * (hi - lo))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoOutcome {
    pub best: Vec<f64>,
    pub value: f64,
    /// Global best value after each iteration.
    pub trace: Vec<f64>,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
struct Particle {
    x: Vec<f64>,
    v: Vec<f64>,
    best: Vec<f64>,
    best_value: f64,
}

/// Minimizes `objective` starting from a swarm spread uniformly over `bounds`.
///
/// Evaluations within one iteration may run in parallel; best updates and
/// random draws happen sequentially in particle order, so the result does
/// not depend on scheduling.
pub fn pso_minimize<F>(objective: F, bounds: &[(f64, f64)], config: &PsoConfig) -> Result<PsoOutcome>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    pso_minimize_observed(objective, bounds, config, |_, _| {})
}

/// [`pso_minimize`] with a callback `(iteration, positions)` run after each
/// position update.
pub fn pso_minimize_observed<F, O>(
    objective: F,
    bounds: &[(f64, f64)],
    config: &PsoConfig,
    mut observer: O,
) -> Result<PsoOutcome>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
    O: FnMut(usize, &[Vec<f64>]),
{
    config.validate()?;
    if bounds.is_empty() {
        return Err(Error::Contract("empty search space".into()));
    }
    if let Some((lo, hi)) = bounds.iter().find(|(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite()) {
        return Err(Error::Contract(format!("bad init interval [{lo}, {hi}]")));
    }
    let dim = bounds.len();
    let clamps = config.clamps(bounds);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut swarm: Vec<Particle> = (0..config.particles)
        .map(|j| {
            let x: Vec<f64> = if j == 0 && config.seed_origin {
                vec![0.0; dim]
            } else {
                bounds.iter().map(|&(lo, hi)| if hi > lo { rng.random_range(lo..hi) } else { lo }).collect()
            };
            Particle { best: x.clone(), x, v: vec![0.0; dim], best_value: f64::INFINITY }
        })
        .collect();
    let mut g: Vec<f64> = swarm[0].x.clone();
    let mut g_value = f64::INFINITY;
    let mut trace = Vec::with_capacity(config.iterations);
    let mut evaluations = 0;

    for it in 0..config.iterations {
        for p in &mut swarm {
            for (x, v) in p.x.iter_mut().zip(&p.v) {
                *x += v;
            }
        }
        let positions: Vec<Vec<f64>> = swarm.iter().map(|p| p.x.clone()).collect();
        observer(it, &positions);
        let values: Vec<Result<f64>> = positions.par_iter().map(|x| objective(x)).collect();
        evaluations += values.len();

        // Sequential in particle order: particle j's velocity already sees a
        // global best improved by particles before it in the same round.
        for (p, value) in swarm.iter_mut().zip(values) {
            let value = value?;
            if !value.is_finite() {
                return Err(Error::NonFinite { value, position: p.x.clone() });
            }
            if value < p.best_value {
                p.best_value = value;
                p.best.clone_from(&p.x);
                if value < g_value {
                    g_value = value;
                    g.clone_from(&p.x);
                }
            }
            let r1: f64 = rng.random();
            let r2: f64 = rng.random();
            for d in 0..dim {
                let v = p.v[d] + config.c1 * r1 * (p.best[d] - p.x[d]) + config.c2 * r2 * (g[d] - p.x[d]);
                p.v[d] = v.clamp(-clamps[d], clamps[d]);
            }
        }
        trace.push(g_value);
    }
    Ok(PsoOutcome { best: g, value: g_value, trace, evaluations })
}
