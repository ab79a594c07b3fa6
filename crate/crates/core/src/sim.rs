//! Discrete-time agent-based network loading.
//!
//! Each step `t = 1..=T` runs, in order:
//!
//! 1. build the observation from the states of steps `t-1 ... t-delta`;
//! 2. query the VMS and signal controllers;
//! 3. inject the step's agents (background first, then target, per origin
//!    in zone order) onto their origin's entry link;
//! 4. discharge every link's exit queue under its green-scaled capacity and
//!    move the discharged agents onward;
//! 5. record `q(t)` and advance the clock.
//!
//! An agent entering link `l` at step `t` is scheduled to leave at
//! `t + D_l(X_l(t))`, clamped to be no earlier than the latest exit already
//! scheduled on `l`, so vehicles never overtake on a link.
//!
//! The run RNG is consumed in a fixed order within a step: one Bernoulli
//! draw per influenced origin whose target count has a fractional part
//! (origins in zone order), one route draw per new target agent (agent id
//! order), then one turn draw per discharged background agent at a
//! branching node (agent id order).

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::{Observation, SignalController, VmsController};
use crate::demand::DemandDay;
use crate::error::{Error, Result};
use crate::history::StateHistory;
use crate::network::{link_travel_time, Network, NetworkIndex, NextHop};
use crate::signal::SignalPlan;
use crate::vms::{choose_route, route_volumes, ComplianceProfile, RouteChoice, VmsMessage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Number of steps `T`.
    pub horizon: u32,
    /// Seconds per step.
    pub step_length: f64,
    /// Agents entering at or before this step are left out of the objective.
    pub warmup_steps: u32,
    pub rng_seed: u64,
    /// Target agents per background agent on influenced origins.
    pub target_share: f64,
    /// Minimum number of steps a message stays up once shown.
    #[serde(default)]
    pub min_dwell_steps: u32,
    /// Keep the per-step occupancy vectors in the result.
    #[serde(default)]
    pub record_trace: bool,
    /// Keep every link entry and exit in the result.
    #[serde(default)]
    pub record_link_log: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            horizon: 60,
            step_length: 60.0,
            warmup_steps: 5,
            rng_seed: 0,
            target_share: 0.8,
            min_dwell_steps: 0,
            record_trace: false,
            record_link_log: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, delta: usize) -> Result<()> {
        if (self.horizon as usize) < delta + 1 {
            return Err(Error::Config(format!("horizon {} must exceed the history depth {delta}", self.horizon)));
        }
        if !(self.step_length > 0.0) {
            return Err(Error::Config("step length must be positive".into()));
        }
        if !(self.target_share >= 0.0) || !self.target_share.is_finite() {
            return Err(Error::Config("target share must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Background,
    Target,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: u32,
    pub kind: AgentKind,
    pub origin: String,
    /// Known at entry for target agents; for background agents, the zone
    /// they left through, if any.
    pub destination: Option<String>,
    pub route: Option<RouteChoice>,
    pub entry_step: u32,
    /// `None` if still in the network at the horizon.
    pub exit_step: Option<u32>,
    /// Seconds spent in the network, up to the horizon for stranded agents.
    pub travel_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDecision {
    pub step: u32,
    pub message: VmsMessage,
    pub splits: Vec<Vec<f64>>,
    /// `(V_route1, V_route2)` seen when deciding.
    pub route_volumes: (u32, u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkEvent {
    pub agent: u32,
    pub link: u32,
    pub entered: u32,
    pub scheduled_exit: u32,
    pub left: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    /// Objective: mean seconds per counted agent, `None` if nobody counted.
    pub mean_travel_time: Option<f64>,
    pub agents: Vec<Agent>,
    pub decisions: Vec<StepDecision>,
    pub completed: usize,
    pub stranded: usize,
    /// Occupancy per link at the end of each step, when recorded.
    pub trace: Vec<Vec<u32>>,
    pub link_log: Vec<LinkEvent>,
}

impl SimResult {
    pub fn per_step_route_volumes(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.decisions.iter().map(|d| d.route_volumes)
    }
}

/// Snapshot handed to a step observer after each step.
#[derive(Debug)]
pub struct SimState<'a> {
    pub step: u32,
    pub occupancy: &'a [u32],
    pub created: usize,
    pub completed: usize,
    /// Agents still due to enter on later steps.
    pub not_yet_injected: u64,
    pub message: VmsMessage,
    pub plan: &'a SignalPlan,
}

impl SimState<'_> {
    pub fn in_network(&self) -> usize {
        self.occupancy.iter().map(|&x| x as usize).sum()
    }
}

#[derive(Debug, Clone)]
struct Live {
    kind: AgentKind,
    origin: u32,
    destination: Option<u32>,
    route: Option<RouteChoice>,
    /// Index into the path table for target agents.
    path: u32,
    pos: u32,
    link: u32,
    entry: u32,
    exit: Option<u32>,
    log_slot: u32,
}

const NO_PATH: u32 = u32::MAX;

/// A validated network ready to run many simulations.
#[derive(Debug, Clone)]
pub struct Simulator {
    network: Network,
    index: NetworkIndex,
    /// Per origin zone and route choice and destination slot: full link path.
    paths: Vec<Vec<usize>>,
    path_of: Vec<[Vec<u32>; 2]>,
}

impl Simulator {
    pub fn new(network: &Network) -> Result<Self> {
        let index = NetworkIndex::new(network)?;
        let mut paths = Vec::new();
        let mut path_of = Vec::with_capacity(index.zone_ids.len());
        for (o, dests) in index.influenced.iter().enumerate() {
            let mut by_route: [Vec<u32>; 2] = [Vec::new(), Vec::new()];
            if let Some(entry) = index.zone_entry[o] {
                for (r, slots) in by_route.iter_mut().enumerate() {
                    for &d in dests {
                        let exit = network.zones[d]
                            .exit_link
                            .as_deref()
                            .and_then(|id| index.link_ids.iter().position(|l| l == id))
                            .ok_or_else(|| Error::Data(format!("zone {} has no exit link", index.zone_ids[d])))?;
                        let mut path = vec![entry];
                        path.extend_from_slice(&index.choice_routes[r]);
                        path.push(exit);
                        slots.push(paths.len() as u32);
                        paths.push(path);
                    }
                }
            }
            path_of.push(by_route);
        }
        Ok(Self { network: network.clone(), index, paths, path_of })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn index(&self) -> &NetworkIndex {
        &self.index
    }

    fn check_controllers(
        &self,
        vms: &dyn VmsController,
        signal: &dyn SignalController,
        config: &SimConfig,
    ) -> Result<usize> {
        let links = self.index.link_count();
        for (who, width) in [("vms", vms.state_width()), ("signal", signal.state_width())] {
            if let Some(w) = width {
                if w != links {
                    return Err(Error::Config(format!("{who} controller expects {w} links, network has {links}")));
                }
            }
        }
        if let Some(counts) = signal.phase_counts() {
            if counts != self.index.phase_counts {
                return Err(Error::Config(format!(
                    "signal controller phases {counts:?} do not match network {:?}",
                    self.index.phase_counts
                )));
            }
        }
        let delta = vms.history_depth().max(signal.history_depth()).max(1);
        config.validate(delta)?;
        Ok(delta)
    }

    /// Maps the day's origins onto zone indices; one count series per zone.
    fn demand_table(&self, day: &DemandDay, horizon: usize) -> Result<Vec<Option<Vec<u32>>>> {
        let mut table = vec![None; self.index.zone_ids.len()];
        for o in &day.origins {
            let z = self
                .index
                .zone_index(&o.origin)
                .ok_or_else(|| Error::Data(format!("demand references unknown zone {}", o.origin)))?;
            if self.index.zone_entry[z].is_none() {
                return Err(Error::Data(format!("zone {} has no entry link", o.origin)));
            }
            if o.counts.len() < horizon {
                return Err(Error::Data(format!(
                    "day {}: origin {} has {} steps, horizon is {horizon}",
                    day.label,
                    o.origin,
                    o.counts.len()
                )));
            }
            table[z] = Some(o.counts[..horizon].to_vec());
        }
        Ok(table)
    }

    pub fn run(
        &self,
        day: &DemandDay,
        vms: &dyn VmsController,
        signal: &dyn SignalController,
        profile: &ComplianceProfile,
        config: &SimConfig,
    ) -> Result<SimResult> {
        self.run_observed(day, vms, signal, profile, config, |_| {})
    }

    /// [`run`](Self::run) with a callback after every step.
    pub fn run_observed(
        &self,
        day: &DemandDay,
        vms: &dyn VmsController,
        signal: &dyn SignalController,
        profile: &ComplianceProfile,
        config: &SimConfig,
        mut observer: impl FnMut(&SimState<'_>),
    ) -> Result<SimResult> {
        let delta = self.check_controllers(vms, signal, config)?;
        let horizon = config.horizon;
        let demand = self.demand_table(day, horizon as usize)?;
        let ix = &self.index;
        let n_links = ix.link_count();

        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let mut queues: Vec<ExitQueue> = vec![ExitQueue::default(); n_links];
        let mut last_exit = vec![0u32; n_links];
        let mut occupancy = vec![0u32; n_links];
        let mut history = StateHistory::new(delta, n_links);
        let mut agents: Vec<Live> = Vec::new();
        let mut decisions = Vec::with_capacity(horizon as usize);
        let mut trace = Vec::new();
        let mut link_log: Vec<LinkEvent> = Vec::new();
        let mut completed = 0usize;
        let mut moved: Vec<(u32, u32)> = Vec::new();
        let mut shown: Option<(VmsMessage, u32)> = None;
        let mut remaining: u64 = demand.iter().flatten().flat_map(|c| c.iter()).map(|&c| u64::from(c)).sum();

        let mut enter = |agents: &mut Vec<Live>,
                         queues: &mut [ExitQueue],
                         link_log: &mut Vec<LinkEvent>,
                         id: u32,
                         link: usize,
                         t: u32| {
            let x = queues[link].len() as f64;
            let d = link_travel_time(ix.alpha[link], ix.beta[link], x).expect("occupancy is a count");
            let sched = (t + d).max(last_exit[link]);
            last_exit[link] = sched;
            queues[link].push(sched, id);
            let a = &mut agents[id as usize];
            a.link = link as u32;
            if config.record_link_log {
                a.log_slot = link_log.len() as u32;
                link_log.push(LinkEvent {
                    agent: id,
                    link: link as u32,
                    entered: t,
                    scheduled_exit: sched,
                    left: None,
                });
            }
        };

        for t in 1..=horizon {
            // 1-2: observe and decide.
            let volumes = route_volumes(&occupancy, &ix.choice_routes);
            let obs = Observation { step: t, history: &history, occupancy: &occupancy, route_volumes: volumes };
            let proposed = vms.message(&obs);
            let message = match shown {
                Some((m, since)) if m != proposed && t - since < config.min_dwell_steps => m,
                Some((m, since)) if m == proposed => {
                    shown = Some((m, since));
                    m
                }
                _ => {
                    shown = Some((proposed, t));
                    proposed
                }
            };
            let plan = signal.plan(&obs, &ix.phase_counts);

            // 3: injection.
            let first_new = agents.len();
            remaining -= self.inject_into(&demand, t, message, profile, config.target_share, &mut rng, &mut agents);
            for id in first_new..agents.len() {
                let entry = ix.zone_entry[agents[id].origin as usize].expect("checked in demand table");
                enter(&mut agents, &mut queues, &mut link_log, id as u32, entry, t);
            }

            // 4: discharge.
            moved.clear();
            for (link, queue) in queues.iter_mut().enumerate() {
                let green = match &ix.signal_of[link] {
                    Some((k, phases)) => plan.green_fraction(*k, phases),
                    None => 1.0,
                };
                queue.discharge_into(green, ix.capacity[link], t, link as u32, &mut moved);
            }
            moved.sort_unstable();
            for &(id, from) in &moved {
                let from = from as usize;
                let slot = agents[id as usize].log_slot;
                if config.record_link_log {
                    link_log[slot as usize].left = Some(t);
                }
                let a = &agents[id as usize];
                let next = if a.path != NO_PATH {
                    self.paths[a.path as usize].get(a.pos as usize + 1).copied()
                } else {
                    match &ix.next[from] {
                        NextHop::Exit => None,
                        NextHop::Only(j) => Some(*j),
                        NextHop::Turn(table) => {
                            let u: f64 = rng.random();
                            table.iter().find(|(cum, _)| u < *cum).map(|(_, j)| *j)
                        }
                    }
                };
                match next {
                    Some(j) => {
                        agents[id as usize].pos += 1;
                        enter(&mut agents, &mut queues, &mut link_log, id, j, t);
                    }
                    None => {
                        let a = &mut agents[id as usize];
                        a.exit = Some(t);
                        if a.kind == AgentKind::Background {
                            a.destination = ix.exit_zone[from].map(|z| z as u32);
                        }
                        completed += 1;
                    }
                }
            }

            // 5: record.
            for (o, q) in occupancy.iter_mut().zip(&queues) {
                *o = q.len() as u32;
            }
            history.push(occupancy.iter().zip(&ix.inv_reference).map(|(&x, r)| f64::from(x) * r).collect());
            if config.record_trace {
                trace.push(occupancy.clone());
            }
            observer(&SimState {
                step: t,
                occupancy: &occupancy,
                created: agents.len(),
                completed,
                not_yet_injected: remaining,
                message,
                plan: &plan,
            });
            decisions.push(StepDecision { step: t, message, splits: plan.splits, route_volumes: volumes });
        }

        Ok(self.finish(agents, decisions, completed, trace, link_log, config))
    }

    /// Creates the agents entering at step `t` and draws target routes.
    /// Returns the number of background agents created.
    #[allow(clippy::too_many_arguments)]
    fn inject_into(
        &self,
        demand: &[Option<Vec<u32>>],
        t: u32,
        message: VmsMessage,
        profile: &ComplianceProfile,
        target_share: f64,
        rng: &mut ChaCha8Rng,
        agents: &mut Vec<Live>,
    ) -> u64 {
        let ix = &self.index;
        let first_new = agents.len();
        let mut background = 0u64;
        for (z, series) in demand.iter().enumerate() {
            let Some(series) = series else { continue };
            let n = series[(t - 1) as usize];
            background += u64::from(n);
            let mut targets = 0;
            if !ix.influenced[z].is_empty() {
                let x = target_share * f64::from(n);
                let whole = x.floor();
                let frac = x - whole;
                targets = whole as u32;
                if frac > 1e-12 && rng.random::<f64>() < frac {
                    targets += 1;
                }
            }
            for k in 0..n + targets {
                let kind = if k < n { AgentKind::Background } else { AgentKind::Target };
                agents.push(Live {
                    kind,
                    origin: z as u32,
                    destination: None,
                    route: None,
                    path: NO_PATH,
                    pos: 0,
                    link: 0,
                    entry: t,
                    exit: None,
                    log_slot: u32::MAX,
                });
            }
        }
        for (id, a) in agents.iter_mut().enumerate().skip(first_new) {
            if a.kind != AgentKind::Target {
                continue;
            }
            let z = a.origin as usize;
            let route = choose_route(message, profile, rng);
            let dests = &ix.influenced[z];
            let slot = id % dests.len();
            a.route = Some(route);
            a.destination = Some(dests[slot] as u32);
            a.path = self.path_of[z][route.index()][slot];
        }
        background
    }

    /// The agents a day injects at `step`, numbered from `first_id`, with
    /// target routes drawn under `message`.
    #[allow(clippy::too_many_arguments)]
    pub fn inject_agents(
        &self,
        day: &DemandDay,
        step: u32,
        message: VmsMessage,
        profile: &ComplianceProfile,
        target_share: f64,
        first_id: u32,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Agent>> {
        let horizon = day.horizon()?;
        if step == 0 || step as usize > horizon {
            return Err(Error::Contract(format!("step {step} outside 1..={horizon}")));
        }
        let demand = self.demand_table(day, horizon)?;
        let mut live = Vec::new();
        self.inject_into(&demand, step, message, profile, target_share, rng, &mut live);
        let ix = &self.index;
        Ok(live
            .into_iter()
            .enumerate()
            .map(|(i, a)| Agent {
                id: first_id + i as u32,
                kind: a.kind,
                origin: ix.zone_ids[a.origin as usize].clone(),
                destination: a.destination.map(|z| ix.zone_ids[z as usize].clone()),
                route: a.route,
                entry_step: step,
                exit_step: None,
                travel_time: 0.0,
            })
            .collect())
    }

    fn finish(
        &self,
        live: Vec<Live>,
        decisions: Vec<StepDecision>,
        completed: usize,
        trace: Vec<Vec<u32>>,
        link_log: Vec<LinkEvent>,
        config: &SimConfig,
    ) -> SimResult {
        let ix = &self.index;
        let end = config.horizon + 1;
        let mut total = 0.0;
        let mut counted = 0usize;
        let agents: Vec<Agent> = live
            .into_iter()
            .enumerate()
            .map(|(id, a)| {
                let steps = a.exit.unwrap_or(end) - a.entry;
                let travel_time = f64::from(steps) * config.step_length;
                if a.entry > config.warmup_steps {
                    total += travel_time;
                    counted += 1;
                }
                Agent {
                    id: id as u32,
                    kind: a.kind,
                    origin: ix.zone_ids[a.origin as usize].clone(),
                    destination: a.destination.map(|z| ix.zone_ids[z as usize].clone()),
                    route: a.route,
                    entry_step: a.entry,
                    exit_step: a.exit,
                    travel_time,
                }
            })
            .collect();
        let stranded = agents.len() - completed;
        SimResult {
            mean_travel_time: (counted > 0).then(|| total / counted as f64),
            agents,
            decisions,
            completed,
            stranded,
            trace,
            link_log,
        }
    }
}

/// Agents on one link keyed by `(scheduled exit step, agent id)`.
#[derive(Debug, Clone, Default)]
pub struct ExitQueue {
    heap: BinaryHeap<Reverse<(u32, u32)>>,
}

impl ExitQueue {
    pub fn push(&mut self, scheduled_exit: u32, agent: u32) {
        self.heap.push(Reverse((scheduled_exit, agent)));
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Releases up to [`discharge_limit`] agents whose scheduled exit is at or
    /// before `step`, earliest schedule first, ties by agent id. Returns the
    /// released agent ids; the rest stay queued.
    pub fn discharge(&mut self, green_fraction: f64, capacity: f64, step: u32) -> Vec<u32> {
        let mut out = Vec::new();
        self.discharge_into(green_fraction, capacity, step, 0, &mut out);
        out.into_iter().map(|(id, _)| id).collect()
    }

    fn discharge_into(&mut self, green: f64, capacity: f64, step: u32, link: u32, out: &mut Vec<(u32, u32)>) {
        let limit = discharge_limit(green, capacity);
        let mut released = 0;
        while released < limit {
            match self.heap.peek() {
                Some(Reverse((sched, id))) if *sched <= step => {
                    out.push((*id, link));
                    self.heap.pop();
                    released += 1;
                }
                _ => break,
            }
        }
    }
}

/// Vehicles a link may release in one step: `ceil(green * capacity)`.
pub fn discharge_limit(green: f64, capacity: f64) -> usize {
    // Splits come out of floating-point projections; shave rounding noise
    // before taking the ceiling.
    let x = green.clamp(0.0, 1.0) * capacity - 1e-9;
    if x <= 0.0 {
        0
    } else {
        x.ceil() as usize
    }
}

/// One-shot convenience wrapper around [`Simulator`].
pub fn run(
    network: &Network,
    day: &DemandDay,
    vms: &dyn VmsController,
    signal: &dyn SignalController,
    profile: &ComplianceProfile,
    config: &SimConfig,
) -> Result<SimResult> {
    Simulator::new(network)?.run(day, vms, signal, profile, config)
}
