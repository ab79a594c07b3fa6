//! Static road network: links with occupancy-based delay, signalized
//! intersections, alternative routes, zones and the VMS placement.
//!
//! A [`Network`] is plain data with string identifiers so it serializes
//! cleanly into scenario files. The simulator works on the dense
//! [`NetworkIndex`] built from it once per run.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type LinkId = String;
pub type NodeId = String;
pub type ZoneId = String;
pub type RouteId = String;

/// Tolerance for probability vectors summing to one.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub id: LinkId,
    pub from: NodeId,
    pub to: NodeId,
    /// Delay slope in steps per vehicle on the link.
    pub alpha: f64,
    /// Free-flow traversal time in steps.
    pub beta: f64,
    /// Vehicles discharged per step at full green.
    pub capacity_per_step: f64,
}

impl Link {
    /// Entry-time traversal time in whole steps for an agent entering while
    /// `occupancy` vehicles are on the link: `alpha * occupancy + beta`,
    /// rounded half-up, never below one step.
    pub fn travel_time(&self, occupancy: f64) -> Result<u32> {
        link_travel_time(self.alpha, self.beta, occupancy)
    }

    /// Occupancy used to scale the link's state into decision rules.
    pub fn reference_occupancy(&self) -> f64 {
        self.capacity_per_step * self.beta
    }
}

/// Delay function shared by [`Link::travel_time`] and the simulator's hot loop.
pub fn link_travel_time(alpha: f64, beta: f64, occupancy: f64) -> Result<u32> {
    if !(occupancy >= 0.0) {
        return Err(Error::Contract(format!("link occupancy must be non-negative, got {occupancy}")));
    }
    let raw = alpha * occupancy + beta;
    Ok(round_half_up(raw).max(1.0) as u32)
}

pub(crate) fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// A set of movements that share green time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    /// `(incoming link, outgoing link)` pairs released by this phase.
    pub movements: Vec<(LinkId, LinkId)>,
}

/// Probability of leaving `from` onto each outgoing link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurningRow {
    pub from: LinkId,
    pub to: Vec<(LinkId, f64)>,
}

/// A junction. With no phases it is unsignalized and every approach sees
/// full green; turning rows still route background traffic through it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intersection {
    pub node: NodeId,
    #[serde(default)]
    pub phases: Vec<Phase>,
    #[serde(default)]
    pub turning: Vec<TurningRow>,
}

impl Intersection {
    pub fn is_signalized(&self) -> bool {
        !self.phases.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub id: RouteId,
    pub links: Vec<LinkId>,
}

/// Traffic source and/or sink. Agents from an origin enter on `entry_link`;
/// background agents leaving the network over `exit_link` arrive here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: ZoneId,
    #[serde(default)]
    pub entry_link: Option<LinkId>,
    #[serde(default)]
    pub exit_link: Option<LinkId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmsPlacement {
    pub visible_from_links: Vec<LinkId>,
    pub influenced_od_pairs: Vec<(ZoneId, ZoneId)>,
    /// Route 1 and Route 2, in that order.
    pub choice_routes: (RouteId, RouteId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub links: Vec<Link>,
    pub intersections: Vec<Intersection>,
    pub routes: Vec<Route>,
    pub zones: Vec<Zone>,
    pub od_pairs: Vec<(ZoneId, ZoneId)>,
    pub vms: VmsPlacement,
}

/// One invariant violation found by [`Network::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Identifier of the offending element, e.g. `intersection I1 link 7`.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, subject: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation { subject: subject.into(), message: message.into() });
    }

    pub fn mentions(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.subject.contains(needle))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

impl Network {
    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn link(&self, id: &str) -> Option<&Link> {
        self.links.iter().find(|l| l.id == id)
    }

    pub fn route(&self, id: &str) -> Option<&Route> {
        self.routes.iter().find(|r| r.id == id)
    }

    pub fn zone(&self, id: &str) -> Option<&Zone> {
        self.zones.iter().find(|z| z.id == id)
    }

    pub fn signalized_intersections(&self) -> impl Iterator<Item = &Intersection> {
        self.intersections.iter().filter(|i| i.is_signalized())
    }

    /// Checks every structural invariant. Violations are returned as data.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut link_ids = BTreeSet::new();
        for link in &self.links {
            if !link_ids.insert(link.id.as_str()) {
                report.push(format!("link {}", link.id), "duplicate link id");
            }
            if !(link.alpha >= 0.0) || !link.alpha.is_finite() {
                report.push(format!("link {}", link.id), "alpha must be finite and >= 0");
            }
            if !(link.beta >= 1.0) || !link.beta.is_finite() {
                report.push(format!("link {}", link.id), "beta must be >= 1 step");
            }
            if !(link.capacity_per_step >= 1.0) || !link.capacity_per_step.is_finite() {
                report.push(format!("link {}", link.id), "capacity_per_step must be >= 1");
            }
        }
        let known = |id: &str| link_ids.contains(id);
        let by_id: BTreeMap<&str, &Link> = self.links.iter().map(|l| (l.id.as_str(), l)).collect();

        let mut nodes = BTreeSet::new();
        for inter in &self.intersections {
            let subject = format!("intersection {}", inter.node);
            if !nodes.insert(inter.node.as_str()) {
                report.push(&subject, "duplicate intersection node");
            }
            for (p, phase) in inter.phases.iter().enumerate() {
                for (from, to) in &phase.movements {
                    for id in [from, to] {
                        if !known(id) {
                            report.push(format!("{subject} phase {p}"), format!("unknown link {id}"));
                        }
                    }
                    if let (Some(a), Some(b)) = (by_id.get(from.as_str()), by_id.get(to.as_str())) {
                        if a.to != inter.node || b.from != inter.node {
                            report.push(
                                format!("{subject} phase {p}"),
                                format!("movement {from}->{to} does not pass through the node"),
                            );
                        }
                    }
                }
            }
            let mut rows = BTreeSet::new();
            for row in &inter.turning {
                let row_subject = format!("{subject} link {}", row.from);
                if !rows.insert(row.from.as_str()) {
                    report.push(&row_subject, "duplicate turning row");
                }
                match by_id.get(row.from.as_str()) {
                    None => report.push(&row_subject, "unknown incoming link"),
                    Some(l) if l.to != inter.node => {
                        report.push(&row_subject, "incoming link does not end at the node")
                    }
                    _ => {}
                }
                let mut sum = 0.0;
                for (to, p) in &row.to {
                    match by_id.get(to.as_str()) {
                        None => report.push(&row_subject, format!("unknown outgoing link {to}")),
                        Some(l) if l.from != inter.node => {
                            report.push(&row_subject, format!("outgoing link {to} does not start at the node"))
                        }
                        _ => {}
                    }
                    if !(*p >= 0.0) {
                        report.push(&row_subject, format!("negative probability toward {to}"));
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
                    report.push(&row_subject, format!("turning probabilities sum to {sum:.6}, expected 1"));
                }
            }
        }

        let mut route_ids = BTreeSet::new();
        for route in &self.routes {
            let subject = format!("route {}", route.id);
            if !route_ids.insert(route.id.as_str()) {
                report.push(&subject, "duplicate route id");
            }
            if route.links.is_empty() {
                report.push(&subject, "route has no links");
            }
            let mut seen = BTreeSet::new();
            for id in &route.links {
                if !known(id) {
                    report.push(&subject, format!("unknown link {id}"));
                }
                if !seen.insert(id.as_str()) {
                    report.push(&subject, format!("link {id} repeated"));
                }
            }
            for pair in route.links.windows(2) {
                if let (Some(a), Some(b)) = (by_id.get(pair[0].as_str()), by_id.get(pair[1].as_str())) {
                    if a.to != b.from {
                        report.push(&subject, format!("links {} and {} are not consecutive", a.id, b.id));
                    }
                }
            }
        }

        let mut zone_ids = BTreeSet::new();
        for zone in &self.zones {
            let subject = format!("zone {}", zone.id);
            if !zone_ids.insert(zone.id.as_str()) {
                report.push(&subject, "duplicate zone id");
            }
            for id in zone.entry_link.iter().chain(zone.exit_link.iter()) {
                if !known(id) {
                    report.push(&subject, format!("unknown link {id}"));
                }
            }
        }
        for (o, d) in &self.od_pairs {
            let subject = format!("od pair ({o},{d})");
            match self.zone(o) {
                Some(z) if z.entry_link.is_some() => {}
                _ => report.push(&subject, format!("origin {o} is not a zone with an entry link")),
            }
            match self.zone(d) {
                Some(z) if z.exit_link.is_some() => {}
                _ => report.push(&subject, format!("destination {d} is not a zone with an exit link")),
            }
        }

        self.validate_vms(&mut report, &by_id);
        self.validate_branching(&mut report);
        self.validate_connectivity(&mut report, &by_id);
        report
    }

    fn validate_vms(&self, report: &mut ValidationReport, by_id: &BTreeMap<&str, &Link>) {
        let vms = &self.vms;
        for id in &vms.visible_from_links {
            if !by_id.contains_key(id.as_str()) {
                report.push("vms", format!("visible-from link {id} does not exist"));
            }
        }
        let (r1, r2) = &vms.choice_routes;
        let routes = [self.route(r1), self.route(r2)];
        for (id, route) in [r1, r2].into_iter().zip(routes) {
            if route.is_none() {
                report.push("vms", format!("choice route {id} does not exist"));
            }
        }
        let start = |r: &Route| r.links.first().and_then(|l| by_id.get(l.as_str())).map(|l| l.from.clone());
        let end = |r: &Route| r.links.last().and_then(|l| by_id.get(l.as_str())).map(|l| l.to.clone());
        if let [Some(a), Some(b)] = routes {
            if start(a) != start(b) || end(a) != end(b) {
                report.push("vms", "choice routes must share start and end nodes");
            }
        }
        for (o, d) in &vms.influenced_od_pairs {
            let subject = format!("vms od pair ({o},{d})");
            if !self.od_pairs.iter().any(|(a, b)| a == o && b == d) {
                report.push(&subject, "not among the network's od pairs");
            }
            if let Some(entry) = self.zone(o).and_then(|z| z.entry_link.as_ref()) {
                if !vms.visible_from_links.contains(entry) {
                    report.push(&subject, format!("origin entry link {entry} cannot see the sign"));
                }
                if let (Some(first), Some(link)) = (routes[0].and_then(start), by_id.get(entry.as_str())) {
                    if link.to != first {
                        report.push(&subject, "origin entry link does not lead to the choice routes");
                    }
                }
            }
            if let Some(exit) = self.zone(d).and_then(|z| z.exit_link.as_ref()) {
                if let (Some(last), Some(link)) = (routes[0].and_then(end), by_id.get(exit.as_str())) {
                    if link.from != last {
                        report.push(&subject, "choice routes do not lead to the destination exit link");
                    }
                }
            }
        }
    }

    /// Background agents need a turning rule wherever a link ends at a node
    /// with several ways out, unless the link is a zone exit.
    fn validate_branching(&self, report: &mut ValidationReport) {
        let exits: BTreeSet<&str> = self.zones.iter().filter_map(|z| z.exit_link.as_deref()).collect();
        for link in &self.links {
            if exits.contains(link.id.as_str()) {
                continue;
            }
            let outgoing = self.links.iter().filter(|l| l.from == link.to).count();
            let has_row = self
                .intersections
                .iter()
                .filter(|i| i.node == link.to)
                .any(|i| i.turning.iter().any(|r| r.from == link.id));
            if outgoing > 1 && !has_row {
                report.push(
                    format!("link {}", link.id),
                    format!("node {} branches but has no turning row for this link", link.to),
                );
            }
        }
    }

    fn validate_connectivity(&self, report: &mut ValidationReport, by_id: &BTreeMap<&str, &Link>) {
        let mut parent: BTreeMap<&str, &str> = BTreeMap::new();
        fn find<'a>(parent: &mut BTreeMap<&'a str, &'a str>, x: &'a str) -> &'a str {
            let mut root = x;
            while let Some(&p) = parent.get(root) {
                if p == root {
                    break;
                }
                root = p;
            }
            parent.insert(x, root);
            root
        }
        let used: Vec<&Link> =
            self.routes.iter().flat_map(|r| r.links.iter()).filter_map(|id| by_id.get(id.as_str()).copied()).collect();
        for l in &used {
            parent.entry(l.from.as_str()).or_insert(l.from.as_str());
            parent.entry(l.to.as_str()).or_insert(l.to.as_str());
            let a = find(&mut parent, l.from.as_str());
            let b = find(&mut parent, l.to.as_str());
            if a != b {
                parent.insert(a, b);
            }
        }
        let nodes: Vec<&str> = parent.keys().copied().collect();
        let roots: BTreeSet<&str> = nodes.into_iter().map(|n| find(&mut parent, n)).collect();
        if roots.len() > 1 {
            report.push("network", "links used by routes are not connected");
        }
    }
}

/// Dense, index-based view of a [`Network`] used by the simulator and
/// controllers. Build with [`NetworkIndex::new`], which validates first.
#[derive(Debug, Clone)]
pub struct NetworkIndex {
    pub link_ids: Vec<LinkId>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub capacity: Vec<f64>,
    /// `1 / (capacity_per_step * beta)` per link.
    pub inv_reference: Vec<f64>,
    /// Per link: what happens when an agent leaves it.
    pub next: Vec<NextHop>,
    /// Per link: `(signalized intersection index, phase indices that green it)`.
    pub signal_of: Vec<Option<(usize, Vec<usize>)>>,
    /// Phase count per signalized intersection, in network order.
    pub phase_counts: Vec<usize>,
    pub signal_nodes: Vec<NodeId>,
    pub zone_ids: Vec<ZoneId>,
    pub zone_entry: Vec<Option<usize>>,
    /// Destination zone reached by leaving each link, if it is a zone exit.
    pub exit_zone: Vec<Option<usize>>,
    /// Link indices of Route 1 and Route 2.
    pub choice_routes: [Vec<usize>; 2],
    /// Per zone: influenced destinations (zone indices) when it is a VMS origin.
    pub influenced: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub enum NextHop {
    /// Leaving the network.
    Exit,
    /// The single way onward.
    Only(usize),
    /// Cumulative probability table `(threshold, link)`.
    Turn(Vec<(f64, usize)>),
}

impl NetworkIndex {
    pub fn new(network: &Network) -> Result<Self> {
        let report = network.validate();
        if !report.is_empty() {
            return Err(Error::InvalidNetwork(report));
        }
        let link_pos: BTreeMap<&str, usize> =
            network.links.iter().enumerate().map(|(i, l)| (l.id.as_str(), i)).collect();
        let idx = |id: &str| link_pos[id];
        let n = network.links.len();

        let mut exit_zone = vec![None; n];
        let mut zone_entry = Vec::with_capacity(network.zones.len());
        for (z, zone) in network.zones.iter().enumerate() {
            if let Some(e) = &zone.exit_link {
                exit_zone[idx(e)] = Some(z);
            }
            zone_entry.push(zone.entry_link.as_deref().map(idx));
        }

        let mut next = Vec::with_capacity(n);
        for (i, link) in network.links.iter().enumerate() {
            if exit_zone[i].is_some() {
                next.push(NextHop::Exit);
                continue;
            }
            let row = network
                .intersections
                .iter()
                .filter(|x| x.node == link.to)
                .flat_map(|x| x.turning.iter())
                .find(|r| r.from == link.id);
            let hop = match row {
                Some(row) => {
                    let mut acc = 0.0;
                    let mut table: Vec<(f64, usize)> = row
                        .to
                        .iter()
                        .map(|(to, p)| {
                            acc += p;
                            (acc, idx(to))
                        })
                        .collect();
                    if let Some(last) = table.last_mut() {
                        last.0 = f64::INFINITY;
                    }
                    NextHop::Turn(table)
                }
                None => {
                    let mut outs = network.links.iter().enumerate().filter(|(_, l)| l.from == link.to);
                    match (outs.next(), outs.next()) {
                        (Some((j, _)), None) => NextHop::Only(j),
                        _ => NextHop::Exit,
                    }
                }
            };
            next.push(hop);
        }

        let mut signal_of = vec![None; n];
        let mut phase_counts = Vec::new();
        let mut signal_nodes = Vec::new();
        for inter in network.signalized_intersections() {
            let k = phase_counts.len();
            phase_counts.push(inter.phases.len());
            signal_nodes.push(inter.node.clone());
            for (i, link) in network.links.iter().enumerate() {
                if link.to != inter.node {
                    continue;
                }
                let phases: Vec<usize> = inter
                    .phases
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| p.movements.iter().any(|(from, _)| *from == link.id))
                    .map(|(p, _)| p)
                    .collect();
                signal_of[i] = Some((k, phases));
            }
        }

        let (r1, r2) = &network.vms.choice_routes;
        let route_links = |id: &str| -> Vec<usize> {
            network.route(id).map(|r| r.links.iter().map(|l| idx(l)).collect()).unwrap_or_default()
        };
        let zone_pos = |id: &str| network.zones.iter().position(|z| z.id == id);
        let mut influenced = vec![Vec::new(); network.zones.len()];
        for (o, d) in &network.vms.influenced_od_pairs {
            if let (Some(o), Some(d)) = (zone_pos(o), zone_pos(d)) {
                if !influenced[o].contains(&d) {
                    influenced[o].push(d);
                }
            }
        }

        Ok(Self {
            link_ids: network.links.iter().map(|l| l.id.clone()).collect(),
            alpha: network.links.iter().map(|l| l.alpha).collect(),
            beta: network.links.iter().map(|l| l.beta).collect(),
            capacity: network.links.iter().map(|l| l.capacity_per_step).collect(),
            inv_reference: network.links.iter().map(|l| 1.0 / l.reference_occupancy()).collect(),
            next,
            signal_of,
            phase_counts,
            signal_nodes,
            zone_ids: network.zones.iter().map(|z| z.id.clone()).collect(),
            zone_entry,
            exit_zone,
            choice_routes: [route_links(r1), route_links(r2)],
            influenced,
        })
    }

    pub fn link_count(&self) -> usize {
        self.link_ids.len()
    }

    pub fn zone_index(&self, id: &str) -> Option<usize> {
        self.zone_ids.iter().position(|z| z == id)
    }
}
