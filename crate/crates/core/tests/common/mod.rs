//! Small hand-built networks shared by the integration tests.
#![allow(dead_code)]

use vms_ldr::demand::{DemandDay, OriginCounts, Provenance};
use vms_ldr::network::{Intersection, Link, Network, Phase, Route, TurningRow, VmsPlacement, Zone};

pub fn link(id: &str, from: &str, to: &str, alpha: f64, beta: f64, capacity: f64) -> Link {
    Link { id: id.into(), from: from.into(), to: to.into(), alpha, beta, capacity_per_step: capacity }
}

pub fn zone(id: &str, entry: Option<&str>, exit: Option<&str>) -> Zone {
    Zone { id: id.into(), entry_link: entry.map(Into::into), exit_link: exit.map(Into::into) }
}

pub fn turning(from: &str, to: &[(&str, f64)]) -> TurningRow {
    TurningRow { from: from.into(), to: to.iter().map(|(l, p)| ((*l).into(), *p)).collect() }
}

pub fn ids(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// One link `L` from `o` to `d` with no intersections.
pub fn single_link(alpha: f64, beta: f64) -> Network {
    Network {
        links: vec![link("L", "o", "d", alpha, beta, 100.0)],
        intersections: vec![],
        routes: vec![Route { id: "r1".into(), links: ids(&["L"]) }, Route { id: "r2".into(), links: ids(&["L"]) }],
        zones: vec![zone("o", Some("L"), None), zone("d", None, Some("L"))],
        od_pairs: vec![("o".into(), "d".into())],
        vms: VmsPlacement {
            visible_from_links: vec![],
            influenced_od_pairs: vec![],
            choice_routes: ("r1".into(), "r2".into()),
        },
    }
}

/// `L1` then `L2`, both free-flow `beta` steps.
pub fn tandem(beta: f64) -> Network {
    Network {
        links: vec![link("L1", "o", "m", 0.0, beta, 100.0), link("L2", "m", "d", 0.0, beta, 100.0)],
        intersections: vec![],
        routes: vec![
            Route { id: "r1".into(), links: ids(&["L1", "L2"]) },
            Route { id: "r2".into(), links: ids(&["L1", "L2"]) },
        ],
        zones: vec![zone("o", Some("L1"), None), zone("d", None, Some("L2"))],
        od_pairs: vec![("o".into(), "d".into())],
        vms: VmsPlacement {
            visible_from_links: vec![],
            influenced_od_pairs: vec![],
            choice_routes: ("r1".into(), "r2".into()),
        },
    }
}

/// `A` into node `N`, which splits `p` / `1 - p` between exit links `B`
/// (zone x) and `C` (zone y).
pub fn fork(p: f64) -> Network {
    Network {
        links: vec![
            link("A", "o", "N", 0.0, 1.0, 100.0),
            link("B", "N", "x", 0.0, 1.0, 100.0),
            link("C", "N", "y", 0.0, 2.0, 100.0),
        ],
        intersections: vec![Intersection {
            node: "N".into(),
            phases: vec![],
            turning: vec![turning("A", &[("B", p), ("C", 1.0 - p)])],
        }],
        routes: vec![
            Route { id: "r1".into(), links: ids(&["A", "B"]) },
            Route { id: "r2".into(), links: ids(&["A", "B"]) },
        ],
        zones: vec![zone("o", Some("A"), None), zone("x", None, Some("B")), zone("y", None, Some("C"))],
        od_pairs: vec![("o".into(), "x".into()), ("o".into(), "y".into())],
        vms: VmsPlacement {
            visible_from_links: vec![],
            influenced_od_pairs: vec![],
            choice_routes: ("r1".into(), "r2".into()),
        },
    }
}

/// Two routes between `A` and `C` behind a sign on the entry link.
///
/// ```text
///          r1a      r1b
///   in -> A ---> B ---> C -> out
///          \_________/
///              r2
/// ```
///
/// Route 1 (`r1a`, `r1b`) is long and uncongestible; Route 2 (`r2`) is one
/// step at free flow but slows down quickly. A signal at `C` alternates
/// between the two approaches.
pub fn two_route() -> Network {
    Network {
        links: vec![
            link("in", "o", "A", 0.0, 1.0, 100.0),
            link("r1a", "A", "B", 0.0, 1.0, 100.0),
            link("r1b", "B", "C", 0.0, 2.0, 100.0),
            link("r2", "A", "C", 0.25, 1.0, 100.0),
            link("out", "C", "d", 0.0, 1.0, 100.0),
        ],
        intersections: vec![
            Intersection {
                node: "A".into(),
                phases: vec![],
                turning: vec![turning("in", &[("r1a", 0.5), ("r2", 0.5)])],
            },
            Intersection {
                node: "C".into(),
                phases: vec![
                    Phase { movements: vec![("r1b".into(), "out".into())] },
                    Phase { movements: vec![("r2".into(), "out".into())] },
                ],
                turning: vec![],
            },
        ],
        routes: vec![
            Route { id: "route1".into(), links: ids(&["r1a", "r1b"]) },
            Route { id: "route2".into(), links: ids(&["r2"]) },
        ],
        zones: vec![zone("o", Some("in"), None), zone("d", None, Some("out"))],
        od_pairs: vec![("o".into(), "d".into())],
        vms: VmsPlacement {
            visible_from_links: ids(&["in"]),
            influenced_od_pairs: vec![("o".into(), "d".into())],
            choice_routes: ("route1".into(), "route2".into()),
        },
    }
}

pub fn day(label: &str, origins: &[(&str, Vec<u32>)]) -> DemandDay {
    DemandDay {
        label: label.into(),
        provenance: Provenance::Synthetic,
        origins: origins
            .iter()
            .map(|(o, counts)| OriginCounts { origin: (*o).into(), counts: counts.clone() })
            .collect(),
    }
}

/// `count` vehicles at step 1, nothing afterwards.
pub fn pulse(origin: &str, count: u32, horizon: usize) -> DemandDay {
    let mut counts = vec![0; horizon];
    counts[0] = count;
    day("pulse", &[(origin, counts)])
}
