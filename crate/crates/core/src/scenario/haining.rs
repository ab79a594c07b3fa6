//! Built-in synthetic scenario: a four-intersection grid with 24 directed
//! links and two alternative routes between the sign at the south-east
//! corner and the north-west exit.
//!
//! ```text
//!            e          d
//!            |          |
//!   f --- I4 ---------- I2 --- c        I4 = B (north-west)
//!          |   route 1  |
//!          |  (3)  (1)  |
//!   route 2|(8)         |
//!          |    (5)     |
//!   g --- I3 ---------- I1 --- b        I1 = A, sign on links 7 and 13
//!          |            |
//!          h            a
//! ```
//!
//! Topology counts follow the studied site; delay parameters, capacities,
//! turning probabilities and demand rates are invented.

use crate::demand::{synthesize_days, DemandModel, OriginRate};
use crate::error::Result;
use crate::network::{Intersection, Link, Network, Phase, Route, TurningRow, VmsPlacement, Zone};
use crate::scenario::{ScenarioBundle, FORMAT_VERSION};
use crate::sim::SimConfig;
use crate::vms::{ComplianceProfile, GenuineBands};

pub const SCENARIO_NAME: &str = "haining-synthetic";

pub const DESCRIPTION: &str = "SYNTHETIC scenario. Topology approximates a 24-link, \
4-intersection peak-hour test site with two alternative routes; every link parameter, \
turning probability and demand rate is invented, and all demand days are generated.";

const BUNDLED: &str = include_str!("../../data/haining_synthetic.toml");

/// `(id, from, to, alpha, beta, capacity)`
const LINKS: [(&str, &str, &str, f64, f64, f64); 24] = [
    ("1", "I1", "I2", 0.02, 2.0, 100.0),
    ("2", "I2", "I1", 0.03, 2.0, 60.0),
    ("3", "I2", "I4", 0.02, 2.0, 100.0),
    ("4", "I4", "I2", 0.03, 2.0, 60.0),
    ("5", "I1", "I3", 0.05, 1.0, 60.0),
    ("6", "I3", "I1", 0.03, 1.0, 60.0),
    ("7", "a", "I1", 0.02, 1.0, 80.0),
    ("8", "I3", "I4", 0.05, 2.0, 60.0),
    ("9", "I4", "I3", 0.03, 2.0, 60.0),
    ("10", "I1", "a", 0.01, 1.0, 120.0),
    ("11", "c", "I2", 0.02, 1.0, 60.0),
    ("12", "I2", "c", 0.01, 1.0, 120.0),
    ("13", "b", "I1", 0.02, 1.0, 80.0),
    ("14", "I1", "b", 0.01, 1.0, 120.0),
    ("15", "d", "I2", 0.02, 1.0, 60.0),
    ("16", "I2", "d", 0.01, 1.0, 120.0),
    ("17", "e", "I4", 0.02, 1.0, 60.0),
    ("18", "I4", "e", 0.01, 1.0, 120.0),
    ("19", "f", "I4", 0.02, 1.0, 60.0),
    ("20", "I4", "f", 0.01, 1.0, 120.0),
    ("21", "g", "I3", 0.02, 1.0, 60.0),
    ("22", "I3", "g", 0.01, 1.0, 120.0),
    ("23", "h", "I3", 0.02, 1.0, 60.0),
    ("24", "I3", "h", 0.01, 1.0, 120.0),
];

/// `(node, [(incoming, [(outgoing, probability)])])`, one phase per approach.
#[allow(clippy::type_complexity)]
const JUNCTIONS: [(&str, [(&str, [(&str, f64); 3]); 4]); 4] = [
    (
        "I1",
        [
            ("7", [("1", 0.50), ("5", 0.30), ("14", 0.20)]),
            ("13", [("1", 0.50), ("5", 0.30), ("10", 0.20)]),
            ("2", [("5", 0.20), ("10", 0.40), ("14", 0.40)]),
            ("6", [("1", 0.20), ("10", 0.40), ("14", 0.40)]),
        ],
    ),
    (
        "I2",
        [
            ("1", [("3", 0.60), ("12", 0.20), ("16", 0.20)]),
            ("4", [("2", 0.30), ("12", 0.35), ("16", 0.35)]),
            ("11", [("3", 0.50), ("2", 0.20), ("16", 0.30)]),
            ("15", [("3", 0.40), ("2", 0.30), ("12", 0.30)]),
        ],
    ),
    (
        "I3",
        [
            ("5", [("8", 0.60), ("22", 0.20), ("24", 0.20)]),
            ("9", [("6", 0.30), ("22", 0.35), ("24", 0.35)]),
            ("21", [("8", 0.30), ("6", 0.30), ("24", 0.40)]),
            ("23", [("8", 0.30), ("6", 0.30), ("22", 0.40)]),
        ],
    ),
    (
        "I4",
        [
            ("3", [("18", 0.50), ("20", 0.40), ("9", 0.10)]),
            ("8", [("18", 0.50), ("20", 0.40), ("4", 0.10)]),
            ("17", [("20", 0.40), ("4", 0.30), ("9", 0.30)]),
            ("19", [("18", 0.40), ("4", 0.30), ("9", 0.30)]),
        ],
    ),
];

/// `(zone, entry link, exit link, mean vehicles per minute)`
const ZONES: [(&str, &str, &str, f64); 8] = [
    ("a", "7", "10", 9.0),
    ("b", "13", "14", 8.0),
    ("c", "11", "12", 5.0),
    ("d", "15", "16", 4.0),
    ("e", "17", "18", 3.0),
    ("f", "19", "20", 3.0),
    ("g", "21", "22", 5.0),
    ("h", "23", "24", 4.0),
];

pub fn haining_network() -> Network {
    let links = LINKS
        .iter()
        .map(|&(id, from, to, alpha, beta, cap)| Link {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            alpha,
            beta,
            capacity_per_step: cap,
        })
        .collect();
    let intersections = JUNCTIONS
        .iter()
        .map(|(node, approaches)| Intersection {
            node: (*node).into(),
            phases: approaches
                .iter()
                .map(|(from, outs)| Phase {
                    movements: outs.iter().map(|(to, _)| ((*from).into(), (*to).into())).collect(),
                })
                .collect(),
            turning: approaches
                .iter()
                .map(|(from, outs)| TurningRow {
                    from: (*from).into(),
                    to: outs.iter().map(|(to, p)| ((*to).into(), *p)).collect(),
                })
                .collect(),
        })
        .collect();
    let zones = ZONES
        .iter()
        .map(|&(id, entry, exit, _)| Zone {
            id: id.into(),
            entry_link: Some(entry.into()),
            exit_link: Some(exit.into()),
        })
        .collect();
    let mut od_pairs = Vec::new();
    for (o, ..) in ZONES {
        for (d, ..) in ZONES {
            if o != d {
                od_pairs.push((o.to_string(), d.to_string()));
            }
        }
    }
    let influenced =
        [("a", "e"), ("a", "f"), ("b", "e"), ("b", "f")].iter().map(|(o, d)| (o.to_string(), d.to_string())).collect();
    Network {
        links,
        intersections,
        routes: vec![
            Route { id: "route1".into(), links: vec!["1".into(), "3".into()] },
            Route { id: "route2".into(), links: vec!["5".into(), "8".into()] },
        ],
        zones,
        od_pairs,
        vms: VmsPlacement {
            visible_from_links: vec!["7".into(), "13".into()],
            influenced_od_pairs: influenced,
            choice_routes: ("route1".into(), "route2".into()),
        },
    }
}

pub fn haining_demand_model(day_sigma: f64) -> DemandModel {
    DemandModel {
        origins: ZONES
            .iter()
            .map(|&(id, _, _, rate)| OriginRate { origin: id.into(), rate, amplitude: 0.25, peak: 0.5 })
            .collect(),
        day_sigma,
    }
}

/// Builds the synthetic bundle: `n_days` generated days, the first half for
/// training and the rest for testing.
pub fn haining_bundle(n_days: usize, day_sigma: f64, seed: u64) -> Result<ScenarioBundle> {
    let sim = SimConfig::default();
    let model = haining_demand_model(day_sigma);
    let mut days = synthesize_days(&model, n_days, sim.horizon as usize, seed)?;
    let test_days = days.split_off(n_days.div_ceil(2));
    Ok(ScenarioBundle {
        format_version: FORMAT_VERSION,
        name: SCENARIO_NAME.into(),
        description: DESCRIPTION.into(),
        sim,
        genuine_bands: GenuineBands::default(),
        compliance_profiles: ComplianceProfile::study_profiles().to_vec(),
        network: haining_network(),
        demand_model: Some(model),
        train_days: days,
        test_days,
    })
}

/// Flags the shipped scenario file was generated with.
pub const BUNDLED_DAYS: usize = 20;
pub const BUNDLED_SIGMA: f64 = 0.3;
pub const BUNDLED_SEED: u64 = 7;

/// Text of the shipped scenario file.
pub fn bundled_scenario_text() -> &'static str {
    BUNDLED
}

/// The shipped scenario, parsed.
pub fn bundled_scenario() -> Result<ScenarioBundle> {
    ScenarioBundle::from_toml_str(BUNDLED)
}
