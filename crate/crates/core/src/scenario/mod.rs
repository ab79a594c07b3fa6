//! Scenario bundles: network, simulation settings, compliance profiles and
//! the train/test demand days in one versioned TOML document.

pub mod haining;
pub mod policy;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::demand::{DemandDay, DemandModel};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::sim::SimConfig;
use crate::vms::{ComplianceProfile, GenuineBands};

pub use policy::{PolicyRecord, SignalMode, Strategy, VmsMode};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioBundle {
    pub format_version: u32,
    pub name: String,
    pub description: String,
    pub sim: SimConfig,
    pub genuine_bands: GenuineBands,
    pub compliance_profiles: Vec<ComplianceProfile>,
    pub network: Network,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand_model: Option<DemandModel>,
    pub train_days: Vec<DemandDay>,
    pub test_days: Vec<DemandDay>,
}

impl ScenarioBundle {
    /// Checks everything a loaded bundle must satisfy.
    pub fn validate(&self) -> Result<()> {
        let report = self.network.validate();
        if !report.is_empty() {
            return Err(Error::InvalidNetwork(report));
        }
        self.sim.validate(1)?;
        let train: BTreeSet<&str> = self.train_days.iter().map(|d| d.label.as_str()).collect();
        if train.len() != self.train_days.len() {
            return Err(Error::Data("duplicate training day labels".into()));
        }
        let mut test = BTreeSet::new();
        for d in &self.test_days {
            if train.contains(d.label.as_str()) {
                return Err(Error::Data(format!("day {} appears in both the training and test sets", d.label)));
            }
            if !test.insert(d.label.as_str()) {
                return Err(Error::Data(format!("duplicate test day {}", d.label)));
            }
        }
        for d in self.train_days.iter().chain(&self.test_days) {
            let len = d.horizon()?;
            if len < self.sim.horizon as usize {
                return Err(Error::Data(format!(
                    "day {} covers {len} steps, horizon is {}",
                    d.label, self.sim.horizon
                )));
            }
            for o in &d.origins {
                match self.network.zone(&o.origin) {
                    Some(z) if z.entry_link.is_some() => {}
                    _ => return Err(Error::Data(format!("day {} references unknown origin {}", d.label, o.origin))),
                }
            }
        }
        if !(self.genuine_bands.moderate >= 0.0 && self.genuine_bands.strong >= self.genuine_bands.moderate) {
            return Err(Error::Data("genuine bands must satisfy 0 <= moderate <= strong".into()));
        }
        Ok(())
    }

    /// Canonical text form. The description is repeated as a comment header.
    pub fn to_toml_string(&self) -> Result<String> {
        let body = toml::to_string(self).map_err(|e| Error::Data(format!("cannot serialize scenario: {e}")))?;
        let mut out = String::new();
        for line in textwrap(&self.description, 76) {
            out.push_str("# ");
            out.push_str(&line);
            out.push('\n');
        }
        out.push('\n');
        out.push_str(&body);
        Ok(out)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| parse_error(&e))?;
        let found = table
            .get("format_version")
            .and_then(toml::Value::as_integer)
            .ok_or(Error::Parse { offset: 0, message: "missing format_version".into() })?;
        if found != i64::from(FORMAT_VERSION) {
            return Err(Error::Version { found: u32::try_from(found).unwrap_or(u32::MAX), expected: FORMAT_VERSION });
        }
        let bundle: Self = toml::from_str(text).map_err(|e| parse_error(&e))?;
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }
}

fn parse_error(e: &toml::de::Error) -> Error {
    Error::Parse { offset: e.span().map_or(0, |s| s.start), message: e.message().to_string() }
}

fn textwrap(text: &str, width: usize) -> Vec<String> {
    let mut lines = Vec::new();
    let mut line = String::new();
    for word in text.split_whitespace() {
        if !line.is_empty() && line.len() + 1 + word.len() > width {
            lines.push(std::mem::take(&mut line));
        }
        if !line.is_empty() {
            line.push(' ');
        }
        line.push_str(word);
    }
    if !line.is_empty() {
        lines.push(line);
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::haining::*;
    use super::*;

    fn small() -> ScenarioBundle {
        haining_bundle(4, 0.3, 1).unwrap()
    }

    #[test]
    fn bundled_scenario_loads() {
        let b = bundled_scenario().unwrap();
        assert_eq!(b.network.links.len(), 24);
        assert_eq!(b.network.signalized_intersections().count(), 4);
        assert_eq!(b.train_days.len() + b.test_days.len(), 20);
        assert_eq!(b.train_days.len(), 10);
        assert!(bundled_scenario_text().starts_with("# SYNTHETIC"));
    }

    #[test]
    fn bundled_file_matches_generator() {
        let regenerated = haining_bundle(BUNDLED_DAYS, BUNDLED_SIGMA, BUNDLED_SEED).unwrap().to_toml_string().unwrap();
        assert!(
            regenerated == bundled_scenario_text(),
            "crates/core/data/haining_synthetic.toml is stale; regenerate it with `vms-ldr synth`"
        );
    }

    #[test]
    fn round_trip_is_exact() {
        let b = small();
        let text = b.to_toml_string().unwrap();
        let back = ScenarioBundle::from_toml_str(&text).unwrap();
        assert_eq!(back, b);
        assert_eq!(back.to_toml_string().unwrap(), text);
    }

    #[test]
    fn truncated_file_reports_offset() {
        let text = small().to_toml_string().unwrap();
        let cut = &text[..text.len() / 2];
        // Cut inside a table header or array so the document is malformed.
        let cut = &cut[..cut.rfind('[').unwrap() + 1];
        match ScenarioBundle::from_toml_str(cut) {
            Err(Error::Parse { offset, .. }) => assert!(offset > 0 && offset <= cut.len()),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn overlapping_days_are_rejected() {
        let mut b = small();
        b.test_days[0].label = b.train_days[0].label.clone();
        let text = b.to_toml_string().unwrap();
        let err = ScenarioBundle::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("both"), "{err}");
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let mut b = small();
        b.format_version = 99;
        let text = b.to_toml_string().unwrap();
        assert!(matches!(ScenarioBundle::from_toml_str(&text), Err(Error::Version { found: 99, .. })));
    }

    #[test]
    fn invalid_network_is_rejected_with_report() {
        let mut b = small();
        b.network.routes[0].links.push("missing".into());
        let text = b.to_toml_string().unwrap();
        match ScenarioBundle::from_toml_str(&text) {
            Err(Error::InvalidNetwork(report)) => assert!(report.mentions("route route1")),
            other => panic!("expected invalid network, got {other:?}"),
        }
    }
}
