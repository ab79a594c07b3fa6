//! Fixtures shared by the criterion benches.

use vms_ldr::scenario::haining::bundled_scenario;
use vms_ldr::{LdrSignalPolicy, LdrVmsPolicy, ScenarioBundle, Simulator, StateHistory};

pub struct Fixture {
    pub bundle: ScenarioBundle,
    pub simulator: Simulator,
}

impl Fixture {
    pub fn bundled() -> Self {
        let bundle = bundled_scenario().expect("bundled scenario parses");
        let simulator = Simulator::new(&bundle.network).expect("bundled network is valid");
        Self { bundle, simulator }
    }

    pub fn link_count(&self) -> usize {
        self.simulator.index().link_count()
    }

    /// A VMS rule with a fixed non-trivial coefficient pattern.
    pub fn vms_policy(&self, delta: usize) -> LdrVmsPolicy {
        let n = self.link_count() * delta;
        let coefficients = (0..n).map(|i| ((i * 7 % 11) as f64 - 5.0) / 10.0).collect();
        LdrVmsPolicy::new(delta, vms_ldr::vms::DEFAULT_THRESHOLDS, coefficients).expect("valid rule")
    }

    pub fn signal_policy(&self, delta: usize) -> LdrSignalPolicy {
        let ix = self.simulator.index();
        let width = ix.link_count() * delta;
        let matrices = ix
            .phase_counts
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                (0..p).map(|r| (0..width).map(|i| ((i + 3 * r + k) % 5) as f64 / 10.0 - 0.2).collect()).collect()
            })
            .collect();
        LdrSignalPolicy::new(delta, 0.1, matrices).expect("valid rule")
    }

    /// A full history of normalized occupancies.
    pub fn history(&self, delta: usize) -> StateHistory {
        let n = self.link_count();
        let mut h = StateHistory::new(delta, n);
        for t in 0..delta {
            h.push((0..n).map(|i| ((i + t) % 9) as f64 / 4.0).collect());
        }
        h
    }
}
