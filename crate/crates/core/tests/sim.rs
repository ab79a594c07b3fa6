mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vms_ldr::scenario::haining::{bundled_scenario, haining_network};
use vms_ldr::sim::{discharge_limit, AgentKind, ExitQueue};
use vms_ldr::vms::{FixedDisplay, VmsMessage};
use vms_ldr::*;

fn config(horizon: u32) -> SimConfig {
    SimConfig { horizon, warmup_steps: 0, ..SimConfig::default() }
}

fn profile() -> ComplianceProfile {
    ComplianceProfile::new([0.1, 0.3, 0.5, 0.7, 0.9]).unwrap()
}

fn run(net: &Network, day: &DemandDay, cfg: &SimConfig) -> SimResult {
    Simulator::new(net).unwrap().run(day, &FixedDisplay::default(), &EqualSplit, &profile(), cfg).unwrap()
}

#[test]
fn single_link_free_flow_takes_beta_steps() {
    let res = run(&single_link(0.0, 3.0), &pulse("o", 1, 10), &config(10));
    assert_eq!(res.agents.len(), 1);
    let a = &res.agents[0];
    assert_eq!((a.entry_step, a.exit_step), (1, Some(4)));
    assert_eq!(res.mean_travel_time, Some(3.0 * 60.0));
}

#[test]
fn tandem_links_add_up() {
    let res = run(&tandem(2.0), &pulse("o", 1, 10), &config(10));
    assert_eq!(res.agents[0].exit_step, Some(5));
    assert_eq!(res.completed, 1);
}

#[test]
fn link_delay_grows_with_occupancy_at_entry() {
    // D = round(0.5 * X + 1): the k-th of four simultaneous entrants sees
    // X = k - 1 vehicles ahead and gets 1, 2, 2, 3 steps; FIFO keeps them
    // ordered.
    let res = run(&single_link(0.5, 1.0), &pulse("o", 4, 10), &config(10));
    let exits: Vec<u32> = res.agents.iter().map(|a| a.exit_step.unwrap()).collect();
    assert_eq!(exits, vec![2, 3, 3, 4]);
}

#[test]
fn fork_counts_match_replayed_draws() {
    let n = 10;
    for seed in [1u64, 7, 42, 1234] {
        let cfg = SimConfig { rng_seed: seed, ..config(8) };
        let res = run(&fork(0.7), &pulse("o", n, 8), &cfg);
        // Only turn draws consume the stream here: ten background agents
        // leave A together at step 2 and draw in id order.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let expect_b = (0..n).filter(|_| rng.random::<f64>() < 0.7).count();
        let via_b = res.agents.iter().filter(|a| a.destination.as_deref() == Some("x")).count();
        let via_c = res.agents.iter().filter(|a| a.destination.as_deref() == Some("y")).count();
        assert_eq!(via_b, expect_b, "seed {seed}");
        assert_eq!(via_c, n as usize - expect_b, "seed {seed}");
        // Exit B takes one step, exit C two.
        for a in &res.agents {
            let expected = if a.destination.as_deref() == Some("x") { 3 } else { 4 };
            assert_eq!(a.exit_step, Some(expected));
        }
    }
}

#[test]
fn injection_examples() {
    let net = haining_network();
    let sim = Simulator::new(&net).unwrap();
    let zones = ["a", "b", "c", "d", "e", "f", "g", "h"];
    let day_with = |origin: &str, n: u32| {
        let origins: Vec<(&str, Vec<u32>)> =
            zones.iter().map(|z| (*z, vec![if *z == origin { n } else { 0 }; 3])).collect();
        day("d", &origins)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = profile();

    let agents = sim.inject_agents(&day_with("a", 5), 1, VmsMessage::NoDisplay, &p, 0.8, 0, &mut rng).unwrap();
    let bg = agents.iter().filter(|a| a.kind == AgentKind::Background).count();
    let tg: Vec<_> = agents.iter().filter(|a| a.kind == AgentKind::Target).collect();
    assert_eq!((bg, tg.len()), (5, 4));
    for a in &tg {
        assert!(matches!(a.destination.as_deref(), Some("e" | "f")));
        assert!(a.route.is_some());
    }
    assert_eq!(agents.iter().map(|a| a.id).collect::<Vec<_>>(), (0..9).collect::<Vec<_>>());

    let agents = sim.inject_agents(&day_with("a", 0), 2, VmsMessage::NoDisplay, &p, 0.8, 0, &mut rng).unwrap();
    assert!(agents.is_empty());

    let agents = sim.inject_agents(&day_with("c", 3), 1, VmsMessage::NoDisplay, &p, 0.8, 0, &mut rng).unwrap();
    assert_eq!(agents.len(), 3);
    assert!(agents.iter().all(|a| a.kind == AgentKind::Background && a.route.is_none()));

    assert!(sim.inject_agents(&day_with("a", 1), 4, VmsMessage::NoDisplay, &p, 0.8, 0, &mut rng).is_err());
}

#[test]
fn fractional_targets_round_stochastically() {
    // 3 * 0.8 = 2.4 targets: 2 or 3 per step, 2.4 on average.
    let sim = Simulator::new(&haining_network()).unwrap();
    let d = day("d", &[("a", vec![3])]);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 20_000;
    let mut total = 0usize;
    for _ in 0..n {
        let agents = sim.inject_agents(&d, 1, VmsMessage::NoDisplay, &profile(), 0.8, 0, &mut rng).unwrap();
        let t = agents.iter().filter(|a| a.kind == AgentKind::Target).count();
        assert!(t == 2 || t == 3);
        total += t;
    }
    let mean = total as f64 / n as f64;
    // Bernoulli(0.4) standard error over 20000 draws is about 0.0035.
    assert!((mean - 2.4).abs() < 0.011, "{mean}");
}

#[test]
fn discharge_examples() {
    let mut q = ExitQueue::default();
    for id in 0..3 {
        q.push(1, id);
    }
    assert_eq!(q.discharge(1.0, 10.0, 1).len(), 3);

    let mut q = ExitQueue::default();
    for id in 0..8 {
        q.push(1, id);
    }
    assert_eq!(q.discharge(0.25, 10.0, 1), vec![0, 1, 2]);
    assert_eq!(q.len(), 5);
    assert!(q.discharge(0.0, 10.0, 2).is_empty());
    assert_eq!(discharge_limit(0.25, 10.0), 3);
    assert_eq!(discharge_limit(0.0, 10.0), 0);
}

#[test]
fn discharge_is_fifo_by_schedule_then_id() {
    let mut q = ExitQueue::default();
    q.push(5, 9);
    q.push(3, 4);
    q.push(3, 2);
    q.push(7, 1);
    assert!(q.discharge(1.0, 10.0, 2).is_empty());
    assert_eq!(q.discharge(1.0, 10.0, 5), vec![2, 4, 9]);
    assert_eq!(q.discharge(1.0, 10.0, 9), vec![1]);
}

#[test]
fn zero_demand_has_no_objective() {
    let b = bundled_scenario().unwrap();
    let res = run(&b.network, &b.train_days[0].scaled(0), &b.sim);
    assert_eq!(res.mean_travel_time, None);
    assert!(res.agents.is_empty());
}

#[test]
fn runs_are_bitwise_deterministic() {
    let b = bundled_scenario().unwrap();
    let cfg = SimConfig { record_trace: true, record_link_log: true, rng_seed: 77, ..b.sim.clone() };
    let sim = Simulator::new(&b.network).unwrap();
    let g = GenuineDisplay::default();
    let a = sim.run(&b.test_days[0], &g, &EqualSplit, &b.compliance_profiles[1], &cfg).unwrap();
    let c = sim.run(&b.test_days[0], &g, &EqualSplit, &b.compliance_profiles[1], &cfg).unwrap();
    assert_eq!(a, c);
    assert_eq!(a.mean_travel_time.unwrap().to_bits(), c.mean_travel_time.unwrap().to_bits());
    let other = SimConfig { rng_seed: 78, ..cfg };
    assert_ne!(a, sim.run(&b.test_days[0], &g, &EqualSplit, &b.compliance_profiles[1], &other).unwrap());
}

#[test]
fn zero_signal_rule_matches_equal_split_exactly() {
    let b = bundled_scenario().unwrap();
    let sim = Simulator::new(&b.network).unwrap();
    let zero = LdrSignalPolicy::zero(&sim.index().phase_counts, 24, 2, 0.1);
    for (i, d) in b.test_days.iter().take(3).enumerate() {
        let cfg = SimConfig { rng_seed: i as u64, ..b.sim.clone() };
        let g = GenuineDisplay::default();
        let a = sim.run(d, &g, &EqualSplit, &b.compliance_profiles[2], &cfg).unwrap();
        let z = sim.run(d, &g, &zero, &b.compliance_profiles[2], &cfg).unwrap();
        assert_eq!(a, z);
    }
}

#[test]
fn zero_sign_rule_matches_no_display_exactly() {
    let b = bundled_scenario().unwrap();
    let sim = Simulator::new(&b.network).unwrap();
    let zero = LdrVmsPolicy::zero(24, 3);
    let d = &b.train_days[2];
    let a = sim.run(d, &FixedDisplay::default(), &EqualSplit, &b.compliance_profiles[0], &b.sim).unwrap();
    let z = sim.run(d, &zero, &EqualSplit, &b.compliance_profiles[0], &b.sim).unwrap();
    assert_eq!(a, z);
}

#[test]
fn controller_dimension_mismatch_is_a_config_error() {
    let b = bundled_scenario().unwrap();
    let sim = Simulator::new(&b.network).unwrap();
    let d = &b.train_days[0];
    let p = &b.compliance_profiles[0];
    let wrong = LdrVmsPolicy::zero(23, 1);
    assert!(matches!(sim.run(d, &wrong, &EqualSplit, p, &b.sim), Err(Error::Config(_))));
    let wrong = LdrSignalPolicy::zero(&[4, 4, 4], 24, 1, 0.1);
    assert!(matches!(sim.run(d, &FixedDisplay::default(), &wrong, p, &b.sim), Err(Error::Config(_))));
    let deep = LdrVmsPolicy::zero(24, 60);
    assert!(matches!(sim.run(d, &deep, &EqualSplit, p, &b.sim), Err(Error::Config(_))));
}

#[test]
fn unknown_zone_is_a_data_error() {
    let b = bundled_scenario().unwrap();
    let d = day("d", &[("nowhere", vec![1; 60])]);
    let sim = Simulator::new(&b.network).unwrap();
    let res = sim.run(&d, &FixedDisplay::default(), &EqualSplit, &b.compliance_profiles[0], &b.sim);
    assert!(matches!(res, Err(Error::Data(_))));
}

#[test]
fn doubling_demand_never_lowers_the_objective() {
    let b = bundled_scenario().unwrap();
    let sim = Simulator::new(&b.network).unwrap();
    for (i, d) in b.train_days.iter().chain(&b.test_days).enumerate() {
        let cfg = SimConfig { rng_seed: i as u64, ..b.sim.clone() };
        let p = &b.compliance_profiles[2];
        let once = sim.run(d, &FixedDisplay::default(), &EqualSplit, p, &cfg).unwrap();
        let twice = sim.run(&d.scaled(2), &FixedDisplay::default(), &EqualSplit, p, &cfg).unwrap();
        assert!(
            twice.mean_travel_time.unwrap() >= once.mean_travel_time.unwrap(),
            "{}: {:?} -> {:?}",
            d.label,
            once.mean_travel_time,
            twice.mean_travel_time
        );
    }
}

#[test]
fn objective_is_mean_over_counted_agents() {
    let b = bundled_scenario().unwrap();
    let res = run(&b.network, &b.test_days[1], &b.sim);
    let counted: Vec<f64> = res
        .agents
        .iter()
        .filter(|a| a.entry_step > b.sim.warmup_steps)
        .map(|a| f64::from(a.exit_step.unwrap_or(b.sim.horizon + 1) - a.entry_step) * b.sim.step_length)
        .collect();
    let mean = counted.iter().sum::<f64>() / counted.len() as f64;
    assert!((res.mean_travel_time.unwrap() - mean).abs() < 1e-9);
    assert_eq!(res.completed + res.stranded, res.agents.len());
    assert_eq!(res.decisions.len(), 60);
    assert!(res.stranded > 0 && res.agents.iter().any(|a| a.exit_step.is_none()));
}

fn scaled_day(seed: u64, scale: u32, horizon: usize) -> DemandDay {
    let b = bundled_scenario().unwrap();
    let mut d = b.train_days[(seed % 10) as usize].scaled(scale);
    for o in &mut d.origins {
        o.counts.truncate(horizon);
    }
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn agents_are_conserved_every_step(seed in 0u64..1000, scale in 0u32..3) {
        let net = haining_network();
        let d = scaled_day(seed, scale, 30);
        let total = d.total();
        let cfg = SimConfig { horizon: 30, rng_seed: seed, ..SimConfig::default() };
        let sim = Simulator::new(&net).unwrap();
        let mut ok = true;
        let mut last_remaining = u64::MAX;
        let mut background_injected = 0u64;
        let res = sim.run_observed(&d, &GenuineDisplay::default(), &EqualSplit, &profile(), &cfg, |s| {
            ok &= s.in_network() + s.completed == s.created;
            ok &= s.not_yet_injected <= last_remaining;
            last_remaining = s.not_yet_injected;
            background_injected = total - s.not_yet_injected;
        }).unwrap();
        prop_assert!(ok);
        prop_assert_eq!(last_remaining, 0);
        let bg = res.agents.iter().filter(|a| a.kind == AgentKind::Background).count() as u64;
        prop_assert_eq!(bg, background_injected);
        prop_assert_eq!(bg, total);
    }

    #[test]
    fn links_release_in_schedule_order(seed in 0u64..1000, scale in 1u32..3) {
        let net = haining_network();
        let d = scaled_day(seed, scale, 25);
        let cfg = SimConfig { horizon: 25, rng_seed: seed, record_link_log: true, ..SimConfig::default() };
        let res = Simulator::new(&net).unwrap()
            .run(&d, &GenuineDisplay::default(), &EqualSplit, &profile(), &cfg).unwrap();
        let mut by_link: Vec<Vec<_>> = vec![Vec::new(); 24];
        for e in &res.link_log {
            by_link[e.link as usize].push(*e);
        }
        for events in &by_link {
            for a in events {
                if let Some(left) = a.left {
                    prop_assert!(left >= a.scheduled_exit);
                }
                for b in events {
                    if a.scheduled_exit < b.scheduled_exit {
                        // b may not leave before a, and may not leave while a waits.
                        match (a.left, b.left) {
                            (Some(la), Some(lb)) => prop_assert!(la <= lb),
                            (None, Some(_)) => prop_assert!(false, "overtaken on link {}", a.link),
                            _ => {}
                        }
                    }
                    if a.entered < b.entered {
                        prop_assert!(a.scheduled_exit <= b.scheduled_exit);
                    }
                }
            }
        }
    }

    #[test]
    fn route_volumes_match_occupancy(seed in 0u64..1000) {
        let net = haining_network();
        let d = scaled_day(seed, 1, 20);
        let cfg = SimConfig { horizon: 20, rng_seed: seed, record_trace: true, ..SimConfig::default() };
        let sim = Simulator::new(&net).unwrap();
        let res = sim.run(&d, &GenuineDisplay::default(), &EqualSplit, &profile(), &cfg).unwrap();
        let r = &sim.index().choice_routes;
        for (t, dec) in res.decisions.iter().enumerate().skip(1) {
            let occ = &res.trace[t - 1];
            let v1: u32 = r[0].iter().map(|&l| occ[l]).sum();
            let v2: u32 = r[1].iter().map(|&l| occ[l]).sum();
            prop_assert_eq!(dec.route_volumes, (v1, v2));
        }
    }
}
