use fedrelay::lower_level::best_response_demand;
use fedrelay::radio::Link;
use fedrelay::scenario::uniform_gains;
use fedrelay::{
    nine_device_preset, solve_stackelberg, EquilibriumReport, Game, Scenario, SolverConfig,
    StrategyProfile, Target,
};

fn preset_report(seed: u64) -> (Scenario, EquilibriumReport) {
    let s = nine_device_preset(seed);
    let r = solve_stackelberg(&s, &SolverConfig::default()).unwrap();
    (s, r)
}

/// Two devices: device 0 far from the access point with an expensive
/// radio, device 1 next to it, close to the access point, and slow to
/// process, so relaying through 1 is cheap and leaves time to spare.
fn relay_pair() -> Scenario {
    let mut s = nine_device_preset(0);
    s.devices.truncate(2);
    s.positions = vec![[0.0, 0.0], [1.0, 0.0], [10.0, 10.0]];
    s.gains = uniform_gains(3, 10.0);
    s.devices[0].transmit_cost = 5.0;
    s.devices[1].processing_rate = 0.5;
    s
}

#[test]
fn no_grid_deviation_beats_equilibrium() {
    let (s, r) = preset_report(7);
    assert!(r.converged);
    let game = Game::new(&s, r.config.clone()).unwrap();
    let m = r.final_penalty;
    let n = s.n_devices();
    for i in 0..n {
        let base = game.penalized_profit(i, &r.profile, m).unwrap();
        let d = &s.devices[i];
        let floor = s.price_floor();
        for k in 0..=50 {
            let q = floor + (d.max_price - floor) * k as f64 / 50.0;
            let mut alt = r.profile.clone();
            alt.prices.set(i, q);
            let gain = game.penalized_profit(i, &alt, m).unwrap() - base;
            assert!(gain <= 1e-6, "device {i} price {q}: gain {gain}");
        }
        let targets = (0..n)
            .filter(|&j| j != i)
            .map(Target::Device)
            .chain([Target::AccessPoint]);
        for target in targets {
            for k in 1..=100 {
                let power = d.max_power * k as f64 / 100.0;
                let mut links = r.profile.assignment.links().to_vec();
                links[i] = Link { target, power };
                let alt = StrategyProfile::new(r.profile.prices.to_vec(), links, &s).unwrap();
                let gain = game.penalized_profit(i, &alt, m).unwrap() - base;
                assert!(
                    gain <= 1e-6,
                    "device {i} -> {target} at {power}: gain {gain}"
                );
            }
        }
    }
}

#[test]
fn reported_demand_is_the_owner_best_response() {
    for seed in [1, 7, 42] {
        let (s, r) = preset_report(seed);
        assert_eq!(
            r.demand,
            best_response_demand(&s, &r.profile.prices).unwrap()
        );
    }
}

#[test]
fn equilibrium_price_beats_zero_margin() {
    let (s, r) = preset_report(7);
    let game = Game::new(&s, SolverConfig::default()).unwrap();
    for i in 0..s.n_devices() {
        let at_equilibrium = game.reduced_profit(i, &r.profile).unwrap();
        let mut alt = r.profile.clone();
        let cost = s.devices[i].processing_cost.max(s.price_floor());
        alt.prices.set(i, cost);
        assert!(at_equilibrium >= game.reduced_profit(i, &alt).unwrap());
    }
}

#[test]
fn every_chain_ends_at_access_point() {
    let (_, r) = preset_report(7);
    for i in 0..r.routing.len() {
        assert_eq!(r.routing.chain(i).last(), Some(&Target::AccessPoint));
    }
}

#[test]
fn prices_stay_within_caps() {
    let (s, r) = preset_report(3);
    for (q, d) in r.profile.prices.iter().zip(&s.devices) {
        assert!(*q >= s.price_floor() && *q <= d.max_price);
    }
}

#[test]
fn relay_choice_matches_exhaustive_enumeration() {
    let s = relay_pair();
    let game = Game::new(&s, SolverConfig::default()).unwrap();
    let mut profile = StrategyProfile::all_direct(&s);
    for i in 0..2 {
        profile
            .prices
            .set(i, fedrelay::price_best_response(i, &s).unwrap());
    }
    let demand = best_response_demand(&s, &profile.prices).unwrap();
    let m = 1e8;
    let choice = game
        .relay_power_best_response(0, &profile, &demand, m)
        .unwrap();

    let p_max = s.devices[0].max_power;
    let mut best = (f64::NEG_INFINITY, Target::AccessPoint);
    for target in [Target::Device(1), Target::AccessPoint] {
        for k in 1..=100 {
            let mut links = profile.assignment.links().to_vec();
            links[0] = Link {
                target,
                power: p_max * k as f64 / 100.0,
            };
            let alt = StrategyProfile::new(profile.prices.to_vec(), links, &s).unwrap();
            let v = game.penalized_profit_at(0, &alt, &demand, m).unwrap();
            if v > best.0 {
                best = (v, target);
            }
        }
    }
    assert_eq!(best.1, Target::Device(1));
    assert_eq!(choice.link.target, Target::Device(1));
    assert!(choice.feasible);
    assert!(choice.value >= best.0);
}

#[test]
fn relay_pair_equilibrium_relays_and_meets_deadline() {
    let s = relay_pair();
    let r = solve_stackelberg(&s, &SolverConfig::default()).unwrap();
    assert!(r.converged, "{:?}", r.feasibility);
    assert_eq!(r.routing.next_hop(0), Target::Device(1));
    let edge = &r.diagnostics.relays[0];
    assert_eq!((edge.child, edge.relay), (0, 1));
    assert!(edge.slack >= -1e-9);
}

#[test]
fn shared_receivers_lower_each_others_rates() {
    let (_, r) = preset_report(7);
    assert!(!r.diagnostics.shared_channels.is_empty());
    for c in &r.diagnostics.shared_channels {
        assert!(
            c.rate < c.solo_rate,
            "device {}: {} vs {}",
            c.device,
            c.rate,
            c.solo_rate
        );
    }
}
