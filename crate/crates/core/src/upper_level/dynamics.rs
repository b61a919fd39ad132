use serde::{Deserialize, Serialize};

use super::{price_best_response, Game, SolverConfig, StrategyProfile, UpdateOrder};
use crate::error::{Error, Result};
use crate::lower_level::{
    best_response_demand, best_response_demand_for, owner_utility, DemandVector,
};
use crate::radio::{shannon_rate, Link};
use crate::routing::{feasible, processing_times, timing_excess, FeasibilityReport, RoutingPlan};
use crate::scenario::{Scenario, Target};

/// A relayed device and its relay at the reported equilibrium.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelayEdge {
    pub child: usize,
    pub relay: usize,
    pub child_demand: f64,
    pub relay_demand: f64,
    /// Relay's processing time minus the child's finish time.
    pub slack: f64,
    /// Slack within one part in a million of the deadline.
    pub tight: bool,
    pub relay_demand_exceeds: bool,
}

/// A device whose receiver also serves other devices, with its rate next
/// to what it would get alone on that channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharedChannel {
    pub device: usize,
    pub receiver: Target,
    pub rate: f64,
    pub solo_rate: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub relays: Vec<RelayEdge>,
    pub shared_channels: Vec<SharedChannel>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub profile: StrategyProfile,
    pub demand: DemandVector,
    /// Zero for a silent device.
    pub rates: Vec<f64>,
    pub profits: Vec<f64>,
    pub owner_utility: f64,
    pub routing: RoutingPlan,
    /// Fixed point reached, gain within `eps_nash`, and routing feasible.
    pub converged: bool,
    /// The last penalty stage ended with a full round of no changes.
    pub fixed_point: bool,
    pub iterations: usize,
    pub stage_rounds: Vec<usize>,
    pub max_unilateral_gain: f64,
    /// Penalty coefficient the certificate was measured at.
    pub final_penalty: f64,
    pub feasibility: FeasibilityReport,
    /// Devices for which every candidate link violated a constraint in the
    /// final round.
    pub no_feasible_action: Vec<usize>,
    /// Whether a run in the opposite device order reached the same profile.
    pub order_agreement: Option<bool>,
    pub diagnostics: Diagnostics,
    pub config: SolverConfig,
}

fn price_or_exit(i: usize, scenario: &Scenario) -> Result<f64> {
    match price_best_response(i, scenario) {
        // no profitable price: charge the cap and sell nothing
        Err(Error::DegenerateDevice { .. }) => Ok(scenario.devices[i].max_price),
        other => other,
    }
}

fn relative_change(old: f64, new: f64) -> f64 {
    let scale = old.abs().max(new.abs());
    if scale == 0.0 {
        0.0
    } else {
        (old - new).abs() / scale
    }
}

fn link_changed(old: Link, new: Link, tolerance: f64) -> bool {
    old.target != new.target || relative_change(old.power, new.power) > tolerance
}

/// Largest improvement any single device finds by re-running its best
/// response against `profile`, at penalty `coefficient`.
fn unilateral_gains(
    game: &Game<'_>,
    profile: &StrategyProfile,
    coefficient: f64,
) -> Result<Vec<f64>> {
    let s = game.scenario();
    let demand = best_response_demand(s, &profile.prices)?;
    (0..s.n_devices())
        .map(|i| {
            let current = game.penalized_profit_at(i, profile, &demand, coefficient)?;
            let mut deviant = profile.clone();
            let price = price_or_exit(i, s)?;
            deviant.prices.set(i, price);
            let mut deviant_demand = demand.clone();
            let d = &s.devices[i];
            deviant_demand.set(
                i,
                best_response_demand_for(&d.accuracy, d.max_demand, price),
            );
            let choice =
                game.relay_power_best_response(i, &deviant, &deviant_demand, coefficient)?;
            let deviant = deviant.with_link(i, choice.link);
            let value = game.penalized_profit_at(i, &deviant, &deviant_demand, coefficient)?;
            Ok((value - current).max(0.0))
        })
        .collect()
}

/// Round-robin best responses from `init`, re-converged at each penalty
/// coefficient in turn.
///
/// Each round updates every device's price, then its receiver and power,
/// then the owner's demand. A stage ends after a round without changes or
/// at `max_rounds`. Failing to converge is reported, not raised.
pub fn best_response_dynamics(
    scenario: &Scenario,
    config: &SolverConfig,
    init: &StrategyProfile,
) -> Result<EquilibriumReport> {
    let game = Game::new(scenario, config.clone())?;
    let n = scenario.n_devices();
    if init.prices.len() != n || init.assignment.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: init.prices.len(),
        });
    }
    let order: Vec<usize> = match config.order {
        UpdateOrder::Forward => (0..n).collect(),
        UpdateOrder::Reverse => (0..n).rev().collect(),
    };

    let mut profile = init.clone();
    let mut demand = best_response_demand(scenario, &profile.prices)?;
    let mut stage_rounds = Vec::with_capacity(config.penalty.schedule.len());
    let mut fixed_point = false;
    let mut no_feasible_action = Vec::new();

    for &coefficient in &config.penalty.schedule {
        let mut rounds = 0;
        fixed_point = false;
        while rounds < config.max_rounds {
            rounds += 1;
            let mut changed = false;
            no_feasible_action.clear();
            for &i in &order {
                let price = price_or_exit(i, scenario)?;
                changed |= relative_change(profile.prices[i], price) > config.price_tolerance;
                profile.prices.set(i, price);

                let choice = game.relay_power_best_response(i, &profile, &demand, coefficient)?;
                if !choice.any_feasible {
                    no_feasible_action.push(i);
                }
                changed |= link_changed(
                    profile.assignment.link(i),
                    choice.link,
                    config.power_tolerance,
                );
                profile.assignment.set_link(i, choice.link);
            }
            let next = best_response_demand(scenario, &profile.prices)?;
            changed |= next
                .iter()
                .zip(demand.iter())
                .any(|(a, b)| relative_change(*a, *b) > config.price_tolerance);
            demand = next;
            if !changed {
                fixed_point = true;
                break;
            }
        }
        stage_rounds.push(rounds);
    }

    let final_penalty = config.penalty.final_coefficient();
    let gains = unilateral_gains(&game, &profile, final_penalty)?;
    let max_unilateral_gain = gains.into_iter().fold(0.0, f64::max);

    let state = game.link_state(&profile.assignment)?;
    let feasibility = feasible(
        &state.indicator,
        &demand,
        &state.rates,
        scenario,
        config.penalty.tolerance,
    )?;
    let profits = (0..n)
        .map(|i| game.device_profit(i, &profile, &demand))
        .collect::<Result<Vec<_>>>()?;
    let diagnostics = diagnostics(&game, &profile, &demand, &state.rates)?;
    let converged =
        fixed_point && max_unilateral_gain <= config.eps_nash && feasibility.is_feasible();

    Ok(EquilibriumReport {
        owner_utility: owner_utility(scenario, &demand, &profile.prices)?,
        routing: profile.routing()?,
        rates: state.rates,
        profile,
        demand,
        profits,
        converged,
        fixed_point,
        iterations: stage_rounds.iter().sum(),
        stage_rounds,
        max_unilateral_gain,
        final_penalty,
        feasibility,
        no_feasible_action,
        order_agreement: None,
        diagnostics,
        config: config.clone(),
    })
}

fn diagnostics(
    game: &Game<'_>,
    profile: &StrategyProfile,
    demand: &DemandVector,
    rates: &[f64],
) -> Result<Diagnostics> {
    let s = game.scenario();
    let n = s.n_devices();
    let links = profile.assignment.links();
    let indicator = profile.assignment.to_matrix();
    let indicator = crate::routing::IndicatorMatrix::from_powers(&indicator);
    let excess = timing_excess(&indicator, demand, rates, s)?;
    let times = processing_times(demand, s);

    let mut relays = Vec::new();
    for (child, link) in links.iter().enumerate() {
        if let Target::Device(relay) = link.target {
            let slack = -excess[child].unwrap_or(0.0);
            relays.push(RelayEdge {
                child,
                relay,
                child_demand: demand[child],
                relay_demand: demand[relay],
                slack,
                tight: slack.abs() <= 1e-6 * times[relay].abs().max(f64::MIN_POSITIVE),
                relay_demand_exceeds: demand[relay] > demand[child],
            });
        }
    }

    let mut shared_channels = Vec::new();
    for (i, link) in links.iter().enumerate() {
        let sharing = links
            .iter()
            .enumerate()
            .any(|(k, l)| k != i && l.target == link.target && l.power > 0.0);
        if sharing && link.power > 0.0 {
            let gain = game.channel().gain(i, link.target.node_index(n));
            shared_channels.push(SharedChannel {
                device: i,
                receiver: link.target,
                rate: rates[i],
                solo_rate: shannon_rate(s.devices[i].bandwidth, gain * link.power, s.noise_power),
            });
        }
    }
    Ok(Diagnostics {
        relays,
        shared_channels,
    })
}

fn same_profile(a: &StrategyProfile, b: &StrategyProfile) -> bool {
    a.prices
        .iter()
        .zip(b.prices.iter())
        .all(|(x, y)| relative_change(*x, *y) <= 1e-9)
        && a.assignment
            .links()
            .iter()
            .zip(b.assignment.links())
            .all(|(x, y)| !link_changed(*x, *y, 1e-6))
}

/// Leaders' equilibrium by best-response dynamics from the all-direct
/// profile, with the owner's best response and utility attached.
pub fn solve_stackelberg(scenario: &Scenario, config: &SolverConfig) -> Result<EquilibriumReport> {
    let init = StrategyProfile::all_direct(scenario);
    let mut report = best_response_dynamics(scenario, config, &init)?;
    debug_assert_eq!(
        report.demand,
        best_response_demand(scenario, &report.profile.prices)?
    );
    if config.check_order {
        let mut other = config.clone();
        other.order = match config.order {
            UpdateOrder::Forward => UpdateOrder::Reverse,
            UpdateOrder::Reverse => UpdateOrder::Forward,
        };
        other.check_order = false;
        let mirrored = best_response_dynamics(scenario, &other, &init)?;
        report.order_agreement = Some(same_profile(&report.profile, &mirrored.profile));
    }
    Ok(report)
}

/// Recomputes the largest unilateral gain for a report's profile, using the
/// report's own solver settings.
pub fn certify(scenario: &Scenario, report: &EquilibriumReport) -> Result<f64> {
    let game = Game::new(scenario, report.config.clone())?;
    let gains = unilateral_gains(&game, &report.profile, report.final_penalty)?;
    Ok(gains.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{nine_device_preset, uniform_gains};

    fn trimmed(n: usize, positions: Vec<[f64; 2]>) -> Scenario {
        let mut s = nine_device_preset(11);
        s.devices.truncate(n);
        s.positions = positions;
        s.gains = uniform_gains(n + 1, 10.0);
        s
    }

    #[test]
    fn single_device_converges_direct() {
        let s = trimmed(1, vec![[2.0, 2.0], [5.0, 6.0]]);
        let r = solve_stackelberg(&s, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.routing.next_hop(0), Target::AccessPoint);
        assert_eq!(r.profile.prices[0], price_best_response(0, &s).unwrap());
        assert_eq!(r.order_agreement, Some(true));
    }

    #[test]
    fn symmetric_pair_prices_agree() {
        let mut s = trimmed(2, vec![[4.0, 5.0], [6.0, 5.0], [5.0, 5.0]]);
        s.devices[1] = s.devices[0].clone();
        for order in [UpdateOrder::Forward, UpdateOrder::Reverse] {
            let cfg = SolverConfig {
                order,
                ..SolverConfig::default()
            };
            let r = solve_stackelberg(&s, &cfg).unwrap();
            assert!(r.converged);
            assert!((r.profile.prices[0] - r.profile.prices[1]).abs() <= 1e-6);
        }
    }

    #[test]
    fn unmeetable_deadline_sends_direct() {
        let mut s = trimmed(2, vec![[1.0, 1.0], [1.5, 1.0], [9.0, 9.0]]);
        // relay finishes almost instantly, so relaying cannot meet its deadline
        s.devices[1].processing_rate = 1e9;
        let r = solve_stackelberg(&s, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.routing.next_hop(0), Target::AccessPoint);
    }

    #[test]
    fn certify_reproduces_reported_gain() {
        let s = nine_device_preset(2);
        let r = solve_stackelberg(&s, &SolverConfig::default()).unwrap();
        assert_eq!(certify(&s, &r).unwrap(), r.max_unilateral_gain);
    }

    #[test]
    fn preset_converges_with_demand_attached() {
        let s = nine_device_preset(7);
        let r = solve_stackelberg(&s, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert!(r.max_unilateral_gain <= 1e-6);
        assert!((0..9).any(|i| r.routing.next_hop(i) == Target::AccessPoint));
        assert_eq!(
            r.demand,
            best_response_demand(&s, &r.profile.prices).unwrap()
        );
        assert_eq!(
            r.owner_utility,
            owner_utility(&s, &r.demand, &r.profile.prices).unwrap()
        );
    }
}
