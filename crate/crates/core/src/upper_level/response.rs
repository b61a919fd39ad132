use serde::{Deserialize, Serialize};

use super::{Game, StrategyProfile};
use crate::error::{Error, Result};
use crate::lower_level::DemandVector;
use crate::radio::{external_interference, min_power_for_rate, shannon_rate, Link};
use crate::routing::processing_times;
use crate::scenario::{Scenario, Target};

/// Price maximizing `(q - c^p) ln(c b / q) / c`, clamped to the device's
/// admissible price range.
///
/// The objective is strictly concave on `(c^p, c b)`; its stationary point
/// solves `ln(c b / q) = 1 - c^p / q` and is found by bisection down to
/// adjacent floating-point values.
pub fn price_best_response(i: usize, scenario: &Scenario) -> Result<f64> {
    let device = &scenario.devices[i];
    let ceiling = device.accuracy.marginal_at_zero();
    let cost = device.processing_cost;
    if cost >= ceiling {
        return Err(Error::DegenerateDevice {
            device: i,
            cost,
            ceiling,
        });
    }
    // decreasing in q; positive at q = c^p, negative at q = c b
    let slope = |q: f64| (ceiling / q).ln() - 1.0 + cost / q;
    let (mut lo, mut hi) = (cost, ceiling);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    Ok(root.clamp(scenario.price_floor(), device.max_price))
}

/// Outcome of one device's receiver-and-power best response.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelayChoice {
    pub link: Link,
    /// Penalized profit at the chosen link.
    pub value: f64,
    /// Whether the chosen link leaves the device's own penalty at zero.
    pub feasible: bool,
    /// Whether any candidate link did.
    pub any_feasible: bool,
}

impl Game<'_> {
    /// Power for sending straight to the access point: the lowest-energy
    /// point on an even grid over `(0, p_max]`.
    pub fn direct_power(&self, i: usize, profile: &StrategyProfile) -> f64 {
        let s = self.scenario;
        let device = &s.devices[i];
        let gain = self.channel.gain(i, s.access_point());
        let noise =
            external_interference(i, Target::AccessPoint, &profile.assignment, &self.channel)
                + s.noise_power;
        let grid = self.config.power_grid;
        let mut best = (f64::INFINITY, device.max_power);
        for k in 1..=grid {
            let p = device.max_power * k as f64 / grid as f64;
            let energy = p / shannon_rate(device.bandwidth, gain * p, noise);
            if energy < best.0 {
                best = (energy, p);
            }
        }
        best.1
    }

    /// Candidate power toward another device: the least power meeting the
    /// relay's deadline, or `p_max` when no power in range does.
    fn relay_power(
        &self,
        i: usize,
        relay: usize,
        profile: &StrategyProfile,
        demand: &DemandVector,
    ) -> f64 {
        let s = self.scenario;
        let device = &s.devices[i];
        let times = processing_times(demand, s);
        let inflow = profile
            .assignment
            .links()
            .iter()
            .filter(|l| l.target == Target::Device(i))
            .count();
        let slack = times[relay] - times[i] - device.averaging_time * inflow as f64;
        if !(slack > 0.0) {
            return device.max_power;
        }
        let target = Target::Device(relay);
        let ext = external_interference(i, target, &profile.assignment, &self.channel);
        match min_power_for_rate(i, target, s.update_size / slack, ext, &self.channel, s) {
            Ok(p) => p,
            Err(_) => device.max_power,
        }
    }

    /// Best receiver and power for device `i` with everyone else fixed,
    /// ranked by penalized profit at `coefficient`. Ties go to the lowest
    /// device index, with the access point last.
    pub fn relay_power_best_response(
        &self,
        i: usize,
        profile: &StrategyProfile,
        demand: &DemandVector,
        coefficient: f64,
    ) -> Result<RelayChoice> {
        let n = self.scenario.n_devices();
        let candidates = (0..n)
            .filter(|&j| j != i)
            .map(Target::Device)
            .chain(std::iter::once(Target::AccessPoint));
        let mut best: Option<RelayChoice> = None;
        let mut any_feasible = false;
        for target in candidates {
            let power = match target {
                Target::AccessPoint => self.direct_power(i, profile),
                Target::Device(j) => self.relay_power(i, j, profile, demand),
            };
            let link = Link { target, power };
            let candidate = profile.with_link(i, link);
            let state = self.link_state(&candidate.assignment)?;
            let rho = self.penalty(i, &state, demand)?;
            let value = self.penalized_profit_in(i, &candidate, &state, demand, coefficient)?;
            let feasible = rho == 0.0;
            any_feasible |= feasible;
            if best.is_none_or(|b| value > b.value) {
                best = Some(RelayChoice {
                    link,
                    value,
                    feasible,
                    any_feasible: false,
                });
            }
        }
        let mut choice = best.expect("at least one candidate receiver");
        choice.any_feasible = any_feasible;
        Ok(choice)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lower_level::best_response_demand;
    use crate::scenario::{nine_device_preset, uniform_gains};
    use crate::upper_level::SolverConfig;
    use std::f64::consts::E;

    #[test]
    fn zero_processing_cost_gives_cb_over_e() {
        let mut s = nine_device_preset(0);
        s.devices[0].processing_cost = 0.0;
        let q = price_best_response(0, &s).unwrap();
        let cb = s.devices[0].accuracy.marginal_at_zero();
        assert!((q - cb / E).abs() < 1e-10);
    }

    #[test]
    fn cap_binds_below_stationary_point() {
        let mut s = nine_device_preset(0);
        s.devices[2].max_price = 1.0;
        assert_eq!(price_best_response(2, &s).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_device_is_signalled() {
        let mut s = nine_device_preset(0);
        s.devices[1].processing_cost = 1e6;
        assert!(matches!(
            price_best_response(1, &s),
            Err(Error::DegenerateDevice { device: 1, .. })
        ));
    }

    #[test]
    fn lone_device_sends_direct() {
        let mut s = nine_device_preset(0);
        s.devices.truncate(1);
        s.positions = vec![[1.0, 1.0], [4.0, 5.0]];
        s.gains = uniform_gains(2, 10.0);
        let game = Game::new(&s, SolverConfig::default()).unwrap();
        let p = StrategyProfile::all_direct(&s);
        let demand = best_response_demand(&s, &p.prices).unwrap();
        let choice = game.relay_power_best_response(0, &p, &demand, 1e8).unwrap();
        assert_eq!(choice.link.target, Target::AccessPoint);
        assert!(choice.feasible);
        assert_eq!(choice.link.power, s.devices[0].max_power / 1000.0);
    }
}
