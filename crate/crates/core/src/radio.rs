//! Interference-coupled transmission rates and transmit energy.
//!
//! Devices that send to the same receiver share its channel and interfere
//! with one another; devices aimed at different receivers do not.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::routing::IndicatorMatrix;
use crate::scenario::{ChannelMatrix, Scenario, Target};

/// Dense transmit powers `P_ij` over all nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerMatrix(Array2<f64>);

impl PowerMatrix {
    pub fn zeros(n_devices: usize) -> Self {
        PowerMatrix(Array2::zeros((n_devices + 1, n_devices + 1)))
    }

    pub fn from_array(array: Array2<f64>) -> Result<Self> {
        if array.nrows() != array.ncols() || array.nrows() < 2 {
            return Err(Error::InvalidArgument(format!(
                "power matrix must be square over at least two nodes, got {:?}",
                array.dim()
            )));
        }
        if array.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidArgument(
                "powers must be finite and non-negative".into(),
            ));
        }
        Ok(PowerMatrix(array))
    }

    pub fn n_devices(&self) -> usize {
        self.0.nrows() - 1
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.0[[from, to]]
    }

    pub fn set(&mut self, from: usize, to: usize, power: f64) {
        self.0[[from, to]] = power;
    }

    pub fn row_total(&self, device: usize) -> f64 {
        self.0.row(device).sum()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }
}

/// A device's single outgoing transmission.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub target: Target,
    pub power: f64,
}

/// One [`Link`] per device: the sparse form of a power matrix whose rows
/// each hold a single positive entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerAssignment {
    links: Vec<Link>,
}

impl PowerAssignment {
    pub fn new(links: Vec<Link>, scenario: &Scenario) -> Result<Self> {
        let n = scenario.n_devices();
        if links.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: links.len(),
            });
        }
        for (i, link) in links.iter().enumerate() {
            if let Target::Device(j) = link.target {
                if j == i {
                    return Err(Error::InvalidArgument(format!(
                        "device {} targets itself",
                        i + 1
                    )));
                }
                if j >= n {
                    return Err(Error::InvalidArgument(format!(
                        "device {} targets unknown device {}",
                        i + 1,
                        j + 1
                    )));
                }
            }
            let cap = scenario.devices[i].max_power;
            if !(link.power >= 0.0 && link.power <= cap) {
                return Err(Error::InvalidArgument(format!(
                    "device {}: power {} outside [0, {cap}]",
                    i + 1,
                    link.power
                )));
            }
        }
        Ok(PowerAssignment { links })
    }

    /// Skips validation; used inside the solver where links are built from
    /// already-checked candidates.
    pub(crate) fn from_links_unchecked(links: Vec<Link>) -> Self {
        PowerAssignment { links }
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, device: usize) -> Link {
        self.links[device]
    }

    pub(crate) fn set_link(&mut self, device: usize, link: Link) {
        self.links[device] = link;
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn to_matrix(&self) -> PowerMatrix {
        let n = self.links.len();
        let mut p = PowerMatrix::zeros(n);
        for (i, link) in self.links.iter().enumerate() {
            p.set(i, link.target.node_index(n), link.power);
        }
        p
    }
}

/// Shannon rate `w * log2(1 + signal / (interference + noise))`.
pub fn shannon_rate(bandwidth: f64, signal: f64, interference_plus_noise: f64) -> f64 {
    bandwidth * (signal / interference_plus_noise).ln_1p() / LN_2
}

/// Rate of device `i` under powers `powers`.
///
/// The co-channel term is `H_I(:, i) . P_I(:, i)` with `H_I = H I^T` and
/// `P_I = P I^T`, i.e. the total power received at `i`'s receiver from every
/// device aimed at it, including `i` itself.
pub fn transmission_rate(
    i: usize,
    powers: &PowerMatrix,
    channel: &ChannelMatrix,
    scenario: &Scenario,
) -> Result<f64> {
    let indicator = IndicatorMatrix::from_powers(powers);
    rate_for_device(i, powers, &indicator, channel, scenario)
}

fn rate_for_device(
    i: usize,
    powers: &PowerMatrix,
    indicator: &IndicatorMatrix,
    channel: &ChannelMatrix,
    scenario: &Scenario,
) -> Result<f64> {
    let nodes = powers.n_devices() + 1;
    let h = channel.as_array();
    let p = powers.as_array();
    let signal: f64 = (0..nodes).map(|j| h[[i, j]] * p[[i, j]]).sum();
    if !(signal > 0.0) {
        return Err(Error::Silent { device: i });
    }
    let mut interference = 0.0;
    let mut own = 0.0;
    for k in 0..nodes {
        let mut h_k = 0.0;
        let mut p_k = 0.0;
        for j in 0..nodes {
            if indicator.get(i, j) {
                h_k += h[[k, j]];
                p_k += p[[k, j]];
            }
        }
        if k == i {
            own = h_k * p_k;
        } else {
            interference += h_k * p_k;
        }
    }
    // own - signal vanishes for a single link; kept apart to avoid cancellation
    let denominator = interference + (own - signal) + scenario.noise_power;
    if !(denominator > 0.0) {
        return Err(Error::NonPositiveDenominator {
            device: i,
            value: denominator,
        });
    }
    Ok(shannon_rate(
        scenario.devices[i].bandwidth,
        signal,
        denominator,
    ))
}

/// Rates of every device; `None` marks a device with no transmission.
pub fn transmission_rates(
    powers: &PowerMatrix,
    channel: &ChannelMatrix,
    scenario: &Scenario,
) -> Result<Vec<Option<f64>>> {
    let indicator = IndicatorMatrix::from_powers(powers);
    (0..powers.n_devices())
        .map(
            |i| match rate_for_device(i, powers, &indicator, channel, scenario) {
                Ok(r) => Ok(Some(r)),
                Err(Error::Silent { .. }) => Ok(None),
                Err(e) => Err(e),
            },
        )
        .collect()
}

/// `c^t * (I^d / r) * sum_j P_ij`: the energy bill for one upload.
pub fn transmission_energy_cost(
    i: usize,
    powers: &PowerMatrix,
    rate: Option<f64>,
    scenario: &Scenario,
) -> Result<f64> {
    let total = powers.row_total(i);
    if total == 0.0 {
        return Ok(0.0);
    }
    match rate {
        Some(r) if r > 0.0 => {
            Ok(scenario.devices[i].transmit_cost * scenario.update_size / r * total)
        }
        _ => Err(Error::ZeroRate { device: i }),
    }
}

/// Smallest power letting device `i` reach `target_rate` toward `target`,
/// with co-channel interference held at `external_interference`.
///
/// Returns [`Error::PowerLimit`] carrying the required power when it exceeds
/// the device's cap.
pub fn min_power_for_rate(
    i: usize,
    target: Target,
    target_rate: f64,
    external_interference: f64,
    channel: &ChannelMatrix,
    scenario: &Scenario,
) -> Result<f64> {
    if !(target_rate > 0.0 && target_rate.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "target rate {target_rate} must be positive and finite"
        )));
    }
    let device = &scenario.devices[i];
    let gain = channel.gain(i, target.node_index(scenario.n_devices()));
    if !(gain > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "device {} has no channel to {target}",
            i + 1
        )));
    }
    let sinr = (target_rate / device.bandwidth * LN_2).exp_m1();
    let required = sinr * (external_interference + scenario.noise_power) / gain;
    if required > device.max_power || !required.is_finite() {
        return Err(Error::PowerLimit {
            device: i,
            required,
            limit: device.max_power,
        });
    }
    Ok(required)
}

/// Co-channel power at `target`'s receiver from every device except `i`.
pub fn external_interference(
    i: usize,
    target: Target,
    assignment: &PowerAssignment,
    channel: &ChannelMatrix,
) -> f64 {
    let n = assignment.len();
    let node = target.node_index(n);
    assignment
        .links()
        .iter()
        .enumerate()
        .filter(|&(k, l)| k != i && l.target == target)
        .map(|(k, l)| channel.gain(k, node) * l.power)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{build_channel_matrix, random_scenario, uniform_gains, RandomSpec};
    use proptest::prelude::*;

    /// Two devices on a line with a unit gain toward the access point.
    fn unit_scenario() -> (Scenario, ChannelMatrix) {
        let mut s = random_scenario(2, 1, &RandomSpec::default()).unwrap();
        s.positions = vec![[0.0, 0.0], [0.0, 2.0], [0.0, 1.0]];
        s.gains = uniform_gains(3, 1.0);
        s.path_loss_exponent = 2.0;
        for d in &mut s.devices {
            d.bandwidth = 1.0;
        }
        let h = build_channel_matrix(&s).unwrap();
        (s, h)
    }

    #[test]
    fn sole_transmitter_at_unit_sinr() {
        let (s, h) = unit_scenario();
        let mut p = PowerMatrix::zeros(2);
        p.set(0, 2, 1.0);
        assert!((transmission_rate(0, &p, &h, &s).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn silent_device_has_no_rate() {
        let (s, h) = unit_scenario();
        let p = PowerMatrix::zeros(2);
        assert!(matches!(
            transmission_rate(0, &p, &h, &s),
            Err(Error::Silent { device: 0 })
        ));
        assert_eq!(transmission_rates(&p, &h, &s).unwrap(), vec![None, None]);
    }

    #[test]
    fn co_channel_devices_interfere() {
        let (s, h) = unit_scenario();
        let mut p = PowerMatrix::zeros(2);
        p.set(0, 2, 1.0);
        p.set(1, 2, 1.0);
        // each sees signal 1 against interference 1 plus noise 1
        let expected = (1.5f64).log2();
        let rates = transmission_rates(&p, &h, &s).unwrap();
        assert!((rates[0].unwrap() - expected).abs() < 1e-15);
        assert!((rates[1].unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn energy_cost_cases() {
        let (mut s, _) = unit_scenario();
        s.devices[0].transmit_cost = 1.0;
        s.update_size = 1.0;
        let mut p = PowerMatrix::zeros(2);
        assert_eq!(transmission_energy_cost(0, &p, None, &s).unwrap(), 0.0);
        p.set(0, 2, 2.0);
        assert_eq!(transmission_energy_cost(0, &p, Some(1.0), &s).unwrap(), 2.0);
        assert!(matches!(
            transmission_energy_cost(0, &p, Some(0.0), &s),
            Err(Error::ZeroRate { device: 0 })
        ));
    }

    #[test]
    fn min_power_inverts_unit_sinr() {
        let (s, h) = unit_scenario();
        let p = min_power_for_rate(0, Target::AccessPoint, 1.0, 0.0, &h, &s).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
        let tiny = min_power_for_rate(0, Target::AccessPoint, 1e-12, 0.0, &h, &s).unwrap();
        assert!(tiny < 1e-11);
    }

    #[test]
    fn min_power_reports_limit() {
        let (s, h) = unit_scenario();
        let err = min_power_for_rate(0, Target::AccessPoint, 60.0, 0.0, &h, &s).unwrap_err();
        match err {
            Error::PowerLimit {
                required, limit, ..
            } => assert!(required > limit),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn min_power_round_trips(
            seed in any::<u64>(),
            rate in 0.01f64..8.0,
            interference in 0.0f64..50.0,
        ) {
            let mut s = random_scenario(2, seed, &RandomSpec::default()).unwrap();
            for d in &mut s.devices {
                d.max_power = 1e12;
            }
            let h = build_channel_matrix(&s).unwrap();
            let p = min_power_for_rate(0, Target::AccessPoint, rate, interference, &h, &s).unwrap();
            let g = h.gain(0, 2);
            let back = shannon_rate(s.devices[0].bandwidth, g * p, interference + s.noise_power);
            prop_assert!(((back - rate) / rate).abs() < 1e-9);
        }

        #[test]
        fn rate_monotone_in_own_and_rival_power(
            seed in any::<u64>(),
            own in 0.1f64..50.0,
            rival in 0.1f64..50.0,
            bump in 1.01f64..3.0,
        ) {
            let s = random_scenario(2, seed, &RandomSpec::default()).unwrap();
            let h = build_channel_matrix(&s).unwrap();
            let at = |own: f64, rival: f64| {
                let mut p = PowerMatrix::zeros(2);
                p.set(0, 2, own);
                p.set(1, 2, rival);
                transmission_rate(0, &p, &h, &s).unwrap()
            };
            let base = at(own, rival);
            prop_assert!(at(own * bump, rival) > base);
            prop_assert!(at(own, rival * bump) < base);
        }
    }
}
