//! Problem instances: device parameters, node positions, and channel gains.
//!
//! Nodes are indexed `0..n` for the mobile devices and `n` for the access
//! point of the model owner. Every node-indexed matrix in the crate is
//! `(n + 1) x (n + 1)` with that layout.

mod file;
mod random;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

pub use file::{DeviceRecord, GainSpec, GlobalRecord, ScenarioFile};
pub use random::{random_scenario, Gaussian, RandomSpec};

/// Ratio between the global price floor and the smallest `c_i * b_i`.
pub const PRICE_FLOOR_RATIO: f64 = 1e-6;

/// Default transmit power cap used by the built-in presets.
pub const DEFAULT_MAX_POWER: f64 = 100.0;

/// Receiving end of a device's single outgoing link.
///
/// The derived ordering puts devices first, by index, and the access point
/// last. Tie-breaking in the solver relies on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Target {
    Device(usize),
    AccessPoint,
}

impl Target {
    /// Row/column of this node in an `(n + 1) x (n + 1)` matrix.
    pub fn node_index(self, n_devices: usize) -> usize {
        match self {
            Target::Device(j) => j,
            Target::AccessPoint => n_devices,
        }
    }

    pub fn from_node_index(index: usize, n_devices: usize) -> Option<Target> {
        match index {
            j if j < n_devices => Some(Target::Device(j)),
            j if j == n_devices => Some(Target::AccessPoint),
            _ => None,
        }
    }

    pub fn is_access_point(self) -> bool {
        matches!(self, Target::AccessPoint)
    }
}

/// 1-indexed device numbers and `N_D` for the access point.
impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Device(j) => write!(f, "{}", j + 1),
            Target::AccessPoint => f.write_str("N_D"),
        }
    }
}

/// Weibull-type learning-accuracy curve `f(s) = a - b * exp(-c * s)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyModel {
    #[serde(alias = "a_i")]
    pub a: f64,
    #[serde(alias = "b_i")]
    pub b: f64,
    #[serde(alias = "c_i")]
    pub c: f64,
}

impl AccuracyModel {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let model = AccuracyModel { a, b, c };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidScenario(format!(
                    "accuracy coefficient {name} = {v} must be positive and finite"
                )));
            }
        }
        Ok(())
    }

    pub fn value(&self, data: f64) -> f64 {
        self.a - self.b * (-self.c * data).exp()
    }

    /// `c * b`: the marginal accuracy at zero data, and the price above which
    /// the owner buys nothing.
    pub fn marginal_at_zero(&self) -> f64 {
        self.c * self.b
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeviceParams {
    /// Energy cost per unit of processed data (`c^p`).
    pub processing_cost: f64,
    /// Cost per unit of transmit power per unit of time (`c^t`).
    pub transmit_cost: f64,
    /// Data units processed per unit of time (`r^p`).
    pub processing_rate: f64,
    /// Time spent averaging in one received update (`T^a`).
    pub averaging_time: f64,
    pub bandwidth: f64,
    pub accuracy: AccuracyModel,
    /// Upper bound on the owner's demand (`s^{d,u}`).
    pub max_demand: f64,
    /// Upper bound on the device's price (`q^u`).
    pub max_price: f64,
    /// Upper bound on transmit power (`P^u`).
    pub max_power: f64,
}

impl DeviceParams {
    fn validate(&self, index: usize) -> Result<()> {
        self.accuracy.validate()?;
        let fields = [
            ("c_p", self.processing_cost),
            ("c_t", self.transmit_cost),
            ("r_p", self.processing_rate),
            ("T_a", self.averaging_time),
            ("w", self.bandwidth),
            ("s_max", self.max_demand),
            ("q_max", self.max_price),
            ("p_max", self.max_power),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidScenario(format!(
                    "device {}: {name} = {v} must be positive and finite",
                    index + 1
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub devices: Vec<DeviceParams>,
    /// One 2-D coordinate per node; the access point is last.
    pub positions: Vec<[f64; 2]>,
    /// Raw channel gains `h_ij` over all nodes.
    pub gains: Array2<f64>,
    pub path_loss_exponent: f64,
    pub noise_power: f64,
    /// Size of one model update (`I^d`).
    pub update_size: f64,
    /// Fee paid to a relay per forwarded update (`c^a`).
    pub relay_fee: f64,
}

impl Scenario {
    pub fn n_devices(&self) -> usize {
        self.devices.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.devices.len() + 1
    }

    pub fn access_point(&self) -> usize {
        self.devices.len()
    }

    pub fn device(&self, i: usize) -> &DeviceParams {
        &self.devices[i]
    }

    /// Smallest admissible price: a fixed fraction of the smallest `c_i b_i`.
    pub fn price_floor(&self) -> f64 {
        self.devices
            .iter()
            .map(|d| d.accuracy.marginal_at_zero())
            .fold(f64::INFINITY, f64::min)
            * PRICE_FLOOR_RATIO
    }

    /// Demand cap that only binds at the price floor: `ln(c b / q_min) / c`.
    pub fn default_max_demand(accuracy: &AccuracyModel, price_floor: f64) -> f64 {
        (accuracy.marginal_at_zero() / price_floor).ln() / accuracy.c
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let [xi, yi] = self.positions[i];
        let [xj, yj] = self.positions[j];
        (xi - xj).hypot(yi - yj)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_devices();
        if n == 0 {
            return Err(Error::InvalidScenario("no devices".into()));
        }
        for (i, d) in self.devices.iter().enumerate() {
            d.validate(i)?;
        }
        if self.positions.len() != n + 1 {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                got: self.positions.len(),
            });
        }
        if self.positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidScenario("non-finite position".into()));
        }
        if self.gains.dim() != (n + 1, n + 1) {
            return Err(Error::InvalidScenario(format!(
                "gain matrix is {:?}, expected {}x{}",
                self.gains.dim(),
                n + 1,
                n + 1
            )));
        }
        for ((i, j), &h) in self.gains.indexed_iter() {
            if i != j && !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidScenario(format!(
                    "h[{i}][{j}] = {h} must be positive and finite"
                )));
            }
        }
        for i in 0..=n {
            for j in (i + 1)..=n {
                if self.distance(i, j) == 0.0 {
                    return Err(Error::CoincidentNodes {
                        first: i,
                        second: j,
                    });
                }
            }
        }
        if !(self.path_loss_exponent >= 2.0 && self.path_loss_exponent.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "alpha = {} must be at least 2",
                self.path_loss_exponent
            )));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "sigma2 = {} must be positive",
                self.noise_power
            )));
        }
        if !(self.update_size > 0.0 && self.update_size.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "I_d = {} must be positive",
                self.update_size
            )));
        }
        if !(self.relay_fee >= 0.0 && self.relay_fee.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "c_a = {} must be non-negative",
                self.relay_fee
            )));
        }
        Ok(())
    }
}

/// Path-loss-adjusted gains `H_ij = h_ij / d_ij^alpha`, zero on the diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelMatrix(Array2<f64>);

impl ChannelMatrix {
    pub fn gain(&self, from: usize, to: usize) -> f64 {
        self.0[[from, to]]
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn n_nodes(&self) -> usize {
        self.0.nrows()
    }
}

pub fn build_channel_matrix(scenario: &Scenario) -> Result<ChannelMatrix> {
    let nodes = scenario.n_nodes();
    if scenario.positions.len() != nodes || scenario.gains.dim() != (nodes, nodes) {
        return Err(Error::DimensionMismatch {
            expected: nodes,
            got: scenario.positions.len(),
        });
    }
    let mut out = Array2::zeros((nodes, nodes));
    for i in 0..nodes {
        for j in 0..nodes {
            if i == j {
                continue;
            }
            let d = scenario.distance(i, j);
            if d == 0.0 {
                return Err(Error::CoincidentNodes {
                    first: i.min(j),
                    second: i.max(j),
                });
            }
            out[[i, j]] = scenario.gains[[i, j]] / d.powf(scenario.path_loss_exponent);
        }
    }
    Ok(ChannelMatrix(out))
}

const PRESET_TRANSMIT_COST: [f64; 9] = [58.0, 61.0, 51.5, 58.5, 95.0, 46.0, 175.0, 124.5, 31.0];
const PRESET_PROCESSING_COST: [f64; 9] = [4.3, 8.5, 13.6, 9.5, 9.8, 6.7, 8.1, 5.5, 11.2];
// Ten rates are listed for nine devices; the first nine are used.
const PRESET_PROCESSING_RATE: [f64; 10] = [
    8.81, 8.93, 9.725, 6.165, 4.15, 4.195, 6.525, 8.215, 5.105, 5.96,
];
const PRESET_AVERAGING_TIME: [f64; 9] = [1.21, 1.29, 0.53, 1.07, 1.07, 0.95, 1.3, 0.88, 0.72];
const PRESET_DECAY: [f64; 9] = [15.28, 9.17, 14.31, 11.21, 9.12, 13.61, 13.27, 9.63, 14.32];
const PRESET_SCALE: [f64; 9] = [9.78, 9.15, 11.35, 11.17, 12.7, 9.15, 12.38, 13.5, 10.59];

/// The nine-device reference instance.
///
/// Device parameters are fixed; node positions are drawn uniformly on
/// `[0, 10]^2` from `seed`, with the access point drawn last.
pub fn nine_device_preset(seed: u64) -> Scenario {
    let accuracy: Vec<AccuracyModel> = (0..9)
        .map(|i| AccuracyModel {
            a: PRESET_SCALE[i],
            b: PRESET_SCALE[i],
            c: PRESET_DECAY[i],
        })
        .collect();
    let floor = accuracy
        .iter()
        .map(AccuracyModel::marginal_at_zero)
        .fold(f64::INFINITY, f64::min)
        * PRICE_FLOOR_RATIO;
    let devices = (0..9)
        .map(|i| DeviceParams {
            processing_cost: PRESET_PROCESSING_COST[i] * 1e-3,
            transmit_cost: PRESET_TRANSMIT_COST[i],
            processing_rate: PRESET_PROCESSING_RATE[i] * 10.0,
            averaging_time: PRESET_AVERAGING_TIME[i] * 1e-2,
            bandwidth: 1.0,
            accuracy: accuracy[i],
            max_demand: Scenario::default_max_demand(&accuracy[i], floor),
            max_price: accuracy[i].marginal_at_zero(),
            max_power: DEFAULT_MAX_POWER,
        })
        .collect();
    let positions = random::uniform_positions(10, seed);
    Scenario {
        devices,
        positions,
        gains: uniform_gains(10, 10.0),
        path_loss_exponent: 2.0,
        noise_power: 1.0,
        update_size: 0.1,
        relay_fee: 0.0096,
    }
}

/// Off-diagonal entries set to `h`, zero diagonal.
pub fn uniform_gains(nodes: usize, h: f64) -> Array2<f64> {
    Array2::from_shape_fn((nodes, nodes), |(i, j)| if i == j { 0.0 } else { h })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node(positions: [[f64; 2]; 2], h: f64, alpha: f64) -> Scenario {
        let mut s = nine_device_preset(0);
        s.devices.truncate(1);
        s.positions = positions.to_vec();
        s.gains = uniform_gains(2, h);
        s.path_loss_exponent = alpha;
        s
    }

    #[test]
    fn channel_gain_at_sqrt_ten() {
        let s = two_node([[0.0, 0.0], [1.0, 3.0]], 10.0, 2.0);
        let h = build_channel_matrix(&s).unwrap();
        assert!((h.gain(0, 1) - 1.0).abs() < 1e-12);
        assert_eq!(h.gain(0, 0), 0.0);
    }

    #[test]
    fn channel_gain_at_unit_distance() {
        let s = two_node([[0.0, 0.0], [0.0, 1.0]], 10.0, 2.0);
        let h = build_channel_matrix(&s).unwrap();
        assert_eq!(h.gain(1, 0), 10.0);
    }

    #[test]
    fn coincident_positions_rejected() {
        let s = two_node([[2.0, 2.0], [2.0, 2.0]], 10.0, 2.0);
        assert!(matches!(
            build_channel_matrix(&s),
            Err(Error::CoincidentNodes {
                first: 0,
                second: 1
            })
        ));
        assert!(s.validate().is_err());
    }

    #[test]
    fn preset_values() {
        let s = nine_device_preset(7);
        assert_eq!(s.n_devices(), 9);
        assert_eq!(s.relay_fee, 0.0096);
        assert_eq!(s.update_size, 0.1);
        assert!((s.devices[3].processing_rate - 61.65).abs() < 1e-12);
        assert_eq!(s.devices[0].accuracy.c, 15.28);
        assert!((s.devices[8].processing_cost - 0.0112).abs() < 1e-15);
        assert!((s.devices[6].averaging_time - 0.013).abs() < 1e-15);
        for d in &s.devices {
            assert_eq!(d.accuracy.a, d.accuracy.b);
        }
        s.validate().unwrap();
    }

    #[test]
    fn preset_positions_follow_seed() {
        assert_eq!(
            nine_device_preset(3).positions,
            nine_device_preset(3).positions
        );
        assert_ne!(
            nine_device_preset(3).positions,
            nine_device_preset(4).positions
        );
    }

    #[test]
    fn zero_noise_is_invalid() {
        let mut s = nine_device_preset(1);
        s.noise_power = 0.0;
        assert!(matches!(s.validate(), Err(Error::InvalidScenario(_))));
    }

    #[test]
    fn default_demand_cap_binds_at_floor() {
        let s = nine_device_preset(1);
        let floor = s.price_floor();
        for d in &s.devices {
            let at_floor = (d.accuracy.marginal_at_zero() / floor).ln() / d.accuracy.c;
            assert!((d.max_demand - at_floor).abs() < 1e-12);
        }
    }

    #[test]
    fn target_ordering_puts_access_point_last() {
        let mut v = vec![Target::AccessPoint, Target::Device(3), Target::Device(0)];
        v.sort();
        assert_eq!(
            v,
            [Target::Device(0), Target::Device(3), Target::AccessPoint]
        );
        assert_eq!(Target::Device(2).to_string(), "3");
        assert_eq!(Target::AccessPoint.to_string(), "N_D");
    }
}
