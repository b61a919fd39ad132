//! Scenario config files.
//!
//! Three top-level keys: `devices` (one record per device), `positions`
//! (one `[x, y]` per node, access point last) and `global`. TOML is the
//! primary format; files ending in `.json` are read and written as JSON.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::{uniform_gains, AccuracyModel, DeviceParams, Scenario, DEFAULT_MAX_POWER};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub positions: Vec<[f64; 2]>,
    pub global: GlobalRecord,
    pub devices: Vec<DeviceRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceRecord {
    pub c_p: f64,
    pub c_t: f64,
    pub r_p: f64,
    #[serde(rename = "T_a")]
    pub t_a: f64,
    pub w: f64,
    pub accuracy: AccuracyModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_max: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalRecord {
    pub alpha: f64,
    pub sigma2: f64,
    #[serde(rename = "I_d")]
    pub i_d: f64,
    pub c_a: f64,
    pub h: GainSpec,
}

/// Either one gain for every pair of nodes or the full matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainSpec {
    Uniform(f64),
    Matrix(Vec<Vec<f64>>),
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario> {
        let n = self.devices.len();
        if n == 0 {
            return Err(Error::InvalidScenario("no devices".into()));
        }
        let nodes = n + 1;
        let gains = match self.global.h {
            GainSpec::Uniform(h) => uniform_gains(nodes, h),
            GainSpec::Matrix(rows) => {
                if rows.len() != nodes || rows.iter().any(|r| r.len() != nodes) {
                    return Err(Error::InvalidScenario(format!(
                        "h must be a {nodes}x{nodes} matrix"
                    )));
                }
                Array2::from_shape_fn((nodes, nodes), |(i, j)| rows[i][j])
            }
        };
        for d in &self.devices {
            d.accuracy.validate()?;
        }
        let price_floor = self
            .devices
            .iter()
            .map(|d| d.accuracy.marginal_at_zero())
            .fold(f64::INFINITY, f64::min)
            * super::PRICE_FLOOR_RATIO;
        let devices = self
            .devices
            .into_iter()
            .map(|d| DeviceParams {
                processing_cost: d.c_p,
                transmit_cost: d.c_t,
                processing_rate: d.r_p,
                averaging_time: d.t_a,
                bandwidth: d.w,
                max_demand: d
                    .s_max
                    .unwrap_or_else(|| Scenario::default_max_demand(&d.accuracy, price_floor)),
                max_price: d.q_max.unwrap_or_else(|| d.accuracy.marginal_at_zero()),
                max_power: d.p_max.unwrap_or(DEFAULT_MAX_POWER),
                accuracy: d.accuracy,
            })
            .collect();
        let scenario = Scenario {
            devices,
            positions: self.positions,
            gains,
            path_loss_exponent: self.global.alpha,
            noise_power: self.global.sigma2,
            update_size: self.global.i_d,
            relay_fee: self.global.c_a,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        let nodes = s.n_nodes();
        let first = if nodes > 1 { s.gains[[0, 1]] } else { 0.0 };
        let uniform = s
            .gains
            .indexed_iter()
            .all(|((i, j), &h)| i == j || h == first);
        let h = if uniform {
            GainSpec::Uniform(first)
        } else {
            GainSpec::Matrix(s.gains.rows().into_iter().map(|r| r.to_vec()).collect())
        };
        ScenarioFile {
            positions: s.positions.clone(),
            global: GlobalRecord {
                alpha: s.path_loss_exponent,
                sigma2: s.noise_power,
                i_d: s.update_size,
                c_a: s.relay_fee,
                h,
            },
            devices: s
                .devices
                .iter()
                .map(|d| DeviceRecord {
                    c_p: d.processing_cost,
                    c_t: d.transmit_cost,
                    r_p: d.processing_rate,
                    t_a: d.averaging_time,
                    w: d.bandwidth,
                    accuracy: d.accuracy,
                    s_max: Some(d.max_demand),
                    q_max: Some(d.max_price),
                    p_max: Some(d.max_power),
                })
                .collect(),
        }
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Scenario> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_scenario()
    }

    pub fn from_json_str(text: &str) -> Result<Scenario> {
        let file: ScenarioFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_scenario()
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(&ScenarioFile::from(self)).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(&ScenarioFile::from(self))
            .map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scenario> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        if is_json(path) {
            Scenario::from_json_str(&text)
        } else {
            Scenario::from_toml_str(&text)
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = if is_json(path) {
            self.to_json_string()?
        } else {
            self.to_toml_string()?
        };
        std::fs::write(path, text)?;
        Ok(())
    }
}

fn is_json(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{nine_device_preset, random_scenario, RandomSpec};

    const MINIMAL: &str = r#"
positions = [[0.0, 0.0], [3.0, 4.0]]

[global]
alpha = 2.0
sigma2 = 1.0
I_d = 0.1
c_a = 0.0
h = 10.0

[[devices]]
c_p = 0.004
c_t = 58.0
r_p = 88.1
T_a = 0.0121
w = 1.0
accuracy = { a = 9.78, b = 9.78, c = 15.28 }
"#;

    #[test]
    fn parses_minimal_file_with_defaults() {
        let s = Scenario::from_toml_str(MINIMAL).unwrap();
        assert_eq!(s.n_devices(), 1);
        assert_eq!(s.devices[0].averaging_time, 0.0121);
        assert_eq!(s.devices[0].max_power, DEFAULT_MAX_POWER);
        assert!((s.devices[0].max_price - 9.78 * 15.28).abs() < 1e-12);
        assert_eq!(s.gains[[0, 1]], 10.0);
    }

    #[test]
    fn zero_noise_file_is_rejected() {
        let text = MINIMAL.replace("sigma2 = 1.0", "sigma2 = 0.0");
        let err = Scenario::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("sigma2"));
    }

    #[test]
    fn preset_round_trips_through_toml_and_json() {
        let s = nine_device_preset(11);
        assert_eq!(
            Scenario::from_toml_str(&s.to_toml_string().unwrap()).unwrap(),
            s
        );
        assert_eq!(
            Scenario::from_json_str(&s.to_json_string().unwrap()).unwrap(),
            s
        );
    }

    #[test]
    fn full_gain_matrix_round_trips() {
        let mut s = random_scenario(3, 5, &RandomSpec::default()).unwrap();
        s.gains[[0, 2]] = 4.5;
        let text = s.to_toml_string().unwrap();
        let back = Scenario::from_toml_str(&text).unwrap();
        assert_eq!(back.gains, s.gains);
    }
}
