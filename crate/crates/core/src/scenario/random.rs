use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{uniform_gains, AccuracyModel, DeviceParams, Scenario, PRICE_FLOOR_RATIO};
use crate::error::{Error, Result};

/// Side length of the square on which nodes are placed.
pub const FIELD_SIZE: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: f64,
    pub std: f64,
}

impl Gaussian {
    pub const fn new(mean: f64, std: f64) -> Self {
        Gaussian { mean, std }
    }

    fn sampler(&self, name: &str) -> Result<Normal<f64>> {
        if !self.mean.is_finite() || !self.std.is_finite() || self.std < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "{name}: mean {} / std {} must be finite with std >= 0",
                self.mean, self.std
            )));
        }
        Normal::new(self.mean, self.std).map_err(|e| Error::InvalidSpec(format!("{name}: {e}")))
    }
}

/// Distribution parameters for [`random_scenario`].
///
/// Per-device quantities are Gaussian and clamped below at `floor`; global
/// quantities are fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub transmit_cost: Gaussian,
    pub processing_cost: Gaussian,
    pub processing_rate: Gaussian,
    pub averaging_time: Gaussian,
    pub accuracy_scale: Gaussian,
    pub accuracy_decay: Gaussian,
    /// Draw `a` independently instead of setting `a = b`.
    pub independent_asymptote: Option<Gaussian>,
    pub bandwidth: f64,
    pub max_power: f64,
    pub floor: f64,
    pub h: f64,
    pub alpha: f64,
    pub sigma2: f64,
    pub update_size: f64,
    pub relay_fee: f64,
}

impl Default for RandomSpec {
    /// Moments of the nine-device reference instance.
    fn default() -> Self {
        RandomSpec {
            transmit_cost: Gaussian::new(77.8, 43.7),
            processing_cost: Gaussian::new(8.6e-3, 2.8e-3),
            processing_rate: Gaussian::new(68.7, 20.7),
            averaging_time: Gaussian::new(1.0e-2, 0.26e-2),
            accuracy_scale: Gaussian::new(11.1, 1.6),
            accuracy_decay: Gaussian::new(12.2, 2.5),
            independent_asymptote: None,
            bandwidth: 1.0,
            max_power: super::DEFAULT_MAX_POWER,
            floor: 1e-6,
            h: 10.0,
            alpha: 2.0,
            sigma2: 1.0,
            update_size: 0.1,
            relay_fee: 0.0096,
        }
    }
}

pub(super) fn uniform_positions(nodes: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw_positions(&mut rng, nodes)
}

fn draw_positions(rng: &mut impl Rng, nodes: usize) -> Vec<[f64; 2]> {
    (0..nodes)
        .map(|_| {
            [
                rng.random_range(0.0..FIELD_SIZE),
                rng.random_range(0.0..FIELD_SIZE),
            ]
        })
        .collect()
}

/// Generates an `n`-device scenario, deterministic in `(n, seed, spec)`.
pub fn random_scenario(n: usize, seed: u64, spec: &RandomSpec) -> Result<Scenario> {
    if n == 0 {
        return Err(Error::InvalidSpec("device count must be at least 1".into()));
    }
    if !(spec.floor > 0.0 && spec.floor.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "floor {} must be positive",
            spec.floor
        )));
    }
    let transmit = spec.transmit_cost.sampler("transmit_cost")?;
    let processing = spec.processing_cost.sampler("processing_cost")?;
    let rate = spec.processing_rate.sampler("processing_rate")?;
    let averaging = spec.averaging_time.sampler("averaging_time")?;
    let scale = spec.accuracy_scale.sampler("accuracy_scale")?;
    let decay = spec.accuracy_decay.sampler("accuracy_decay")?;
    let asymptote = spec
        .independent_asymptote
        .map(|g| g.sampler("independent_asymptote"))
        .transpose()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = draw_positions(&mut rng, n + 1);
    let floor = spec.floor;
    let mut draw = |dist: &Normal<f64>| dist.sample(&mut rng).max(floor);

    let mut partial = Vec::with_capacity(n);
    for _ in 0..n {
        let transmit_cost = draw(&transmit);
        let processing_cost = draw(&processing);
        let processing_rate = draw(&rate);
        let averaging_time = draw(&averaging);
        let b = draw(&scale);
        let c = draw(&decay);
        let a = asymptote.as_ref().map_or(b, &mut draw);
        partial.push((
            transmit_cost,
            processing_cost,
            processing_rate,
            averaging_time,
            AccuracyModel { a, b, c },
        ));
    }

    let price_floor = partial
        .iter()
        .map(|p| p.4.marginal_at_zero())
        .fold(f64::INFINITY, f64::min)
        * PRICE_FLOOR_RATIO;
    let devices = partial
        .into_iter()
        .map(
            |(transmit_cost, processing_cost, processing_rate, averaging_time, accuracy)| {
                DeviceParams {
                    processing_cost,
                    transmit_cost,
                    processing_rate,
                    averaging_time,
                    bandwidth: spec.bandwidth,
                    accuracy,
                    max_demand: Scenario::default_max_demand(&accuracy, price_floor),
                    max_price: accuracy.marginal_at_zero(),
                    max_power: spec.max_power,
                }
            },
        )
        .collect();

    let scenario = Scenario {
        devices,
        positions,
        gains: uniform_gains(n + 1, spec.h),
        path_loss_exponent: spec.alpha,
        noise_power: spec.sigma2,
        update_size: spec.update_size,
        relay_fee: spec.relay_fee,
    };
    scenario.validate()?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn deterministic_in_seed() {
        let spec = RandomSpec::default();
        let a = random_scenario(6, 42, &spec).unwrap();
        let b = random_scenario(6, 42, &spec).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_scenario(6, 43, &spec).unwrap());
    }

    #[test]
    fn zero_std_gives_mean() {
        let mut spec = RandomSpec::default();
        for g in [
            &mut spec.transmit_cost,
            &mut spec.processing_cost,
            &mut spec.processing_rate,
            &mut spec.averaging_time,
            &mut spec.accuracy_scale,
            &mut spec.accuracy_decay,
        ] {
            g.std = 0.0;
        }
        let s = random_scenario(5, 9, &spec).unwrap();
        for d in &s.devices {
            assert_eq!(d, &s.devices[0]);
            assert_eq!(d.transmit_cost, spec.transmit_cost.mean);
            assert_eq!(d.accuracy.c, spec.accuracy_decay.mean);
        }
    }

    #[test]
    fn rejects_zero_devices_and_negative_std() {
        let spec = RandomSpec::default();
        assert!(matches!(
            random_scenario(0, 1, &spec),
            Err(Error::InvalidSpec(_))
        ));
        let mut bad = spec.clone();
        bad.processing_rate.std = -1.0;
        assert!(matches!(
            random_scenario(3, 1, &bad),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn floor_clamps_negative_draws() {
        let spec = RandomSpec {
            processing_cost: Gaussian::new(-5.0, 0.0),
            ..RandomSpec::default()
        };
        let s = random_scenario(3, 1, &spec).unwrap();
        assert!(s.devices.iter().all(|d| d.processing_cost == spec.floor));
    }

    proptest! {
        #[test]
        fn generated_scenarios_are_valid(seed in any::<u64>(), n in 1usize..12) {
            let s = random_scenario(n, seed, &RandomSpec::default()).unwrap();
            prop_assert!(s.validate().is_ok());
            prop_assert_eq!(s.positions.len(), n + 1);
            for p in &s.positions {
                prop_assert!((0.0..=FIELD_SIZE).contains(&p[0]));
                prop_assert!((0.0..=FIELD_SIZE).contains(&p[1]));
            }
        }
    }
}
