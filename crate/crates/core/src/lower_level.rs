//! The model owner's subgame: how much training data to buy from each
//! device given their prices.
//!
//! The owner's utility is separable across devices, so the best response is
//! one closed-form expression per device.

use serde::{Deserialize, Serialize};
use std::ops::Deref;

use crate::error::{Error, Result};
use crate::scenario::{AccuracyModel, Scenario};

/// Price per unit of training data, one per device.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriceVector(Vec<f64>);

/// Training-data size bought from each device.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DemandVector(Vec<f64>);

macro_rules! vector_newtype {
    ($name:ident) => {
        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                $name(v)
            }
        }

        impl $name {
            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }

            pub fn set(&mut self, i: usize, value: f64) {
                self.0[i] = value;
            }
        }
    };
}

vector_newtype!(PriceVector);
vector_newtype!(DemandVector);

pub fn accuracy(model: &AccuracyModel, data: f64) -> f64 {
    model.value(data)
}

/// `sum_i f_i(s_i) - q_i s_i`.
pub fn owner_utility(scenario: &Scenario, demand: &[f64], prices: &[f64]) -> Result<f64> {
    let n = scenario.n_devices();
    for len in [demand.len(), prices.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: len,
            });
        }
    }
    Ok(scenario
        .devices
        .iter()
        .zip(demand.iter().zip(prices))
        .map(|(d, (&s, &q))| d.accuracy.value(s) - q * s)
        .sum())
}

/// Unconstrained stationary point `ln(c b / q) / c`, clamped to
/// `[0, max_demand]`.
pub fn best_response_demand_for(model: &AccuracyModel, max_demand: f64, price: f64) -> f64 {
    let interior = (model.marginal_at_zero() / price).ln() / model.c;
    interior.clamp(0.0, max_demand)
}

pub fn best_response_demand(scenario: &Scenario, prices: &[f64]) -> Result<DemandVector> {
    let n = scenario.n_devices();
    if prices.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: prices.len(),
        });
    }
    scenario
        .devices
        .iter()
        .zip(prices)
        .enumerate()
        .map(|(i, (d, &q))| {
            if !(q > 0.0) || !q.is_finite() {
                return Err(Error::NonPositivePrice {
                    device: i,
                    price: q,
                });
            }
            Ok(best_response_demand_for(&d.accuracy, d.max_demand, q))
        })
        .collect::<Result<Vec<_>>>()
        .map(DemandVector)
}

/// Diagonal of the owner's Hessian at the best response. Off-diagonal
/// entries are identically zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcavityCertificate {
    pub demand: Vec<f64>,
    pub hessian_diagonal: Vec<f64>,
    pub negative_definite: bool,
}

/// `f_i''(s) = -c^2 b exp(-c s)`.
pub fn accuracy_curvature(model: &AccuracyModel, data: f64) -> f64 {
    -model.c * model.c * model.b * (-model.c * data).exp()
}

pub fn concavity_certificate(scenario: &Scenario, prices: &[f64]) -> Result<ConcavityCertificate> {
    let demand = best_response_demand(scenario, prices)?;
    let hessian_diagonal: Vec<f64> = scenario
        .devices
        .iter()
        .zip(demand.iter())
        .map(|(d, &s)| accuracy_curvature(&d.accuracy, s))
        .collect();
    let negative_definite = hessian_diagonal.iter().all(|&h| h < 0.0);
    Ok(ConcavityCertificate {
        demand: demand.into_inner(),
        hessian_diagonal,
        negative_definite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::nine_device_preset;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn series_exp_neg(x: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            term *= -x / k as f64;
            sum += term;
        }
        sum
    }

    #[test]
    fn accuracy_endpoints() {
        let m = AccuracyModel {
            a: 3.0,
            b: 2.0,
            c: 1.5,
        };
        assert_eq!(accuracy(&m, 0.0), 1.0);
        assert!((accuracy(&m, 200.0) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn accuracy_matches_series() {
        let m = AccuracyModel {
            a: 9.78,
            b: 9.78,
            c: 15.28,
        };
        let expected = 9.78 * (1.0 - series_exp_neg(1.528));
        assert!((accuracy(&m, 0.1) - expected).abs() < 1e-12);
    }

    #[test]
    fn utility_at_zero_demand() {
        let s = nine_device_preset(0);
        let prices = vec![1.0; 9];
        // a = b everywhere, so the zero-data accuracy vanishes
        assert_eq!(owner_utility(&s, &[0.0; 9], &prices).unwrap(), 0.0);
        let mut t = s.clone();
        t.devices[0].accuracy.a = 10.0;
        let u = owner_utility(&t, &[0.0; 9], &prices).unwrap();
        assert!((u - (10.0 - 9.78)).abs() < 1e-12);
    }

    #[test]
    fn closed_form_special_prices() {
        let s = nine_device_preset(0);
        let cb: Vec<f64> = s
            .devices
            .iter()
            .map(|d| d.accuracy.marginal_at_zero())
            .collect();
        let at_ceiling = best_response_demand(&s, &cb).unwrap();
        assert!(at_ceiling.iter().all(|&x| x == 0.0));
        let over_e: Vec<f64> = cb.iter().map(|v| v / E).collect();
        let unit = best_response_demand(&s, &over_e).unwrap();
        for (d, x) in s.devices.iter().zip(unit.iter()) {
            assert!((x - 1.0 / d.accuracy.c).abs() < 1e-14);
        }
        let above: Vec<f64> = cb.iter().map(|v| v * 2.0).collect();
        assert!(best_response_demand(&s, &above)
            .unwrap()
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn rejects_non_positive_price() {
        let s = nine_device_preset(0);
        let mut q = vec![1.0; 9];
        q[4] = 0.0;
        assert!(matches!(
            best_response_demand(&s, &q),
            Err(Error::NonPositivePrice { device: 4, .. })
        ));
    }

    #[test]
    fn certificate_at_zero_demand() {
        let s = nine_device_preset(0);
        let cb: Vec<f64> = s
            .devices
            .iter()
            .map(|d| d.accuracy.marginal_at_zero())
            .collect();
        let cert = concavity_certificate(&s, &cb).unwrap();
        assert!(cert.negative_definite);
        for (d, h) in s.devices.iter().zip(&cert.hessian_diagonal) {
            let m = d.accuracy;
            assert!((h + m.c * m.c * m.b).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn curvature_matches_central_difference(i in 0usize..9, frac in 0.01f64..0.99) {
            let s = nine_device_preset(0);
            let m = s.devices[i].accuracy;
            let q = s.price_floor().max(frac * m.marginal_at_zero());
            let cert = concavity_certificate(&s, &[q; 9]).unwrap();
            let x = best_response_demand_for(&m, s.devices[i].max_demand, q);
            let h = 1e-4;
            let fd = (m.value(x + h) - 2.0 * m.value(x) + m.value(x - h)) / (h * h);
            let analytic = cert.hessian_diagonal[i];
            prop_assert!(((fd - analytic) / analytic).abs() < 1e-4);
            prop_assert!(cert.negative_definite);
        }

        #[test]
        fn demand_monotone_in_own_price_only(i in 0usize..9, lo in 0.01f64..0.5, hi in 0.5f64..1.0) {
            let s = nine_device_preset(0);
            let cb: Vec<f64> = s.devices.iter().map(|d| d.accuracy.marginal_at_zero()).collect();
            let base: Vec<f64> = cb.iter().map(|v| v * 0.3).collect();
            let mut cheap = base.clone();
            cheap[i] = cb[i] * lo;
            let mut dear = base.clone();
            dear[i] = cb[i] * hi;
            let a = best_response_demand(&s, &cheap).unwrap();
            let b = best_response_demand(&s, &dear).unwrap();
            prop_assert!(a[i] >= b[i]);
            for j in (0..9).filter(|&j| j != i) {
                prop_assert_eq!(a[j], b[j]);
            }
        }

        #[test]
        fn interior_first_order_residual(i in 0usize..9, frac in 0.001f64..0.999) {
            let s = nine_device_preset(0);
            let m = s.devices[i].accuracy;
            let q = frac * m.marginal_at_zero();
            let x = best_response_demand_for(&m, s.devices[i].max_demand, q);
            prop_assert!((q - m.c * m.b * (-m.c * x).exp()).abs() <= 1e-9);
        }
    }
}
