use serde::{Deserialize, Serialize};

use super::{Game, LinkState, StrategyProfile};
use crate::error::Result;
use crate::lower_level::{best_response_demand, DemandVector};
use crate::radio::transmission_energy_cost;
use crate::scenario::Scenario;

/// The five terms of a device's profit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfitTerms {
    /// `q_i s_i`
    pub revenue: f64,
    /// `c^t_i (I^d / r_i) sum_j P_ij`
    pub transmission_cost: f64,
    /// `c^p_i s_i`
    pub processing_cost: f64,
    /// `c^a` per device relaying through `i`.
    pub relay_revenue: f64,
    /// `c^a` if `i` does not send straight to the access point.
    pub relay_fee: f64,
}

impl ProfitTerms {
    pub fn total(&self) -> f64 {
        self.revenue - self.transmission_cost - self.processing_cost + self.relay_revenue
            - self.relay_fee
    }
}

pub fn device_profit_terms(
    i: usize,
    price: f64,
    demand: f64,
    state: &LinkState,
    scenario: &Scenario,
) -> Result<ProfitTerms> {
    let device = &scenario.devices[i];
    let rate = (state.rates[i] > 0.0).then_some(state.rates[i]);
    let indicator = &state.indicator;
    Ok(ProfitTerms {
        revenue: price * demand,
        transmission_cost: transmission_energy_cost(i, &state.powers, rate, scenario)?,
        processing_cost: device.processing_cost * demand,
        relay_revenue: scenario.relay_fee * indicator.inflow(i) as f64,
        relay_fee: if indicator.is_direct(i) {
            0.0
        } else {
            scenario.relay_fee
        },
    })
}

impl Game<'_> {
    pub fn device_profit_terms(
        &self,
        i: usize,
        profile: &StrategyProfile,
        demand: &DemandVector,
    ) -> Result<ProfitTerms> {
        let state = self.link_state(&profile.assignment)?;
        device_profit_terms(i, profile.prices[i], demand[i], &state, self.scenario)
    }

    pub fn device_profit(
        &self,
        i: usize,
        profile: &StrategyProfile,
        demand: &DemandVector,
    ) -> Result<f64> {
        Ok(self.device_profit_terms(i, profile, demand)?.total())
    }

    /// Profit with the owner's best-response demand substituted.
    pub fn reduced_profit(&self, i: usize, profile: &StrategyProfile) -> Result<f64> {
        let demand = best_response_demand(self.scenario, &profile.prices)?;
        self.device_profit(i, profile, &demand)
    }
}
