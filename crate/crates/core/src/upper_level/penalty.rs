use super::{Game, LinkState, PenaltyConfig, PenaltyForm, StrategyProfile};
use crate::error::Result;
use crate::lower_level::{best_response_demand, DemandVector};
use crate::routing::{processing_times, timing_excess, IndicatorMatrix};
use crate::scenario::Scenario;

/// Constraint-violation measure for device `i`; never positive under the
/// hinge form.
///
/// Combines `i`'s own link count and self-loop, the network-wide
/// reachability mismatch (squared Frobenius distance between the boolean
/// matrix power and the all-to-`N_D` pattern), the access-point connection,
/// and `i`'s own deadline.
pub fn penalty_rho(
    i: usize,
    indicator: &IndicatorMatrix,
    demand: &DemandVector,
    rates: &[f64],
    scenario: &Scenario,
    config: &PenaltyConfig,
) -> Result<f64> {
    let links = indicator.row_sum(i) as f64;
    let self_loop = if indicator.get(i, i) { 1.0 } else { 0.0 };
    let mismatch = indicator.reach_mismatch() as f64;
    let ap_links = indicator.inflow(indicator.access_point()) as f64;
    let structural = -(links - 1.0).powi(2) - self_loop - mismatch;

    match config.form {
        PenaltyForm::Hinge => {
            let ap_gap = (1.0 - ap_links).max(0.0);
            let excess = timing_excess(indicator, demand, rates, scenario)?[i]
                .filter(|&v| v > config.tolerance)
                .unwrap_or(0.0);
            Ok(structural - ap_gap * ap_gap - excess * excess)
        }
        PenaltyForm::Literal => {
            let n = indicator.n_devices();
            let times = processing_times(demand, scenario);
            let device = &scenario.devices[i];
            let deadline: f64 = (0..n)
                .filter(|&j| indicator.get(i, j))
                .map(|j| times[j])
                .sum();
            let transfer = if rates[i] > 0.0 {
                scenario.update_size / rates[i]
            } else {
                0.0
            };
            let slack =
                deadline - times[i] - device.averaging_time * indicator.inflow(i) as f64 - transfer;
            Ok(structural + (ap_links - 1.0) + slack)
        }
    }
}

impl Game<'_> {
    pub fn penalty(&self, i: usize, state: &LinkState, demand: &DemandVector) -> Result<f64> {
        penalty_rho(
            i,
            &state.indicator,
            demand,
            &state.rates,
            self.scenario,
            &self.config.penalty,
        )
    }

    /// `profit + M * rho` at an explicit demand vector.
    pub fn penalized_profit_at(
        &self,
        i: usize,
        profile: &StrategyProfile,
        demand: &DemandVector,
        coefficient: f64,
    ) -> Result<f64> {
        let state = self.link_state(&profile.assignment)?;
        self.penalized_profit_in(i, profile, &state, demand, coefficient)
    }

    pub(crate) fn penalized_profit_in(
        &self,
        i: usize,
        profile: &StrategyProfile,
        state: &LinkState,
        demand: &DemandVector,
        coefficient: f64,
    ) -> Result<f64> {
        let profit =
            super::device_profit_terms(i, profile.prices[i], demand[i], state, self.scenario)?
                .total();
        Ok(profit + coefficient * self.penalty(i, state, demand)?)
    }

    /// `reduced profit + M * rho`, with the owner's best-response demand.
    pub fn penalized_profit(
        &self,
        i: usize,
        profile: &StrategyProfile,
        coefficient: f64,
    ) -> Result<f64> {
        let demand = best_response_demand(self.scenario, &profile.prices)?;
        self.penalized_profit_at(i, profile, &demand, coefficient)
    }
}
