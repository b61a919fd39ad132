//! The devices' subgame.
//!
//! Each device sets a price, picks a receiver (another device or the access
//! point) and a transmit power. Routing and deadline constraints enter each
//! device's objective as an exterior penalty `M * rho`, with `rho <= 0` and
//! `rho == 0` exactly on the feasible set. Equilibria are sought with
//! round-robin best-response dynamics over an increasing schedule of `M`.

mod dynamics;
mod penalty;
mod profit;
mod response;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lower_level::PriceVector;
use crate::radio::{transmission_rates, Link, PowerAssignment, PowerMatrix};
use crate::routing::{IndicatorMatrix, RoutingPlan};
use crate::scenario::{build_channel_matrix, ChannelMatrix, Scenario, Target};

pub use dynamics::{
    best_response_dynamics, certify, solve_stackelberg, Diagnostics, EquilibriumReport, RelayEdge,
    SharedChannel,
};
pub use penalty::penalty_rho;
pub use profit::{device_profit_terms, ProfitTerms};
pub use response::{price_best_response, RelayChoice};

/// How the routing and deadline slack terms enter `rho`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum PenaltyForm {
    /// Squared violations only; `rho == 0` on the feasible set.
    #[default]
    Hinge,
    /// Access-point and deadline slacks added unsquared and signed, so slack
    /// is rewarded. Kept for comparison only.
    Literal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    /// Strictly increasing penalty coefficients; the solver re-converges at
    /// each one in turn.
    pub schedule: Vec<f64>,
    pub form: PenaltyForm,
    /// Deadline excess at or below this is treated as met.
    pub tolerance: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        PenaltyConfig {
            schedule: (1..=8).map(|k| 10f64.powi(k)).collect(),
            form: PenaltyForm::Hinge,
            tolerance: 1e-9,
        }
    }
}

impl PenaltyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schedule.is_empty() {
            return Err(Error::InvalidArgument("penalty schedule is empty".into()));
        }
        if self.schedule.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(Error::InvalidArgument(
                "penalty coefficients must be positive".into(),
            ));
        }
        if self.schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "penalty schedule must be strictly increasing".into(),
            ));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidArgument(
                "feasibility tolerance must be >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn final_coefficient(&self) -> f64 {
        *self.schedule.last().expect("validated schedule")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpdateOrder {
    #[default]
    Forward,
    Reverse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub penalty: PenaltyConfig,
    pub eps_nash: f64,
    /// Round limit per penalty coefficient.
    pub max_rounds: usize,
    /// Points on `(0, p_max]` searched for a direct link's power.
    pub power_grid: usize,
    /// Relative change in a price that counts as a strategy change.
    pub price_tolerance: f64,
    /// Relative change in a power that counts as a strategy change.
    pub power_tolerance: f64,
    pub order: UpdateOrder,
    /// Also solve in the opposite device order and record agreement.
    pub check_order: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            penalty: PenaltyConfig::default(),
            eps_nash: 1e-6,
            max_rounds: 500,
            power_grid: 1000,
            price_tolerance: 1e-12,
            power_tolerance: 1e-10,
            order: UpdateOrder::Forward,
            check_order: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.penalty.validate()?;
        if !(self.eps_nash >= 0.0) {
            return Err(Error::InvalidArgument("eps_nash must be >= 0".into()));
        }
        if self.max_rounds == 0 || self.power_grid == 0 {
            return Err(Error::InvalidArgument(
                "max_rounds and power_grid must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Every device's price and outgoing link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub prices: PriceVector,
    pub assignment: PowerAssignment,
}

impl StrategyProfile {
    pub fn new(prices: Vec<f64>, links: Vec<Link>, scenario: &Scenario) -> Result<Self> {
        let n = scenario.n_devices();
        if prices.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: prices.len(),
            });
        }
        let floor = scenario.price_floor();
        for (i, (&q, d)) in prices.iter().zip(&scenario.devices).enumerate() {
            if !(q >= floor && q <= d.max_price) {
                return Err(Error::InvalidArgument(format!(
                    "device {}: price {q} outside [{floor}, {}]",
                    i + 1,
                    d.max_price
                )));
            }
        }
        Ok(StrategyProfile {
            prices: prices.into(),
            assignment: PowerAssignment::new(links, scenario)?,
        })
    }

    /// Every device at its price cap, sending straight to the access point
    /// at full power.
    pub fn all_direct(scenario: &Scenario) -> Self {
        StrategyProfile {
            prices: scenario
                .devices
                .iter()
                .map(|d| d.max_price)
                .collect::<Vec<_>>()
                .into(),
            assignment: PowerAssignment::from_links_unchecked(
                scenario
                    .devices
                    .iter()
                    .map(|d| Link {
                        target: Target::AccessPoint,
                        power: d.max_power,
                    })
                    .collect(),
            ),
        }
    }

    pub fn routing(&self) -> Result<RoutingPlan> {
        RoutingPlan::new(self.assignment.links().iter().map(|l| l.target).collect())
    }

    pub(crate) fn with_link(&self, device: usize, link: Link) -> Self {
        let mut out = self.clone();
        out.assignment.set_link(device, link);
        out
    }
}

/// Powers, links and rates implied by one assignment.
#[derive(Clone, Debug)]
pub struct LinkState {
    pub powers: PowerMatrix,
    pub indicator: IndicatorMatrix,
    /// Zero for silent devices.
    pub rates: Vec<f64>,
}

/// A validated scenario together with its channel matrix and solver
/// settings.
#[derive(Clone, Debug)]
pub struct Game<'a> {
    scenario: &'a Scenario,
    channel: ChannelMatrix,
    config: SolverConfig,
}

impl<'a> Game<'a> {
    pub fn new(scenario: &'a Scenario, config: SolverConfig) -> Result<Self> {
        scenario.validate()?;
        config.validate()?;
        Ok(Game {
            scenario,
            channel: build_channel_matrix(scenario)?,
            config,
        })
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    pub fn channel(&self) -> &ChannelMatrix {
        &self.channel
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn link_state(&self, assignment: &PowerAssignment) -> Result<LinkState> {
        self.link_state_for(assignment.to_matrix())
    }

    pub fn link_state_for(&self, powers: PowerMatrix) -> Result<LinkState> {
        let rates = transmission_rates(&powers, &self.channel, self.scenario)?
            .into_iter()
            .map(|r| r.unwrap_or(0.0))
            .collect();
        Ok(LinkState {
            indicator: IndicatorMatrix::from_powers(&powers),
            powers,
            rates,
        })
    }
}
