//! Stackelberg equilibrium of a federated-learning service market with
//! cooperative relaying.
//!
//! A model owner buys training data from edge devices. Each device sets a
//! unit price, then sends its model update to an access point either
//! directly or through one relaying device. The owner best-responds to
//! prices with a demand vector; devices play a penalized non-cooperative
//! game over prices, receivers and transmit powers.
//!
//! ```
//! use fedrelay::{nine_device_preset, solve_stackelberg, SolverConfig};
//!
//! let scenario = nine_device_preset(7);
//! let report = solve_stackelberg(&scenario, &SolverConfig::default()).unwrap();
//! assert!(report.converged);
//! assert_eq!(report.profile.prices.len(), 9);
//! ```

pub mod error;
pub mod lower_level;
pub mod radio;
pub mod routing;
pub mod scenario;
pub mod upper_level;

pub use error::{Error, Result};
pub use lower_level::{
    best_response_demand, concavity_certificate, owner_utility, DemandVector, PriceVector,
};
pub use radio::{transmission_rate, transmission_rates, Link, PowerAssignment, PowerMatrix};
pub use routing::{feasible, FeasibilityReport, IndicatorMatrix, RoutingPlan, Violation};
pub use scenario::{
    build_channel_matrix, nine_device_preset, random_scenario, ChannelMatrix, RandomSpec, Scenario,
    Target,
};
pub use upper_level::{
    best_response_dynamics, certify, price_best_response, solve_stackelberg, EquilibriumReport,
    Game, PenaltyConfig, PenaltyForm, SolverConfig, StrategyProfile, UpdateOrder,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/owner.md")]
    mod owner {}
    #[doc = include_str!("../../../book/src/radio.md")]
    mod radio {}
    #[doc = include_str!("../../../book/src/routing.md")]
    mod routing {}
    #[doc = include_str!("../../../book/src/equilibrium.md")]
    mod equilibrium {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
