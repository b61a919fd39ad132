use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("nodes {first} and {second} share a position")]
    CoincidentNodes { first: usize, second: usize },

    #[error("invalid random scenario spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("device {device}: price {price} must be strictly positive")]
    NonPositivePrice { device: usize, price: f64 },

    #[error("device {device} is not transmitting")]
    Silent { device: usize },

    #[error("device {device}: zero transmission rate with a non-empty model update")]
    ZeroRate { device: usize },

    #[error("device {device}: SINR denominator {value} is not positive")]
    NonPositiveDenominator { device: usize, value: f64 },

    #[error("device {device}: required power {required} exceeds limit {limit}")]
    PowerLimit {
        device: usize,
        required: f64,
        limit: f64,
    },

    #[error(
        "device {device}: processing cost {cost} leaves no profitable price (c*b = {ceiling})"
    )]
    DegenerateDevice {
        device: usize,
        cost: f64,
        ceiling: f64,
    },

    #[error("malformed routing: {0}")]
    Routing(String),

    #[error("config: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
