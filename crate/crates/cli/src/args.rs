use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use fedrelay::{PenaltyConfig, PenaltyForm, SolverConfig};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "fedrelay",
    version,
    about = "Pricing and relay equilibria for federated learning"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a scenario, and optionally a routing table or strategy profile.
    Validate(ValidateArgs),
    /// Solve for the equilibrium and write the result files.
    Solve(SolveArgs),
    /// Solve once per value of one scenario parameter.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
#[group(skip)]
#[command(group(ArgGroup::new("source").required(true).args(["scenario", "preset", "random"])))]
pub struct SourceArgs {
    /// Scenario file (TOML, or JSON by extension).
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Built-in scenario.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Random scenario with this many devices.
    #[arg(long, value_name = "N")]
    pub random: Option<usize>,
    /// Seed for preset positions or random draws.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    #[value(name = "paper9")]
    NineDevice,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
    #[default]
    Table,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PenaltyFormArg {
    Hinge,
    Literal,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, value_name = "F")]
    pub eps_nash: Option<f64>,
    /// Comma-separated, strictly increasing penalty coefficients.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub m_schedule: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub penalty_form: Option<PenaltyFormArg>,
    /// Round limit per penalty coefficient.
    #[arg(long, value_name = "N")]
    pub max_rounds: Option<usize>,
    /// Skip the reverse-order comparison run.
    #[arg(long)]
    pub no_order_check: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Routing table, one chain per line: `3 -> 7 -> N_D`.
    #[arg(long, value_name = "PATH")]
    pub routing: Option<PathBuf>,
    /// Strategy profile JSON (`prices` and `assignment`), checked in full.
    #[arg(long, value_name = "PATH")]
    pub profile: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Summary printed to stdout; every file is written regardless.
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    /// Relay fee.
    #[value(name = "c_a")]
    RelayFee,
    /// Model update size.
    #[value(name = "I_d")]
    UpdateSize,
    #[value(name = "sigma2")]
    NoisePower,
    #[value(name = "alpha")]
    PathLoss,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_enum)]
    pub param: SweepParam,
    /// Comma-separated values; may be empty.
    #[arg(long, value_name = "LIST", value_parser = parse_values)]
    pub values: ValueList,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValueList(pub Vec<f64>);

fn parse_values(text: &str) -> Result<ValueList, String> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()
        .map(ValueList)
}

/// Where the scenario comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioSource {
    File(PathBuf),
    Preset { seed: u64 },
    Random { devices: usize, seed: u64 },
}

/// Everything one solve needs, checked.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub source: ScenarioSource,
    pub solver: SolverConfig,
    pub out: PathBuf,
    pub format: OutputFormat,
}

impl SourceArgs {
    pub fn resolve(&self) -> Result<ScenarioSource, CliError> {
        let need_seed = |what: &str| {
            self.seed
                .ok_or_else(|| CliError::Config(format!("--seed is required with {what}")))
        };
        match (&self.scenario, self.preset, self.random) {
            (Some(path), None, None) => Ok(ScenarioSource::File(path.clone())),
            (None, Some(Preset::NineDevice), None) => Ok(ScenarioSource::Preset {
                seed: need_seed("--preset")?,
            }),
            (None, None, Some(devices)) => Ok(ScenarioSource::Random {
                devices,
                seed: need_seed("--random")?,
            }),
            _ => Err(CliError::Config(
                "exactly one of --scenario, --preset, --random is required".into(),
            )),
        }
    }
}

impl SolverArgs {
    pub fn resolve(&self) -> Result<SolverConfig, CliError> {
        let defaults = SolverConfig::default();
        let config = SolverConfig {
            penalty: PenaltyConfig {
                schedule: self.m_schedule.clone().unwrap_or(defaults.penalty.schedule),
                form: match self.penalty_form {
                    Some(PenaltyFormArg::Literal) => PenaltyForm::Literal,
                    Some(PenaltyFormArg::Hinge) | None => PenaltyForm::Hinge,
                },
                ..defaults.penalty
            },
            eps_nash: self.eps_nash.unwrap_or(defaults.eps_nash),
            max_rounds: self.max_rounds.unwrap_or(defaults.max_rounds),
            check_order: !self.no_order_check,
            ..defaults
        };
        config.validate()?;
        Ok(config)
    }
}

impl SolveArgs {
    pub fn run_config(&self) -> Result<RunConfig, CliError> {
        Ok(RunConfig {
            source: self.source.resolve()?,
            solver: self.solver.resolve()?,
            out: self.out.clone(),
            format: self.format,
        })
    }
}
