//! Command-line front end for the `fedrelay` solver.

pub mod args;
pub mod output;

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use fedrelay::routing::{check_acyclic_reach, check_ap_connected, check_single_link};
use fedrelay::{
    best_response_demand, feasible, nine_device_preset, random_scenario, solve_stackelberg,
    EquilibriumReport, Game, RandomSpec, RoutingPlan, Scenario, SolverConfig, StrategyProfile,
};

pub use args::{Cli, Command, OutputFormat, RunConfig, ScenarioSource, SweepParam};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] fedrelay::Error),
    #[error("{0}")]
    Output(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_INVALID,
            CliError::Model(fedrelay::Error::Io(_)) => EXIT_FAILURE,
            CliError::Model(_) => EXIT_INVALID,
            CliError::Json(e) if e.is_data() || e.is_syntax() => EXIT_INVALID,
            _ => EXIT_FAILURE,
        }
    }
}

pub fn load_scenario(source: &ScenarioSource) -> Result<Scenario, CliError> {
    let scenario = match source {
        ScenarioSource::File(path) => Scenario::load(path)?,
        ScenarioSource::Preset { seed } => nine_device_preset(*seed),
        ScenarioSource::Random { devices, seed } => {
            random_scenario(*devices, *seed, &RandomSpec::default())?
        }
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Validate(a) => cmd_validate(&a),
        Command::Solve(a) => a.run_config().and_then(|c| cmd_solve(&c)),
        Command::Sweep(a) => cmd_sweep(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Problems found in a routing table by the structural checks alone.
pub fn routing_problems(plan: &RoutingPlan) -> Vec<String> {
    let indicator = plan.indicator();
    let mut problems = Vec::new();
    if !check_single_link(&indicator) {
        problems.push("some device has other than one outgoing link".to_string());
    }
    for i in 0..plan.len() {
        if plan.next_hop(i) == fedrelay::Target::Device(i) {
            problems.push(format!("device {} sends to itself", i + 1));
        }
    }
    if !check_ap_connected(&indicator) {
        problems.push("no device sends to N_D".to_string());
    }
    if !check_acyclic_reach(&indicator) {
        for i in 0..plan.len() {
            if plan.chain(i).last() != Some(&fedrelay::Target::AccessPoint) {
                problems.push(format!("device {} never reaches N_D", i + 1));
            }
        }
    }
    problems
}

/// Violations of a full strategy profile at the owner's best-response demand.
pub fn profile_problems(
    scenario: &Scenario,
    profile: &StrategyProfile,
) -> Result<Vec<String>, CliError> {
    let checked = StrategyProfile::new(
        profile.prices.to_vec(),
        profile.assignment.links().to_vec(),
        scenario,
    )?;
    let game = Game::new(scenario, SolverConfig::default())?;
    let state = game.link_state(&checked.assignment)?;
    let demand = best_response_demand(scenario, &checked.prices)?;
    let tolerance = game.config().penalty.tolerance;
    let report = feasible(&state.indicator, &demand, &state.rates, scenario, tolerance)?;
    Ok(report.violations.iter().map(|v| format!("{v:?}")).collect())
}

pub fn cmd_validate(args: &args::ValidateArgs) -> Result<i32, CliError> {
    let source = args.source.resolve()?;
    let scenario = match load_scenario(&source) {
        Ok(s) => s,
        Err(CliError::Model(e)) if !matches!(e, fedrelay::Error::Io(_)) => {
            println!("invalid: {e}");
            return Ok(EXIT_INVALID);
        }
        Err(e) => return Err(e),
    };
    let mut problems = Vec::new();
    if let Some(path) = &args.routing {
        let plan = RoutingPlan::from_table(&std::fs::read_to_string(path)?)?;
        if plan.len() != scenario.n_devices() {
            return Err(CliError::Config(format!(
                "routing has {} devices, scenario has {}",
                plan.len(),
                scenario.n_devices()
            )));
        }
        problems.extend(routing_problems(&plan));
    }
    if let Some(path) = &args.profile {
        let profile: StrategyProfile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        problems.extend(profile_problems(&scenario, &profile)?);
    }
    if problems.is_empty() {
        println!("valid: {} devices", scenario.n_devices());
        Ok(EXIT_OK)
    } else {
        for p in &problems {
            println!("invalid: {p}");
        }
        Ok(EXIT_INVALID)
    }
}

fn exit_for(report: &EquilibriumReport) -> i32 {
    if report.converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    }
}

pub fn cmd_solve(config: &RunConfig) -> Result<i32, CliError> {
    let scenario = load_scenario(&config.source)?;
    let report = solve_stackelberg(&scenario, &config.solver)?;
    output::write_solution(&config.out, &scenario, &report)?;
    match config.format {
        OutputFormat::Table => {
            print!("{}", output::table(&report));
            print!("{}", report.routing.to_table());
        }
        OutputFormat::Csv => print!("{}", output::equilibrium_csv(&report)?),
        OutputFormat::Json => print!("{}", output::report_json(&report)?),
    }
    if !report.converged {
        eprintln!(
            "not converged: max unilateral gain {:e}, feasible {}",
            report.max_unilateral_gain,
            report.feasibility.is_feasible()
        );
    }
    Ok(exit_for(&report))
}

pub fn with_param(scenario: &Scenario, param: SweepParam, value: f64) -> Scenario {
    let mut s = scenario.clone();
    match param {
        SweepParam::RelayFee => s.relay_fee = value,
        SweepParam::UpdateSize => s.update_size = value,
        SweepParam::NoisePower => s.noise_power = value,
        SweepParam::PathLoss => s.path_loss_exponent = value,
    }
    s
}

pub const SWEEP_HEADER: &str =
    "value,converged,max_unilateral_gain,device_id,price,demand,rate,power,target,profit";

/// One solve per value, in parallel; rows keep the order of `values`.
pub fn sweep(
    scenario: &Scenario,
    solver: &SolverConfig,
    param: SweepParam,
    values: &[f64],
) -> Result<Vec<(f64, EquilibriumReport)>, CliError> {
    values
        .par_iter()
        .map(|&v| {
            let s = with_param(scenario, param, v);
            s.validate()?;
            Ok((v, solve_stackelberg(&s, solver)?))
        })
        .collect()
}

pub fn sweep_csv(results: &[(f64, EquilibriumReport)]) -> Result<String, CliError> {
    let mut out = format!("{SWEEP_HEADER}\n");
    for (v, report) in results {
        for row in output::rows(report) {
            writeln!(
                out,
                "{v},{},{},{}",
                report.converged,
                report.max_unilateral_gain,
                row.csv_fields()?
            )
            .unwrap();
        }
    }
    Ok(out)
}

pub fn cmd_sweep(args: &args::SweepArgs) -> Result<i32, CliError> {
    let scenario = load_scenario(&args.source.resolve()?)?;
    let solver = args.solver.resolve()?;
    let results = sweep(&scenario, &solver, args.param, &args.values.0)?;
    std::fs::create_dir_all(&args.out)?;
    output::write_atomic(&args.out, "sweep.csv", &sweep_csv(&results)?)?;
    for (v, r) in &results {
        println!(
            "{v}: converged {} gain {:e} owner utility {}",
            r.converged, r.max_unilateral_gain, r.owner_utility
        );
    }
    if results.iter().all(|(_, r)| r.converged) {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_NOT_CONVERGED)
    }
}

/// Loads `report.json` and `scenario.toml` from a solve's output directory.
pub fn load_solution(dir: &Path) -> Result<(Scenario, EquilibriumReport), CliError> {
    let scenario = Scenario::load(dir.join("scenario.toml"))?;
    let report = serde_json::from_str(&std::fs::read_to_string(dir.join("report.json"))?)?;
    Ok((scenario, report))
}
