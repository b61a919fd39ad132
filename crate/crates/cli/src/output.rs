use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use fedrelay::{EquilibriumReport, Scenario, Target};

use crate::CliError;

pub const EQUILIBRIUM_HEADER: &str = "device_id,price,demand,rate,power,target,profit";

/// Writes `contents` to `dir/name` through a temporary file in `dir`, so
/// readers never see a partial file.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name))
        .map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

fn finite(name: &str, value: f64) -> Result<f64, CliError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::Output(format!("{name} is not finite: {value}")))
    }
}

fn column_csv(header: &str, values: &[f64]) -> Result<String, CliError> {
    let mut out = format!("device_id,{header}\n");
    for (i, v) in values.iter().enumerate() {
        writeln!(out, "{},{}", i + 1, finite(header, *v)?).unwrap();
    }
    Ok(out)
}

pub struct Row {
    pub device: usize,
    pub price: f64,
    pub demand: f64,
    pub rate: f64,
    pub power: f64,
    pub target: Target,
    pub profit: f64,
}

pub fn rows(report: &EquilibriumReport) -> Vec<Row> {
    report
        .profile
        .assignment
        .links()
        .iter()
        .enumerate()
        .map(|(i, link)| Row {
            device: i + 1,
            price: report.profile.prices[i],
            demand: report.demand[i],
            rate: report.rates[i],
            power: link.power,
            target: link.target,
            profit: report.profits[i],
        })
        .collect()
}

impl Row {
    pub fn csv_fields(&self) -> Result<String, CliError> {
        Ok(format!(
            "{},{},{},{},{},{},{}",
            self.device,
            finite("price", self.price)?,
            finite("demand", self.demand)?,
            finite("rate", self.rate)?,
            finite("power", self.power)?,
            self.target,
            finite("profit", self.profit)?,
        ))
    }
}

pub fn equilibrium_csv(report: &EquilibriumReport) -> Result<String, CliError> {
    let mut out = format!("{EQUILIBRIUM_HEADER}\n");
    for row in rows(report) {
        out.push_str(&row.csv_fields()?);
        out.push('\n');
    }
    Ok(out)
}

pub fn table(report: &EquilibriumReport) -> String {
    let mut out = format!(
        "{:>6} {:>12} {:>12} {:>12} {:>12} {:>6} {:>12}\n",
        "device", "price", "demand", "rate", "power", "target", "profit"
    );
    for r in rows(report) {
        writeln!(
            out,
            "{:>6} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>6} {:>12.6}",
            r.device,
            r.price,
            r.demand,
            r.rate,
            r.power,
            r.target.to_string(),
            r.profit
        )
        .unwrap();
    }
    writeln!(
        out,
        "converged: {}  max unilateral gain: {:e}  owner utility: {:.6}",
        report.converged, report.max_unilateral_gain, report.owner_utility
    )
    .unwrap();
    out
}

pub fn report_json(report: &EquilibriumReport) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    Ok(text)
}

/// Every result file of one solve, written into `dir`.
pub fn write_solution(
    dir: &Path,
    scenario: &Scenario,
    report: &EquilibriumReport,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    write_atomic(dir, "routing.txt", &report.routing.to_table())?;
    write_atomic(
        dir,
        "prices.csv",
        &column_csv("price", &report.profile.prices)?,
    )?;
    write_atomic(dir, "demands.csv", &column_csv("demand", &report.demand)?)?;
    write_atomic(dir, "rates.csv", &column_csv("rate", &report.rates)?)?;
    write_atomic(dir, "profits.csv", &column_csv("profit", &report.profits)?)?;
    write_atomic(dir, "equilibrium.csv", &equilibrium_csv(report)?)?;
    write_atomic(dir, "report.json", &report_json(report)?)?;
    write_atomic(dir, "scenario.toml", &scenario.to_toml_string()?)?;
    Ok(())
}
