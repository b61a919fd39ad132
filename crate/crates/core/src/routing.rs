//! Relay choices, the 0/1 link matrix, and the routing and timing checks.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lower_level::DemandVector;
use crate::radio::PowerMatrix;
use crate::scenario::{Scenario, Target};

/// Each device's single next hop.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RoutingPlan {
    next_hop: Vec<Target>,
}

impl RoutingPlan {
    pub fn new(next_hop: Vec<Target>) -> Result<Self> {
        let n = next_hop.len();
        for (i, t) in next_hop.iter().enumerate() {
            match *t {
                Target::Device(j) if j == i => {
                    return Err(Error::Routing(format!("device {} relays to itself", i + 1)))
                }
                Target::Device(j) if j >= n => {
                    return Err(Error::Routing(format!(
                        "device {} relays to unknown device {}",
                        i + 1,
                        j + 1
                    )))
                }
                _ => {}
            }
        }
        Ok(RoutingPlan { next_hop })
    }

    pub fn len(&self) -> usize {
        self.next_hop.len()
    }

    pub fn is_empty(&self) -> bool {
        self.next_hop.is_empty()
    }

    pub fn next_hop(&self, device: usize) -> Target {
        self.next_hop[device]
    }

    pub fn targets(&self) -> &[Target] {
        &self.next_hop
    }

    pub fn indicator(&self) -> IndicatorMatrix {
        let n = self.len();
        let mut m = IndicatorMatrix::zeros(n);
        for (i, t) in self.next_hop.iter().enumerate() {
            m.set(i, t.node_index(n), true);
        }
        m
    }

    /// Hops from `device` toward the access point. Stops early if a node
    /// repeats, so the last element is `N_D` only for terminating chains.
    pub fn chain(&self, device: usize) -> Vec<Target> {
        let mut out = vec![Target::Device(device)];
        let mut seen = vec![false; self.len()];
        seen[device] = true;
        let mut at = device;
        loop {
            let next = self.next_hop[at];
            out.push(next);
            match next {
                Target::AccessPoint => break,
                Target::Device(j) if seen[j] => break,
                Target::Device(j) => {
                    seen[j] = true;
                    at = j;
                }
            }
        }
        out
    }

    /// One `i -> j -> ... -> N_D` row per device, 1-indexed.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for i in 0..self.len() {
            let hops: Vec<String> = self.chain(i).iter().map(Target::to_string).collect();
            let _ = writeln!(out, "{}", hops.join(" -> "));
        }
        out
    }

    /// Parses the row format written by [`RoutingPlan::to_table`]. Only the
    /// first hop of each row defines the plan; later hops must agree with it.
    pub fn from_table(text: &str) -> Result<Self> {
        let mut hops: BTreeMap<usize, Target> = BTreeMap::new();
        let rows: Vec<Vec<&str>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| l.trim_end_matches('.').split("->").map(str::trim).collect())
            .collect();
        let n = rows.len();
        for row in &rows {
            if row.len() < 2 {
                return Err(Error::Routing(format!(
                    "row {:?} has no next hop",
                    row.join(" -> ")
                )));
            }
            let nodes: Vec<Target> = row
                .iter()
                .map(|t| parse_node(t, n))
                .collect::<Result<_>>()?;
            for pair in nodes.windows(2) {
                let Target::Device(from) = pair[0] else {
                    return Err(Error::Routing("N_D cannot forward".into()));
                };
                if let Some(prev) = hops.insert(from, pair[1]) {
                    if prev != pair[1] {
                        return Err(Error::Routing(format!(
                            "device {} has two next hops ({prev} and {})",
                            from + 1,
                            pair[1]
                        )));
                    }
                }
            }
        }
        if hops.len() != n || hops.keys().copied().ne(0..n) {
            return Err(Error::Routing("every device needs exactly one row".into()));
        }
        RoutingPlan::new(hops.into_values().collect())
    }

    /// `{"1": "N_D", "3": "7", ...}`, 1-indexed.
    pub fn to_adjacency(&self) -> BTreeMap<String, String> {
        self.next_hop
            .iter()
            .enumerate()
            .map(|(i, t)| ((i + 1).to_string(), t.to_string()))
            .collect()
    }

    pub fn from_adjacency(map: &BTreeMap<String, String>) -> Result<Self> {
        let n = map.len();
        let mut next = vec![None; n];
        for (from, to) in map {
            let Target::Device(i) = parse_node(from, n)? else {
                return Err(Error::Routing("N_D cannot forward".into()));
            };
            next[i] = Some(parse_node(to, n)?);
        }
        let next: Option<Vec<Target>> = next.into_iter().collect();
        RoutingPlan::new(next.ok_or_else(|| Error::Routing("missing device".into()))?)
    }
}

fn parse_node(token: &str, n: usize) -> Result<Target> {
    if token.eq_ignore_ascii_case("N_D") || token.eq_ignore_ascii_case("ND") {
        return Ok(Target::AccessPoint);
    }
    match token.parse::<usize>() {
        Ok(k) if (1..=n).contains(&k) => Ok(Target::Device(k - 1)),
        _ => Err(Error::Routing(format!("unknown node {token:?}"))),
    }
}

/// 0/1 link matrix over all nodes; `I_ij` is set iff node `i` sends to `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndicatorMatrix(Array2<bool>);

impl IndicatorMatrix {
    pub fn zeros(n_devices: usize) -> Self {
        IndicatorMatrix(Array2::from_elem((n_devices + 1, n_devices + 1), false))
    }

    /// Strict positivity threshold on every power entry.
    pub fn from_powers(powers: &PowerMatrix) -> Self {
        IndicatorMatrix(powers.as_array().mapv(|p| p > 0.0))
    }

    pub fn n_devices(&self) -> usize {
        self.0.nrows() - 1
    }

    pub fn access_point(&self) -> usize {
        self.n_devices()
    }

    pub fn get(&self, from: usize, to: usize) -> bool {
        self.0[[from, to]]
    }

    pub fn set(&mut self, from: usize, to: usize, value: bool) {
        self.0[[from, to]] = value;
    }

    pub fn row_sum(&self, node: usize) -> usize {
        self.0.row(node).iter().filter(|&&b| b).count()
    }

    /// Number of devices sending to `node`.
    pub fn inflow(&self, node: usize) -> usize {
        (0..self.n_devices()).filter(|&k| self.0[[k, node]]).count()
    }

    pub fn is_direct(&self, device: usize) -> bool {
        self.0[[device, self.access_point()]]
    }

    pub fn as_array(&self) -> &Array2<bool> {
        &self.0
    }

    /// Links with the access point made absorbing (`N_D -> N_D`).
    pub fn absorbing(&self) -> Array2<bool> {
        let mut m = self.0.clone();
        let ap = self.access_point();
        m[[ap, ap]] = true;
        m
    }

    /// Boolean-semiring power of the absorbing link matrix, exponent equal
    /// to the number of devices.
    pub fn reach_power(&self) -> Array2<bool> {
        bool_matrix_power(&self.absorbing(), self.n_devices())
    }

    /// Positions where [`IndicatorMatrix::reach_power`] differs from the
    /// all-paths-end-at-`N_D` pattern. Zero iff every chain terminates.
    pub fn reach_mismatch(&self) -> usize {
        let ap = self.access_point();
        self.reach_power()
            .indexed_iter()
            .filter(|&((_, j), &b)| b != (j == ap))
            .count()
    }
}

fn bool_matmul(a: &Array2<bool>, b: &Array2<bool>) -> Array2<bool> {
    let n = a.nrows();
    Array2::from_shape_fn((n, n), |(i, j)| (0..n).any(|k| a[[i, k]] && b[[k, j]]))
}

/// Square-and-multiply over the (OR, AND) semiring.
pub fn bool_matrix_power(m: &Array2<bool>, exponent: usize) -> Array2<bool> {
    let n = m.nrows();
    let mut result = Array2::from_shape_fn((n, n), |(i, j)| i == j);
    let mut base = m.clone();
    let mut e = exponent;
    while e > 0 {
        if e & 1 == 1 {
            result = bool_matmul(&result, &base);
        }
        e >>= 1;
        if e > 0 {
            base = bool_matmul(&base, &base);
        }
    }
    result
}

pub fn indicator_from_powers(powers: &PowerMatrix) -> IndicatorMatrix {
    IndicatorMatrix::from_powers(powers)
}

/// Every device has exactly one outgoing link and none to itself.
pub fn check_single_link(indicator: &IndicatorMatrix) -> bool {
    (0..indicator.n_devices()).all(|i| indicator.row_sum(i) == 1 && !indicator.get(i, i))
}

/// At least one device sends directly to the access point.
pub fn check_ap_connected(indicator: &IndicatorMatrix) -> bool {
    indicator.inflow(indicator.access_point()) >= 1
}

/// Every device's update reaches the access point within `n` hops.
pub fn check_acyclic_reach(indicator: &IndicatorMatrix) -> bool {
    indicator.reach_mismatch() == 0
}

/// `T^s_i = s_i / r^p_i` for every device.
pub fn processing_times(demand: &DemandVector, scenario: &Scenario) -> Vec<f64> {
    demand
        .iter()
        .zip(&scenario.devices)
        .map(|(s, d)| s / d.processing_rate)
        .collect()
}

/// Deadline excess for every relayed device:
/// `T^s_i + T^a_i * inflow_i + I^d / r_i - sum_j I_ij T^s_j`.
/// `None` for devices that send straight to the access point, to themselves,
/// or not at all.
pub fn timing_excess(
    indicator: &IndicatorMatrix,
    demand: &DemandVector,
    rates: &[f64],
    scenario: &Scenario,
) -> Result<Vec<Option<f64>>> {
    let n = indicator.n_devices();
    if demand.len() != n || rates.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: demand.len().min(rates.len()),
        });
    }
    let times = processing_times(demand, scenario);
    (0..n)
        .map(|i| {
            let relays: Vec<usize> = (0..n).filter(|&j| j != i && indicator.get(i, j)).collect();
            if indicator.is_direct(i) || relays.is_empty() {
                return Ok(None);
            }
            if !(rates[i] > 0.0) {
                return Err(Error::ZeroRate { device: i });
            }
            let device = &scenario.devices[i];
            let finish = times[i]
                + device.averaging_time * indicator.inflow(i) as f64
                + scenario.update_size / rates[i];
            let deadline: f64 = relays.iter().map(|&j| times[j]).sum();
            Ok(Some(finish - deadline))
        })
        .collect()
}

/// Per-device deadline check; direct transmitters pass vacuously.
pub fn check_timing(
    indicator: &IndicatorMatrix,
    demand: &DemandVector,
    rates: &[f64],
    scenario: &Scenario,
    tolerance: f64,
) -> Result<Vec<bool>> {
    Ok(timing_excess(indicator, demand, rates, scenario)?
        .into_iter()
        .map(|v| v.is_none_or(|v| v <= tolerance))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    /// Device row does not hold exactly one link.
    LinkCount {
        device: usize,
        links: usize,
    },
    SelfLoop {
        device: usize,
    },
    NoAccessPointLink,
    /// Device whose chain never reaches the access point.
    Unreachable {
        device: usize,
    },
    Timing {
        device: usize,
        excess: f64,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Conjunction of the link, access-point, reachability and timing checks.
pub fn feasible(
    indicator: &IndicatorMatrix,
    demand: &DemandVector,
    rates: &[f64],
    scenario: &Scenario,
    tolerance: f64,
) -> Result<FeasibilityReport> {
    let n = indicator.n_devices();
    let mut violations = Vec::new();
    for i in 0..n {
        let links = indicator.row_sum(i);
        if links != 1 {
            violations.push(Violation::LinkCount { device: i, links });
        }
        if indicator.get(i, i) {
            violations.push(Violation::SelfLoop { device: i });
        }
    }
    if !check_ap_connected(indicator) {
        violations.push(Violation::NoAccessPointLink);
    }
    let reach = indicator.reach_power();
    let ap = indicator.access_point();
    for i in 0..n {
        if (0..=n).any(|j| reach[[i, j]] != (j == ap)) {
            violations.push(Violation::Unreachable { device: i });
        }
    }
    for (i, excess) in timing_excess(indicator, demand, rates, scenario)?
        .into_iter()
        .enumerate()
    {
        if let Some(v) = excess.filter(|&v| v > tolerance) {
            violations.push(Violation::Timing {
                device: i,
                excess: v,
            });
        }
    }
    Ok(FeasibilityReport { violations })
}
