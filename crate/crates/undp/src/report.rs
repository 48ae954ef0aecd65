//! `report.json`: one document per run.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use undp_core::{solution_cost, AssignmentResult, Network, OdMatrix, Solution, SplitBounds};

use crate::config::RunConfig;
use crate::output::{OutputError, SensitivityRow};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: String,
    pub version: String,
    pub wall_time_s: f64,
    /// Effective configuration after defaults and command-line overrides.
    pub config: RunConfig,
    pub instance: InstanceSummary,
    pub violations: Vec<String>,
    pub assignment: Option<AssignmentSummary>,
    pub optimization: Option<OptimizationSummary>,
    pub sensitivity: Option<Vec<SensitivityRow>>,
    pub solution: Option<SolutionBlock>,
    /// Files written next to this report.
    pub files: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub nodes: usize,
    pub links: usize,
    pub signals: usize,
    pub od_pairs: usize,
    pub total_demand: f64,
    pub budget: f64,
    pub total_expansion_cost: f64,
}

impl InstanceSummary {
    pub fn new(network: &Network, od: &OdMatrix) -> Self {
        InstanceSummary {
            nodes: network.node_count(),
            links: network.links().len(),
            signals: network.signals().len(),
            od_pairs: od.len(),
            total_demand: od.total_demand(),
            budget: network.budget(),
            total_expansion_cost: network.total_expansion_cost(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignmentSummary {
    pub total_travel_time: f64,
    /// Convergence error of the final path flows.
    pub error: f64,
    pub iterations: usize,
    pub converged: bool,
    pub beckmann: f64,
}

impl From<&AssignmentResult> for AssignmentSummary {
    fn from(r: &AssignmentResult) -> Self {
        AssignmentSummary {
            total_travel_time: r.total_travel_time,
            error: r.error,
            iterations: r.iterations,
            converged: r.converged,
            beckmann: r.beckmann,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationSummary {
    pub base_objective: f64,
    pub initial_objective: f64,
    pub best_objective: f64,
    pub improvement: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub t_initial: f64,
    pub t_final: f64,
    pub best_chain: usize,
    pub chain_objectives: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalBlock {
    pub node: u32,
    pub cycle_length: f64,
    /// Approaches as `origin-destination`.
    pub phase_a: Vec<String>,
    pub phase_b: Vec<String>,
    pub green_a: f64,
    pub green_b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpandedLink {
    pub origin: u32,
    pub destination: u32,
    pub added_capacity: f64,
    pub unit_cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionBlock {
    pub signals: Vec<SignalBlock>,
    pub expanded_links: Vec<ExpandedLink>,
    pub expansion_cost: f64,
}

fn label(network: &Network, id: undp_core::LinkId) -> String {
    let l = network.link(id);
    format!("{}-{}", l.origin, l.destination)
}

impl SolutionBlock {
    pub fn new(network: &Network, solution: &Solution) -> Self {
        let signals = network
            .signals()
            .iter()
            .zip(&solution.green_split)
            .map(|(s, &g)| SignalBlock {
                node: s.node,
                cycle_length: s.cycle_length,
                phase_a: s.phase_a.iter().map(|&l| label(network, l)).collect(),
                phase_b: s.phase_b.iter().map(|&l| label(network, l)).collect(),
                green_a: g,
                green_b: 1.0 - g,
            })
            .collect();
        let expanded_links = solution
            .expanded_links()
            .map(|id| {
                let l = network.link(id);
                ExpandedLink {
                    origin: l.origin,
                    destination: l.destination,
                    added_capacity: l.expansion_amount,
                    unit_cost: l.unit_cost,
                }
            })
            .collect();
        SolutionBlock { signals, expanded_links, expansion_cost: solution_cost(network, solution) }
    }

    /// Rebuilds the solution and checks every constraint on it.
    pub fn to_solution(&self, network: &Network, bounds: &SplitBounds) -> Result<Solution, OutputError> {
        let bad = |message: String| OutputError::Content { line: 0, message };
        if self.signals.len() != network.signals().len() {
            return Err(bad(format!("expected {} signals, found {}", network.signals().len(), self.signals.len())));
        }
        let mut solution = Solution::uniform(network, 0.5);
        for ((block, sig), g) in self.signals.iter().zip(network.signals()).zip(&mut solution.green_split) {
            if block.node != sig.node {
                return Err(bad(format!("signal order: expected node {}, found {}", sig.node, block.node)));
            }
            if block.green_b != 1.0 - block.green_a {
                return Err(bad(format!("green ratios at node {} do not sum to 1", block.node)));
            }
            *g = block.green_a;
        }
        for e in &self.expanded_links {
            let id = network
                .find_link(e.origin, e.destination)
                .ok_or_else(|| bad(format!("no link {}-{}", e.origin, e.destination)))?;
            solution.expand[id.index()] = true;
        }
        solution.check(network, bounds)?;
        Ok(solution)
    }
}

impl RunReport {
    pub fn write(&self, path: &Path) -> Result<(), OutputError> {
        let text = serde_json::to_string_pretty(self).expect("report serializes");
        fs::write(path, text + "\n").map_err(|source| OutputError::Io { path: path.into(), source })
    }

    pub fn read(path: &Path) -> Result<Self, OutputError> {
        let text = fs::read_to_string(path).map_err(|source| OutputError::Io { path: path.into(), source })?;
        serde_json::from_str(&text).map_err(|e| OutputError::Content { line: e.line() as u64, message: e.to_string() })
    }
}
