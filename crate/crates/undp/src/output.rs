//! Tabular result files and their parsers.
//!
//! | file | one row per | columns |
//! |---|---|---|
//! | `solution.csv` | link | `origin, destination, expanded_capacity, cycle_length, green_ratio` |
//! | `trace.csv` | annealing iteration | `iteration, temperature, objective, accepted, best_objective, move_kind, target, null_move` |
//! | `flows.csv` | link | `origin, destination, flow, travel_time, capacity, volume_capacity_ratio` |
//! | `sensitivity.csv` | budget level | `fraction, budget, best_objective, base_objective, improvement, expansion_cost` |
//!
//! In `solution.csv`, `expanded_capacity` is the capacity added to the link
//! (0 when not expanded); `cycle_length` and `green_ratio` are 0 for links
//! that do not enter a signal. In `trace.csv`, `target` is `origin-destination`
//! for link moves and the intersection node for signal moves. Floats are
//! written in shortest round-trip form.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use undp_core::{
    solution_cost, AssignmentResult, MoveKind, Network, Phase, Solution, SolutionError, SplitBounds, TraceRecord,
};

use crate::run::LevelResult;

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Content { line: u64, message: String },
    #[error(transparent)]
    Solution(#[from] SolutionError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionRow {
    pub origin: u32,
    pub destination: u32,
    pub expanded_capacity: f64,
    pub cycle_length: f64,
    pub green_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub temperature: f64,
    pub objective: f64,
    pub accepted: bool,
    pub best_objective: f64,
    pub move_kind: String,
    pub target: String,
    pub null_move: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowRow {
    pub origin: u32,
    pub destination: u32,
    pub flow: f64,
    pub travel_time: f64,
    pub capacity: f64,
    pub volume_capacity_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub fraction: f64,
    pub budget: f64,
    pub best_objective: f64,
    pub base_objective: f64,
    pub improvement: f64,
    pub expansion_cost: f64,
}

pub fn write_rows<T: Serialize, W: Write>(out: W, rows: &[T]) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| OutputError::Io { path: PathBuf::new(), source })?;
    Ok(())
}

pub fn read_rows<T: DeserializeOwned, R: Read>(input: R) -> Result<Vec<T>, OutputError> {
    csv::Reader::from_reader(input).deserialize().collect::<Result<_, _>>().map_err(Into::into)
}

pub fn write_file<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), OutputError> {
    let f = File::create(path).map_err(|source| OutputError::Io { path: path.into(), source })?;
    write_rows(f, rows).map_err(|e| match e {
        OutputError::Io { source, .. } => OutputError::Io { path: path.into(), source },
        e => e,
    })
}

pub fn read_file<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, OutputError> {
    let f = File::open(path).map_err(|source| OutputError::Io { path: path.into(), source })?;
    read_rows(f)
}

pub fn solution_rows(network: &Network, solution: &Solution) -> Vec<SolutionRow> {
    network
        .link_ids()
        .map(|id| {
            let l = network.link(id);
            SolutionRow {
                origin: l.origin,
                destination: l.destination,
                expanded_capacity: if solution.expand[id.index()] { l.expansion_amount } else { 0.0 },
                cycle_length: if l.enters_signal { l.cycle_length } else { 0.0 },
                green_ratio: solution.green_ratio(network, id).unwrap_or(0.0),
            }
        })
        .collect()
}

/// Rebuilds a solution from its rows and checks it against `bounds` and the
/// network's budget.
pub fn solution_from_rows(
    network: &Network,
    rows: &[SolutionRow],
    bounds: &SplitBounds,
) -> Result<Solution, OutputError> {
    let bad = |i: usize, message: String| OutputError::Content { line: i as u64 + 2, message };
    if rows.len() != network.links().len() {
        return Err(bad(rows.len(), format!("expected {} links, found {}", network.links().len(), rows.len())));
    }
    let mut solution = Solution::uniform(network, 0.5);
    let mut seen = vec![false; rows.len()];
    let mut phase_b = vec![None; network.signals().len()];
    for (i, r) in rows.iter().enumerate() {
        let id = network
            .find_link(r.origin, r.destination)
            .ok_or_else(|| bad(i, format!("no link {}-{}", r.origin, r.destination)))?;
        if std::mem::replace(&mut seen[id.index()], true) {
            return Err(bad(i, format!("link {}-{} listed twice", r.origin, r.destination)));
        }
        let link = network.link(id);
        if r.expanded_capacity != 0.0 {
            if !link.expandable || r.expanded_capacity != link.expansion_amount {
                return Err(bad(i, format!("link {}-{} cannot be expanded by {}", r.origin, r.destination, r.expanded_capacity)));
            }
            solution.expand[id.index()] = true;
        }
        match network.phase_of(id) {
            Some((s, Phase::A)) => solution.green_split[s] = r.green_ratio,
            Some((s, Phase::B)) => phase_b[s] = Some((i, r.green_ratio)),
            None if r.green_ratio != 0.0 => {
                return Err(bad(i, format!("link {}-{} has no signal", r.origin, r.destination)));
            }
            None => {}
        }
    }
    for (s, b) in phase_b.into_iter().enumerate() {
        if let Some((i, g)) = b {
            if g != 1.0 - solution.green_split[s] {
                return Err(bad(i, format!("green ratios at node {} do not sum to 1", network.signals()[s].node)));
            }
        }
    }
    // rows sharing a phase must agree
    for (i, r) in rows.iter().enumerate() {
        let id = network.find_link(r.origin, r.destination).expect("checked above");
        if let Some(g) = solution.green_ratio(network, id) {
            if g != r.green_ratio {
                return Err(bad(i, format!("link {}-{} disagrees with its phase", r.origin, r.destination)));
            }
        }
    }
    solution.check(network, bounds)?;
    Ok(solution)
}

pub fn trace_rows(network: &Network, trace: &[TraceRecord]) -> Vec<TraceRow> {
    trace
        .iter()
        .map(|t| {
            let (move_kind, target) = match t.kind {
                MoveKind::Link => {
                    let l = &network.links()[t.target];
                    ("link", format!("{}-{}", l.origin, l.destination))
                }
                MoveKind::Signal => ("signal", network.signals()[t.target].node.to_string()),
            };
            TraceRow {
                iteration: t.iteration,
                temperature: t.temperature,
                objective: t.objective,
                accepted: t.accepted,
                best_objective: t.best_objective,
                move_kind: move_kind.into(),
                target,
                null_move: t.null_move,
            }
        })
        .collect()
}

pub fn flow_rows(network: &Network, solution: &Solution, result: &AssignmentResult) -> Vec<FlowRow> {
    network
        .link_ids()
        .map(|id| {
            let l = network.link(id);
            let capacity = network.effective_capacity(id, solution).expect("solution matches network");
            let flow = result.link_flows[id.index()];
            FlowRow {
                origin: l.origin,
                destination: l.destination,
                flow,
                travel_time: result.link_times[id.index()],
                capacity,
                volume_capacity_ratio: flow / capacity,
            }
        })
        .collect()
}

pub fn sensitivity_rows(network: &Network, levels: &[LevelResult]) -> Vec<SensitivityRow> {
    levels
        .iter()
        .map(|p| SensitivityRow {
            fraction: p.fraction,
            budget: p.budget,
            best_objective: p.best_objective,
            base_objective: p.base_objective,
            improvement: (p.base_objective - p.best_objective) / p.base_objective,
            expansion_cost: solution_cost(network, &p.best),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Instance;

    #[test]
    fn solution_round_trips() {
        let inst = Instance::reference().unwrap();
        let n = &inst.network;
        let mut s = Solution::uniform(n, 0.5);
        s.green_split = vec![0.61, 0.2, 0.8, 0.3 + 1e-13, 0.47];
        s.expand[6] = true;
        s.expand[16] = true;
        let rows = solution_rows(n, &s);
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        let back: Vec<SolutionRow> = read_rows(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        let parsed = solution_from_rows(n, &back, &SplitBounds::default()).unwrap();
        assert_eq!(parsed, s);
        let node3: Vec<f64> = rows.iter().filter(|r| r.destination == 3 && r.cycle_length > 0.0).map(|r| r.green_ratio).collect();
        assert!(node3.contains(&0.61) && node3.iter().any(|&g| (g - 0.39).abs() < 1e-12));
    }

    #[test]
    fn tampered_solution_is_rejected() {
        let inst = Instance::reference().unwrap();
        let n = &inst.network;
        let rows = solution_rows(n, &Solution::uniform(n, 0.5));
        let bounds = SplitBounds::default();
        let mut r = rows.clone();
        r[0].green_ratio = 0.6;
        assert!(solution_from_rows(n, &r, &bounds).is_err());
        let mut r = rows.clone();
        r[3].expanded_capacity = 12.0;
        assert!(solution_from_rows(n, &r, &bounds).is_err());
        let mut r = rows.clone();
        r.pop();
        assert!(solution_from_rows(n, &r, &bounds).is_err());
        // every candidate expanded: over the 900 budget
        let mut r = rows;
        for (row, l) in r.iter_mut().zip(n.links()) {
            row.expanded_capacity = l.expansion_amount;
        }
        assert!(matches!(solution_from_rows(n, &r, &bounds), Err(OutputError::Solution(_))));
    }
}
