//! Independent checks for the assignment solver: a method-of-successive-
//! averages equilibrium over all-or-nothing loadings, and exhaustive simple
//! path enumeration for small graphs.
//!
//! Nothing here shares code with [`crate::assignment`] besides the link cost
//! curves.

use alloc::vec;
use alloc::vec::Vec;

use crate::cost::{CostError, CostParams, LinkCostModel};
use crate::network::{LinkId, Network, NodeId, OdMatrix, Solution};

/// Upper bound on the number of paths [`enumerate_paths`] will return.
pub const MAX_ENUMERATED_PATHS: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleConfig {
    pub max_iterations: usize,
    /// Stop once the relative gap is at or below this value.
    pub gap_tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { max_iterations: 100_000, gap_tolerance: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("destination {destination} is unreachable from origin {origin}")]
    Unreachable { origin: NodeId, destination: NodeId },
    #[error("more than {0} simple paths")]
    TooManyPaths(usize),
    #[error("invalid oracle configuration")]
    InvalidConfig,
    #[error(transparent)]
    Cost(#[from] CostError),
}

#[derive(Clone, Debug)]
pub struct MsaResult {
    pub link_flows: Vec<f64>,
    /// `(Σ x t - Σ y t) / Σ x t` with `y` the all-or-nothing loading at the
    /// final times.
    pub relative_gap: f64,
    pub iterations: usize,
}

/// Bellman-Ford predecessor links from `origin` (dense index).
fn label_correcting(network: &Network, times: &[f64], origin: usize) -> Vec<Option<LinkId>> {
    let n = network.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    dist[origin] = 0.0;
    for _ in 0..n {
        let mut changed = false;
        for l in network.link_ids() {
            let (u, v) = network.ends(l);
            let nd = dist[u] + times[l.index()];
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = Some(l);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    pred
}

fn all_or_nothing(
    network: &Network,
    od: &OdMatrix,
    ends: &[(usize, usize)],
    times: &[f64],
) -> Result<Vec<f64>, OracleError> {
    let mut y = vec![0.0; times.len()];
    let mut cache: Vec<(usize, Vec<Option<LinkId>>)> = Vec::new();
    for (p, &(r, s)) in od.pairs().iter().zip(ends) {
        let pos = match cache.iter().position(|(o, _)| *o == r) {
            Some(i) => i,
            None => {
                cache.push((r, label_correcting(network, times, r)));
                cache.len() - 1
            }
        };
        let pred = &cache[pos].1;
        let mut node = s;
        while node != r {
            let l = pred[node].ok_or(OracleError::Unreachable {
                origin: p.origin,
                destination: p.destination,
            })?;
            y[l.index()] += p.demand;
            node = network.ends(l).0;
        }
    }
    Ok(y)
}

fn od_ends(network: &Network, od: &OdMatrix) -> Result<Vec<(usize, usize)>, OracleError> {
    od.pairs()
        .iter()
        .map(|p| {
            let r = network.node_index(p.origin).ok_or(OracleError::UnknownNode(p.origin))?;
            let s = network
                .node_index(p.destination)
                .ok_or(OracleError::UnknownNode(p.destination))?;
            Ok((r, s))
        })
        .collect()
}

/// `(Σ x t(x) − Σ y t(x)) / Σ x t(x)` for any feasible link flows `x`, with
/// `y` the all-or-nothing loading at `t(x)`. Zero exactly at equilibrium.
pub fn relative_gap(
    network: &Network,
    od: &OdMatrix,
    solution: &Solution,
    params: &CostParams,
    flows: &[f64],
) -> Result<f64, OracleError> {
    let costs = LinkCostModel::new(network, solution, params)?;
    if flows.len() != costs.len() {
        return Err(OracleError::InvalidConfig);
    }
    let ends = od_ends(network, od)?;
    let mut times = vec![0.0; flows.len()];
    costs.times_into(flows, &mut times);
    let y = all_or_nothing(network, od, &ends, &times)?;
    let current: f64 = flows.iter().zip(&times).map(|(a, t)| a * t).sum();
    let best: f64 = y.iter().zip(&times).map(|(a, t)| a * t).sum();
    Ok((current - best) / current)
}

/// User equilibrium by successive averages:
/// `x ← x + (AON(t(x)) − x) / n`.
pub fn solve_ue_msa(
    network: &Network,
    od: &OdMatrix,
    solution: &Solution,
    params: &CostParams,
    config: &OracleConfig,
) -> Result<MsaResult, OracleError> {
    if config.max_iterations == 0 || !(config.gap_tolerance > 0.0) {
        return Err(OracleError::InvalidConfig);
    }
    let costs = LinkCostModel::new(network, solution, params)?;
    let ends = od_ends(network, od)?;

    let m = network.links().len();
    let mut times = vec![0.0; m];
    costs.times_into(&vec![0.0; m], &mut times);
    let mut x = all_or_nothing(network, od, &ends, &times)?;
    let mut n = 1;
    loop {
        costs.times_into(&x, &mut times);
        let y = all_or_nothing(network, od, &ends, &times)?;
        let current: f64 = x.iter().zip(&times).map(|(a, t)| a * t).sum();
        let best: f64 = y.iter().zip(&times).map(|(a, t)| a * t).sum();
        let gap = (current - best) / current;
        if gap <= config.gap_tolerance || n >= config.max_iterations {
            return Ok(MsaResult { link_flows: x, relative_gap: gap, iterations: n });
        }
        n += 1;
        let step = 1.0 / n as f64;
        for (xa, ya) in x.iter_mut().zip(&y) {
            *xa += step * (ya - *xa);
        }
    }
}

/// Every simple path from `origin` to `destination` with at most `max_hops`
/// links, as link sequences. A trip to the origin itself has no path.
pub fn enumerate_paths(
    network: &Network,
    origin: NodeId,
    destination: NodeId,
    max_hops: usize,
) -> Result<Vec<Vec<LinkId>>, OracleError> {
    let r = network.node_index(origin).ok_or(OracleError::UnknownNode(origin))?;
    let s = network
        .node_index(destination)
        .ok_or(OracleError::UnknownNode(destination))?;
    let mut out = Vec::new();
    if r == s {
        return Ok(out);
    }
    let mut on_path = vec![false; network.node_count()];
    let mut links = Vec::new();
    // explicit stack of (node, next out-link position)
    let mut stack = vec![(r, 0usize)];
    on_path[r] = true;
    while let Some(&mut (u, ref mut next)) = stack.last_mut() {
        let out_links = network.out_links(u);
        if *next >= out_links.len() || links.len() >= max_hops {
            on_path[u] = false;
            stack.pop();
            links.pop();
            continue;
        }
        let l = out_links[*next];
        *next += 1;
        let v = network.ends(l).1;
        if on_path[v] {
            continue;
        }
        if v == s {
            let mut p = links.clone();
            p.push(l);
            out.push(p);
            if out.len() > MAX_ENUMERATED_PATHS {
                return Err(OracleError::TooManyPaths(MAX_ENUMERATED_PATHS));
            }
            continue;
        }
        on_path[v] = true;
        links.push(l);
        stack.push((v, 0));
    }
    Ok(out)
}
