use alloc::vec;
use alloc::vec::Vec;

use super::shortest_path::{check_times, shortest_path_tree, ShortestPathTree};
use super::{AssignmentError, Path};
use crate::cost::{CostParams, LinkCostModel};
use crate::network::{Network, NodeId, OdMatrix, Solution};

/// Relative slack on the Beckmann objective before a step is halved.
const DESCENT_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GpConfig {
    /// Stop once the convergence error is at or below this value.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Scalar multiplier on the Newton-like step.
    pub step_size: f64,
    /// Halvings tried when a step would increase the Beckmann objective.
    pub max_step_halvings: u32,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig { tolerance: 1e-3, max_iterations: 500, step_size: 1.0, max_step_halvings: 40 }
    }
}

impl GpConfig {
    pub fn validate(&self) -> Result<(), AssignmentError> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(AssignmentError::InvalidConfig("tolerance must be > 0"));
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(AssignmentError::InvalidConfig("step_size must be > 0"));
        }
        Ok(())
    }
}

/// Retained routes and their flows for one OD pair.
#[derive(Clone, Debug, PartialEq)]
pub struct OdPaths {
    origin: NodeId,
    destination: NodeId,
    demand: f64,
    paths: Vec<Path>,
    flows: Vec<f64>,
    shortest: usize,
}

impl OdPaths {
    pub fn origin(&self) -> NodeId {
        self.origin
    }

    pub fn destination(&self) -> NodeId {
        self.destination
    }

    pub fn demand(&self) -> f64 {
        self.demand
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn flows(&self) -> &[f64] {
        &self.flows
    }

    /// Index of the designated shortest path in [`Self::paths`].
    pub fn shortest(&self) -> usize {
        self.shortest
    }

    pub fn flow_sum(&self) -> f64 {
        self.flows.iter().sum()
    }
}

/// Path sets of every OD pair, in demand-matrix order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PathSet {
    ods: Vec<OdPaths>,
}

impl PathSet {
    pub fn ods(&self) -> &[OdPaths] {
        &self.ods
    }

    pub fn path_count(&self) -> usize {
        self.ods.iter().map(|o| o.paths.len()).sum()
    }
}

/// Mutable solver state: path flows plus the link flows and times they imply.
#[derive(Clone, Debug)]
pub struct GpState {
    paths: PathSet,
    link_flows: Vec<f64>,
    link_times: Vec<f64>,
}

impl GpState {
    pub fn paths(&self) -> &PathSet {
        &self.paths
    }

    pub fn link_flows(&self) -> &[f64] {
        &self.link_flows
    }

    pub fn link_times(&self) -> &[f64] {
        &self.link_times
    }
}

/// One convergence check of the main loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    /// Flow updates performed so far.
    pub iteration: usize,
    pub error: f64,
    pub beckmann: f64,
    pub total_travel_time: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateInfo {
    /// Fraction of the projected step actually taken.
    pub step_scale: f64,
    pub halvings: u32,
    pub beckmann_before: f64,
    pub beckmann_after: f64,
    pub pruned: usize,
}

#[derive(Clone, Debug)]
pub struct AssignmentResult {
    pub link_flows: Vec<f64>,
    pub link_times: Vec<f64>,
    pub paths: PathSet,
    pub error: f64,
    pub iterations: usize,
    /// `false` when the iteration limit stopped the solver first.
    pub converged: bool,
    pub total_travel_time: f64,
    pub beckmann: f64,
}

/// A network, its demand and the cost curves of one decision vector.
pub struct UeProblem<'a> {
    network: &'a Network,
    od: &'a OdMatrix,
    costs: LinkCostModel,
    od_nodes: Vec<(usize, usize)>,
    origins: Vec<usize>,
    od_origin: Vec<usize>,
}

impl<'a> UeProblem<'a> {
    pub fn new(
        network: &'a Network,
        od: &'a OdMatrix,
        solution: &Solution,
        params: &CostParams,
    ) -> Result<Self, AssignmentError> {
        let costs = LinkCostModel::new(network, solution, params)?;
        Self::with_costs(network, od, costs)
    }

    pub fn with_costs(
        network: &'a Network,
        od: &'a OdMatrix,
        costs: LinkCostModel,
    ) -> Result<Self, AssignmentError> {
        let mut od_nodes = Vec::with_capacity(od.len());
        let mut origins: Vec<usize> = Vec::new();
        let mut od_origin = Vec::with_capacity(od.len());
        for p in od.pairs() {
            let r = network.node_index(p.origin).ok_or(AssignmentError::UnknownNode(p.origin))?;
            let s = network
                .node_index(p.destination)
                .ok_or(AssignmentError::UnknownNode(p.destination))?;
            od_nodes.push((r, s));
            let pos = match origins.iter().position(|&o| o == r) {
                Some(pos) => pos,
                None => {
                    origins.push(r);
                    origins.len() - 1
                }
            };
            od_origin.push(pos);
        }
        Ok(UeProblem { network, od, costs, od_nodes, origins, od_origin })
    }

    pub fn costs(&self) -> &LinkCostModel {
        &self.costs
    }

    pub fn network(&self) -> &Network {
        self.network
    }

    fn trees(&self, times: &[f64]) -> Vec<ShortestPathTree> {
        self.origins
            .iter()
            .map(|&o| shortest_path_tree(self.network, times, o))
            .collect()
    }

    fn shortest_for(&self, trees: &[ShortestPathTree], i: usize) -> Result<Path, AssignmentError> {
        let p = &self.od.pairs()[i];
        trees[self.od_origin[i]]
            .path_to(self.network, self.od_nodes[i].1)
            .ok_or(AssignmentError::Unreachable { origin: p.origin, destination: p.destination })
    }

    fn aggregate_with(&self, ods: &[OdPaths], flows: &[Vec<f64>]) -> Vec<f64> {
        let mut x = vec![0.0; self.network.links().len()];
        for (od, f) in ods.iter().zip(flows) {
            for (p, &fk) in od.paths.iter().zip(f) {
                for l in p.links() {
                    x[l.index()] += fk;
                }
            }
        }
        x
    }

    /// Link flows implied by the path flows.
    pub fn aggregate(&self, paths: &PathSet) -> Vec<f64> {
        let mut x = vec![0.0; self.network.links().len()];
        for od in &paths.ods {
            for (p, &fk) in od.paths.iter().zip(&od.flows) {
                for l in p.links() {
                    x[l.index()] += fk;
                }
            }
        }
        x
    }

    fn priced(&self, paths: PathSet) -> Result<GpState, AssignmentError> {
        let link_flows = self.aggregate(&paths);
        let mut state = GpState { paths, link_times: vec![0.0; link_flows.len()], link_flows };
        self.update_times(&mut state)?;
        Ok(state)
    }

    /// Free-flow shortest paths loaded all-or-nothing.
    pub fn initialize(&self) -> Result<GpState, AssignmentError> {
        let zero = vec![0.0; self.network.links().len()];
        let mut times = vec![0.0; zero.len()];
        self.costs.times_into(&zero, &mut times);
        check_times(&times)?;
        let trees = self.trees(&times);
        let mut ods = Vec::with_capacity(self.od.len());
        for (i, p) in self.od.pairs().iter().enumerate() {
            ods.push(OdPaths {
                origin: p.origin,
                destination: p.destination,
                demand: p.demand,
                paths: vec![self.shortest_for(&trees, i)?],
                flows: vec![p.demand],
                shortest: 0,
            });
        }
        self.priced(PathSet { ods })
    }

    /// Reuses the routes and flows of an earlier solve, re-priced under this
    /// problem's cost curves.
    pub fn warm_state(&self, warm: &PathSet) -> Result<GpState, AssignmentError> {
        let matches = warm.ods.len() == self.od.len()
            && warm.ods.iter().zip(self.od.pairs()).all(|(w, p)| {
                w.origin == p.origin && w.destination == p.destination && w.demand == p.demand
            });
        if !matches {
            return Err(AssignmentError::WarmStartMismatch);
        }
        self.priced(warm.clone())
    }

    pub fn update_times(&self, state: &mut GpState) -> Result<(), AssignmentError> {
        self.costs.times_into(&state.link_flows, &mut state.link_times);
        check_times(&state.link_times)
    }

    /// Adds each OD's current shortest path when it is new and designates it
    /// as the shortest path. Returns the number of paths added.
    pub fn column_generation(&self, state: &mut GpState) -> Result<usize, AssignmentError> {
        let trees = self.trees(&state.link_times);
        let mut added = 0;
        for i in 0..self.od.len() {
            let path = self.shortest_for(&trees, i)?;
            let od = &mut state.paths.ods[i];
            match od.paths.iter().position(|p| *p == path) {
                Some(k) => od.shortest = k,
                None => {
                    od.paths.push(path);
                    od.flows.push(0.0);
                    od.shortest = od.paths.len() - 1;
                    added += 1;
                }
            }
        }
        Ok(added)
    }

    /// Largest over OD pairs of the flow-weighted relative excess cost of
    /// non-shortest paths.
    pub fn convergence_error(&self, state: &GpState) -> f64 {
        let times = &state.link_times;
        let mut err: f64 = 0.0;
        for od in &state.paths.ods {
            let d_short = od.paths[od.shortest].cost(times);
            let sum: f64 = od
                .paths
                .iter()
                .zip(&od.flows)
                .enumerate()
                .filter(|&(k, _)| k != od.shortest)
                .map(|(_, (p, &f))| {
                    let d = p.cost(times);
                    (f / od.demand) * ((d - d_short) / d)
                })
                .sum();
            err = err.max(sum);
        }
        err
    }

    /// One projected flow shift from every non-shortest path toward the
    /// designated shortest path, scaled by the inverse second-derivative
    /// approximation over the links the two paths do not share.
    ///
    /// A step that would raise the Beckmann objective is halved until it
    /// does not.
    pub fn gp_update(&self, state: &mut GpState, config: &GpConfig) -> Result<UpdateInfo, AssignmentError> {
        self.update_times(state)?;
        let times = &state.link_times;
        let derivs: Vec<f64> = state
            .link_flows
            .iter()
            .enumerate()
            .map(|(i, &x)| self.costs.derivative(i, x))
            .collect();

        let ods = &state.paths.ods;
        let targets: Vec<Vec<f64>> = ods
            .iter()
            .map(|od| {
                let short = &od.paths[od.shortest];
                let d_short = short.cost(times);
                od.paths
                    .iter()
                    .zip(&od.flows)
                    .enumerate()
                    .map(|(k, (p, &f))| {
                        if k == od.shortest {
                            return f;
                        }
                        let excess = (p.cost(times) - d_short).max(0.0);
                        if excess == 0.0 {
                            return f;
                        }
                        let s: f64 = p
                            .links()
                            .iter()
                            .filter(|l| !short.contains(**l))
                            .chain(short.links().iter().filter(|l| !p.contains(**l)))
                            .map(|l| derivs[l.index()])
                            .sum();
                        if s > 0.0 && s.is_finite() {
                            (f - config.step_size / s * excess).max(0.0)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();

        let trial = |theta: f64| -> Vec<Vec<f64>> {
            ods.iter()
                .zip(&targets)
                .map(|(od, target)| {
                    let mut f: Vec<f64> = od
                        .flows
                        .iter()
                        .zip(target)
                        .enumerate()
                        .map(|(k, (&cur, &tgt))| {
                            if k == od.shortest || theta == 0.0 {
                                cur
                            } else if theta == 1.0 {
                                tgt
                            } else {
                                cur + theta * (tgt - cur)
                            }
                        })
                        .collect();
                    let others: f64 = f
                        .iter()
                        .enumerate()
                        .filter(|&(k, _)| k != od.shortest)
                        .map(|(_, v)| v)
                        .sum();
                    f[od.shortest] = (od.demand - others).max(0.0);
                    f
                })
                .collect()
        };

        let before = self.costs.beckmann(&state.link_flows);
        let slack = DESCENT_SLACK * before.abs().max(1.0);
        let mut theta = 1.0;
        let mut halvings = 0;
        let (flows, after) = loop {
            let f = trial(theta);
            let b = self.costs.beckmann(&self.aggregate_with(ods, &f));
            if b <= before + slack {
                break (f, b);
            }
            if halvings >= config.max_step_halvings {
                theta = 0.0;
                break (trial(0.0), before);
            }
            theta *= 0.5;
            halvings += 1;
        };

        let mut pruned = 0;
        for (od, f) in state.paths.ods.iter_mut().zip(flows) {
            let short = od.paths[od.shortest].clone();
            let mut kept_paths = Vec::with_capacity(od.paths.len());
            let mut kept_flows = Vec::with_capacity(od.paths.len());
            for (k, (p, fk)) in od.paths.drain(..).zip(f).enumerate() {
                if k != od.shortest && fk == 0.0 {
                    pruned += 1;
                    continue;
                }
                kept_paths.push(p);
                kept_flows.push(fk);
            }
            od.shortest = kept_paths.iter().position(|p| *p == short).unwrap_or(0);
            od.paths = kept_paths;
            od.flows = kept_flows;
        }
        state.link_flows = self.aggregate(&state.paths);
        self.update_times(state)?;

        Ok(UpdateInfo { step_scale: theta, halvings, beckmann_before: before, beckmann_after: after, pruned })
    }

    pub fn solve(&self, config: &GpConfig, warm: Option<&PathSet>) -> Result<AssignmentResult, AssignmentError> {
        self.solve_observed(config, warm, &mut |_, _| {})
    }

    /// Runs the column-generation / flow-update loop until the convergence
    /// error drops to the tolerance or the iteration limit is reached.
    /// `observer` sees the state at every convergence check.
    pub fn solve_observed(
        &self,
        config: &GpConfig,
        warm: Option<&PathSet>,
        observer: &mut dyn FnMut(&IterationRecord, &GpState),
    ) -> Result<AssignmentResult, AssignmentError> {
        config.validate()?;
        let mut state = match warm {
            Some(ps) => self.warm_state(ps)?,
            None => self.initialize()?,
        };
        let mut iterations = 0;
        let (error, converged) = loop {
            self.update_times(&mut state)?;
            self.column_generation(&mut state)?;
            let error = self.convergence_error(&state);
            let record = IterationRecord {
                iteration: iterations,
                error,
                beckmann: self.costs.beckmann(&state.link_flows),
                total_travel_time: self.costs.total_travel_time(&state.link_flows),
            };
            observer(&record, &state);
            if error <= config.tolerance {
                break (error, true);
            }
            if iterations >= config.max_iterations {
                break (error, false);
            }
            self.gp_update(&mut state, config)?;
            iterations += 1;
        };
        Ok(AssignmentResult {
            total_travel_time: self.costs.total_travel_time(&state.link_flows),
            beckmann: self.costs.beckmann(&state.link_flows),
            link_flows: state.link_flows,
            link_times: state.link_times,
            paths: state.paths,
            error,
            iterations,
            converged,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::LinkCost;
    use crate::network::fixtures::{reference_network, reference_od};
    use crate::network::{Link, OdPair};

    /// t1 = 10 + x1, t2 = 20 + x2, q = 30 between nodes 1 and 2 (via 3 for
    /// the second route, since parallel links are not allowed).
    pub(crate) fn two_route() -> (Network, OdMatrix, CostParams) {
        let params = CostParams { bpr_alpha: 1.0, bpr_beta: 1.0, ..CostParams::default() };
        let links = vec![
            Link::new(1, 2, 10.0, 10.0),
            Link::new(1, 3, 20.0, 20.0),
            // negligible connector
            Link::new(3, 2, 1e-9, 1e30),
        ];
        let n = Network::new(links, 0.0).unwrap();
        let od = OdMatrix::new(vec![OdPair { origin: 1, destination: 2, demand: 30.0 }]).unwrap();
        (n, od, params)
    }

    #[test]
    fn single_path_network() {
        let n = Network::new(vec![Link::new(1, 2, 60.0, 100.0), Link::new(2, 3, 60.0, 100.0)], 0.0).unwrap();
        let od = OdMatrix::new(vec![OdPair { origin: 1, destination: 3, demand: 80.0 }]).unwrap();
        let sol = Solution::uniform(&n, 0.5);
        let p = UeProblem::new(&n, &od, &sol, &CostParams::default()).unwrap();
        let state = p.initialize().unwrap();
        assert_eq!(state.link_flows(), &[80.0, 80.0]);
        let r = p.solve(&GpConfig::default(), None).unwrap();
        assert_eq!(r.error, 0.0);
        assert_eq!(r.iterations, 0);
        assert!(r.converged);
    }

    #[test]
    fn reference_initialization() {
        let n = reference_network();
        let od = reference_od();
        let sol = Solution::uniform(&n, 0.5);
        let p = UeProblem::new(&n, &od, &sol, &CostParams::default()).unwrap();
        let state = p.initialize().unwrap();
        assert_eq!(state.paths().path_count(), 12);

        // independent re-summation of demands over each OD's initial path
        let mut expected = vec![0.0; 32];
        for (od_paths, pair) in state.paths().ods().iter().zip(od.pairs()) {
            let free: Vec<f64> = n.links().iter().map(|l| l.free_time).collect();
            let mut times = free.clone();
            for (i, t) in times.iter_mut().enumerate() {
                *t = p.costs().time(i, 0.0);
            }
            let sp = super::super::shortest_path(&n, &times, pair.origin, pair.destination).unwrap();
            assert_eq!(&od_paths.paths()[0], &sp);
            for l in sp.links() {
                expected[l.index()] += pair.demand;
            }
        }
        assert_eq!(state.link_flows(), expected.as_slice());
    }

    #[test]
    fn column_generation_without_time_change_adds_nothing() {
        let n = reference_network();
        let od = reference_od();
        let sol = Solution::uniform(&n, 0.5);
        let p = UeProblem::new(&n, &od, &sol, &CostParams::default()).unwrap();
        let mut state = p.initialize().unwrap();
        // price at zero flow again: the same shortest paths come back
        let zero = vec![0.0; 32];
        p.costs().times_into(&zero, &mut state.link_times);
        assert_eq!(p.column_generation(&mut state).unwrap(), 0);
        assert_eq!(state.paths().path_count(), 12);
    }

    #[test]
    fn congested_route_grows_the_path_set() {
        // 1->2->4 is short but congests; 1->3->4 is the detour
        let params = CostParams { bpr_alpha: 1.0, bpr_beta: 1.0, ..CostParams::default() };
        let links = vec![
            Link::new(1, 2, 5.0, 1.0),
            Link::new(2, 4, 5.0, 1.0),
            Link::new(1, 3, 20.0, 1000.0),
            Link::new(3, 4, 20.0, 1000.0),
        ];
        let n = Network::new(links, 0.0).unwrap();
        let od = OdMatrix::new(vec![OdPair { origin: 1, destination: 4, demand: 10.0 }]).unwrap();
        let p = UeProblem::new(&n, &od, &Solution::uniform(&n, 0.5), &params).unwrap();
        let mut state = p.initialize().unwrap();
        assert_eq!(state.paths().path_count(), 1);
        assert_eq!(p.column_generation(&mut state).unwrap(), 1);
        assert_eq!(state.paths().path_count(), 2);
        assert_eq!(state.paths().ods()[0].shortest(), 1);
        // a second call finds the same path again
        assert_eq!(p.column_generation(&mut state).unwrap(), 0);
    }

    #[test]
    fn two_route_equilibrium() {
        let (n, od, params) = two_route();
        let p = UeProblem::new(&n, &od, &Solution::uniform(&n, 0.5), &params).unwrap();
        let cfg = GpConfig { tolerance: 1e-10, ..GpConfig::default() };
        let r = p.solve(&cfg, None).unwrap();
        assert!(r.converged);
        assert!((r.link_flows[0] - 20.0).abs() < 1e-6, "{:?}", r.link_flows);
        assert!((r.link_flows[1] - 10.0).abs() < 1e-6);
    }

    #[test]
    fn equal_cost_paths_do_not_move() {
        let (n, od, params) = two_route();
        let p = UeProblem::new(&n, &od, &Solution::uniform(&n, 0.5), &params).unwrap();
        let mut state = p.initialize().unwrap();
        p.column_generation(&mut state).unwrap();
        // put the state at the equilibrium by hand
        let od0 = &mut state.paths.ods[0];
        let direct = od0.paths.iter().position(|q| q.len() == 1).unwrap();
        od0.flows[direct] = 20.0;
        od0.flows[1 - direct] = 10.0;
        state.link_flows = p.aggregate(&state.paths);
        p.update_times(&mut state).unwrap();
        let before = state.paths.ods[0].flows.clone();
        p.gp_update(&mut state, &GpConfig::default()).unwrap();
        let after = &state.paths.ods[0].flows;
        for (a, b) in before.iter().zip(after) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn convergence_error_by_hand() {
        let (n, od, params) = two_route();
        let p = UeProblem::new(&n, &od, &Solution::uniform(&n, 0.5), &params).unwrap();
        let mut state = p.initialize().unwrap();
        assert_eq!(p.convergence_error(&state), 0.0);
        p.column_generation(&mut state).unwrap();
        let od0 = &mut state.paths.ods[0];
        let direct = od0.paths.iter().position(|q| q.len() == 1).unwrap();
        od0.flows[direct] = 25.0;
        od0.flows[1 - direct] = 5.0;
        state.link_flows = p.aggregate(&state.paths);
        p.update_times(&mut state).unwrap();
        p.column_generation(&mut state).unwrap();
        // d1 = 35, d2 = 25 (+ a 1e-9 connector)
        let err = p.convergence_error(&state);
        assert!((err - (25.0 / 30.0) * (10.0 / 35.0)).abs() < 1e-8, "{err}");

        // scale-free: doubling every time leaves the error unchanged
        for t in state.link_times.iter_mut() {
            *t *= 2.0;
        }
        assert!((p.convergence_error(&state) - err).abs() < 1e-12);
    }

    #[test]
    fn reference_converges_and_aggregates_exactly() {
        let n = reference_network();
        let od = reference_od();
        let sol = Solution::uniform(&n, 0.5);
        let p = UeProblem::new(&n, &od, &sol, &CostParams::default()).unwrap();
        let mut checks = 0;
        let r = p
            .solve_observed(&GpConfig::default(), None, &mut |rec, state| {
                checks += 1;
                for o in state.paths().ods() {
                    assert!((o.flow_sum() - o.demand()).abs() <= 1e-9 * o.demand());
                    assert!(o.flows().iter().all(|&f| f >= 0.0));
                    assert!(o.paths().iter().all(|q| q.is_simple(&n)));
                    for (i, a) in o.paths().iter().enumerate() {
                        assert!(o.paths()[..i].iter().all(|b| b != a));
                    }
                }
                assert!(rec.error >= 0.0);
            })
            .unwrap();
        assert!(r.converged && r.error <= 1e-3, "{} after {}", r.error, r.iterations);
        assert!(checks > 1);
        let mut x = vec![0.0; 32];
        for o in r.paths.ods() {
            for (q, f) in o.paths().iter().zip(o.flows()) {
                for l in q.links() {
                    x[l.index()] += f;
                }
            }
        }
        assert_eq!(x, r.link_flows);
        let tt: f64 = x.iter().enumerate().map(|(i, &xi)| xi * p.costs().time(i, xi)).sum();
        assert_eq!(tt, r.total_travel_time);
    }

    #[test]
    fn beckmann_never_increases() {
        let n = reference_network();
        let od = reference_od();
        let sol = Solution::uniform(&n, 0.5);
        let params = CostParams::default();
        let p = UeProblem::new(&n, &od, &sol, &params).unwrap();
        let mut state = p.initialize().unwrap();
        let cfg = GpConfig::default();
        let numeric = |x: &[f64]| -> f64 {
            n.link_ids()
                .map(|l| {
                    LinkCost::for_link(&n, l, &sol, &params)
                        .unwrap()
                        .integral_numeric(x[l.index()], &params, 1e-13)
                })
                .sum()
        };
        for _ in 0..60 {
            p.column_generation(&mut state).unwrap();
            let before = numeric(state.link_flows());
            p.gp_update(&mut state, &cfg).unwrap();
            let after = numeric(state.link_flows());
            assert!(after <= before * (1.0 + 1e-9), "{before} -> {after}");
        }
    }

    #[test]
    fn warm_start_is_faster_and_deterministic() {
        let n = reference_network();
        let od = reference_od();
        let params = CostParams::default();
        let cfg = GpConfig::default();
        let sol = Solution::uniform(&n, 0.5);
        let base = UeProblem::new(&n, &od, &sol, &params).unwrap().solve(&cfg, None).unwrap();

        let mut moved = sol.clone();
        moved.green_split[2] = 0.52;
        let p = UeProblem::new(&n, &od, &moved, &params).unwrap();
        let cold = p.solve(&cfg, None).unwrap();
        let warm = p.solve(&cfg, Some(&base.paths)).unwrap();
        assert!(warm.converged && cold.converged);
        assert!(warm.iterations < cold.iterations, "warm {} cold {}", warm.iterations, cold.iterations);

        let again = p.solve(&cfg, None).unwrap();
        assert_eq!(cold.link_flows, again.link_flows);
        assert_eq!(cold.total_travel_time.to_bits(), again.total_travel_time.to_bits());
    }

    #[test]
    fn warm_start_must_match_demand() {
        let n = reference_network();
        let od = reference_od();
        let sol = Solution::uniform(&n, 0.5);
        let p = UeProblem::new(&n, &od, &sol, &CostParams::default()).unwrap();
        let other = OdMatrix::new(vec![OdPair { origin: 1, destination: 9, demand: 5.0 }]).unwrap();
        let q = UeProblem::new(&n, &other, &sol, &CostParams::default()).unwrap();
        let ps = q.initialize().unwrap().paths().clone();
        assert_eq!(p.warm_state(&ps).unwrap_err(), AssignmentError::WarmStartMismatch);
    }
}
