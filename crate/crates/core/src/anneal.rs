//! Upper level: simulated annealing over expansion flags and green splits.
//!
//! Each temperature level runs a fixed number of single-change moves. A move
//! either toggles one candidate link's expansion (a toggle-on that would
//! break the budget is a null move) or redraws one intersection's split
//! uniformly within bounds. Candidates are scored by the total travel time of
//! a warm-started equilibrium and accepted by the Metropolis rule for
//! minimisation. The temperature decays geometrically.

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::assignment::{AssignmentError, AssignmentResult, GpConfig, GpState, PathSet, UeProblem};
use crate::cost::CostParams;
use crate::network::{
    solution_cost, within_budget, LinkId, Network, OdMatrix, Solution, SolutionError, SplitBounds,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SaParams {
    /// Starting temperature; calibrated from a probe when `None`.
    pub t_initial: Option<f64>,
    /// Final temperature; `t_initial · α^(levels − ½)` when `None`.
    pub t_final: Option<f64>,
    pub iterations_per_temperature: usize,
    pub cooling_rate: f64,
    /// Number of temperature levels implied by the default final temperature.
    pub temperature_levels: usize,
    pub seed: u64,
    /// Random moves evaluated to calibrate the starting temperature.
    pub probe_moves: usize,
    /// Acceptance probability of the median uphill probe move at `t_initial`.
    pub probe_acceptance: f64,
}

impl Default for SaParams {
    fn default() -> Self {
        SaParams {
            t_initial: None,
            t_final: None,
            iterations_per_temperature: 30,
            cooling_rate: 0.99,
            temperature_levels: 390,
            seed: 1,
            probe_moves: 50,
            probe_acceptance: 0.8,
        }
    }
}

impl SaParams {
    pub fn validate(&self) -> Result<(), SaError> {
        if !(self.cooling_rate > 0.0 && self.cooling_rate < 1.0) {
            return Err(SaError::InvalidParams("cooling_rate must lie in (0, 1)"));
        }
        if self.iterations_per_temperature == 0 {
            return Err(SaError::InvalidParams("iterations_per_temperature must be >= 1"));
        }
        if !(self.probe_acceptance > 0.0 && self.probe_acceptance < 1.0) {
            return Err(SaError::InvalidParams("probe_acceptance must lie in (0, 1)"));
        }
        for t in [self.t_initial, self.t_final].into_iter().flatten() {
            if !(t.is_finite() && t > 0.0) {
                return Err(SaError::InvalidParams("temperatures must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SaMode {
    /// Expansion flags and green splits.
    Joint,
    /// Green splits only; no link is ever expanded.
    SignalsOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MoveKind {
    Link,
    Signal,
}

/// A single-change move. `target` is a link index or a signal index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Move {
    pub kind: MoveKind,
    pub target: usize,
    /// Rejected before evaluation (budget); the candidate equals the current
    /// solution.
    pub null: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub temperature: f64,
    /// Objective of the candidate, or of the incumbent for a null move.
    pub objective: f64,
    pub accepted: bool,
    pub best_objective: f64,
    pub kind: MoveKind,
    pub target: usize,
    pub null_move: bool,
}

/// Constraint checks made along a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConstraintAudit {
    pub solutions_checked: usize,
    pub gp_states_checked: usize,
    pub demand_violations: usize,
    pub negative_flows: usize,
}

#[derive(Clone, Debug)]
pub struct OptimizationOutcome {
    pub best: Solution,
    pub best_objective: f64,
    pub best_assignment: AssignmentResult,
    pub initial: Solution,
    pub initial_objective: f64,
    /// Objective of the untouched network: no expansions, splits 0.5.
    pub base_objective: f64,
    pub trace: Vec<TraceRecord>,
    /// Equilibrium solves, including base, initial and probe evaluations.
    pub evaluations: usize,
    pub t_initial: f64,
    pub t_final: f64,
    pub audit: ConstraintAudit,
}

impl OptimizationOutcome {
    /// Relative reduction of the best objective against the base network.
    pub fn improvement(&self) -> f64 {
        (self.base_objective - self.best_objective) / self.base_objective
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SaError {
    #[error("invalid annealing parameters: {0}")]
    InvalidParams(&'static str),
    #[error("infeasible candidate: {0}")]
    Infeasible(#[from] SolutionError),
    #[error("equilibrium solve failed: {source}")]
    Assignment {
        source: AssignmentError,
        /// Best solution and objective found before the failure.
        best: Option<Box<(Solution, f64)>>,
    },
}

impl From<AssignmentError> for SaError {
    fn from(source: AssignmentError) -> Self {
        SaError::Assignment { source, best: None }
    }
}

struct Evaluator<'a> {
    network: &'a Network,
    od: &'a OdMatrix,
    params: &'a CostParams,
    gp: &'a GpConfig,
    solves: usize,
    audit: ConstraintAudit,
}

impl<'a> Evaluator<'a> {
    fn new(network: &'a Network, od: &'a OdMatrix, params: &'a CostParams, gp: &'a GpConfig) -> Self {
        Evaluator { network, od, params, gp, solves: 0, audit: ConstraintAudit::default() }
    }

    fn solve(&mut self, problem: &UeProblem<'_>, warm: Option<&PathSet>) -> Result<AssignmentResult, AssignmentError> {
        self.solves += 1;
        let audit = &mut self.audit;
        problem.solve_observed(self.gp, warm, &mut |_, state: &GpState| {
            audit.gp_states_checked += 1;
            for od in state.paths().ods() {
                if (od.flow_sum() - od.demand()).abs() > 1e-6 * od.demand() {
                    audit.demand_violations += 1;
                }
                if od.flows().iter().any(|&f| !(f >= 0.0)) {
                    audit.negative_flows += 1;
                }
            }
            if state.link_flows().iter().any(|&x| !(x >= 0.0)) {
                audit.negative_flows += 1;
            }
        })
    }

    /// Warm-started solve with a cold restart when the warm start stalls.
    fn evaluate(&mut self, solution: &Solution, warm: Option<&PathSet>) -> Result<AssignmentResult, AssignmentError> {
        let problem = UeProblem::new(self.network, self.od, solution, self.params)?;
        let first = self.solve(&problem, warm)?;
        if first.converged || warm.is_none() {
            return Ok(first);
        }
        let cold = self.solve(&problem, None)?;
        Ok(if cold.error < first.error { cold } else { first })
    }
}

/// Total travel time saved by expanding `link` alone, splits at 0.5.
/// Negative when the expansion makes the network worse.
pub fn project_utility(
    network: &Network,
    od: &OdMatrix,
    params: &CostParams,
    gp: &GpConfig,
    link: LinkId,
) -> Result<f64, SaError> {
    let mut ev = Evaluator::new(network, od, params, gp);
    let base = Solution::uniform(network, 0.5);
    let base_result = ev.evaluate(&base, None)?;
    let mut expanded = base;
    expanded.expand[link.index()] = true;
    let r = ev.evaluate(&expanded, Some(&base_result.paths))?;
    Ok(base_result.total_travel_time - r.total_travel_time)
}

fn utilities(ev: &mut Evaluator<'_>, base: &AssignmentResult) -> Result<Vec<(LinkId, f64)>, SaError> {
    let network = ev.network;
    let mut out = Vec::new();
    for l in network.expandable_links() {
        let mut s = Solution::uniform(network, 0.5);
        s.expand[l.index()] = true;
        let r = ev.evaluate(&s, Some(&base.paths))?;
        out.push((l, base.total_travel_time - r.total_travel_time));
    }
    Ok(out)
}

fn greedy_from(network: &Network, mut ranked: Vec<(LinkId, f64)>) -> Solution {
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut s = Solution::uniform(network, 0.5);
    let mut spent = 0.0;
    for (l, utility) in ranked {
        if utility <= 0.0 {
            break;
        }
        let cost = network.link(l).unit_cost;
        if within_budget(spent + cost, network.budget()) {
            s.expand[l.index()] = true;
            spent += cost;
        }
    }
    s
}

/// Expands projects in descending order of utility while the budget allows;
/// every split starts at 0.5. Projects with non-positive utility are skipped.
pub fn greedy_initial_solution(
    network: &Network,
    od: &OdMatrix,
    params: &CostParams,
    gp: &GpConfig,
) -> Result<Solution, SaError> {
    let mut ev = Evaluator::new(network, od, params, gp);
    let base = ev.evaluate(&Solution::uniform(network, 0.5), None)?;
    let ranked = utilities(&mut ev, &base)?;
    Ok(greedy_from(network, ranked))
}

/// Draws a single-change neighbour of `current`.
///
/// The move kind is drawn uniformly among the kinds that exist (links only
/// when `link_moves` is set), then the target uniformly within the kind.
pub fn neighbor<R: Rng + ?Sized>(
    network: &Network,
    bounds: &SplitBounds,
    current: &Solution,
    link_moves: bool,
    rng: &mut R,
) -> (Solution, Move) {
    let candidates: Vec<LinkId> = if link_moves { network.expandable_links().collect() } else { Vec::new() };
    let signals = network.signals().len();
    let kind = match (candidates.is_empty(), signals == 0) {
        (false, false) => {
            if rng.gen_bool(0.5) {
                MoveKind::Link
            } else {
                MoveKind::Signal
            }
        }
        (false, true) => MoveKind::Link,
        (true, false) => MoveKind::Signal,
        (true, true) => {
            return (current.clone(), Move { kind: MoveKind::Signal, target: 0, null: true });
        }
    };
    let mut next = current.clone();
    match kind {
        MoveKind::Signal => {
            let target = rng.gen_range(0..signals);
            let (lo, hi) = bounds.range();
            next.green_split[target] = rng.gen_range(lo..=hi);
            (next, Move { kind, target, null: false })
        }
        MoveKind::Link => {
            let link = candidates[rng.gen_range(0..candidates.len())];
            let i = link.index();
            if next.expand[i] {
                next.expand[i] = false;
            } else {
                let cost = solution_cost(network, current) + network.link(link).unit_cost;
                if !within_budget(cost, network.budget()) {
                    return (next, Move { kind, target: i, null: true });
                }
                next.expand[i] = true;
            }
            (next, Move { kind, target: i, null: false })
        }
    }
}

/// Metropolis rule for minimisation: improvements are always taken, a worse
/// candidate with probability `exp(-Δ/T)`.
pub fn metropolis_accept<R: Rng + ?Sized>(delta: f64, temperature: f64, rng: &mut R) -> bool {
    if delta <= 0.0 {
        return true;
    }
    if !(temperature > 0.0) {
        return false;
    }
    rng.gen::<f64>() < libm::exp(-delta / temperature)
}

/// One annealing chain.
pub struct Annealer<'a> {
    network: &'a Network,
    od: &'a OdMatrix,
    params: CostParams,
    sa: SaParams,
    gp: GpConfig,
    bounds: SplitBounds,
    mode: SaMode,
    initial: Option<Solution>,
}

impl<'a> Annealer<'a> {
    pub fn new(
        network: &'a Network,
        od: &'a OdMatrix,
        params: CostParams,
        sa: SaParams,
        gp: GpConfig,
        bounds: SplitBounds,
        mode: SaMode,
    ) -> Self {
        Annealer { network, od, params, sa, gp, bounds, mode, initial: None }
    }

    /// Starts from `initial` instead of the greedy (or base) solution.
    pub fn with_initial(mut self, initial: Solution) -> Self {
        self.initial = Some(initial);
        self
    }

    /// Link moves are possible when the mode allows them and at least one
    /// candidate fits the budget on its own.
    fn link_moves(&self) -> bool {
        self.mode == SaMode::Joint
            && self
                .network
                .expandable_links()
                .any(|l| within_budget(self.network.link(l).unit_cost, self.network.budget()))
    }

    pub fn run(&self) -> Result<OptimizationOutcome, SaError> {
        self.run_observed(&mut |_, _| {})
    }

    /// Runs the chain; `observer` sees every evaluated solution and its
    /// equilibrium.
    pub fn run_observed(
        &self,
        observer: &mut dyn FnMut(&Solution, &AssignmentResult),
    ) -> Result<OptimizationOutcome, SaError> {
        self.sa.validate()?;
        self.gp.validate()?;
        let network = self.network;
        let mut ev = Evaluator::new(network, self.od, &self.params, &self.gp);
        let link_moves = self.link_moves();

        let base_solution = Solution::uniform(network, 0.5);
        let base = ev.evaluate(&base_solution, None)?;
        observer(&base_solution, &base);

        let initial = match (&self.initial, self.mode) {
            (Some(s), _) => s.clone(),
            (None, SaMode::SignalsOnly) => base_solution.clone(),
            (None, SaMode::Joint) if !link_moves => base_solution.clone(),
            (None, SaMode::Joint) => {
                let ranked = utilities(&mut ev, &base)?;
                greedy_from(network, ranked)
            }
        };
        initial.check(network, &self.bounds)?;
        if self.mode == SaMode::SignalsOnly && initial.expanded_links().next().is_some() {
            return Err(SaError::InvalidParams("signals-only runs cannot start from expanded links"));
        }
        ev.audit.solutions_checked += 1;
        let mut current_result = ev.evaluate(&initial, Some(&base.paths))?;
        observer(&initial, &current_result);
        let mut current = initial.clone();
        let mut current_objective = current_result.total_travel_time;
        let initial_objective = current_objective;
        let mut best = current.clone();
        let mut best_objective = current_objective;
        let mut best_result = current_result.clone();

        let t_initial = match self.sa.t_initial {
            Some(t) => t,
            None => self.calibrate(&mut ev, &current, &current_result, link_moves, observer)?,
        };
        let t_final = self.sa.t_final.unwrap_or_else(|| {
            t_initial * libm::pow(self.sa.cooling_rate, self.sa.temperature_levels as f64 - 0.5)
        });

        let mut rng = ChaCha8Rng::seed_from_u64(self.sa.seed);
        let mut trace = Vec::new();
        let mut temperature = t_initial;
        let mut iteration = 0;
        while t_initial > t_final && temperature >= t_final {
            for _ in 0..self.sa.iterations_per_temperature {
                iteration += 1;
                let (candidate, mv) = neighbor(network, &self.bounds, &current, link_moves, &mut rng);
                if mv.null {
                    trace.push(TraceRecord {
                        iteration,
                        temperature,
                        objective: current_objective,
                        accepted: false,
                        best_objective,
                        kind: mv.kind,
                        target: mv.target,
                        null_move: true,
                    });
                    continue;
                }
                candidate.check(network, &self.bounds)?;
                ev.audit.solutions_checked += 1;
                let result = ev.evaluate(&candidate, Some(&current_result.paths)).map_err(|source| {
                    SaError::Assignment { source, best: Some(Box::new((best.clone(), best_objective))) }
                })?;
                observer(&candidate, &result);
                let objective = result.total_travel_time;
                let accepted = metropolis_accept(objective - current_objective, temperature, &mut rng);
                if accepted {
                    current = candidate;
                    current_result = result;
                    current_objective = objective;
                    if current_objective < best_objective {
                        best_objective = current_objective;
                        best = current.clone();
                        best_result = current_result.clone();
                    }
                }
                trace.push(TraceRecord {
                    iteration,
                    temperature,
                    objective,
                    accepted,
                    best_objective,
                    kind: mv.kind,
                    target: mv.target,
                    null_move: false,
                });
            }
            temperature *= self.sa.cooling_rate;
        }

        Ok(OptimizationOutcome {
            best,
            best_objective,
            best_assignment: best_result,
            initial,
            initial_objective,
            base_objective: base.total_travel_time,
            trace,
            evaluations: ev.solves,
            t_initial,
            t_final,
            audit: ev.audit,
        })
    }

    /// Starting temperature at which the median uphill move of a random
    /// probe around `start` is accepted with the configured probability.
    fn calibrate(
        &self,
        ev: &mut Evaluator<'_>,
        start: &Solution,
        start_result: &AssignmentResult,
        link_moves: bool,
        observer: &mut dyn FnMut(&Solution, &AssignmentResult),
    ) -> Result<f64, SaError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.sa.seed);
        rng.set_stream(1);
        let mut uphill = Vec::new();
        for _ in 0..self.sa.probe_moves {
            let (candidate, mv) = neighbor(self.network, &self.bounds, start, link_moves, &mut rng);
            if mv.null {
                continue;
            }
            let r = ev.evaluate(&candidate, Some(&start_result.paths))?;
            observer(&candidate, &r);
            let delta = r.total_travel_time - start_result.total_travel_time;
            if delta > 0.0 {
                uphill.push(delta);
            }
        }
        if uphill.is_empty() {
            return Ok(1e-3 * start_result.total_travel_time.abs().max(1.0));
        }
        uphill.sort_by(f64::total_cmp);
        let mid = uphill.len() / 2;
        let median = if uphill.len() % 2 == 1 { uphill[mid] } else { 0.5 * (uphill[mid - 1] + uphill[mid]) };
        Ok(median / libm::log(1.0 / self.sa.probe_acceptance))
    }
}

/// Runs one annealing chain from the greedy (joint) or base (signals-only)
/// solution.
pub fn run_sa(
    network: &Network,
    od: &OdMatrix,
    params: &CostParams,
    sa: &SaParams,
    gp: &GpConfig,
    bounds: &SplitBounds,
    mode: SaMode,
) -> Result<OptimizationOutcome, SaError> {
    Annealer::new(network, od, *params, *sa, *gp, *bounds, mode).run()
}

#[derive(Clone, Debug)]
pub struct SensitivityPoint {
    pub fraction: f64,
    pub budget: f64,
    pub outcome: OptimizationOutcome,
}

/// One joint run per budget level, budgets given as fractions of the cost
/// of expanding every candidate.
///
/// Levels run in ascending budget order with a common seed. Each level starts
/// from the better of its own greedy solution and the previous level's best,
/// which stays feasible because the budget only grows. A level whose search
/// ends above the carried-in objective keeps the carried-in solution and its
/// recorded objective.
pub fn sensitivity_sweep(
    network: &Network,
    od: &OdMatrix,
    params: &CostParams,
    sa: &SaParams,
    gp: &GpConfig,
    bounds: &SplitBounds,
    fractions: &[f64],
) -> Result<Vec<SensitivityPoint>, SaError> {
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err(SaError::InvalidParams("budget fractions must lie in [0, 1]"));
    }
    let total = network.total_expansion_cost();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| fractions[a].total_cmp(&fractions[b]));

    let mut points: Vec<Option<SensitivityPoint>> = (0..fractions.len()).map(|_| None).collect();
    let mut previous: Option<(Solution, f64, AssignmentResult)> = None;
    for i in order {
        let budget = fractions[i] * total;
        let level = network.with_budget(budget).map_err(|_| SaError::InvalidParams("invalid budget"))?;
        let annealer = Annealer::new(&level, od, *params, *sa, *gp, *bounds, SaMode::Joint);
        let annealer = match &previous {
            Some((prev, prev_objective, _)) if annealer.link_moves() => {
                let mut ev = Evaluator::new(&level, od, params, gp);
                let base = ev.evaluate(&Solution::uniform(&level, 0.5), None)?;
                let greedy = greedy_from(&level, utilities(&mut ev, &base)?);
                let greedy_objective = ev.evaluate(&greedy, Some(&base.paths))?.total_travel_time;
                if *prev_objective < greedy_objective {
                    annealer.with_initial(prev.clone())
                } else {
                    annealer.with_initial(greedy)
                }
            }
            Some((prev, _, _)) => annealer.with_initial(prev.clone()),
            None => annealer,
        };
        let mut outcome = annealer.run()?;
        if let Some((prev, prev_objective, prev_assignment)) = previous.take() {
            if prev_objective < outcome.best_objective {
                outcome.best = prev;
                outcome.best_objective = prev_objective;
                outcome.best_assignment = prev_assignment;
            }
        }
        previous = Some((outcome.best.clone(), outcome.best_objective, outcome.best_assignment.clone()));
        points[i] = Some(SensitivityPoint { fraction: fractions[i], budget, outcome });
    }
    Ok(points.into_iter().flatten().collect())
}
