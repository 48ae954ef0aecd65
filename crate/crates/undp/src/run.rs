//! Command dispatch: each mode loads the instance, runs, writes its files
//! into the output directory and returns the report.

use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Instant;

use undp_core::{
    sensitivity_sweep, validate, Annealer, AssignmentError, CostParams, GpConfig, Network, OdMatrix,
    OptimizationOutcome, SaError, SaMode, SaParams, Solution, SplitBounds, UeProblem,
};

use crate::config::{ConfigError, Mode, RunConfig};
use crate::instance::{Instance, InstanceError};
use crate::output::{self, OutputError, SolutionRow};
use crate::report::{AssignmentSummary, InstanceSummary, OptimizationSummary, RunReport, SolutionBlock};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const REPORT_FILE: &str = "report.json";
pub const SOLUTION_FILE: &str = "solution.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const FLOWS_FILE: &str = "flows.csv";
pub const SENSITIVITY_FILE: &str = "sensitivity.csv";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("{} constraint violation(s):\n  {}", .0.len(), .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("solver failed: {0}")]
    Assignment(#[from] AssignmentError),
    #[error("optimization failed: {0}")]
    Annealing(#[from] SaError),
    #[error(transparent)]
    Output(#[from] OutputError),
}

impl RunError {
    /// 2 configuration, 3 invalid instance or input, 4 solver, 5 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(ConfigError::Io { .. }) => 5,
            RunError::Config(_) => 2,
            RunError::Instance(e) if e.is_io() => 5,
            RunError::Instance(_) | RunError::Validation(_) => 3,
            RunError::Assignment(_) | RunError::Annealing(_) => 4,
            RunError::Output(OutputError::Io { .. }) => 5,
            RunError::Output(_) => 3,
        }
    }
}

/// Loaded instance plus the parameters every mode needs.
pub struct Session {
    pub config: RunConfig,
    pub instance: Instance,
    pub bounds: SplitBounds,
    pub params: CostParams,
    pub gp: GpConfig,
    pub sa: SaParams,
}

impl Session {
    pub fn new(config: RunConfig) -> Result<Self, RunError> {
        config.validate()?;
        let instance = match (&config.instance.links, &config.instance.od) {
            (Some(links), Some(od)) => Instance::load(links, od, config.instance.budget)?,
            _ => {
                let r = Instance::reference()?;
                Instance { network: r.network.with_budget(config.instance.budget).map_err(InstanceError::from)?, od: r.od }
            }
        };
        Ok(Session {
            bounds: config.split_bounds()?,
            params: config.cost_params(),
            gp: config.gp_config(),
            sa: config.sa_params(),
            config,
            instance,
        })
    }

    pub fn network(&self) -> &Network {
        &self.instance.network
    }

    pub fn od(&self) -> &OdMatrix {
        &self.instance.od
    }

    pub fn violations(&self) -> Vec<String> {
        validate(self.network(), self.od(), &self.bounds).violations.iter().map(|v| v.to_string()).collect()
    }

    fn report(&self) -> RunReport {
        RunReport {
            mode: self.config.run.mode.as_str().into(),
            version: VERSION.into(),
            wall_time_s: 0.0,
            config: self.config.clone(),
            instance: InstanceSummary::new(self.network(), self.od()),
            violations: Vec::new(),
            assignment: None,
            optimization: None,
            sensitivity: None,
            solution: None,
            files: Vec::new(),
        }
    }
}

/// Best of several independent chains.
#[derive(Clone, Debug)]
pub struct ChainsOutcome {
    pub best_chain: usize,
    pub outcome: OptimizationOutcome,
    pub chain_objectives: Vec<f64>,
}

/// Runs `chains` annealing chains on threads; chain `i` is seeded with
/// `sa.seed + i`. Ties on the objective go to the lowest chain index.
pub fn run_chains(session: &Session, mode: SaMode, chains: usize) -> Result<ChainsOutcome, SaError> {
    let results: Vec<Result<OptimizationOutcome, SaError>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..chains.max(1))
            .map(|i| {
                let sa = SaParams { seed: session.sa.seed.wrapping_add(i as u64), ..session.sa };
                scope.spawn(move || {
                    Annealer::new(session.network(), session.od(), session.params, sa, session.gp, session.bounds, mode)
                        .run()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("annealing chain panicked")).collect()
    });
    let mut outcomes = Vec::with_capacity(results.len());
    for r in results {
        outcomes.push(r?);
    }
    let chain_objectives: Vec<f64> = outcomes.iter().map(|o| o.best_objective).collect();
    let mut best_chain = 0;
    for (i, &e) in chain_objectives.iter().enumerate() {
        if e < chain_objectives[best_chain] {
            best_chain = i;
        }
    }
    let outcome = outcomes.swap_remove(best_chain);
    Ok(ChainsOutcome { best_chain, outcome, chain_objectives })
}

/// One sensitivity level.
#[derive(Clone, Debug)]
pub struct LevelResult {
    pub fraction: f64,
    pub budget: f64,
    pub best_objective: f64,
    pub base_objective: f64,
    pub best: Solution,
}

pub fn sweep(session: &Session) -> Result<Vec<LevelResult>, SaError> {
    let points = sensitivity_sweep(
        session.network(),
        session.od(),
        &session.params,
        &session.sa,
        &session.gp,
        &session.bounds,
        &session.config.sensitivity.fractions,
    )?;
    Ok(points
        .into_iter()
        .map(|p| LevelResult {
            fraction: p.fraction,
            budget: p.budget,
            best_objective: p.outcome.best_objective,
            base_objective: p.outcome.base_objective,
            best: p.outcome.best,
        })
        .collect())
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Writer<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.into());
        self.dir.join(name)
    }

    fn rows<T: serde::Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), OutputError> {
        let p = self.path(name);
        output::write_file(&p, rows)
    }
}

/// Runs the configured mode and writes its files plus `report.json` into
/// `config.run.out`.
pub fn execute(config: RunConfig) -> Result<RunReport, RunError> {
    let start = Instant::now();
    let session = Session::new(config)?;
    let dir = session.config.run.out.clone();
    fs::create_dir_all(&dir).map_err(|source| OutputError::Io { path: dir.clone(), source })?;
    let mut w = Writer { dir: &dir, files: Vec::new() };
    let mut report = session.report();
    report.violations = session.violations();

    let result = if report.violations.is_empty() {
        dispatch(&session, &mut report, &mut w)
    } else {
        Err(RunError::Validation(report.violations.clone()))
    };
    report.wall_time_s = start.elapsed().as_secs_f64();
    let report_path = w.path(REPORT_FILE);
    report.files = w.files;
    report.write(&report_path)?;
    result.map(|()| report)
}

fn dispatch(session: &Session, report: &mut RunReport, w: &mut Writer<'_>) -> Result<(), RunError> {
    let network = session.network();
    match session.config.run.mode {
        Mode::Validate => Ok(()),
        Mode::Assign => {
            let solution = match &session.config.run.solution {
                Some(p) => {
                    let rows: Vec<SolutionRow> = output::read_file(p)?;
                    output::solution_from_rows(network, &rows, &session.bounds)?
                }
                None => Solution::uniform(network, 0.5),
            };
            let result = UeProblem::new(network, session.od(), &solution, &session.params)?.solve(&session.gp, None)?;
            w.rows(FLOWS_FILE, &output::flow_rows(network, &solution, &result))?;
            w.rows(SOLUTION_FILE, &output::solution_rows(network, &solution))?;
            report.assignment = Some(AssignmentSummary::from(&result));
            report.solution = Some(SolutionBlock::new(network, &solution));
            Ok(())
        }
        Mode::Optimize | Mode::SignalsOnly => {
            let mode = if session.config.run.mode == Mode::Optimize { SaMode::Joint } else { SaMode::SignalsOnly };
            let chains = match run_chains(session, mode, session.config.sa.chains) {
                Ok(c) => c,
                Err(e) => {
                    if let SaError::Assignment { best: Some(best), .. } = &e {
                        w.rows(SOLUTION_FILE, &output::solution_rows(network, &best.0))?;
                        report.solution = Some(SolutionBlock::new(network, &best.0));
                    }
                    return Err(e.into());
                }
            };
            let o = &chains.outcome;
            w.rows(SOLUTION_FILE, &output::solution_rows(network, &o.best))?;
            w.rows(TRACE_FILE, &output::trace_rows(network, &o.trace))?;
            w.rows(FLOWS_FILE, &output::flow_rows(network, &o.best, &o.best_assignment))?;
            report.assignment = Some(AssignmentSummary::from(&o.best_assignment));
            report.optimization = Some(OptimizationSummary {
                base_objective: o.base_objective,
                initial_objective: o.initial_objective,
                best_objective: o.best_objective,
                improvement: o.improvement(),
                evaluations: o.evaluations,
                iterations: o.trace.len(),
                t_initial: o.t_initial,
                t_final: o.t_final,
                best_chain: chains.best_chain,
                chain_objectives: chains.chain_objectives.clone(),
            });
            report.solution = Some(SolutionBlock::new(network, &o.best));
            Ok(())
        }
        Mode::Sensitivity => {
            let levels = sweep(session)?;
            let rows = output::sensitivity_rows(network, &levels);
            w.rows(SENSITIVITY_FILE, &rows)?;
            report.sensitivity = Some(rows);
            Ok(())
        }
    }
}
