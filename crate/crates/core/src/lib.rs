//! Joint optimisation of two-phase signal green splits and discrete link
//! capacity expansions on an urban road network.
//!
//! The upper level is a simulated annealing search over expansion flags and
//! green splits ([`anneal`]). Every candidate is scored by the total travel
//! time of a user-equilibrium assignment computed with path-based gradient
//! projection ([`assignment`]). Link travel times combine a BPR curve with a
//! kinked signal delay on signalized approaches ([`cost`]).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command line live in the `undp` companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
#[macro_use]
extern crate std;

pub mod anneal;
pub mod assignment;
pub mod cost;
pub mod network;
pub mod oracle;
mod quadrature;

pub use anneal::{
    greedy_initial_solution, metropolis_accept, neighbor, project_utility, run_sa,
    sensitivity_sweep, Annealer, MoveKind, OptimizationOutcome, SaError, SaMode, SaParams,
    SensitivityPoint, TraceRecord,
};
pub use assignment::{
    shortest_path, AssignmentError, AssignmentResult, GpConfig, GpState, Path, PathSet,
    UeProblem,
};
pub use cost::{
    beckmann_integral, bpr_time, link_time, link_time_derivative, signal_delay,
    total_travel_time, x_kink, CostError, CostParams, LinkCost, LinkCostModel,
    SignalApproachState,
};
pub use network::{
    solution_cost, validate, Link, LinkId, Network, NetworkError, Node, NodeId, OdMatrix,
    OdPair, Phase, SignalIntersection, Solution, SolutionError, SplitBounds, ValidationReport,
    Violation,
};
