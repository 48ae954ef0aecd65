//! Link travel time: a BPR curve plus, on signalized approaches, the kinked
//! signal delay of Van Vuren and Van Vliet.
//!
//! The delay at flow `x` for saturation flow `s`, green ratio `λ`, cycle
//! `CL` and study duration `T` is
//!
//! ```text
//! x <= x̂:  w = CL·s(1-λ)² / (2(s-x)) + x / (2sλ(sλ-x))
//! x >  x̂:  w = w(x̂) + (x - x̂)·T / (2sλ)
//! x̂ = sλ - sqrt(sλ / T)   (clamped at 0)
//! ```
//!
//! The linear extension keeps the delay finite for every flow; the first
//! branch is never evaluated near its poles at `x = sλ` and `x = s`.

use alloc::vec::Vec;

use crate::network::{LinkId, Network, Solution, SolutionError};
use crate::quadrature::adaptive_simpson;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostParams {
    pub bpr_alpha: f64,
    pub bpr_beta: f64,
    /// Study duration `T` of the signal delay, seconds.
    pub study_duration: f64,
    /// Relative step for finite-difference checks.
    pub derivative_step: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            bpr_alpha: 0.15,
            bpr_beta: 4.0,
            study_duration: 900.0,
            derivative_step: 1e-6,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<(), CostError> {
        if !(self.bpr_alpha.is_finite() && self.bpr_alpha >= 0.0) {
            return Err(CostError::InvalidParams("bpr_alpha must be >= 0"));
        }
        if !(self.bpr_beta.is_finite() && self.bpr_beta >= 1.0) {
            return Err(CostError::InvalidParams("bpr_beta must be >= 1"));
        }
        if !(self.study_duration.is_finite() && self.study_duration > 0.0) {
            return Err(CostError::InvalidParams("study_duration must be > 0"));
        }
        if !(self.derivative_step.is_finite() && self.derivative_step > 0.0) {
            return Err(CostError::InvalidParams("derivative_step must be > 0"));
        }
        Ok(())
    }
}

/// Operating point of one signalized approach.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignalApproachState {
    /// Saturation flow `s`, veh/h.
    pub saturation: f64,
    /// Green ratio `λ = g/ρ`.
    pub lambda: f64,
    /// Cycle length, seconds.
    pub cycle: f64,
}

impl SignalApproachState {
    fn is_valid(&self) -> bool {
        self.saturation > 0.0 && self.lambda > 0.0 && self.lambda < 1.0 && self.cycle >= 0.0
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CostError {
    #[error("negative flow {0}")]
    NegativeFlow(f64),
    #[error("invalid cost parameters: {0}")]
    InvalidParams(&'static str),
    #[error("invalid signal state for link {0}")]
    InvalidSignal(LinkId),
    #[error("expected {expected} link flows, got {found}")]
    FlowCount { expected: usize, found: usize },
    #[error(transparent)]
    Solution(#[from] SolutionError),
}

fn check_flow(flow: f64) -> Result<(), CostError> {
    if flow >= 0.0 {
        Ok(())
    } else {
        Err(CostError::NegativeFlow(flow))
    }
}

#[inline]
fn bpr(free_time: f64, flow: f64, capacity: f64, p: &CostParams) -> f64 {
    free_time * (1.0 + p.bpr_alpha * libm::pow(flow / capacity, p.bpr_beta))
}

#[inline]
fn bpr_derivative(free_time: f64, flow: f64, capacity: f64, p: &CostParams) -> f64 {
    if flow <= 0.0 {
        // beta >= 1; at beta == 1 the slope is constant
        return if p.bpr_beta == 1.0 { free_time * p.bpr_alpha / capacity } else { 0.0 };
    }
    free_time * p.bpr_alpha * p.bpr_beta * libm::pow(flow / capacity, p.bpr_beta - 1.0) / capacity
}

#[inline]
fn bpr_integral(free_time: f64, flow: f64, capacity: f64, p: &CostParams) -> f64 {
    free_time
        * flow
        * (1.0 + p.bpr_alpha * libm::pow(flow / capacity, p.bpr_beta) / (p.bpr_beta + 1.0))
}

/// BPR travel time `t0·(1 + α(x/C)^β)`.
pub fn bpr_time(free_time: f64, flow: f64, capacity: f64, params: &CostParams) -> Result<f64, CostError> {
    check_flow(flow)?;
    Ok(bpr(free_time, flow, capacity, params))
}

/// Flow at which the delay curve switches to its linear branch.
pub fn x_kink(state: &SignalApproachState, params: &CostParams) -> f64 {
    let sl = state.saturation * state.lambda;
    (sl - libm::sqrt(sl / params.study_duration)).max(0.0)
}

#[inline]
fn delay_first_branch(flow: f64, s: &SignalApproachState) -> f64 {
    let sl = s.saturation * s.lambda;
    let red = 1.0 - s.lambda;
    s.cycle * s.saturation * red * red / (2.0 * (s.saturation - flow)) + flow / (2.0 * sl * (sl - flow))
}

/// Signal delay in seconds at the given flow.
pub fn signal_delay(flow: f64, state: &SignalApproachState, params: &CostParams) -> f64 {
    delay(flow.max(0.0), state, x_kink(state, params), params)
}

#[inline]
fn delay(flow: f64, s: &SignalApproachState, kink: f64, p: &CostParams) -> f64 {
    if flow <= kink {
        delay_first_branch(flow, s)
    } else {
        let sl = s.saturation * s.lambda;
        delay_first_branch(kink, s) + (flow - kink) * p.study_duration / (2.0 * sl)
    }
}

#[inline]
fn delay_derivative(flow: f64, s: &SignalApproachState, kink: f64, p: &CostParams) -> f64 {
    let sl = s.saturation * s.lambda;
    if flow < kink {
        let red = 1.0 - s.lambda;
        let a = s.saturation - flow;
        let b = sl - flow;
        s.cycle * s.saturation * red * red / (2.0 * a * a) + 1.0 / (2.0 * b * b)
    } else {
        p.study_duration / (2.0 * sl)
    }
}

#[inline]
fn delay_integral(flow: f64, s: &SignalApproachState, kink: f64, p: &CostParams) -> f64 {
    let sl = s.saturation * s.lambda;
    let red = 1.0 - s.lambda;
    let first = |x: f64| {
        -0.5 * s.cycle * s.saturation * red * red * libm::log1p(-x / s.saturation)
            - 0.5 * libm::log1p(-x / sl)
            - x / (2.0 * sl)
    };
    if flow <= kink {
        first(flow)
    } else {
        let dx = flow - kink;
        first(kink) + delay_first_branch(kink, s) * dx + p.study_duration / (4.0 * sl) * dx * dx
    }
}

/// Cost curve of one link under a fixed decision vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkCost {
    pub free_time: f64,
    pub capacity: f64,
    pub signal: Option<SignalApproachState>,
    kink: f64,
}

impl LinkCost {
    pub fn new(
        free_time: f64,
        capacity: f64,
        signal: Option<SignalApproachState>,
        params: &CostParams,
    ) -> Self {
        let kink = signal.as_ref().map_or(0.0, |s| x_kink(s, params));
        LinkCost { free_time, capacity, signal, kink }
    }

    /// The effective curve of a network link: expanded capacity doubles as
    /// the saturation flow of its signal approach.
    pub fn for_link(
        network: &Network,
        link: LinkId,
        solution: &Solution,
        params: &CostParams,
    ) -> Result<Self, CostError> {
        let l = network.link(link);
        let capacity = network.effective_capacity(link, solution)?;
        let signal = match solution.green_ratio(network, link) {
            Some(lambda) => {
                let state = SignalApproachState { saturation: capacity, lambda, cycle: l.cycle_length };
                if !state.is_valid() {
                    return Err(CostError::InvalidSignal(link));
                }
                Some(state)
            }
            None => None,
        };
        Ok(LinkCost::new(l.free_time, capacity, signal, params))
    }

    pub fn kink(&self) -> Option<f64> {
        self.signal.map(|_| self.kink)
    }

    #[inline]
    pub fn time(&self, flow: f64, p: &CostParams) -> f64 {
        let base = bpr(self.free_time, flow, self.capacity, p);
        match &self.signal {
            Some(s) => base + delay(flow, s, self.kink, p),
            None => base,
        }
    }

    /// Analytic slope; at the kink itself the right-hand slope.
    #[inline]
    pub fn derivative(&self, flow: f64, p: &CostParams) -> f64 {
        let base = bpr_derivative(self.free_time, flow, self.capacity, p);
        match &self.signal {
            Some(s) => base + delay_derivative(flow, s, self.kink, p),
            None => base,
        }
    }

    /// Closed-form `∫₀^flow t(w) dw`.
    #[inline]
    pub fn integral(&self, flow: f64, p: &CostParams) -> f64 {
        let base = bpr_integral(self.free_time, flow, self.capacity, p);
        match &self.signal {
            Some(s) => base + delay_integral(flow, s, self.kink, p),
            None => base,
        }
    }

    /// `∫₀^flow t(w) dw` by adaptive quadrature, split at the kink.
    pub fn integral_numeric(&self, flow: f64, p: &CostParams, rel_tol: f64) -> f64 {
        let f = |w: f64| self.time(w, p);
        match self.kink() {
            Some(k) if k > 0.0 && k < flow => {
                adaptive_simpson(&f, 0.0, k, rel_tol) + adaptive_simpson(&f, k, flow, rel_tol)
            }
            _ => adaptive_simpson(&f, 0.0, flow, rel_tol),
        }
    }
}

/// Cost curves of every link of a network under one decision vector.
#[derive(Clone, Debug)]
pub struct LinkCostModel {
    links: Vec<LinkCost>,
    params: CostParams,
}

impl LinkCostModel {
    pub fn new(network: &Network, solution: &Solution, params: &CostParams) -> Result<Self, CostError> {
        params.validate()?;
        let links = network
            .link_ids()
            .map(|l| LinkCost::for_link(network, l, solution, params))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(LinkCostModel { links, params: *params })
    }

    pub fn from_parts(links: Vec<LinkCost>, params: CostParams) -> Self {
        LinkCostModel { links, params }
    }

    pub fn params(&self) -> &CostParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn link(&self, i: usize) -> &LinkCost {
        &self.links[i]
    }

    #[inline]
    pub fn time(&self, i: usize, flow: f64) -> f64 {
        self.links[i].time(flow, &self.params)
    }

    #[inline]
    pub fn derivative(&self, i: usize, flow: f64) -> f64 {
        self.links[i].derivative(flow, &self.params)
    }

    pub fn times_into(&self, flows: &[f64], times: &mut [f64]) {
        for ((t, &x), c) in times.iter_mut().zip(flows).zip(&self.links) {
            *t = c.time(x, &self.params);
        }
    }

    /// Beckmann objective `Σ ∫₀^{x_a} t_a`, closed form.
    pub fn beckmann(&self, flows: &[f64]) -> f64 {
        self.links
            .iter()
            .zip(flows)
            .map(|(c, &x)| c.integral(x, &self.params))
            .sum()
    }

    /// `Σ x_a · t_a(x_a)`.
    pub fn total_travel_time(&self, flows: &[f64]) -> f64 {
        self.links
            .iter()
            .zip(flows)
            .map(|(c, &x)| x * c.time(x, &self.params))
            .sum()
    }
}

/// Travel time of a link in seconds under a decision vector.
pub fn link_time(
    network: &Network,
    link: LinkId,
    flow: f64,
    solution: &Solution,
    params: &CostParams,
) -> Result<f64, CostError> {
    check_flow(flow)?;
    Ok(LinkCost::for_link(network, link, solution, params)?.time(flow, params))
}

/// Flow derivative of [`link_time`], seconds per veh/h.
pub fn link_time_derivative(
    network: &Network,
    link: LinkId,
    flow: f64,
    solution: &Solution,
    params: &CostParams,
) -> Result<f64, CostError> {
    check_flow(flow)?;
    Ok(LinkCost::for_link(network, link, solution, params)?.derivative(flow, params))
}

/// Upper-level objective `Σ x_a t_a(x_a)` in vehicle-seconds (per hour).
pub fn total_travel_time(
    network: &Network,
    flows: &[f64],
    solution: &Solution,
    params: &CostParams,
) -> Result<f64, CostError> {
    if flows.len() != network.links().len() {
        return Err(CostError::FlowCount { expected: network.links().len(), found: flows.len() });
    }
    if let Some(&x) = flows.iter().find(|&&x| !(x >= 0.0)) {
        return Err(CostError::NegativeFlow(x));
    }
    Ok(LinkCostModel::new(network, solution, params)?.total_travel_time(flows))
}

/// Relative tolerance of [`beckmann_integral`].
pub const BECKMANN_QUADRATURE_TOLERANCE: f64 = 1e-12;

/// `∫₀^flow t(w) dw` by numeric quadrature.
pub fn beckmann_integral(
    network: &Network,
    link: LinkId,
    flow: f64,
    solution: &Solution,
    params: &CostParams,
) -> Result<f64, CostError> {
    check_flow(flow)?;
    let c = LinkCost::for_link(network, link, solution, params)?;
    Ok(c.integral_numeric(flow, params, BECKMANN_QUADRATURE_TOLERANCE))
}
