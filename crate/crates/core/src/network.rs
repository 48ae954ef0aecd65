//! Network, demand and decision-vector data model.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Node label as it appears in instance files.
pub type NodeId = u32;

/// Position of a link in the network's link list (file order).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub usize);

impl LinkId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub is_signalized: bool,
}

/// One directed road link together with its signal and expansion attributes.
#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub origin: NodeId,
    pub destination: NodeId,
    /// Free-flow travel time, seconds.
    pub free_time: f64,
    /// Capacity before any expansion, veh/h.
    pub base_capacity: f64,
    /// The link is an approach of the signal at its destination node.
    pub enters_signal: bool,
    /// Cycle length of that signal in seconds, 0 when not signalized.
    pub cycle_length: f64,
    /// Green ratio of the approach's phase in the base timing plan.
    pub green_ratio: f64,
    /// Origin node of the approach sharing this approach's phase.
    pub same_phase_node: Option<NodeId>,
    pub expandable: bool,
    /// Capacity added when the link is expanded, veh/h.
    pub expansion_amount: f64,
    pub unit_cost: f64,
    /// Kink flow as printed in the instance file. Informational only.
    pub printed_x_kink: f64,
}

impl Link {
    /// A plain link with no signal and no expansion option.
    pub fn new(origin: NodeId, destination: NodeId, free_time: f64, base_capacity: f64) -> Self {
        Link {
            origin,
            destination,
            free_time,
            base_capacity,
            enters_signal: false,
            cycle_length: 0.0,
            green_ratio: 0.0,
            same_phase_node: None,
            expandable: false,
            expansion_amount: 0.0,
            unit_cost: 0.0,
            printed_x_kink: 0.0,
        }
    }

    pub fn with_signal(mut self, cycle_length: f64, green_ratio: f64, same_phase_node: NodeId) -> Self {
        self.enters_signal = true;
        self.cycle_length = cycle_length;
        self.green_ratio = green_ratio;
        self.same_phase_node = Some(same_phase_node);
        self
    }

    pub fn with_expansion(mut self, amount: f64, unit_cost: f64) -> Self {
        self.expandable = true;
        self.expansion_amount = amount;
        self.unit_cost = unit_cost;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    A,
    B,
}

/// A two-phase signal. Phase A receives the decision variable's split,
/// phase B its complement.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalIntersection {
    pub node: NodeId,
    pub cycle_length: f64,
    pub phase_a: Vec<LinkId>,
    pub phase_b: Vec<LinkId>,
}

/// Bounds on a phase's green ratio. Both phases must respect them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for SplitBounds {
    fn default() -> Self {
        SplitBounds { min: 0.2, max: 0.8 }
    }
}

const SPLIT_TOLERANCE: f64 = 1e-12;

impl SplitBounds {
    pub fn new(min: f64, max: f64) -> Result<Self, NetworkError> {
        let ok = min.is_finite() && max.is_finite() && 0.0 < min && min <= 0.5 && 0.5 <= max && max < 1.0;
        if ok {
            Ok(SplitBounds { min, max })
        } else {
            Err(NetworkError::InvalidBounds { min, max })
        }
    }

    /// Interval for the phase A split such that both phases stay in bounds.
    pub fn range(&self) -> (f64, f64) {
        (self.min.max(1.0 - self.max), self.max.min(1.0 - self.min))
    }

    pub fn contains(&self, split: f64) -> bool {
        let inside = |v: f64| v >= self.min - SPLIT_TOLERANCE && v <= self.max + SPLIT_TOLERANCE;
        split.is_finite() && inside(split) && inside(1.0 - split)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OdPair {
    pub origin: NodeId,
    pub destination: NodeId,
    /// veh/h
    pub demand: f64,
}

/// Fixed origin-destination demand.
#[derive(Clone, Debug, PartialEq)]
pub struct OdMatrix {
    pairs: Vec<OdPair>,
}

impl OdMatrix {
    pub fn new(pairs: Vec<OdPair>) -> Result<Self, NetworkError> {
        if pairs.is_empty() {
            return Err(NetworkError::EmptyDemand);
        }
        for (i, p) in pairs.iter().enumerate() {
            if !(p.demand.is_finite() && p.demand > 0.0) {
                return Err(NetworkError::InvalidDemand {
                    origin: p.origin,
                    destination: p.destination,
                    demand: p.demand,
                });
            }
            if pairs[..i]
                .iter()
                .any(|q| q.origin == p.origin && q.destination == p.destination)
            {
                return Err(NetworkError::DuplicateOdPair {
                    origin: p.origin,
                    destination: p.destination,
                });
            }
        }
        Ok(OdMatrix { pairs })
    }

    pub fn pairs(&self) -> &[OdPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn total_demand(&self) -> f64 {
        self.pairs.iter().map(|p| p.demand).sum()
    }

    pub fn demand(&self, origin: NodeId, destination: NodeId) -> Option<f64> {
        self.pairs
            .iter()
            .find(|p| p.origin == origin && p.destination == destination)
            .map(|p| p.demand)
    }
}

/// An invariant violation found while building or validating an instance.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    SelfLoop { link: LinkId, node: NodeId },
    NonPositive { link: LinkId, field: &'static str, value: f64 },
    SignalWithoutCycle { link: LinkId },
    ExpansionWithoutAmount { link: LinkId },
    DuplicateLink { link: LinkId, first: LinkId },
    InconsistentCycle { node: NodeId, link: LinkId, expected: f64, found: f64 },
    MissingPhaseReference { link: LinkId },
    DanglingPhaseReference { link: LinkId, node: NodeId },
    NonMutualPhaseReference { link: LinkId, other: LinkId },
    PhaseCount { node: NodeId, groups: usize },
    SignalRecordCount { node: NodeId, records: usize },
    PhaseMembership { node: NodeId, link: LinkId },
    InconsistentGreenRatio { node: NodeId, link: LinkId, expected: f64, found: f64 },
    GreenRatioSum { node: NodeId, sum: f64 },
    SplitOutOfBounds { node: NodeId, split: f64, min: f64, max: f64 },
    NegativeBudget { budget: f64 },
    InvalidDemand { origin: NodeId, destination: NodeId, demand: f64 },
    UnknownOdNode { node: NodeId },
    TrivialOdPair { node: NodeId },
    Unreachable { origin: NodeId, destination: NodeId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            SelfLoop { link, node } => write!(f, "link {link} is a self-loop at node {node}"),
            NonPositive { link, field, value } => {
                write!(f, "link {link}: {field} must be positive, got {value}")
            }
            SignalWithoutCycle { link } => {
                write!(f, "link {link} enters a signal but has no positive cycle length")
            }
            ExpansionWithoutAmount { link } => write!(
                f,
                "link {link} is an expansion candidate without positive amount and unit cost"
            ),
            DuplicateLink { link, first } => {
                write!(f, "link {link} duplicates the endpoints of link {first}")
            }
            InconsistentCycle { node, link, expected, found } => write!(
                f,
                "inconsistent cycle length at node {node}: link {link} has {found}, expected {expected}"
            ),
            MissingPhaseReference { link } => {
                write!(f, "signalized link {link} names no same-phase node")
            }
            DanglingPhaseReference { link, node } => write!(
                f,
                "dangling phase reference: link {link} names node {node}, which has no signalized approach into the same intersection"
            ),
            NonMutualPhaseReference { link, other } => write!(
                f,
                "phase reference of link {link} is not returned by link {other}"
            ),
            PhaseCount { node, groups } => write!(
                f,
                "signal at node {node} groups its approaches into {groups} phases, expected 2"
            ),
            SignalRecordCount { node, records } => write!(
                f,
                "signalized node {node} has {records} signal records, expected 1"
            ),
            PhaseMembership { node, link } => write!(
                f,
                "approach {link} of node {node} does not belong to exactly one phase"
            ),
            InconsistentGreenRatio { node, link, expected, found } => write!(
                f,
                "green ratio {found} of link {link} differs from its phase ratio {expected} at node {node}"
            ),
            GreenRatioSum { node, sum } => {
                write!(f, "green ratios at node {node} sum to {sum}, expected 1")
            }
            SplitOutOfBounds { node, split, min, max } => write!(
                f,
                "green split {split} at node {node} is outside [{min}, {max}]"
            ),
            NegativeBudget { budget } => write!(f, "budget {budget} is negative"),
            InvalidDemand { origin, destination, demand } => write!(
                f,
                "demand {demand} for pair ({origin}, {destination}) must be positive"
            ),
            UnknownOdNode { node } => write!(f, "demand references unknown node {node}"),
            TrivialOdPair { node } => {
                write!(f, "demand pair has identical origin and destination {node}")
            }
            Unreachable { origin, destination } => {
                write!(f, "destination {destination} is unreachable from origin {origin}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NetworkError {
    Invalid(Vec<Violation>),
    EmptyNetwork,
    EmptyDemand,
    InvalidDemand { origin: NodeId, destination: NodeId, demand: f64 },
    DuplicateOdPair { origin: NodeId, destination: NodeId },
    InvalidBounds { min: f64, max: f64 },
    InvalidBudget(f64),
}

impl fmt::Display for NetworkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetworkError::Invalid(violations) => {
                write!(f, "invalid network")?;
                for (i, v) in violations.iter().enumerate() {
                    write!(f, "{} {v}", if i == 0 { ":" } else { ";" })?;
                }
                Ok(())
            }
            NetworkError::EmptyNetwork => write!(f, "network has no links"),
            NetworkError::EmptyDemand => write!(f, "demand matrix has no positive entry"),
            NetworkError::InvalidDemand { origin, destination, demand } => write!(
                f,
                "demand {demand} for pair ({origin}, {destination}) must be positive"
            ),
            NetworkError::DuplicateOdPair { origin, destination } => {
                write!(f, "duplicate demand pair ({origin}, {destination})")
            }
            NetworkError::InvalidBounds { min, max } => write!(
                f,
                "green split bounds [{min}, {max}] must satisfy 0 < min <= 0.5 <= max < 1"
            ),
            NetworkError::InvalidBudget(b) => write!(f, "budget {b} must be finite and non-negative"),
        }
    }
}

impl core::error::Error for NetworkError {}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SolutionError {
    #[error("solution has {found} {what} entries, network needs {expected}")]
    ShapeMismatch { what: &'static str, expected: usize, found: usize },
    #[error("link {0} is flagged for expansion but is not a candidate")]
    NotExpandable(LinkId),
    #[error("green split {split} at node {node} violates its bounds")]
    SplitOutOfBounds { node: NodeId, split: f64 },
    #[error("expansion cost {cost} exceeds budget {budget}")]
    OverBudget { cost: f64, budget: f64 },
}

/// Directed road network with its inferred signal plan and budget.
#[derive(Clone, Debug)]
pub struct Network {
    nodes: Vec<Node>,
    links: Vec<Link>,
    signals: Vec<SignalIntersection>,
    budget: f64,
    node_index: BTreeMap<NodeId, usize>,
    ends: Vec<(usize, usize)>,
    out_links: Vec<Vec<LinkId>>,
    link_phase: Vec<Option<(usize, Phase)>>,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.links == other.links && self.budget == other.budget
    }
}

impl Network {
    /// Builds a network from its links, inferring nodes and signal phases.
    ///
    /// Nodes are the link endpoints; a node is signalized when at least one
    /// incoming link enters a signal. Approaches are grouped into phases by
    /// the mutual same-phase-node rule.
    pub fn new(links: Vec<Link>, budget: f64) -> Result<Self, NetworkError> {
        if links.is_empty() {
            return Err(NetworkError::EmptyNetwork);
        }
        if !(budget.is_finite() && budget >= 0.0) {
            return Err(NetworkError::InvalidBudget(budget));
        }
        let mut violations = check_links(&links);
        if !violations.is_empty() {
            return Err(NetworkError::Invalid(violations));
        }

        let mut node_index = BTreeMap::new();
        for l in &links {
            node_index.entry(l.origin).or_insert(0);
            node_index.entry(l.destination).or_insert(0);
        }
        for (i, v) in node_index.values_mut().enumerate() {
            *v = i;
        }
        let ends: Vec<(usize, usize)> = links
            .iter()
            .map(|l| (node_index[&l.origin], node_index[&l.destination]))
            .collect();
        let mut out_links = vec![Vec::new(); node_index.len()];
        for (i, &(from, _)) in ends.iter().enumerate() {
            out_links[from].push(LinkId(i));
        }

        let signals = infer_signals(&links, &mut violations);
        if !violations.is_empty() {
            return Err(NetworkError::Invalid(violations));
        }
        let mut link_phase = vec![None; links.len()];
        for (s, sig) in signals.iter().enumerate() {
            for &l in &sig.phase_a {
                link_phase[l.index()] = Some((s, Phase::A));
            }
            for &l in &sig.phase_b {
                link_phase[l.index()] = Some((s, Phase::B));
            }
        }
        let nodes = node_index
            .keys()
            .map(|&id| Node {
                id,
                is_signalized: signals.iter().any(|s| s.node == id),
            })
            .collect();

        Ok(Network {
            nodes,
            links,
            signals,
            budget,
            node_index,
            ends,
            out_links,
            link_phase,
        })
    }

    pub fn with_budget(&self, budget: f64) -> Result<Self, NetworkError> {
        if !(budget.is_finite() && budget >= 0.0) {
            return Err(NetworkError::InvalidBudget(budget));
        }
        let mut n = self.clone();
        n.budget = budget;
        Ok(n)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.index()]
    }

    pub fn link_ids(&self) -> impl Iterator<Item = LinkId> + '_ {
        (0..self.links.len()).map(LinkId)
    }

    pub fn signals(&self) -> &[SignalIntersection] {
        &self.signals
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Dense index of a node label, used by the graph algorithms.
    pub fn node_index(&self, id: NodeId) -> Option<usize> {
        self.node_index.get(&id).copied()
    }

    pub fn node_id(&self, index: usize) -> NodeId {
        self.nodes[index].id
    }

    /// Dense (tail, head) indices of a link.
    pub fn ends(&self, id: LinkId) -> (usize, usize) {
        self.ends[id.index()]
    }

    pub fn out_links(&self, node_index: usize) -> &[LinkId] {
        &self.out_links[node_index]
    }

    pub fn find_link(&self, origin: NodeId, destination: NodeId) -> Option<LinkId> {
        self.links
            .iter()
            .position(|l| l.origin == origin && l.destination == destination)
            .map(LinkId)
    }

    /// Signal index and phase of a signalized approach.
    pub fn phase_of(&self, id: LinkId) -> Option<(usize, Phase)> {
        self.link_phase[id.index()]
    }

    pub fn expandable_links(&self) -> impl Iterator<Item = LinkId> + '_ {
        self.link_ids().filter(|&l| self.link(l).expandable)
    }

    /// Cost of expanding every candidate link.
    pub fn total_expansion_cost(&self) -> f64 {
        self.links.iter().filter(|l| l.expandable).map(|l| l.unit_cost).sum()
    }

    /// Capacity of a link under a decision vector.
    pub fn effective_capacity(&self, id: LinkId, solution: &Solution) -> Result<f64, SolutionError> {
        let link = self.link(id);
        match solution.expand.get(id.index()) {
            None => Err(SolutionError::ShapeMismatch {
                what: "expansion",
                expected: self.links.len(),
                found: solution.expand.len(),
            }),
            Some(false) => Ok(link.base_capacity),
            Some(true) if link.expandable => Ok(link.base_capacity + link.expansion_amount),
            Some(true) => Err(SolutionError::NotExpandable(id)),
        }
    }

    /// Nodes reachable from `origin` (dense indices).
    pub fn reachable_from(&self, origin: usize) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::new();
        seen[origin] = true;
        queue.push_back(origin);
        while let Some(u) = queue.pop_front() {
            for &l in &self.out_links[u] {
                let v = self.ends[l.index()].1;
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }
}

fn check_links(links: &[Link]) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, l) in links.iter().enumerate() {
        let id = LinkId(i);
        if l.origin == l.destination {
            out.push(Violation::SelfLoop { link: id, node: l.origin });
        }
        if !(l.free_time.is_finite() && l.free_time > 0.0) {
            out.push(Violation::NonPositive { link: id, field: "free_time", value: l.free_time });
        }
        if !(l.base_capacity.is_finite() && l.base_capacity > 0.0) {
            out.push(Violation::NonPositive {
                link: id,
                field: "base_capacity",
                value: l.base_capacity,
            });
        }
        if l.enters_signal && !(l.cycle_length.is_finite() && l.cycle_length > 0.0) {
            out.push(Violation::SignalWithoutCycle { link: id });
        }
        if l.expandable
            && !(l.expansion_amount.is_finite()
                && l.expansion_amount > 0.0
                && l.unit_cost.is_finite()
                && l.unit_cost > 0.0)
        {
            out.push(Violation::ExpansionWithoutAmount { link: id });
        }
        if let Some(first) = links[..i]
            .iter()
            .position(|o| o.origin == l.origin && o.destination == l.destination)
        {
            out.push(Violation::DuplicateLink { link: id, first: LinkId(first) });
        }
    }
    out
}

fn infer_signals(links: &[Link], violations: &mut Vec<Violation>) -> Vec<SignalIntersection> {
    let mut by_node: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    for (i, l) in links.iter().enumerate() {
        if l.enters_signal {
            by_node.entry(l.destination).or_default().push(i);
        }
    }

    let mut signals = Vec::new();
    for (&node, approaches) in &by_node {
        let cycle = links[approaches[0]].cycle_length;
        for &a in &approaches[1..] {
            if links[a].cycle_length != cycle {
                violations.push(Violation::InconsistentCycle {
                    node,
                    link: LinkId(a),
                    expected: cycle,
                    found: links[a].cycle_length,
                });
            }
        }

        // union-find over the approach positions
        let mut parent: Vec<usize> = (0..approaches.len()).collect();
        fn root(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        let mut ok = true;
        for (pos, &a) in approaches.iter().enumerate() {
            let link = &links[a];
            let Some(partner_origin) = link.same_phase_node else {
                violations.push(Violation::MissingPhaseReference { link: LinkId(a) });
                ok = false;
                continue;
            };
            let Some(other_pos) = approaches
                .iter()
                .position(|&b| links[b].origin == partner_origin)
            else {
                violations.push(Violation::DanglingPhaseReference {
                    link: LinkId(a),
                    node: partner_origin,
                });
                ok = false;
                continue;
            };
            let other = approaches[other_pos];
            if links[other].same_phase_node != Some(link.origin) {
                violations.push(Violation::NonMutualPhaseReference {
                    link: LinkId(a),
                    other: LinkId(other),
                });
                ok = false;
                continue;
            }
            let (ra, rb) = (root(&mut parent, pos), root(&mut parent, other_pos));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        if !ok {
            continue;
        }

        let mut groups: Vec<(usize, Vec<LinkId>)> = Vec::new();
        for (pos, &a) in approaches.iter().enumerate() {
            let r = root(&mut parent, pos);
            match groups.iter_mut().find(|(g, _)| *g == r) {
                Some((_, members)) => members.push(LinkId(a)),
                None => groups.push((r, vec![LinkId(a)])),
            }
        }
        if groups.len() != 2 {
            violations.push(Violation::PhaseCount { node, groups: groups.len() });
            continue;
        }
        let phase_b = groups.pop().map(|g| g.1).unwrap_or_default();
        let phase_a = groups.pop().map(|g| g.1).unwrap_or_default();
        signals.push(SignalIntersection { node, cycle_length: cycle, phase_a, phase_b });
    }
    signals
}

/// Result of [`validate`]. Empty means the instance is runnable.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every instance invariant and reports all violations found.
pub fn validate(network: &Network, od: &OdMatrix, bounds: &SplitBounds) -> ValidationReport {
    let mut violations = check_links(&network.links);
    if !(network.budget >= 0.0) {
        violations.push(Violation::NegativeBudget { budget: network.budget });
    }

    for node in network.nodes.iter().filter(|n| n.is_signalized) {
        let records = network.signals.iter().filter(|s| s.node == node.id).count();
        if records != 1 {
            violations.push(Violation::SignalRecordCount { node: node.id, records });
        }
    }
    for sig in &network.signals {
        for (i, l) in network.links.iter().enumerate() {
            if l.enters_signal && l.destination == sig.node {
                let id = LinkId(i);
                let count = sig.phase_a.iter().chain(&sig.phase_b).filter(|&&m| m == id).count();
                if count != 1 {
                    violations.push(Violation::PhaseMembership { node: sig.node, link: id });
                }
            }
        }
        let ratio_a = network.link(sig.phase_a[0]).green_ratio;
        let ratio_b = network.link(sig.phase_b[0]).green_ratio;
        for (members, expected) in [(&sig.phase_a, ratio_a), (&sig.phase_b, ratio_b)] {
            for &m in members.iter() {
                let found = network.link(m).green_ratio;
                if found != expected {
                    violations.push(Violation::InconsistentGreenRatio {
                        node: sig.node,
                        link: m,
                        expected,
                        found,
                    });
                }
            }
        }
        let sum = ratio_a + ratio_b;
        if (sum - 1.0).abs() > 1e-9 {
            violations.push(Violation::GreenRatioSum { node: sig.node, sum });
        }
        for split in [ratio_a, ratio_b] {
            if !(split >= bounds.min - SPLIT_TOLERANCE && split <= bounds.max + SPLIT_TOLERANCE) {
                violations.push(Violation::SplitOutOfBounds {
                    node: sig.node,
                    split,
                    min: bounds.min,
                    max: bounds.max,
                });
            }
        }
    }

    let mut reach_cache: BTreeMap<usize, Vec<bool>> = BTreeMap::new();
    for p in od.pairs() {
        if !(p.demand > 0.0) {
            violations.push(Violation::InvalidDemand {
                origin: p.origin,
                destination: p.destination,
                demand: p.demand,
            });
        }
        if p.origin == p.destination {
            violations.push(Violation::TrivialOdPair { node: p.origin });
            continue;
        }
        let (o, d) = (network.node_index(p.origin), network.node_index(p.destination));
        for (node, idx) in [(p.origin, o), (p.destination, d)] {
            if idx.is_none() {
                violations.push(Violation::UnknownOdNode { node });
            }
        }
        if let (Some(o), Some(d)) = (o, d) {
            let seen = reach_cache.entry(o).or_insert_with(|| network.reachable_from(o));
            if !seen[d] {
                violations.push(Violation::Unreachable {
                    origin: p.origin,
                    destination: p.destination,
                });
            }
        }
    }
    ValidationReport { violations }
}

/// Decision vector: expansion flags (one per link, only candidates may be
/// set) and the phase A green split of every signal.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub expand: Vec<bool>,
    pub green_split: Vec<f64>,
}

impl Solution {
    /// No expansions, green splits taken from the instance's base timing.
    pub fn base(network: &Network) -> Self {
        Solution {
            expand: vec![false; network.links.len()],
            green_split: network
                .signals
                .iter()
                .map(|s| network.link(s.phase_a[0]).green_ratio)
                .collect(),
        }
    }

    /// No expansions and the same split at every signal.
    pub fn uniform(network: &Network, split: f64) -> Self {
        Solution {
            expand: vec![false; network.links.len()],
            green_split: vec![split; network.signals.len()],
        }
    }

    /// Green ratio of a signalized approach; phase B gets `1 - split`.
    pub fn green_ratio(&self, network: &Network, link: LinkId) -> Option<f64> {
        network.phase_of(link).map(|(s, phase)| match phase {
            Phase::A => self.green_split[s],
            Phase::B => 1.0 - self.green_split[s],
        })
    }

    pub fn expanded_links(&self) -> impl Iterator<Item = LinkId> + '_ {
        self.expand
            .iter()
            .enumerate()
            .filter(|(_, &e)| e)
            .map(|(i, _)| LinkId(i))
    }

    /// Number of decision variables that differ.
    pub fn distance(&self, other: &Solution) -> usize {
        let flags = self.expand.iter().zip(&other.expand).filter(|(a, b)| a != b).count();
        let splits = self
            .green_split
            .iter()
            .zip(&other.green_split)
            .filter(|(a, b)| a != b)
            .count();
        flags + splits
    }

    /// Checks shape, candidacy, split bounds and the budget.
    pub fn check(&self, network: &Network, bounds: &SplitBounds) -> Result<(), SolutionError> {
        if self.expand.len() != network.links.len() {
            return Err(SolutionError::ShapeMismatch {
                what: "expansion",
                expected: network.links.len(),
                found: self.expand.len(),
            });
        }
        if self.green_split.len() != network.signals.len() {
            return Err(SolutionError::ShapeMismatch {
                what: "green split",
                expected: network.signals.len(),
                found: self.green_split.len(),
            });
        }
        if let Some(l) = self.expanded_links().find(|&l| !network.link(l).expandable) {
            return Err(SolutionError::NotExpandable(l));
        }
        for (sig, &split) in network.signals.iter().zip(&self.green_split) {
            if !bounds.contains(split) {
                return Err(SolutionError::SplitOutOfBounds { node: sig.node, split });
            }
        }
        let cost = solution_cost(network, self);
        if !within_budget(cost, network.budget) {
            return Err(SolutionError::OverBudget { cost, budget: network.budget });
        }
        Ok(())
    }
}

/// Budget comparison allowing only float rounding of the cost sum.
pub fn within_budget(cost: f64, budget: f64) -> bool {
    cost <= budget + 1e-9 * budget.abs().max(1.0)
}

/// Total unit cost of the expanded links.
pub fn solution_cost(network: &Network, solution: &Solution) -> f64 {
    solution
        .expanded_links()
        .filter_map(|l| network.links.get(l.index()))
        .map(|l| l.unit_cost)
        .fold(0.0, |a, c| a + c)
}
