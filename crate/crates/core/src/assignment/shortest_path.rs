//! Label-setting shortest paths with a lexicographic tie-break on the node
//! sequence, so equal-cost alternatives resolve the same way on every run.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use super::{AssignmentError, Path};
use crate::network::{LinkId, Network, NodeId};

#[derive(Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

pub(crate) struct ShortestPathTree {
    pub dist: Vec<f64>,
    pub pred: Vec<Option<LinkId>>,
}

impl ShortestPathTree {
    fn node_sequence(&self, network: &Network, mut node: usize) -> Vec<usize> {
        let mut seq = vec![node];
        while let Some(l) = self.pred[node] {
            node = network.ends(l).0;
            seq.push(node);
        }
        seq.reverse();
        seq
    }

    pub fn path_to(&self, network: &Network, dest: usize) -> Option<Path> {
        if !self.dist[dest].is_finite() {
            return None;
        }
        let mut links = Vec::new();
        let mut node = dest;
        while let Some(l) = self.pred[node] {
            links.push(l);
            node = network.ends(l).0;
        }
        links.reverse();
        Some(Path::new(links))
    }
}

/// One-to-all tree from `origin` (dense index). `times` must be positive.
pub(crate) fn shortest_path_tree(network: &Network, times: &[f64], origin: usize) -> ShortestPathTree {
    let n = network.node_count();
    let mut tree = ShortestPathTree { dist: vec![f64::INFINITY; n], pred: vec![None; n] };
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    tree.dist[origin] = 0.0;
    heap.push(Reverse((Key(0.0), origin)));

    while let Some(Reverse((Key(d), u))) = heap.pop() {
        if settled[u] || d > tree.dist[u] {
            continue;
        }
        settled[u] = true;
        for &l in network.out_links(u) {
            let v = network.ends(l).1;
            if settled[v] {
                continue;
            }
            let nd = d + times[l.index()];
            let better = if nd < tree.dist[v] {
                true
            } else if nd == tree.dist[v] {
                let current_tail = tree.pred[v].map(|p| network.ends(p).0);
                match current_tail {
                    Some(w) if w != u => {
                        let mut via_u = tree.node_sequence(network, u);
                        via_u.push(v);
                        let mut via_w = tree.node_sequence(network, w);
                        via_w.push(v);
                        via_u < via_w
                    }
                    _ => false,
                }
            } else {
                false
            };
            if better {
                tree.dist[v] = nd;
                tree.pred[v] = Some(l);
                heap.push(Reverse((Key(nd), v)));
            }
        }
    }
    tree
}

pub(crate) fn check_times(times: &[f64]) -> Result<(), AssignmentError> {
    match times.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
        Some(i) => Err(AssignmentError::InvalidTime { link: LinkId(i), time: times[i] }),
        None => Ok(()),
    }
}

/// Minimum-time simple path from `origin` to `destination` under fixed link
/// times. Ties go to the lexicographically smallest node sequence.
pub fn shortest_path(
    network: &Network,
    times: &[f64],
    origin: NodeId,
    destination: NodeId,
) -> Result<Path, AssignmentError> {
    if times.len() != network.links().len() {
        return Err(AssignmentError::TimeCount { expected: network.links().len(), found: times.len() });
    }
    check_times(times)?;
    let r = network.node_index(origin).ok_or(AssignmentError::UnknownNode(origin))?;
    let s = network.node_index(destination).ok_or(AssignmentError::UnknownNode(destination))?;
    shortest_path_tree(network, times, r)
        .path_to(network, s)
        .ok_or(AssignmentError::Unreachable { origin, destination })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::reference_network;
    use crate::network::Link;
    use crate::oracle::enumerate_paths;

    #[test]
    fn chain() {
        let n = Network::new(vec![Link::new(1, 2, 10.0, 1.0), Link::new(2, 3, 20.0, 1.0)], 0.0).unwrap();
        let p = shortest_path(&n, &[10.0, 20.0], 1, 3).unwrap();
        assert_eq!(p.links(), &[LinkId(0), LinkId(1)]);
        assert_eq!(p.cost(&[10.0, 20.0]), 30.0);
        assert!(matches!(
            shortest_path(&n, &[10.0, 20.0], 3, 1),
            Err(AssignmentError::Unreachable { .. })
        ));
    }

    #[test]
    fn ties_go_to_smallest_node_sequence() {
        // 1->5->9 and 1->3->9 cost the same; 1-3-9 wins regardless of link order
        let links = vec![
            Link::new(1, 5, 1.0, 1.0),
            Link::new(5, 9, 1.0, 1.0),
            Link::new(1, 3, 1.0, 1.0),
            Link::new(3, 9, 1.0, 1.0),
        ];
        let n = Network::new(links, 0.0).unwrap();
        for _ in 0..3 {
            let p = shortest_path(&n, &[1.0; 4], 1, 9).unwrap();
            assert_eq!(p.nodes(&n), vec![1, 3, 9]);
        }
        let links = vec![
            Link::new(1, 3, 1.0, 1.0),
            Link::new(3, 9, 1.0, 1.0),
            Link::new(1, 5, 1.0, 1.0),
            Link::new(5, 9, 1.0, 1.0),
        ];
        let n = Network::new(links, 0.0).unwrap();
        assert_eq!(shortest_path(&n, &[1.0; 4], 1, 9).unwrap().nodes(&n), vec![1, 3, 9]);
    }

    #[test]
    fn matches_exhaustive_enumeration_on_reference() {
        let n = reference_network();
        let times: Vec<f64> = n.links().iter().map(|l| l.free_time).collect();
        for (r, s) in [(1, 9), (5, 13), (13, 1), (10, 5), (4, 10)] {
            let p = shortest_path(&n, &times, r, s).unwrap();
            assert!(p.is_simple(&n));
            let all = enumerate_paths(&n, r, s, 12).unwrap();
            let best = all
                .iter()
                .map(|q| q.iter().map(|l| times[l.index()]).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            assert!(all.iter().any(|q| q.as_slice() == p.links()));
            assert_eq!(p.cost(&times), best);
        }
    }

    #[test]
    fn rejects_nonpositive_times() {
        let n = reference_network();
        let mut times = vec![1.0; 32];
        times[4] = 0.0;
        assert!(matches!(shortest_path(&n, &times, 1, 9), Err(AssignmentError::InvalidTime { .. })));
    }
}
