use alloc::vec::Vec;

use crate::network::{LinkId, Network, NodeId};

/// A route as its exact link sequence. Two paths are equal iff their link
/// sequences are; the cached key only speeds up lookups.
#[derive(Clone, Debug)]
pub struct Path {
    links: Vec<LinkId>,
    key: u64,
}

impl PartialEq for Path {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key && self.links == other.links
    }
}

impl Eq for Path {}

fn fnv1a(links: &[LinkId]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for l in links {
        for b in (l.0 as u64).to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

impl Path {
    pub fn new(links: Vec<LinkId>) -> Self {
        let key = fnv1a(&links);
        Path { links, key }
    }

    pub fn links(&self) -> &[LinkId] {
        &self.links
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn contains(&self, link: LinkId) -> bool {
        self.links.contains(&link)
    }

    /// Sum of link times along the path.
    pub fn cost(&self, times: &[f64]) -> f64 {
        self.links.iter().map(|l| times[l.index()]).sum()
    }

    /// Node labels visited, origin first.
    pub fn nodes(&self, network: &Network) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.links.len() + 1);
        if let Some(first) = self.links.first() {
            out.push(network.link(*first).origin);
        }
        out.extend(self.links.iter().map(|&l| network.link(l).destination));
        out
    }

    /// Contiguous and without repeated nodes.
    pub fn is_simple(&self, network: &Network) -> bool {
        let contiguous = self
            .links
            .windows(2)
            .all(|w| network.link(w[0]).destination == network.link(w[1]).origin);
        let nodes = self.nodes(network);
        let distinct = nodes
            .iter()
            .enumerate()
            .all(|(i, n)| !nodes[..i].contains(n));
        contiguous && distinct
    }
}
