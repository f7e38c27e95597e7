//! Social networks: undirected, unweighted, simple graphs.

use std::collections::HashSet;
use std::io::{self, BufRead, Write};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialGraph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl SocialGraph {
    /// Builds a graph from an edge list. Pairs are normalized to `(min, max)`;
    /// self-loops, duplicates and out-of-range endpoints are rejected.
    pub fn from_edges(node_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut normalized = Vec::new();
        let mut adjacency = vec![Vec::new(); node_count];
        for (u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) references a node outside 0..{node_count}"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at node {u}")));
            }
            let pair = (u.min(v), u.max(v));
            if !seen.insert(pair) {
                return Err(Error::InvalidGraph(format!("duplicate edge {pair:?}")));
            }
            normalized.push(pair);
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        Ok(SocialGraph {
            node_count,
            edges: normalized,
            adjacency,
        })
    }

    /// Star with node 0 as the hub.
    pub fn star(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::param("n", format!("a star needs at least 2 nodes, got {n}")));
        }
        Self::from_edges(n, (1..n).map(|i| (0, i)))
    }

    /// Two equal communities mixed by `omega`: `round((1 - omega) * m)` edges are
    /// placed inside the communities (split evenly, odd remainder to community 0)
    /// and the rest between them. Pairs are drawn uniformly without replacement.
    pub fn two_community<R: Rng + ?Sized>(
        n: usize,
        m: usize,
        omega: f64,
        rng: &mut R,
    ) -> Result<(Self, CommunityLayout)> {
        if !(0.0..=1.0).contains(&omega) {
            return Err(Error::param("omega", format!("must lie in [0, 1], got {omega}")));
        }
        if n < 2 {
            return Err(Error::param("n", format!("need at least 2 nodes, got {n}")));
        }
        let size0 = n.div_ceil(2);
        let size1 = n - size0;
        let intra = intra_edge_count(m, omega);
        let inter = m - intra;
        let intra0 = intra.div_ceil(2);
        let intra1 = intra / 2;

        let cap0 = size0 * size0.saturating_sub(1) / 2;
        let cap1 = size1 * size1.saturating_sub(1) / 2;
        let cap_inter = size0 * size1;
        for (group, requested, available) in [
            ("community 0", intra0, cap0),
            ("community 1", intra1, cap1),
            ("between communities", inter, cap_inter),
        ] {
            if requested > available {
                return Err(Error::Capacity {
                    group,
                    requested,
                    available,
                });
            }
        }

        let mut edges = Vec::with_capacity(m);
        for i in index::sample(rng, cap0, intra0) {
            let (a, b) = unrank_pair(size0, i);
            edges.push((a, b));
        }
        for i in index::sample(rng, cap1, intra1) {
            let (a, b) = unrank_pair(size1, i);
            edges.push((size0 + a, size0 + b));
        }
        for i in index::sample(rng, cap_inter, inter) {
            edges.push((i / size1, size0 + i % size1));
        }

        let graph = Self::from_edges(n, edges)?;
        let layout = CommunityLayout {
            omega,
            total_edges: m,
            community_of: (0..n).map(|v| u8::from(v >= size0)).collect(),
        };
        Ok((graph, layout))
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    /// Writes one `u v` pair per line, preceded by a `# nodes N` comment so that
    /// isolated trailing nodes survive a round trip.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# nodes {}", self.node_count)?;
        for &(u, v) in &self.edges {
            writeln!(out, "{u} {v}")?;
        }
        Ok(())
    }

    /// Reads the edge-list format. Without a `# nodes` header the node count is
    /// one more than the largest index.
    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let mut declared = None;
        let mut edges = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::EdgeListParse {
                line: line_no,
                reason: e.to_string(),
            })?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(n) = comment.trim().strip_prefix("nodes") {
                    declared = Some(n.trim().parse::<usize>().map_err(|e| Error::EdgeListParse {
                        line: line_no,
                        reason: e.to_string(),
                    })?);
                }
                continue;
            }
            let mut parts = line.split_whitespace();
            let mut next = || -> Result<usize> {
                parts
                    .next()
                    .ok_or_else(|| Error::EdgeListParse {
                        line: line_no,
                        reason: "expected two node indices".into(),
                    })?
                    .parse()
                    .map_err(|e: std::num::ParseIntError| Error::EdgeListParse {
                        line: line_no,
                        reason: e.to_string(),
                    })
            };
            let (u, v) = (next()?, next()?);
            if parts.next().is_some() {
                return Err(Error::EdgeListParse {
                    line: line_no,
                    reason: "trailing tokens".into(),
                });
            }
            edges.push((u, v));
        }
        let implied = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
        Self::from_edges(declared.unwrap_or(implied), edges)
    }
}

/// Community assignment of a two-community graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityLayout {
    pub omega: f64,
    pub total_edges: usize,
    pub community_of: Vec<u8>,
}

impl CommunityLayout {
    pub fn members(&self, community: u8) -> Vec<usize> {
        self.community_of
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == community)
            .map(|(v, _)| v)
            .collect()
    }
}

/// Intra-community edge count, `(1 - omega) * m` rounded half up.
pub fn intra_edge_count(m: usize, omega: f64) -> usize {
    let exact = (1.0 - omega) * m as f64;
    // absorb representation error such as (1 - 0.4) * 1500 = 899.999...
    let rounded = (exact + 0.5 + 1e-9).floor();
    (rounded.max(0.0) as usize).min(m)
}

/// Maps `0..k(k-1)/2` onto pairs `(a, b)`, `a < b < k`, row by row.
fn unrank_pair(k: usize, mut rank: usize) -> (usize, usize) {
    let mut a = 0;
    loop {
        let row = k - a - 1;
        if rank < row {
            return (a, a + 1 + rank);
        }
        rank -= row;
        a += 1;
    }
}
