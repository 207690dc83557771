// SPDX-License-Identifier: Apache-2.0

use std::collections::{HashMap, VecDeque};
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::NodeId;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: unknown AS {node}")]
    UnknownNode { line: usize, node: NodeId },
    #[error("unknown AS {0}")]
    NoSuchNode(NodeId),
    #[error("no path from AS {from} to AS {to}")]
    NoPath { from: NodeId, to: NodeId },
}

/// Undirected AS graph with tiers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Topology {
    ids: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    tiers: Vec<u8>,
    adj: Vec<Vec<usize>>,
    victim: Option<NodeId>,
}

impl Topology {
    /// Builds a topology from `(as, tier)` pairs and undirected edges.
    /// Duplicate edges and self-loops are dropped.
    pub fn from_parts(
        nodes: impl IntoIterator<Item = (NodeId, u8)>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
        victim: Option<NodeId>,
    ) -> Result<Self, TopologyError> {
        let mut nodes: Vec<(NodeId, u8)> = nodes.into_iter().collect();
        nodes.sort_unstable();
        nodes.dedup_by_key(|n| n.0);
        let ids: Vec<NodeId> = nodes.iter().map(|n| n.0).collect();
        let index: HashMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let mut adj = vec![Vec::new(); ids.len()];
        for (a, b) in edges {
            let ia = *index.get(&a).ok_or(TopologyError::NoSuchNode(a))?;
            let ib = *index.get(&b).ok_or(TopologyError::NoSuchNode(b))?;
            if ia != ib {
                adj[ia].push(ib);
                adj[ib].push(ia);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        if let Some(v) = victim {
            if !index.contains_key(&v) {
                return Err(TopologyError::NoSuchNode(v));
            }
        }
        Ok(Topology {
            ids,
            index,
            tiers: nodes.iter().map(|n| n.1).collect(),
            adj,
            victim,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// All ASes in ascending id order.
    pub fn nodes(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.index.contains_key(&n)
    }

    pub fn tier(&self, n: NodeId) -> Option<u8> {
        self.index.get(&n).map(|&i| self.tiers[i])
    }

    pub fn tier_members(&self, tier: u8) -> Vec<NodeId> {
        self.ids
            .iter()
            .zip(&self.tiers)
            .filter(|(_, &t)| t == tier)
            .map(|(&n, _)| n)
            .collect()
    }

    /// Neighbors in ascending id order.
    pub fn neighbors(&self, n: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let list = self
            .index
            .get(&n)
            .map(|&i| self.adj[i].as_slice())
            .unwrap_or(&[]);
        list.iter().map(|&j| self.ids[j])
    }

    pub fn victim(&self) -> Option<NodeId> {
        self.victim
    }

    pub fn set_victim(&mut self, v: NodeId) -> Result<(), TopologyError> {
        if !self.contains(v) {
            return Err(TopologyError::NoSuchNode(v));
        }
        self.victim = Some(v);
        Ok(())
    }

    /// Hop distances from `to` to every AS (`u32::MAX` when unreachable).
    fn distances(&self, to: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.ids.len()];
        let mut queue = VecDeque::new();
        dist[to] = 0;
        queue.push_back(to);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if dist[v] == u32::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Routes toward one destination; build once, query many sources.
    pub fn routes_to(&self, to: NodeId) -> Result<Routes<'_>, TopologyError> {
        let t = *self.index.get(&to).ok_or(TopologyError::NoSuchNode(to))?;
        Ok(Routes {
            topo: self,
            to,
            dist: self.distances(t),
        })
    }

    /// ASes unable to reach the victim.
    pub fn disconnected(&self) -> Vec<NodeId> {
        let Some(v) = self.victim else {
            return Vec::new();
        };
        let dist = self.distances(self.index[&v]);
        self.ids
            .iter()
            .zip(dist)
            .filter(|(_, d)| *d == u32::MAX)
            .map(|(&n, _)| n)
            .collect()
    }
}

/// Shortest paths toward a fixed destination.
pub struct Routes<'a> {
    topo: &'a Topology,
    to: NodeId,
    dist: Vec<u32>,
}

impl Routes<'_> {
    pub fn hops(&self, from: NodeId) -> Option<u32> {
        let &i = self.topo.index.get(&from)?;
        (self.dist[i] != u32::MAX).then_some(self.dist[i])
    }

    /// Shortest path from `from` to the destination, both included. Among
    /// equal-length paths the one taking the smallest neighbor id at every
    /// hop wins.
    pub fn path(&self, from: NodeId) -> Result<Vec<NodeId>, TopologyError> {
        let &start = self
            .topo
            .index
            .get(&from)
            .ok_or(TopologyError::NoSuchNode(from))?;
        if self.dist[start] == u32::MAX {
            return Err(TopologyError::NoPath { from, to: self.to });
        }
        let mut path = vec![from];
        let mut u = start;
        while self.dist[u] > 0 {
            let next = self.topo.adj[u]
                .iter()
                .copied()
                .find(|&v| self.dist[v] + 1 == self.dist[u])
                .expect("a neighbor one hop closer exists");
            path.push(self.topo.ids[next]);
            u = next;
        }
        Ok(path)
    }
}

/// Shortest hop-count path from `from` to `to`; see [`Routes::path`].
pub fn compute_path(
    topo: &Topology,
    from: NodeId,
    to: NodeId,
) -> Result<Vec<NodeId>, TopologyError> {
    topo.routes_to(to)?.path(from)
}

/// Parses `node,<as>,<tier>`, `edge,<a>,<b>` and `victim,<as>` lines.
///
/// Returns the topology plus a warning per AS that cannot reach the victim.
pub fn load_topology<R: BufRead>(reader: R) -> Result<(Topology, Vec<String>), TopologyError> {
    let mut nodes: Vec<(NodeId, u8)> = Vec::new();
    let mut known: HashMap<NodeId, u8> = HashMap::new();
    let mut edges = Vec::new();
    let mut victim = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| TopologyError::Io {
            line: line_no,
            source,
        })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = |msg: &str| TopologyError::Malformed {
            line: line_no,
            msg: msg.to_string(),
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let id = |s: &str| {
            s.parse::<NodeId>()
                .map_err(|_| malformed(&format!("bad AS id {s:?}")))
        };
        match fields.as_slice() {
            ["node", a, t] => {
                let a = id(a)?;
                let tier: u8 = t
                    .parse()
                    .map_err(|_| malformed(&format!("bad tier {t:?}")))?;
                if !(1..=3).contains(&tier) {
                    return Err(malformed(&format!("tier {tier} outside 1..=3")));
                }
                match known.insert(a, tier) {
                    Some(prev) if prev != tier => {
                        return Err(malformed(&format!("AS {a} redeclared with another tier")))
                    }
                    Some(_) => {}
                    None => nodes.push((a, tier)),
                }
            }
            ["edge", a, b] => {
                let (a, b) = (id(a)?, id(b)?);
                for n in [a, b] {
                    if !known.contains_key(&n) {
                        return Err(TopologyError::UnknownNode {
                            line: line_no,
                            node: n,
                        });
                    }
                }
                edges.push((a, b));
            }
            ["victim", a] => {
                let a = id(a)?;
                if !known.contains_key(&a) {
                    return Err(TopologyError::UnknownNode {
                        line: line_no,
                        node: a,
                    });
                }
                victim = Some(a);
            }
            _ => {
                return Err(malformed(
                    "expected node,<as>,<tier> | edge,<a>,<b> | victim,<as>",
                ))
            }
        }
    }
    let topo = Topology::from_parts(nodes, edges, victim)?;
    let warnings = topo
        .disconnected()
        .into_iter()
        .map(|n| format!("AS {n} cannot reach the victim"))
        .collect();
    Ok((topo, warnings))
}

pub fn write_topology<W: Write>(topo: &Topology, mut w: W) -> io::Result<()> {
    for (n, t) in topo.ids.iter().zip(&topo.tiers) {
        writeln!(w, "node,{n},{t}")?;
    }
    for (i, list) in topo.adj.iter().enumerate() {
        for &j in list.iter().filter(|&&j| j > i) {
            writeln!(w, "edge,{},{}", topo.ids[i], topo.ids[j])?;
        }
    }
    if let Some(v) = topo.victim {
        writeln!(w, "victim,{v}")?;
    }
    Ok(())
}
