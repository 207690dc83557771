// SPDX-License-Identifier: Apache-2.0

//! Assignment of rules to filtering nodes under per-node rule limits.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::rulegen::Rule;
use crate::NodeId;

/// Rule space at one filtering node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeCapacity {
    pub node: NodeId,
    pub limit: usize,
    pub used: usize,
    pub available: bool,
}

impl NodeCapacity {
    pub fn new(node: NodeId, limit: usize) -> Self {
        NodeCapacity {
            node,
            limit,
            used: 0,
            available: true,
        }
    }

    pub fn remaining(&self) -> usize {
        if self.available {
            self.limit.saturating_sub(self.used)
        } else {
            0
        }
    }
}

/// Capacities of `limit` rules at every node.
pub fn uniform_capacities(
    nodes: impl IntoIterator<Item = NodeId>,
    limit: usize,
) -> Vec<NodeCapacity> {
    nodes
        .into_iter()
        .map(|n| NodeCapacity::new(n, limit))
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlacementResult {
    pub placed: BTreeMap<u64, NodeId>,
    pub failed: Vec<u64>,
    pub per_node_counts: BTreeMap<NodeId, usize>,
    /// Capacities after placement.
    pub capacities: Vec<NodeCapacity>,
}

impl PlacementResult {
    /// Fraction of rules that found a node; 1.0 for no rules.
    pub fn success_rate(&self) -> f64 {
        let total = self.placed.len() + self.failed.len();
        if total == 0 {
            1.0
        } else {
            self.placed.len() as f64 / total as f64
        }
    }

    /// Copies placements into the rules' `deployed_at`.
    pub fn apply(&self, rules: &mut [Rule]) {
        for r in rules {
            r.deployed_at = self.placed.get(&r.id).copied();
        }
    }

    /// Writes `rule_id,node_id` lines, then `#` footer lines with the failed
    /// rules and the success rate.
    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# rule_id,node_id")?;
        for (id, node) in &self.placed {
            writeln!(w, "{id},{node}")?;
        }
        let failed: Vec<String> = self.failed.iter().map(u64::to_string).collect();
        writeln!(w, "#failed={}", failed.join("|"))?;
        writeln!(
            w,
            "#placed={} failed={} success_rate={:.6}",
            self.placed.len(),
            self.failed.len(),
            self.success_rate()
        )
    }
}

#[derive(Debug, Error)]
pub enum PlacementFileError {
    #[error("line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: expected rule_id,node_id")]
    Malformed { line: usize },
    #[error("line {line}: rule {id} placed twice")]
    Duplicate { line: usize, id: u64 },
}

/// Reads the `rule_id,node_id` lines written by [`PlacementResult::write`].
pub fn parse_placement<R: BufRead>(reader: R) -> Result<BTreeMap<u64, NodeId>, PlacementFileError> {
    let mut out = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| PlacementFileError::Io {
            line: line_no,
            source,
        })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, node) = line
            .split_once(',')
            .and_then(|(a, b)| {
                Some((
                    a.trim().parse::<u64>().ok()?,
                    b.trim().parse::<NodeId>().ok()?,
                ))
            })
            .ok_or(PlacementFileError::Malformed { line: line_no })?;
        if out.insert(id, node).is_some() {
            return Err(PlacementFileError::Duplicate { line: line_no, id });
        }
    }
    Ok(out)
}

/// Places rules with the fewest candidate nodes first (ties by rule id),
/// each at the eligible candidate with the most remaining capacity (ties by
/// node id). Candidates missing from `capacities` count as unavailable.
pub fn place_rules(rules: &[Rule], capacities: &[NodeCapacity]) -> PlacementResult {
    let mut caps = capacities.to_vec();
    let index: HashMap<NodeId, usize> = caps.iter().enumerate().map(|(i, c)| (c.node, i)).collect();
    let mut order: Vec<&Rule> = rules.iter().collect();
    order.sort_by_key(|r| (r.candidates.len(), r.id));

    let mut result = PlacementResult::default();
    for r in order {
        let best = r
            .candidates
            .iter()
            .filter_map(|n| index.get(n).copied())
            .filter(|&i| caps[i].remaining() > 0)
            .max_by(|&a, &b| {
                caps[a]
                    .remaining()
                    .cmp(&caps[b].remaining())
                    .then(caps[b].node.cmp(&caps[a].node))
            });
        match best {
            Some(i) => {
                caps[i].used += 1;
                result.placed.insert(r.id, caps[i].node);
                *result.per_node_counts.entry(caps[i].node).or_default() += 1;
            }
            None => result.failed.push(r.id),
        }
    }
    result.failed.sort_unstable();
    result.capacities = caps;
    result
}

/// Cumulative share of rule-holding nodes by rules held:
/// `(k, fraction of nodes holding at most k rules)` for each distinct k.
pub fn rule_distribution(result: &PlacementResult) -> Vec<(usize, f64)> {
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in result.per_node_counts.values().filter(|&&c| c > 0) {
        *hist.entry(c).or_default() += 1;
    }
    let total: usize = hist.values().sum();
    let mut acc = 0;
    hist.into_iter()
        .map(|(k, n)| {
            acc += n;
            (k, acc as f64 / total as f64)
        })
        .collect()
}

/// Two-column CSV of [`rule_distribution`].
pub fn write_distribution_csv<W: Write>(dist: &[(usize, f64)], mut w: W) -> io::Result<()> {
    writeln!(w, "rules_per_node,cumulative_fraction_of_nodes")?;
    for (k, f) in dist {
        writeln!(w, "{k},{f:.6}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{Protocol, SourceSpec, TcpFlags};

    fn rule(id: u64, cands: &[u32]) -> Rule {
        Rule {
            id,
            source: SourceSpec::ANY,
            protocol: Protocol::Any,
            tcp_flags: TcpFlags::Any,
            destination: SourceSpec::ANY,
            candidates: cands.iter().copied().map(NodeId).collect(),
            deployed_at: None,
            coverage: 0.0,
            collateral: 0.0,
            start: 0,
            end: 1,
        }
    }

    fn caps(nodes: &[u32], limit: usize) -> Vec<NodeCapacity> {
        uniform_capacities(nodes.iter().copied().map(NodeId), limit)
    }

    #[test]
    fn single_rule() {
        let r = place_rules(&[rule(0, &[3])], &caps(&[3], 1));
        assert_eq!(r.placed[&0], NodeId(3));
        assert_eq!(r.success_rate(), 1.0);
        assert_eq!(r.capacities[0].used, 1);
    }

    #[test]
    fn contention() {
        let r = place_rules(&[rule(0, &[7]), rule(1, &[7])], &caps(&[7], 1));
        assert_eq!((r.placed.len(), r.failed.clone()), (1, vec![1]));
        assert_eq!(r.success_rate(), 0.5);
    }

    #[test]
    fn scarce_rules_go_first() {
        // Rule 0 could go anywhere, rule 1 only to node 1.
        let r = place_rules(&[rule(0, &[1, 2]), rule(1, &[1])], &caps(&[1, 2], 1));
        assert_eq!(r.placed[&1], NodeId(1));
        assert_eq!(r.placed[&0], NodeId(2));
    }

    #[test]
    fn spreads_load_and_skips_unavailable() {
        let mut c = caps(&[1, 2, 3], 5);
        c[1].available = false;
        let rules: Vec<Rule> = (0..4).map(|i| rule(i, &[1, 2, 3, 4])).collect();
        let r = place_rules(&rules, &c);
        assert_eq!(r.per_node_counts.get(&NodeId(1)), Some(&2));
        assert_eq!(r.per_node_counts.get(&NodeId(3)), Some(&2));
        assert!(!r.per_node_counts.contains_key(&NodeId(2)));
    }

    #[test]
    fn distribution() {
        let mut r = PlacementResult::default();
        r.per_node_counts.insert(NodeId(1), 5);
        assert_eq!(rule_distribution(&r), vec![(5, 1.0)]);
        for (n, c) in [(1, 1), (2, 1), (3, 1), (4, 10)] {
            r.per_node_counts.insert(NodeId(n), c);
        }
        assert_eq!(rule_distribution(&r), vec![(1, 0.75), (10, 1.0)]);
    }

    #[test]
    fn file_round_trip() {
        let r = place_rules(
            &[rule(0, &[7]), rule(4, &[7]), rule(2, &[9])],
            &caps(&[7, 9], 1),
        );
        let mut out = Vec::new();
        r.write(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("#failed=4\n"));
        assert_eq!(parse_placement(text.as_bytes()).unwrap(), r.placed);
        assert!(matches!(
            parse_placement("1,2\n1,3\n".as_bytes()),
            Err(PlacementFileError::Duplicate { line: 2, id: 1 })
        ));
        assert!(matches!(
            parse_placement("x\n".as_bytes()),
            Err(PlacementFileError::Malformed { line: 1 })
        ));
    }
}
