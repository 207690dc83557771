// SPDX-License-Identifier: Apache-2.0

//! The F-tree: sources annotated with the nodes able to filter them.
//!
//! Every node carries a source `S`, the set `F` of filtering nodes that see
//! all of the traffic it accounts for, and the DDoS (`d`) and legitimate
//! (`l`) volume a rule for `S` deployed at any node of `F` would drop.
//!
//! Parents are built in two ways:
//!
//! * union: filter everything below, `F = ∩ F_i`, `d = Σ d_i`, `l = Σ l_i`;
//! * difference: filter the kept children only, and remove from `F` every
//!   node that excluded children's traffic traverses, so a rule at the parent
//!   never touches it.
//!
//! Both fail when the resulting `F` is empty. A parent's source is always the
//! longest common prefix of all of its children, excluded ones included.
//!
//! Besides `F`, each node tracks `reach`: every node any flow of the subtree
//! traverses. For single-path sources it equals `F`; with spoofed multi-path
//! sources it is larger, and it is what difference aggregation subtracts.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::flow::SourceSpec;
use crate::{NodeId, Volume};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AggKind {
    Leaf,
    Union,
    Difference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("aggregation leaves no filtering node")]
pub struct EmptyFilterSet;

#[derive(Clone, Debug, PartialEq)]
pub struct FTreeNode {
    source: SourceSpec,
    filters: BTreeSet<NodeId>,
    reach: BTreeSet<NodeId>,
    ddos: Volume,
    legit: Volume,
    kind: AggKind,
    children: Vec<FTreeNode>,
    excluded: Vec<FTreeNode>,
}

impl FTreeNode {
    /// A leaf whose traffic follows a single path (`reach == filters`).
    pub fn leaf(
        source: SourceSpec,
        filters: BTreeSet<NodeId>,
        ddos: Volume,
        legit: Volume,
    ) -> Self {
        let reach = filters.clone();
        Self::leaf_with_reach(source, filters, reach, ddos, legit)
    }

    pub fn leaf_with_reach(
        source: SourceSpec,
        filters: BTreeSet<NodeId>,
        mut reach: BTreeSet<NodeId>,
        ddos: Volume,
        legit: Volume,
    ) -> Self {
        debug_assert!(ddos >= 0.0 && legit >= 0.0);
        reach.extend(filters.iter().copied());
        FTreeNode {
            source,
            filters,
            reach,
            ddos,
            legit,
            kind: AggKind::Leaf,
            children: Vec::new(),
            excluded: Vec::new(),
        }
    }

    pub fn source(&self) -> SourceSpec {
        self.source
    }

    pub fn filters(&self) -> &BTreeSet<NodeId> {
        &self.filters
    }

    pub fn reach(&self) -> &BTreeSet<NodeId> {
        &self.reach
    }

    pub fn ddos(&self) -> Volume {
        self.ddos
    }

    pub fn legit(&self) -> Volume {
        self.legit
    }

    pub fn kind(&self) -> AggKind {
        self.kind
    }

    pub fn children(&self) -> &[FTreeNode] {
        &self.children
    }

    pub fn excluded(&self) -> &[FTreeNode] {
        &self.excluded
    }

    pub fn is_leaf(&self) -> bool {
        self.kind == AggKind::Leaf
    }

    /// Number of leaves below this node, excluded ones included.
    pub fn leaf_count(&self) -> usize {
        if self.is_leaf() {
            1
        } else {
            self.children
                .iter()
                .chain(&self.excluded)
                .map(FTreeNode::leaf_count)
                .sum()
        }
    }

    /// Recomputes every internal node from its children and reports the first
    /// mismatch.
    pub fn audit(&self) -> Result<(), String> {
        if self.ddos < 0.0 || self.legit < 0.0 {
            return Err(format!("{}: negative volume", self.source));
        }
        if self.is_leaf() {
            return Ok(());
        }
        for c in self.children.iter().chain(&self.excluded) {
            c.audit()?;
        }
        let rebuilt = match self.kind {
            AggKind::Union => union_aggregate(self.children.clone()),
            AggKind::Difference => {
                difference_aggregate(self.children.clone(), self.excluded.clone())
            }
            AggKind::Leaf => unreachable!(),
        }
        .map_err(|_| format!("{}: filter set is empty", self.source))?;
        let same = rebuilt.source == self.source
            && rebuilt.filters == self.filters
            && rebuilt.reach == self.reach
            && rebuilt.ddos == self.ddos
            && rebuilt.legit == self.legit;
        if same {
            Ok(())
        } else {
            Err(format!(
                "{}: stored values differ from its children",
                self.source
            ))
        }
    }

    /// Indented text rendering, one node per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        self.dump_into(&mut out, 0, "");
        out
    }

    fn dump_into(&self, out: &mut String, depth: usize, tag: &str) {
        let kind = match self.kind {
            AggKind::Leaf => "leaf",
            AggKind::Union => "union",
            AggKind::Difference => "diff",
        };
        let _ = writeln!(
            out,
            "{:indent$}{tag}{} F={} d={} l={} [{kind}]",
            "",
            self.source,
            fmt_set(&self.filters),
            self.ddos,
            self.legit,
            indent = depth * 2
        );
        for c in &self.children {
            c.dump_into(out, depth + 1, "");
        }
        for c in &self.excluded {
            c.dump_into(out, depth + 1, "!");
        }
    }
}

impl fmt::Display for FTreeNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} F={} d={} l={}",
            self.source,
            fmt_set(&self.filters),
            self.ddos,
            self.legit
        )
    }
}

pub(crate) fn fmt_set(s: &BTreeSet<NodeId>) -> String {
    let items: Vec<String> = s.iter().map(|n| n.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

/// Most specific source covering every input.
///
/// Equal address-plus-port inputs stay as they are; one address with
/// different ports collapses to the bare address; anything else becomes the
/// longest prefix containing all of the inputs' ranges. Ports never widen into
/// port ranges.
///
/// # Panics
///
/// If `specs` is empty.
pub fn longest_common_prefix(specs: &[SourceSpec]) -> SourceSpec {
    let first = *specs.first().expect("longest_common_prefix of nothing");
    if specs.iter().all(|s| *s == first) {
        return first;
    }
    let mut diff = 0u32;
    let mut min_len = first.prefix_len();
    for s in &specs[1..] {
        diff |= s.addr_bits() ^ first.addr_bits();
        min_len = min_len.min(s.prefix_len());
    }
    let common = diff.leading_zeros().min(32) as u8;
    let len = common.min(min_len);
    if len == 32 {
        SourceSpec::address(first.addr())
    } else {
        SourceSpec::covering_prefix(first.addr(), len)
    }
}

/// True iff a rule for `rule_source` matches traffic from `flow_source`.
pub fn spec_matches(rule_source: &SourceSpec, flow_source: &SourceSpec) -> bool {
    rule_source.covers(flow_source)
}

fn intersect_all<'a>(mut sets: impl Iterator<Item = &'a BTreeSet<NodeId>>) -> BTreeSet<NodeId> {
    let Some(first) = sets.next() else {
        return BTreeSet::new();
    };
    let mut acc = first.clone();
    for s in sets {
        acc.retain(|n| s.contains(n));
        if acc.is_empty() {
            break;
        }
    }
    acc
}

fn union_all<'a>(sets: impl Iterator<Item = &'a BTreeSet<NodeId>>) -> BTreeSet<NodeId> {
    let mut acc = BTreeSet::new();
    for s in sets {
        acc.extend(s.iter().copied());
    }
    acc
}

/// Union aggregation: a parent that filters all traffic of its children.
///
/// # Panics
///
/// If `children` is empty.
pub fn union_aggregate(children: Vec<FTreeNode>) -> Result<FTreeNode, EmptyFilterSet> {
    assert!(!children.is_empty(), "union of no children");
    let filters = intersect_all(children.iter().map(|c| &c.filters));
    if filters.is_empty() {
        return Err(EmptyFilterSet);
    }
    let specs: Vec<SourceSpec> = children.iter().map(|c| c.source).collect();
    Ok(FTreeNode {
        source: longest_common_prefix(&specs),
        reach: union_all(children.iter().map(|c| &c.reach)),
        ddos: children.iter().map(|c| c.ddos).sum(),
        legit: children.iter().map(|c| c.legit).sum(),
        filters,
        kind: AggKind::Union,
        children,
        excluded: Vec::new(),
    })
}

/// Difference aggregation: filter the `keep` children while guaranteeing that
/// no traffic of the `exclude` children passes the chosen filtering node.
///
/// With nothing to exclude this is [`union_aggregate`].
///
/// # Panics
///
/// If `keep` is empty.
pub fn difference_aggregate(
    keep: Vec<FTreeNode>,
    exclude: Vec<FTreeNode>,
) -> Result<FTreeNode, EmptyFilterSet> {
    assert!(!keep.is_empty(), "difference with nothing to keep");
    if exclude.is_empty() {
        return union_aggregate(keep);
    }
    let mut filters = intersect_all(keep.iter().map(|c| &c.filters));
    for e in &exclude {
        filters.retain(|n| !e.reach.contains(n));
    }
    if filters.is_empty() {
        return Err(EmptyFilterSet);
    }
    let specs: Vec<SourceSpec> = keep.iter().chain(&exclude).map(|c| c.source).collect();
    Ok(FTreeNode {
        source: longest_common_prefix(&specs),
        reach: union_all(keep.iter().chain(&exclude).map(|c| &c.reach)),
        ddos: keep.iter().map(|c| c.ddos).sum(),
        legit: keep.iter().map(|c| c.legit).sum(),
        filters,
        kind: AggKind::Difference,
        children: keep,
        excluded: exclude,
    })
}
