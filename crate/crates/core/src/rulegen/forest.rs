// SPDX-License-Identifier: Apache-2.0

//! Arena prefix trie over the leaves of one batch.
//!
//! The current F-tree frontier is a cut through this trie. Merging at an
//! internal slot turns it into a frontier node that replaces everything below
//! it. Every internal slot keeps a summary of the frontier below it so that
//! the aggregation it would produce can be read off in constant time.

use crate::flow::SourceSpec;
use crate::ftree::{difference_aggregate, longest_common_prefix, union_aggregate, FTreeNode};
use crate::{NodeId, Volume, VOLUME_EPSILON};

pub(crate) type NodeSet = Vec<NodeId>;

pub(crate) fn intersect(a: &[NodeId], b: &[NodeId]) -> NodeSet {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

pub(crate) fn subtract(a: &mut NodeSet, b: &[NodeId]) {
    if !a.is_empty() && !b.is_empty() {
        a.retain(|n| b.binary_search(n).is_err());
    }
}

fn merge_sorted(a: &[NodeId], b: &[NodeId]) -> NodeSet {
    let mut out: NodeSet = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Variant {
    Union,
    Difference,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum State {
    Internal,
    Frontier,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Origin {
    Leaf(usize),
    Merged(Variant),
    Split,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Summary {
    pub members: usize,
    pub d_all: Volume,
    pub d_keep: Volume,
    pub l_all: Volume,
    pub l_keep: Volume,
    pub f_all: NodeSet,
    pub f_keep: Option<NodeSet>,
    pub f_diff: Option<NodeSet>,
    pub has_excl: bool,
}

impl Summary {
    pub fn has_keep(&self) -> bool {
        self.f_keep.is_some()
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Slot {
    pub spec: SourceSpec,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Range of sorted leaf indices below this slot.
    pub lo: usize,
    pub hi: usize,
    pub reach: NodeSet,
    pub state: State,
    pub alive: bool,
    pub origin: Origin,
    pub f: NodeSet,
    pub d: Volume,
    pub l: Volume,
    pub sum: Summary,
}

impl Slot {
    pub fn contains(&self, other: &Slot) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// A frontier node that can become a rule: it covers DDoS traffic and
    /// has somewhere to go.
    pub fn is_keep(&self) -> bool {
        self.d > VOLUME_EPSILON && !self.f.is_empty()
    }
}

/// The aggregation an internal slot would produce right now.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Candidate {
    pub slot: usize,
    pub variant: Variant,
    pub d: Volume,
    pub l: Volume,
    /// Collateral pulled in from frontier nodes that are not rules on their
    /// own.
    pub intro: Volume,
    pub members: usize,
}

/// Which aggregation an internal slot offers when both are admissible.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Policy {
    /// Shed legitimate-only siblings whenever possible.
    DifferenceFirst,
    /// Keep filter sets wide; fall back to difference only when union fails.
    UnionFirst,
}

pub(crate) struct Forest {
    pub policy: Policy,
    pub leaves: Vec<FTreeNode>,
    pub slots: Vec<Slot>,
    pub root: Option<usize>,
}

impl Forest {
    pub fn new(leaves: &[FTreeNode], policy: Policy) -> Self {
        let mut sorted: Vec<FTreeNode> = leaves.to_vec();
        sorted.sort_by_key(|l| l.source());
        let mut forest = Forest {
            policy,
            leaves: sorted,
            slots: Vec::with_capacity(2 * leaves.len()),
            root: None,
        };
        if !forest.leaves.is_empty() {
            let n = forest.leaves.len();
            let root = forest.build(0, n);
            forest.root = Some(root);
        }
        for i in 0..forest.slots.len() {
            if forest.slots[i].state == State::Internal {
                forest.slots[i].sum = forest.summarize(i);
            }
        }
        forest
    }

    fn build(&mut self, lo: usize, hi: usize) -> usize {
        if hi - lo == 1 {
            let leaf = &self.leaves[lo];
            let f: NodeSet = leaf.filters().iter().copied().collect();
            let slot = Slot {
                spec: leaf.source(),
                parent: None,
                children: Vec::new(),
                lo,
                hi,
                reach: leaf.reach().iter().copied().collect(),
                state: State::Frontier,
                alive: true,
                origin: Origin::Leaf(lo),
                d: leaf.ddos(),
                l: leaf.legit(),
                f,
                sum: Summary::default(),
            };
            let id = self.slots.len();
            self.slots.push(slot);
            self.slots[id].sum = self.frontier_summary(id);
            return id;
        }
        let specs: Vec<SourceSpec> = self.leaves[lo..hi].iter().map(|l| l.source()).collect();
        let spec = longest_common_prefix(&specs);
        let mut ranges = Vec::new();
        if spec.prefix_len() == 32 {
            // One address, several ports.
            for i in lo..hi {
                ranges.push((i, i + 1));
            }
        } else {
            let bit = 31 - u32::from(spec.prefix_len());
            let split = lo + specs.partition_point(|s| (s.addr_bits() >> bit) & 1 == 0);
            if split == lo || split == hi {
                // Overlapping leaves; keep them side by side.
                for i in lo..hi {
                    ranges.push((i, i + 1));
                }
            } else {
                ranges.push((lo, split));
                ranges.push((split, hi));
            }
        }
        let children: Vec<usize> = ranges.into_iter().map(|(a, b)| self.build(a, b)).collect();
        let mut reach = NodeSet::new();
        for &c in &children {
            reach = merge_sorted(&reach, &self.slots[c].reach);
        }
        let id = self.slots.len();
        for &c in &children {
            self.slots[c].parent = Some(id);
        }
        self.slots.push(Slot {
            spec,
            parent: None,
            children,
            lo,
            hi,
            reach,
            state: State::Internal,
            alive: true,
            origin: Origin::Split,
            f: NodeSet::new(),
            d: 0.0,
            l: 0.0,
            sum: Summary::default(),
        });
        id
    }

    fn frontier_summary(&self, i: usize) -> Summary {
        let s = &self.slots[i];
        let keep = s.is_keep();
        Summary {
            members: 1,
            d_all: s.d,
            d_keep: if keep { s.d } else { 0.0 },
            l_all: s.l,
            l_keep: if keep { s.l } else { 0.0 },
            f_all: s.f.clone(),
            f_keep: keep.then(|| s.f.clone()),
            f_diff: keep.then(|| s.f.clone()),
            has_excl: !keep,
        }
    }

    fn summarize(&self, i: usize) -> Summary {
        let slot = &self.slots[i];
        let mut out = Summary::default();
        let mut first = true;
        for &c in &slot.children {
            let cs = &self.slots[c].sum;
            out.members += cs.members;
            out.d_all += cs.d_all;
            out.d_keep += cs.d_keep;
            out.l_all += cs.l_all;
            out.l_keep += cs.l_keep;
            out.has_excl |= cs.has_excl;
            out.f_all = if first {
                cs.f_all.clone()
            } else {
                intersect(&out.f_all, &cs.f_all)
            };
            first = false;
            if let Some(fk) = &cs.f_keep {
                out.f_keep = Some(match &out.f_keep {
                    None => fk.clone(),
                    Some(cur) => intersect(cur, fk),
                });
            }
        }
        if let Some(fk) = &out.f_keep {
            let mut fd = fk.clone();
            for &c in &slot.children {
                let child = &self.slots[c];
                let cs = &child.sum;
                match (&cs.f_keep, &cs.f_diff) {
                    (None, _) => subtract(&mut fd, &child.reach),
                    (Some(_), Some(cd)) if cs.has_excl => fd = intersect(&fd, cd),
                    _ => {}
                }
                if fd.is_empty() {
                    break;
                }
            }
            out.f_diff = Some(fd);
        }
        out
    }

    /// The aggregation slot `i` admits, if any.
    pub fn candidate(&self, i: usize) -> Option<Candidate> {
        let slot = &self.slots[i];
        if slot.state != State::Internal || !slot.alive || slot.spec.prefix_len() == 0 {
            return None;
        }
        let s = &slot.sum;
        if s.members < 2 {
            return None;
        }
        let diff_ok =
            s.has_keep() && s.has_excl && s.f_diff.as_ref().is_some_and(|f| !f.is_empty());
        let union_ok = !s.f_all.is_empty();
        let (variant, d, l) = if diff_ok && (self.policy == Policy::DifferenceFirst || !union_ok) {
            (Variant::Difference, s.d_keep, s.l_keep)
        } else if union_ok {
            (Variant::Union, s.d_all, s.l_all)
        } else {
            return None;
        };
        if d <= VOLUME_EPSILON {
            return None;
        }
        Some(Candidate {
            slot: i,
            variant,
            d,
            l,
            intro: (l - s.l_keep).max(0.0),
            members: s.members,
        })
    }

    pub fn candidates(&self) -> impl Iterator<Item = Candidate> + '_ {
        (0..self.slots.len()).filter_map(move |i| self.candidate(i))
    }

    /// Replaces everything below `c.slot` with one frontier node.
    pub fn merge(&mut self, c: &Candidate) {
        let v = c.slot;
        let f = match c.variant {
            Variant::Union => self.slots[v].sum.f_all.clone(),
            Variant::Difference => self.slots[v].sum.f_diff.clone().unwrap_or_default(),
        };
        let mut stack: Vec<usize> = self.slots[v].children.clone();
        while let Some(u) = stack.pop() {
            self.slots[u].alive = false;
            if self.slots[u].state == State::Internal {
                stack.extend(self.slots[u].children.iter().copied());
            }
        }
        {
            let s = &mut self.slots[v];
            s.state = State::Frontier;
            s.origin = Origin::Merged(c.variant);
            s.f = f;
            s.d = c.d;
            s.l = c.l;
        }
        self.slots[v].sum = self.frontier_summary(v);
        let mut up = self.slots[v].parent;
        while let Some(u) = up {
            self.slots[u].sum = self.summarize(u);
            up = self.slots[u].parent;
        }
    }

    /// Frontier slots in leaf order.
    pub fn frontier(&self) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.slots.len())
            .filter(|&i| self.slots[i].alive && self.slots[i].state == State::Frontier)
            .collect();
        out.sort_by_key(|&i| self.slots[i].lo);
        out
    }

    /// The F-tree node a frontier slot stands for.
    pub fn ftree_node(&self, i: usize) -> FTreeNode {
        let s = &self.slots[i];
        match (s.state, s.origin) {
            (State::Frontier, Origin::Leaf(j)) => self.leaves[j].clone(),
            (State::Frontier, Origin::Merged(variant)) => self.aggregate(i, variant),
            _ => self.aggregate(i, Variant::Union),
        }
    }

    fn aggregate(&self, i: usize, variant: Variant) -> FTreeNode {
        let built = match variant {
            Variant::Union => {
                let kids = self.slots[i]
                    .children
                    .iter()
                    .map(|&c| self.child_node(c, Variant::Union))
                    .collect();
                union_aggregate(kids)
            }
            Variant::Difference => {
                let mut keep = Vec::new();
                let mut excl = Vec::new();
                for &c in &self.slots[i].children {
                    if self.slots[c].sum.has_keep() {
                        keep.push(self.child_node(c, Variant::Difference));
                    } else {
                        self.collect_frontier(c, &mut excl);
                    }
                }
                difference_aggregate(keep, excl)
            }
        };
        built.expect("merged slot rebuilds to a valid aggregation")
    }

    fn child_node(&self, c: usize, variant: Variant) -> FTreeNode {
        let s = &self.slots[c];
        if s.state == State::Frontier {
            return self.ftree_node(c);
        }
        match variant {
            Variant::Union => self.aggregate(c, Variant::Union),
            Variant::Difference if s.sum.has_excl => self.aggregate(c, Variant::Difference),
            Variant::Difference => self.aggregate(c, Variant::Union),
        }
    }

    fn collect_frontier(&self, c: usize, out: &mut Vec<FTreeNode>) {
        let s = &self.slots[c];
        if s.state == State::Frontier {
            out.push(self.ftree_node(c));
        } else {
            for &k in &s.children {
                self.collect_frontier(k, out);
            }
        }
    }
}
