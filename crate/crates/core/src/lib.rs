// SPDX-License-Identifier: Apache-2.0

//! Adaptive distributed filtering of DDoS traffic.
//!
//! The crate turns labeled flows with known forwarding paths into filtering
//! rules. Flows are grouped per source into the leaves of an F-tree
//! ([`ftree::FTreeNode`]); leaves are aggregated into prefix rules by one of
//! three greedy solvers in [`rulegen`] (maximize DDoS coverage, minimize
//! collateral damage, minimize the rule count), each constrained by the other
//! two metrics. The resulting rules are assigned to filtering nodes along the
//! attack paths by [`placement`], pushed to those nodes with the wire protocol
//! in [`protocol`], and the whole loop can be replayed against synthetic
//! AS-level topologies from [`topology`] with the drivers in [`experiment`].

pub mod experiment;
pub mod flow;
pub mod ftree;
pub mod placement;
pub mod protocol;
pub mod rulegen;
pub mod topology;

use std::fmt;
use std::str::FromStr;

pub use flow::{
    batch_flows, build_leaves, parse_trace, Batch, FlowRecord, Label, Protocol, SourceKind,
    SourceSpec, TcpFlags, Trace, VolumeUnit,
};
pub use ftree::{
    difference_aggregate, longest_common_prefix, spec_matches, union_aggregate, FTreeNode,
};
pub use placement::{place_rules, rule_distribution, NodeCapacity, PlacementResult};
pub use rulegen::{
    evaluate, oracle_solve, solve, solve_max_coverage, solve_min_collateral, solve_min_rules,
    Constraints, Metrics, Objective, Rule, RuleSet,
};

/// Traffic volume in the unit declared by the trace header.
pub type Volume = f64;

/// Absolute tolerance used whenever two volumes are compared.
pub const VOLUME_EPSILON: f64 = 1e-9;

/// A filtering node. Filtering nodes are ASes, so this doubles as the AS number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for NodeId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim().parse().map(NodeId)
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}
