// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::flow::{FlowRecord, Label, SourceSpec};
use crate::ftree::FTreeNode;
use crate::{NodeId, Volume};

/// Flows observed during one time window.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub window_start: f64,
    pub window_len: f64,
    pub flows: Vec<FlowRecord>,
}

impl Batch {
    pub fn ddos_volume(&self) -> Volume {
        self.flows
            .iter()
            .filter(|f| f.is_ddos())
            .map(|f| f.volume)
            .sum()
    }

    pub fn legit_volume(&self) -> Volume {
        self.flows
            .iter()
            .filter(|f| !f.is_ddos())
            .map(|f| f.volume)
            .sum()
    }

    /// Narrowest destination spec covering every flow of the batch.
    pub fn common_destination(&self) -> SourceSpec {
        let dests: Vec<SourceSpec> = self.flows.iter().map(|f| f.destination).collect();
        if dests.is_empty() {
            SourceSpec::ANY
        } else {
            crate::ftree::longest_common_prefix(&dests)
        }
    }
}

/// Partitions flows into consecutive windows of `window_len` seconds.
///
/// Only non-empty windows are emitted, in time order; flow order within a
/// window is preserved.
///
/// # Panics
///
/// If `window_len` is not a positive finite number.
pub fn batch_flows(flows: Vec<FlowRecord>, window_len: f64) -> Vec<Batch> {
    assert!(
        window_len > 0.0 && window_len.is_finite(),
        "window length must be positive"
    );
    let mut windows: BTreeMap<i64, Vec<FlowRecord>> = BTreeMap::new();
    for f in flows {
        let idx = (f.timestamp / window_len).floor() as i64;
        windows.entry(idx).or_default().push(f);
    }
    windows
        .into_iter()
        .map(|(idx, flows)| Batch {
            window_start: idx as f64 * window_len,
            window_len,
            flows,
        })
        .collect()
}

#[derive(Default)]
struct LeafAcc {
    filters: Option<BTreeSet<NodeId>>,
    reach: BTreeSet<NodeId>,
    ddos: Volume,
    legit: Volume,
}

/// Builds one F-tree leaf per distinct concrete source of the batch.
///
/// The leaf's filter set is the intersection of the paths of all flows from
/// that source, so any node in it sees all of the source's traffic. Flows with
/// prefix (wildcard) sources are skipped. When an address appears both with
/// and without source ports, all of its flows are folded into the portless
/// address leaf so that leaves never overlap.
pub fn build_leaves(batch: &Batch) -> Vec<FTreeNode> {
    let portless: HashSet<u32> = batch
        .flows
        .iter()
        .filter(|f| f.source.is_concrete() && f.source.port().is_none())
        .map(|f| f.source.addr_bits())
        .collect();

    let mut acc: BTreeMap<SourceSpec, LeafAcc> = BTreeMap::new();
    for f in batch.flows.iter().filter(|f| f.source.is_concrete()) {
        let key = if portless.contains(&f.source.addr_bits()) {
            f.source.without_port()
        } else {
            f.source
        };
        let leaf = acc.entry(key).or_default();
        let path: BTreeSet<NodeId> = f.path.iter().copied().collect();
        leaf.filters = Some(match leaf.filters.take() {
            None => path.clone(),
            Some(cur) => cur.intersection(&path).copied().collect(),
        });
        leaf.reach.extend(path);
        match f.label {
            Label::Ddos => leaf.ddos += f.volume,
            Label::Legit => leaf.legit += f.volume,
        }
    }

    acc.into_iter()
        .map(|(source, a)| {
            FTreeNode::leaf_with_reach(
                source,
                a.filters.unwrap_or_default(),
                a.reach,
                a.ddos,
                a.legit,
            )
        })
        .collect()
}
