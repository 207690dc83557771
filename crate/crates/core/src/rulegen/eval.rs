// SPDX-License-Identifier: Apache-2.0

use crate::flow::{build_leaves, Batch, FlowRecord};
use crate::rulegen::Rule;
use crate::Volume;

/// What a rule set does to a batch of traffic.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Metrics {
    pub coverage: Volume,
    pub collateral: Volume,
    pub count: usize,
    /// DDoS volume from sources whose paths share no node.
    pub unfilterable: Volume,
}

/// Rules ordered by first covered address, for stabbing queries.
pub(crate) struct RuleIndex<'a> {
    rules: Vec<&'a Rule>,
    max_last: Vec<u32>,
}

impl<'a> RuleIndex<'a> {
    pub fn new(rules: &'a [Rule]) -> Self {
        let mut sorted: Vec<&Rule> = rules.iter().collect();
        sorted.sort_by_key(|r| (r.source.first(), r.id));
        let mut max_last = Vec::with_capacity(sorted.len());
        let mut m = 0u32;
        for r in &sorted {
            m = m.max(r.source.last());
            max_last.push(m);
        }
        RuleIndex {
            rules: sorted,
            max_last,
        }
    }

    /// First rule that drops `flow`, if any.
    pub fn matching(&self, flow: &FlowRecord) -> Option<&'a Rule> {
        let addr = flow.source.first();
        let mut i = self.rules.partition_point(|r| r.source.first() <= addr);
        while i > 0 {
            i -= 1;
            if self.max_last[i] < addr {
                break;
            }
            let r = self.rules[i];
            if rule_drops(r, flow) {
                return Some(r);
            }
        }
        None
    }
}

pub(crate) fn rule_drops(r: &Rule, flow: &FlowRecord) -> bool {
    if !(r.source.covers(&flow.source)
        && r.protocol.matches(flow.protocol)
        && r.tcp_flags.matches(flow.tcp_flags)
        && r.destination.covers(&flow.destination))
    {
        return false;
    }
    match r.deployed_at {
        Some(n) => flow.traverses(n),
        None => flow.path.iter().any(|n| r.candidates.contains(n)),
    }
}

/// Measures coverage and collateral of `rules` against `batch`.
///
/// A flow is dropped when some rule matches its source, protocol, flags and
/// destination and the rule sits on the flow's path: at its placed node if it
/// has one, otherwise at any candidate. Each flow counts once.
pub fn evaluate(rules: &[Rule], batch: &Batch) -> Metrics {
    let index = RuleIndex::new(rules);
    let mut m = Metrics {
        count: rules.len(),
        ..Metrics::default()
    };
    for f in &batch.flows {
        if index.matching(f).is_some() {
            if f.is_ddos() {
                m.coverage += f.volume;
            } else {
                m.collateral += f.volume;
            }
        }
    }
    m.unfilterable = build_leaves(batch)
        .iter()
        .filter(|l| l.filters().is_empty())
        .map(|l| l.ddos())
        .sum();
    m
}
