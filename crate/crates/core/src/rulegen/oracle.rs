// SPDX-License-Identifier: Apache-2.0

//! Exhaustive search over prefix-consistent rule sets.
//!
//! Candidate rule sources are the longest common prefixes of every pair of
//! leaves (a leaf paired with itself gives the leaf). These form a laminar
//! family, so a dynamic program over it enumerates every set of
//! non-overlapping rules. A rule at a candidate deployed at node `f` drops
//! exactly the member leaves whose filter set holds `f`, and is only allowed
//! when no other member's traffic passes `f`.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::flow::SourceSpec;
use crate::ftree::{difference_aggregate, longest_common_prefix, FTreeNode};
use crate::rulegen::{unfilterable, Constraints, Objective, RuleSet};
use crate::{NodeId, Volume, VOLUME_EPSILON as EPS};

pub const ORACLE_MAX_LEAVES: usize = 14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{leaves} leaves exceed the exhaustive search limit of {max}")]
    InstanceTooLarge { leaves: usize, max: usize },
}

#[derive(Clone, Debug)]
struct Entry {
    count: usize,
    d: Volume,
    l: Volume,
    picks: Vec<(usize, u16)>,
}

fn dominates(a: &Entry, b: &Entry) -> bool {
    a.count <= b.count && a.d + EPS >= b.d && a.l <= b.l + EPS
}

fn prune(mut v: Vec<Entry>) -> Vec<Entry> {
    v.sort_by(|a, b| {
        a.count
            .cmp(&b.count)
            .then(b.d.total_cmp(&a.d))
            .then(a.l.total_cmp(&b.l))
    });
    let mut out: Vec<Entry> = Vec::new();
    for e in v {
        if !out.iter().any(|k| dominates(k, &e)) {
            out.push(e);
        }
    }
    out
}

fn combine(a: &[Entry], b: &[Entry]) -> Vec<Entry> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            let mut picks = x.picks.clone();
            picks.extend_from_slice(&y.picks);
            out.push(Entry {
                count: x.count + y.count,
                d: x.d + y.d,
                l: x.l + y.l,
                picks,
            });
        }
    }
    prune(out)
}

struct Cand {
    spec: SourceSpec,
    members: u16,
    /// Admissible keep sets with their volumes.
    variants: Vec<(u16, Volume, Volume)>,
    children: Vec<usize>,
}

/// Provably optimal rule set for `objective` on at most
/// [`ORACLE_MAX_LEAVES`] leaves.
///
/// Rules never use the `0.0.0.0/0` source. When the constraints cannot be
/// met, the result is the best effort for the remaining constraint and is
/// flagged infeasible.
pub fn oracle_solve(
    leaves: &[FTreeNode],
    objective: Objective,
    c: &Constraints,
) -> Result<RuleSet, OracleError> {
    if leaves.len() > ORACLE_MAX_LEAVES {
        return Err(OracleError::InstanceTooLarge {
            leaves: leaves.len(),
            max: ORACLE_MAX_LEAVES,
        });
    }
    let mut leaves = leaves.to_vec();
    leaves.sort_by_key(|l| l.source());
    let n = leaves.len();

    let mut specs = BTreeSet::new();
    for i in 0..n {
        for j in i..n {
            let s = longest_common_prefix(&[leaves[i].source(), leaves[j].source()]);
            if s.prefix_len() > 0 || i == j {
                specs.insert(s);
            }
        }
    }
    let mut cands: Vec<Cand> = specs
        .into_iter()
        .map(|spec| {
            let members = (0..n)
                .filter(|&i| spec.covers(&leaves[i].source()))
                .fold(0u16, |m, i| m | 1 << i);
            Cand {
                spec,
                members,
                variants: variants(&leaves, members),
                children: Vec::new(),
            }
        })
        .collect();

    // Parent = the smallest strictly larger candidate.
    let mut roots = Vec::new();
    for i in 0..cands.len() {
        let parent = (0..cands.len())
            .filter(|&j| {
                j != i
                    && cands[j].members & cands[i].members == cands[i].members
                    && cands[j].members != cands[i].members
            })
            .min_by_key(|&j| cands[j].members.count_ones());
        match parent {
            Some(p) => cands[p].children.push(i),
            None => roots.push(i),
        }
    }

    let empty = vec![Entry {
        count: 0,
        d: 0.0,
        l: 0.0,
        picks: Vec::new(),
    }];
    let mut memo: BTreeMap<usize, Vec<Entry>> = BTreeMap::new();
    let mut front = empty.clone();
    for &r in &roots {
        let sub = pareto(&cands, r, &mut memo);
        front = combine(&front, &sub);
    }

    let pick = choose(&front, objective, c);
    let (entry, feasible) = match pick {
        Some(e) => (e, true),
        None => (fallback(&front, objective, c), false),
    };
    let nodes = entry
        .picks
        .iter()
        .map(|&(ci, keep)| {
            let member = |i: &usize| cands[ci].members & (1 << i) != 0;
            let k: Vec<FTreeNode> = (0..n)
                .filter(member)
                .filter(|&i| keep & (1 << i) != 0)
                .map(|i| leaves[i].clone())
                .collect();
            let x: Vec<FTreeNode> = (0..n)
                .filter(member)
                .filter(|&i| keep & (1 << i) == 0)
                .map(|i| leaves[i].clone())
                .collect();
            if k.len() == 1 && x.is_empty() {
                k.into_iter().next().unwrap()
            } else {
                let node = difference_aggregate(k, x).expect("variant has a filtering node");
                debug_assert_eq!(node.source(), cands[ci].spec);
                node
            }
        })
        .collect();
    Ok(RuleSet::from_nodes(
        objective,
        nodes,
        feasible,
        unfilterable(&leaves),
    ))
}

fn variants(leaves: &[FTreeNode], members: u16) -> Vec<(u16, Volume, Volume)> {
    let idx: Vec<usize> = (0..leaves.len())
        .filter(|&i| members & (1 << i) != 0)
        .collect();
    let nodes: BTreeSet<NodeId> = idx
        .iter()
        .flat_map(|&i| leaves[i].reach().iter().copied())
        .collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for f in nodes {
        let mut keep = 0u16;
        let mut clean = true;
        for &i in &idx {
            if leaves[i].filters().contains(&f) {
                keep |= 1 << i;
            } else if leaves[i].reach().contains(&f) {
                clean = false;
                break;
            }
        }
        if !clean || keep == 0 || !seen.insert(keep) {
            continue;
        }
        let (d, l) = idx
            .iter()
            .filter(|&&i| keep & (1 << i) != 0)
            .fold((0.0, 0.0), |(d, l), &i| {
                (d + leaves[i].ddos(), l + leaves[i].legit())
            });
        if d > EPS {
            out.push((keep, d, l));
        }
    }
    out
}

fn pareto(cands: &[Cand], i: usize, memo: &mut BTreeMap<usize, Vec<Entry>>) -> Vec<Entry> {
    if let Some(v) = memo.get(&i) {
        return v.clone();
    }
    let mut front = vec![Entry {
        count: 0,
        d: 0.0,
        l: 0.0,
        picks: Vec::new(),
    }];
    for &k in &cands[i].children {
        let sub = pareto(cands, k, memo);
        front = combine(&front, &sub);
    }
    for &(keep, d, l) in &cands[i].variants {
        front.push(Entry {
            count: 1,
            d,
            l,
            picks: vec![(i, keep)],
        });
    }
    let front = prune(front);
    memo.insert(i, front.clone());
    front
}

fn choose(front: &[Entry], objective: Objective, c: &Constraints) -> Option<Entry> {
    let ok = |e: &&Entry| c.satisfied(objective, e.d, e.l, e.count);
    let it = front.iter().filter(ok);
    let best = match objective {
        Objective::MaxCoverage => it.max_by(|a, b| {
            a.d.total_cmp(&b.d)
                .then(b.l.total_cmp(&a.l))
                .then(b.count.cmp(&a.count))
        }),
        Objective::MinCollateral => {
            if c.min_coverage <= EPS {
                return Some(Entry {
                    count: 0,
                    d: 0.0,
                    l: 0.0,
                    picks: Vec::new(),
                });
            }
            it.min_by(|a, b| {
                a.l.total_cmp(&b.l)
                    .then(a.count.cmp(&b.count))
                    .then(b.d.total_cmp(&a.d))
            })
        }
        Objective::MinRules => {
            if c.min_coverage <= EPS {
                return Some(Entry {
                    count: 0,
                    d: 0.0,
                    l: 0.0,
                    picks: Vec::new(),
                });
            }
            it.min_by(|a, b| {
                a.count
                    .cmp(&b.count)
                    .then(a.l.total_cmp(&b.l))
                    .then(b.d.total_cmp(&a.d))
            })
        }
    };
    best.cloned()
}

/// Most coverage under the constraint that is left once the coverage target
/// is dropped.
fn fallback(front: &[Entry], objective: Objective, c: &Constraints) -> Entry {
    let probe = match objective {
        Objective::MinCollateral => Constraints {
            max_collateral: f64::INFINITY,
            ..*c
        },
        _ => Constraints {
            rule_budget: usize::MAX,
            ..*c
        },
    };
    choose(front, Objective::MaxCoverage, &probe).expect("the empty rule set is always feasible")
}
