// SPDX-License-Identifier: Apache-2.0

//! Rule generation over F-tree leaves.
//!
//! Three greedy solvers share one prefix-trie frontier ([`forest`]). Each
//! repeatedly replaces a group of frontier nodes by their aggregation and
//! finally selects the rules to emit:
//!
//! | solver                   | objective           | constraints |
//! |--------------------------|---------------------|-------------|
//! | [`solve_max_coverage`]   | maximize coverage   | L, M        |
//! | [`solve_min_collateral`] | minimize collateral | D, M        |
//! | [`solve_min_rules`]      | minimize rule count | D, L        |
//!
//! [`oracle_solve`] enumerates every prefix-consistent rule set on small
//! instances and is used to check the greedy solvers.

pub(crate) mod eval;
mod forest;
mod greedy;
mod oracle;
mod rules;

use std::fmt;
use std::str::FromStr;

use crate::ftree::FTreeNode;
use crate::{Volume, VOLUME_EPSILON};

pub use eval::{evaluate, Metrics};
pub use greedy::{solve_max_coverage, solve_min_collateral, solve_min_rules};
pub use oracle::{oracle_solve, OracleError, ORACLE_MAX_LEAVES};
pub use rules::{parse_rule_file, write_rule_file, Rule, RuleFileError, RuleStamp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Objective {
    MaxCoverage,
    MinCollateral,
    MinRules,
}

impl Objective {
    pub const ALL: [Objective; 3] = [
        Objective::MaxCoverage,
        Objective::MinCollateral,
        Objective::MinRules,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Objective::MaxCoverage => "max-coverage",
            Objective::MinCollateral => "min-collateral",
            Objective::MinRules => "min-rules",
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Objective::ALL
            .into_iter()
            .find(|o| o.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                format!(
                    "unknown objective {s:?} (expected max-coverage, min-collateral or min-rules)"
                )
            })
    }
}

/// Minimum coverage `D`, maximum collateral `L` and rule budget `M`.
///
/// Each objective reads only two of the three; the third is ignored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constraints {
    pub min_coverage: Volume,
    pub max_collateral: Volume,
    pub rule_budget: usize,
}

impl Default for Constraints {
    fn default() -> Self {
        Constraints {
            min_coverage: 0.0,
            max_collateral: f64::INFINITY,
            rule_budget: usize::MAX,
        }
    }
}

impl Constraints {
    /// Whether coverage `d`, collateral `l` and `count` rules satisfy the two
    /// constraints of `objective`.
    pub fn satisfied(&self, objective: Objective, d: Volume, l: Volume, count: usize) -> bool {
        let d_ok = d + VOLUME_EPSILON >= self.min_coverage;
        let l_ok = l <= self.max_collateral + VOLUME_EPSILON;
        let m_ok = count <= self.rule_budget;
        match objective {
            Objective::MaxCoverage => l_ok && m_ok,
            Objective::MinCollateral => d_ok && m_ok,
            Objective::MinRules => d_ok && l_ok,
        }
    }
}

/// Generated rules plus the F-tree nodes they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleSet {
    pub objective: Objective,
    pub rules: Vec<Rule>,
    /// `nodes[i]` generated `rules[i]`.
    pub nodes: Vec<FTreeNode>,
    /// False when the solver could not meet both constraints; the rules are
    /// then a best effort.
    pub feasible: bool,
    /// DDoS volume of leaves no single node can filter.
    pub unfilterable_ddos: Volume,
}

impl RuleSet {
    pub fn empty(objective: Objective) -> Self {
        RuleSet {
            objective,
            rules: Vec::new(),
            nodes: Vec::new(),
            feasible: true,
            unfilterable_ddos: 0.0,
        }
    }

    pub fn coverage(&self) -> Volume {
        self.rules.iter().map(|r| r.coverage).sum()
    }

    pub fn collateral(&self) -> Volume {
        self.rules.iter().map(|r| r.collateral).sum()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn metrics(&self) -> Metrics {
        Metrics {
            coverage: self.coverage(),
            collateral: self.collateral(),
            count: self.len(),
            unfilterable: self.unfilterable_ddos,
        }
    }

    /// Rewrites ids, destination and lifetime of every rule.
    pub fn stamp(&mut self, stamp: &RuleStamp) {
        for (i, r) in self.rules.iter_mut().enumerate() {
            r.id = stamp.first_id + i as u64;
            r.destination = stamp.destination;
            r.start = stamp.start;
            r.end = stamp.end;
        }
    }

    pub(crate) fn from_nodes(
        objective: Objective,
        mut nodes: Vec<FTreeNode>,
        feasible: bool,
        unfilterable: Volume,
    ) -> Self {
        nodes.sort_by_key(|n| n.source());
        let rules = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| Rule::from_node(i as u64, n))
            .collect();
        RuleSet {
            objective,
            rules,
            nodes,
            feasible,
            unfilterable_ddos: unfilterable,
        }
    }
}

/// Runs the solver for `objective` with its two constraints.
pub fn solve(leaves: &[FTreeNode], objective: Objective, c: &Constraints) -> RuleSet {
    match objective {
        Objective::MaxCoverage => solve_max_coverage(leaves, c.max_collateral, c.rule_budget),
        Objective::MinCollateral => solve_min_collateral(leaves, c.min_coverage, c.rule_budget),
        Objective::MinRules => solve_min_rules(leaves, c.min_coverage, c.max_collateral),
    }
}

pub(crate) fn unfilterable(leaves: &[FTreeNode]) -> Volume {
    leaves
        .iter()
        .filter(|l| l.filters().is_empty())
        .map(|l| l.ddos())
        .sum()
}
