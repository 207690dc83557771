// SPDX-License-Identifier: Apache-2.0

//! Batch-by-batch drivers: rule generation reports and filtering replay.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::flow::{batch_flows, build_leaves, Batch, Trace};
use crate::placement::{place_rules, NodeCapacity, PlacementResult};
use crate::rulegen::eval::RuleIndex;
use crate::rulegen::{solve, Constraints, Objective, Rule, RuleStamp};
use crate::{NodeId, Volume, VOLUME_EPSILON};

/// A volume bound, either absolute or a share of a per-batch total.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget {
    Absolute(Volume),
    /// Fraction in `[0, 1]`, written as a percentage.
    Fraction(f64),
    Unbounded,
}

impl Budget {
    pub fn resolve(&self, total: Volume) -> Volume {
        match *self {
            Budget::Absolute(v) => v,
            Budget::Fraction(f) => f * total,
            Budget::Unbounded => f64::INFINITY,
        }
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Absolute(v) => write!(f, "{v}"),
            Budget::Fraction(x) => write!(f, "{}%", x * 100.0),
            Budget::Unbounded => f.write_str("inf"),
        }
    }
}

/// Parses `inf`, `40%` or an absolute volume.
impl FromStr for Budget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") {
            return Ok(Budget::Unbounded);
        }
        let bad = || format!("{s:?} is not a volume, a percentage or `inf`");
        if let Some(p) = s.strip_suffix('%') {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            if !(0.0..=100.0).contains(&p) {
                return Err(format!("{s:?} is outside 0%..100%"));
            }
            return Ok(Budget::Fraction(p / 100.0));
        }
        let v: f64 = s.parse().map_err(|_| bad())?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(bad());
        }
        Ok(Budget::Absolute(v))
    }
}

/// Rule count bound; `None` is unbounded.
pub fn parse_rule_budget(s: &str) -> Result<Option<usize>, String> {
    if s.trim().eq_ignore_ascii_case("inf") {
        return Ok(None);
    }
    s.trim()
        .parse()
        .map(Some)
        .map_err(|_| format!("{s:?} is not a rule count or `inf`"))
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{objective} needs {missing}")]
    Missing {
        objective: Objective,
        missing: &'static str,
    },
    #[error("{objective} does not take {extra}; it only takes {expected}")]
    Irrelevant {
        objective: Objective,
        extra: &'static str,
        expected: &'static str,
    },
    #[error("batch window must be a positive number of seconds")]
    Window,
}

/// The two constraints of one objective, resolved per batch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Problem {
    pub objective: Objective,
    /// Share of filterable DDoS volume or absolute volume (`D`).
    pub min_coverage: Budget,
    /// Share of legitimate volume or absolute volume (`L`).
    pub max_collateral: Budget,
    /// `M`; `None` is unbounded.
    pub rule_budget: Option<usize>,
}

impl Problem {
    /// Builds a problem from exactly the two constraints its objective uses.
    pub fn new(
        objective: Objective,
        min_coverage: Option<Budget>,
        max_collateral: Option<Budget>,
        rule_budget: Option<Option<usize>>,
    ) -> Result<Self, ConfigError> {
        let (d, l, m) = (
            min_coverage.is_some(),
            max_collateral.is_some(),
            rule_budget.is_some(),
        );
        let (want, expected) = match objective {
            Objective::MaxCoverage => ((false, true, true), "--max-collateral and --rule-budget"),
            Objective::MinCollateral => ((true, false, true), "--min-coverage and --rule-budget"),
            Objective::MinRules => ((true, true, false), "--min-coverage and --max-collateral"),
        };
        for (given, wanted, name) in [
            (d, want.0, "--min-coverage"),
            (l, want.1, "--max-collateral"),
            (m, want.2, "--rule-budget"),
        ] {
            if wanted && !given {
                return Err(ConfigError::Missing {
                    objective,
                    missing: name,
                });
            }
            if given && !wanted {
                return Err(ConfigError::Irrelevant {
                    objective,
                    extra: name,
                    expected,
                });
            }
        }
        Ok(Problem {
            objective,
            min_coverage: min_coverage.unwrap_or(Budget::Absolute(0.0)),
            max_collateral: max_collateral.unwrap_or(Budget::Unbounded),
            rule_budget: rule_budget.flatten(),
        })
    }

    /// Absolute constraints for one batch's leaves.
    pub fn constraints(&self, filterable_ddos: Volume, legit: Volume) -> Constraints {
        Constraints {
            min_coverage: self.min_coverage.resolve(filterable_ddos),
            max_collateral: self.max_collateral.resolve(legit),
            rule_budget: self.rule_budget.unwrap_or(usize::MAX),
        }
    }
}

/// One line of the generation report.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerateRow {
    pub batch: usize,
    pub window_start: f64,
    pub leaves: usize,
    pub ddos: Volume,
    pub filterable_ddos: Volume,
    pub legit: Volume,
    pub coverage: Volume,
    pub collateral: Volume,
    pub rules: usize,
    pub feasible: bool,
}

impl GenerateRow {
    /// Coverage as a share of filterable DDoS volume (1 when there is none).
    pub fn coverage_fraction(&self) -> f64 {
        if self.filterable_ddos <= VOLUME_EPSILON {
            1.0
        } else {
            self.coverage / self.filterable_ddos
        }
    }
}

pub struct GenerateOutput {
    pub rows: Vec<GenerateRow>,
    /// Rules from every batch with unique ids.
    pub rules: Vec<Rule>,
    /// Solver wall time per batch.
    pub timings: Vec<Duration>,
}

/// Start and end seconds of rules generated from `batch`.
pub fn rule_lifetime(batch: &Batch, lifetime: f64) -> (u64, u64) {
    let start = (batch.window_start + batch.window_len).ceil().max(0.0) as u64;
    (start, start + lifetime.ceil().max(1.0) as u64)
}

/// Splits the trace into windows and solves `problem` on each.
///
/// Rules are stamped with the batch's common destination and live from the
/// end of their window for `lifetime` seconds.
pub fn run_generate(
    trace: &Trace,
    problem: &Problem,
    window: f64,
    lifetime: f64,
) -> Result<GenerateOutput, ConfigError> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(ConfigError::Window);
    }
    let mut out = GenerateOutput {
        rows: Vec::new(),
        rules: Vec::new(),
        timings: Vec::new(),
    };
    for (i, batch) in batch_flows(trace.flows.clone(), window).iter().enumerate() {
        let (row, rules, took) =
            generate_batch(i, batch, problem, lifetime, out.rules.len() as u64);
        out.rows.push(row);
        out.rules.extend(rules);
        out.timings.push(took);
    }
    Ok(out)
}

fn generate_batch(
    i: usize,
    batch: &Batch,
    problem: &Problem,
    lifetime: f64,
    first_id: u64,
) -> (GenerateRow, Vec<Rule>, Duration) {
    let leaves = build_leaves(batch);
    let ddos: Volume = leaves.iter().map(|l| l.ddos()).sum();
    let filterable: Volume = leaves
        .iter()
        .filter(|l| !l.filters().is_empty())
        .map(|l| l.ddos())
        .sum();
    let legit: Volume = leaves.iter().map(|l| l.legit()).sum();
    let c = problem.constraints(filterable, legit);
    let t0 = Instant::now();
    let mut rs = solve(&leaves, problem.objective, &c);
    let took = t0.elapsed();
    let (start, end) = rule_lifetime(batch, lifetime);
    rs.stamp(&RuleStamp {
        first_id,
        destination: batch.common_destination(),
        start,
        end,
    });
    let row = GenerateRow {
        batch: i,
        window_start: batch.window_start,
        leaves: leaves.len(),
        ddos,
        filterable_ddos: filterable,
        legit,
        coverage: rs.coverage(),
        collateral: rs.collateral(),
        rules: rs.len(),
        feasible: rs.feasible,
    };
    (row, rs.rules, took)
}

pub fn write_generate_report<W: Write>(rows: &[GenerateRow], mut w: W) -> io::Result<()> {
    writeln!(
        w,
        "batch,window_start_s,leaves,ddos_volume,filterable_ddos_volume,legit_volume,coverage_volume,collateral_volume,coverage_pct,rules,feasible"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{:.4},{},{}",
            r.batch,
            r.window_start,
            r.leaves,
            r.ddos,
            r.filterable_ddos,
            r.legit,
            r.coverage,
            r.collateral,
            r.coverage_fraction() * 100.0,
            r.rules,
            r.feasible
        )?;
    }
    Ok(())
}

pub fn write_timings<W: Write>(timings: &[Duration], mut w: W) -> io::Result<()> {
    writeln!(w, "batch,solve_ms")?;
    for (i, t) in timings.iter().enumerate() {
        writeln!(w, "{i},{:.3}", t.as_secs_f64() * 1e3)?;
    }
    Ok(())
}

/// Replay settings.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulateConfig {
    /// `None` replays without filtering.
    pub problem: Option<Problem>,
    pub window: f64,
    /// Rule lifetime in seconds.
    pub lifetime: f64,
    /// Rules one node can hold at a time.
    pub rule_limit: usize,
    /// Nodes that may hold rules; `None` allows every node seen on a path.
    pub participants: Option<BTreeSet<NodeId>>,
}

/// Counts for one second of replay.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SecondRow {
    pub second: u64,
    pub ddos_arrivals: usize,
    pub ddos_filtered: usize,
    pub ddos_reached: usize,
    pub legit_arrivals: usize,
    pub legit_filtered: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchPlacement {
    pub batch: usize,
    pub rules: usize,
    pub success_rate: f64,
}

pub struct SimulateOutput {
    pub seconds: Vec<SecondRow>,
    pub placements: Vec<BatchPlacement>,
    /// Rules ever placed per node.
    pub per_node_counts: BTreeMap<NodeId, usize>,
}

impl SimulateOutput {
    /// Per-node totals as a placement result, for [`crate::placement::rule_distribution`].
    pub fn as_placement(&self) -> PlacementResult {
        PlacementResult {
            per_node_counts: self.per_node_counts.clone(),
            ..Default::default()
        }
    }
}

/// Replays the trace second by second. Rules generated from each window are
/// placed under the per-node limit and filter the following seconds while
/// they live; a flow is filtered when a live rule placed on its path matches.
pub fn run_simulate(trace: &Trace, cfg: &SimulateConfig) -> Result<SimulateOutput, ConfigError> {
    if !(cfg.window > 0.0 && cfg.window.is_finite()) {
        return Err(ConfigError::Window);
    }
    let mut installed: Vec<Rule> = Vec::new();
    let mut out = SimulateOutput {
        seconds: Vec::new(),
        placements: Vec::new(),
        per_node_counts: BTreeMap::new(),
    };
    let mut next_id = 0u64;
    for (i, batch) in batch_flows(trace.flows.clone(), cfg.window)
        .iter()
        .enumerate()
    {
        let mut by_second: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (k, f) in batch.flows.iter().enumerate() {
            by_second
                .entry(f.timestamp.max(0.0).floor() as u64)
                .or_default()
                .push(k);
        }
        for (&sec, idx) in &by_second {
            let live: Vec<Rule> = installed
                .iter()
                .filter(|r| r.is_active(sec))
                .cloned()
                .collect();
            let index = RuleIndex::new(&live);
            let mut row = SecondRow {
                second: sec,
                ..SecondRow::default()
            };
            for &k in idx {
                let f = &batch.flows[k];
                let dropped = index.matching(f).is_some();
                if f.is_ddos() {
                    row.ddos_arrivals += 1;
                    row.ddos_filtered += usize::from(dropped);
                } else {
                    row.legit_arrivals += 1;
                    row.legit_filtered += usize::from(dropped);
                }
            }
            row.ddos_reached = row.ddos_arrivals - row.ddos_filtered;
            out.seconds.push(row);
        }

        let Some(problem) = &cfg.problem else {
            continue;
        };
        let (_, mut rules, _) = generate_batch(i, batch, problem, cfg.lifetime, next_id);
        next_id += rules.len() as u64;
        let (start, _) = rule_lifetime(batch, cfg.lifetime);
        installed.retain(|r| r.end > start);
        let mut used: BTreeMap<NodeId, usize> = BTreeMap::new();
        for r in &installed {
            if let Some(n) = r.deployed_at {
                *used.entry(n).or_default() += 1;
            }
        }
        let nodes: BTreeSet<NodeId> = match &cfg.participants {
            Some(p) => p.clone(),
            None => batch
                .flows
                .iter()
                .flat_map(|f| f.path.iter().copied())
                .collect(),
        };
        let caps: Vec<NodeCapacity> = nodes
            .iter()
            .map(|&n| NodeCapacity {
                node: n,
                limit: cfg.rule_limit,
                used: used.get(&n).copied().unwrap_or(0).min(cfg.rule_limit),
                available: true,
            })
            .collect();
        let placement = place_rules(&rules, &caps);
        placement.apply(&mut rules);
        for (&n, &c) in &placement.per_node_counts {
            *out.per_node_counts.entry(n).or_default() += c;
        }
        out.placements.push(BatchPlacement {
            batch: i,
            rules: rules.len(),
            success_rate: placement.success_rate(),
        });
        installed.extend(rules.into_iter().filter(|r| r.deployed_at.is_some()));
    }
    Ok(out)
}

pub fn write_seconds_report<W: Write>(rows: &[SecondRow], mut w: W) -> io::Result<()> {
    writeln!(w, "second,ddos_arrivals_flows,ddos_filtered_flows,ddos_reached_flows,legit_arrivals_flows,legit_filtered_flows")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.second,
            r.ddos_arrivals,
            r.ddos_filtered,
            r.ddos_reached,
            r.legit_arrivals,
            r.legit_filtered
        )?;
    }
    Ok(())
}

pub fn write_placement_report<W: Write>(rows: &[BatchPlacement], mut w: W) -> io::Result<()> {
    writeln!(w, "batch,rules,success_rate")?;
    for r in rows {
        writeln!(w, "{},{},{:.6}", r.batch, r.rules, r.success_rate)?;
    }
    Ok(())
}
