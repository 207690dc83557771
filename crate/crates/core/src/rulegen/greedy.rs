// SPDX-License-Identifier: Apache-2.0

use std::cmp::Ordering;

use crate::ftree::FTreeNode;
use crate::rulegen::forest::{Candidate, Forest, Policy, State};
use crate::rulegen::{unfilterable, Objective, RuleSet};
use crate::{Volume, VOLUME_EPSILON as EPS};

/// Frontier ranking used for selection: coverage desc, collateral asc,
/// source order.
fn by_coverage(forest: &Forest, a: usize, b: usize) -> Ordering {
    let (x, y) = (&forest.slots[a], &forest.slots[b]);
    y.d.total_cmp(&x.d)
        .then(x.l.total_cmp(&y.l))
        .then(x.spec.cmp(&y.spec))
}

/// Rule-eligible frontier nodes, best first.
fn ranked(forest: &Forest, l_max: Volume) -> Vec<usize> {
    let mut e: Vec<usize> = forest
        .frontier()
        .into_iter()
        .filter(|&i| forest.slots[i].is_keep() && forest.slots[i].l <= l_max + EPS)
        .collect();
    e.sort_by(|&a, &b| by_coverage(forest, a, b));
    e
}

/// Applies a merge and keeps `ranked` in order.
fn merge_ranked(forest: &mut Forest, c: &Candidate, ranked: &mut Vec<usize>) {
    forest.merge(c);
    let v = &forest.slots[c.slot];
    ranked.retain(|&i| !(v.lo <= forest.slots[i].lo && forest.slots[i].hi <= v.hi));
    let pos = ranked.partition_point(|&i| by_coverage(forest, i, c.slot) == Ordering::Less);
    ranked.insert(pos, c.slot);
}

fn finish(
    forest: &Forest,
    objective: Objective,
    picked: &[usize],
    feasible: bool,
    leaves: &[FTreeNode],
) -> RuleSet {
    let nodes = picked.iter().map(|&i| forest.ftree_node(i)).collect();
    RuleSet::from_nodes(objective, nodes, feasible, unfilterable(leaves))
}

/// Runs `solve` under both aggregation policies and keeps the better result.
fn best_of(solve: impl Fn(Policy) -> RuleSet) -> RuleSet {
    let a = solve(Policy::DifferenceFirst);
    let b = solve(Policy::UnionFirst);
    if improves(&b, &a) {
        b
    } else {
        a
    }
}

fn improves(b: &RuleSet, a: &RuleSet) -> bool {
    if b.feasible != a.feasible {
        return b.feasible;
    }
    let (bd, bl, bn) = (b.coverage(), b.collateral(), b.len());
    let (ad, al, an) = (a.coverage(), a.collateral(), a.len());
    if !a.feasible {
        return bd > ad + EPS;
    }
    let lt = |x: Volume, y: Volume| x < y - EPS;
    let eq = |x: Volume, y: Volume| (x - y).abs() <= EPS;
    match a.objective {
        Objective::MaxCoverage => lt(ad, bd) || (eq(ad, bd) && lt(bl, al)),
        Objective::MinCollateral => lt(bl, al) || (eq(bl, al) && bn < an),
        Objective::MinRules => bn < an || (bn == an && lt(bl, al)),
    }
}

fn spec_cmp(forest: &Forest, a: &Candidate, b: &Candidate) -> Ordering {
    forest.slots[a.slot].spec.cmp(&forest.slots[b.slot].spec)
}

/// Maximizes DDoS coverage with collateral at most `l_max` and at most
/// `budget` rules.
///
/// Each round performs the aggregation that most increases the coverage of
/// the best `budget` frontier nodes, until none does.
pub fn solve_max_coverage(leaves: &[FTreeNode], l_max: Volume, budget: usize) -> RuleSet {
    best_of(|p| max_coverage(leaves, l_max, budget, p))
}

fn max_coverage(leaves: &[FTreeNode], l_max: Volume, budget: usize, policy: Policy) -> RuleSet {
    let objective = Objective::MaxCoverage;
    let mut forest = Forest::new(leaves, policy);
    if budget == 0 {
        return finish(&forest, objective, &[], true, leaves);
    }
    let n = forest.slots.len();
    let mut e = ranked(&forest, l_max);
    let mut committed = 0.0;
    let mut top_cnt = vec![0usize; n];
    let mut top_sum = vec![0.0f64; n];
    loop {
        top_cnt.iter_mut().for_each(|x| *x = 0);
        top_sum.iter_mut().for_each(|x| *x = 0.0);
        for &i in e.iter().take(budget) {
            top_cnt[i] = 1;
            top_sum[i] = forest.slots[i].d;
        }
        for i in 0..n {
            let s = &forest.slots[i];
            if s.alive && s.state == State::Internal {
                let (c, d) = s
                    .children
                    .iter()
                    .fold((0, 0.0), |(c, d), &k| (c + top_cnt[k], d + top_sum[k]));
                top_cnt[i] = c;
                top_sum[i] = d;
            }
        }
        let kth = (e.len() >= budget).then(|| forest.slots[e[budget - 1]].d);

        let mut best: Option<(Volume, Candidate)> = None;
        for c in forest.candidates() {
            if c.l > l_max + EPS || committed + c.intro > l_max + EPS {
                continue;
            }
            let (k, s) = (top_cnt[c.slot], top_sum[c.slot]);
            let gain = if k >= 1 {
                let v = &forest.slots[c.slot];
                let refill: Volume = e
                    .iter()
                    .skip(budget)
                    .filter(|&&i| !v.contains(&forest.slots[i]))
                    .take(k - 1)
                    .map(|&i| forest.slots[i].d)
                    .sum();
                c.d - s + refill
            } else {
                match kth {
                    Some(x) => (c.d - x).max(0.0),
                    None => c.d,
                }
            };
            let better = match &best {
                None => true,
                Some((g, b)) => gain
                    .total_cmp(g)
                    .then(b.l.total_cmp(&c.l))
                    .then(spec_cmp(&forest, b, &c))
                    .is_gt(),
            };
            if better {
                best = Some((gain, c));
            }
        }
        match best {
            Some((gain, c)) if gain > EPS => {
                committed += c.intro;
                merge_ranked(&mut forest, &c, &mut e);
            }
            _ => break,
        }
    }

    let mut picked = Vec::new();
    let mut lsum = 0.0;
    for &i in &e {
        if picked.len() == budget {
            break;
        }
        let s = &forest.slots[i];
        if lsum + s.l <= l_max + EPS {
            lsum += s.l;
            picked.push(i);
        }
    }
    finish(&forest, objective, &picked, true, leaves)
}

/// Minimizes collateral while covering at least `d_min` with at most
/// `budget` rules.
///
/// Aggregations are taken cheapest first until the best `budget` frontier
/// nodes reach `d_min`, preferring to stop while a collateral-free choice
/// exists.
pub fn solve_min_collateral(leaves: &[FTreeNode], d_min: Volume, budget: usize) -> RuleSet {
    best_of(|p| min_collateral(leaves, d_min, budget, p))
}

fn min_collateral(leaves: &[FTreeNode], d_min: Volume, budget: usize, policy: Policy) -> RuleSet {
    let objective = Objective::MinCollateral;
    let mut forest = Forest::new(leaves, policy);
    if d_min <= EPS {
        return finish(&forest, objective, &[], true, leaves);
    }
    let mut e = ranked(&forest, f64::INFINITY);
    loop {
        let zero_top: Volume = e
            .iter()
            .filter(|&&i| forest.slots[i].l <= EPS)
            .take(budget)
            .map(|&i| forest.slots[i].d)
            .sum();
        if zero_top + EPS >= d_min {
            break;
        }
        let best = forest.candidates().min_by(|a, b| {
            a.l.total_cmp(&b.l)
                .then(b.d.total_cmp(&a.d))
                .then(spec_cmp(&forest, a, b))
        });
        let Some(best) = best else { break };
        if best.l > EPS {
            let top: Volume = e.iter().take(budget).map(|&i| forest.slots[i].d).sum();
            if top + EPS >= d_min {
                break;
            }
        }
        merge_ranked(&mut forest, &best, &mut e);
    }

    let (picked, feasible) = select_min_collateral(&forest, &e, d_min, budget);
    finish(&forest, objective, &picked, feasible, leaves)
}

fn select_min_collateral(
    forest: &Forest,
    e: &[usize],
    d_min: Volume,
    budget: usize,
) -> (Vec<usize>, bool) {
    let d = |i: usize| forest.slots[i].d;
    let l = |i: usize| forest.slots[i].l;
    let total = |v: &[usize]| -> (Volume, Volume) {
        v.iter().fold((0.0, 0.0), |(a, b), &i| (a + d(i), b + l(i)))
    };

    let take_until = |order: &[usize]| -> Vec<usize> {
        let mut out = Vec::new();
        let mut sum = 0.0;
        for &i in order {
            if sum + EPS >= d_min {
                break;
            }
            sum += d(i);
            out.push(i);
        }
        out
    };
    let prune = |mut v: Vec<usize>| -> Vec<usize> {
        let mut order = v.clone();
        order.sort_by(|&a, &b| {
            l(b).total_cmp(&l(a))
                .then(d(a).total_cmp(&d(b)))
                .then(by_coverage(forest, b, a))
        });
        let mut sum = total(&v).0;
        for i in order {
            if l(i) > EPS && sum - d(i) + EPS >= d_min {
                sum -= d(i);
                v.retain(|&x| x != i);
            }
        }
        v
    };

    let zero: Vec<usize> = e.iter().copied().filter(|&i| l(i) <= EPS).collect();
    let mut ratio: Vec<usize> = e.to_vec();
    ratio.sort_by(|&a, &b| {
        (l(a) / d(a))
            .total_cmp(&(l(b) / d(b)))
            .then(by_coverage(forest, a, b))
    });
    let top: Vec<usize> = e.iter().copied().take(budget).collect();

    let mut best: Option<Vec<usize>> = None;
    for choice in [
        take_until(&zero),
        prune(take_until(&ratio)),
        prune(top.clone()),
    ] {
        let (sd, sl) = total(&choice);
        if choice.len() > budget || sd + EPS < d_min {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => {
                let bl = total(b).1;
                sl < bl - EPS || (sl <= bl + EPS && choice.len() < b.len())
            }
        };
        if better {
            best = Some(choice);
        }
    }
    match best {
        Some(v) => (v, true),
        None => (top, false),
    }
}

/// Minimizes the number of rules while covering at least `d_min` with
/// collateral at most `l_max`.
///
/// The largest admissible group is merged first; the final rules are the
/// heaviest frontier nodes that fit the collateral budget.
pub fn solve_min_rules(leaves: &[FTreeNode], d_min: Volume, l_max: Volume) -> RuleSet {
    best_of(|p| min_rules(leaves, d_min, l_max, p))
}

fn min_rules(leaves: &[FTreeNode], d_min: Volume, l_max: Volume, policy: Policy) -> RuleSet {
    let objective = Objective::MinRules;
    let mut forest = Forest::new(leaves, policy);
    if d_min <= EPS {
        return finish(&forest, objective, &[], true, leaves);
    }
    let mut e = ranked(&forest, l_max);
    let mut committed = 0.0;
    loop {
        let best = forest
            .candidates()
            .filter(|c| c.l <= l_max + EPS && committed + c.intro <= l_max + EPS)
            .min_by(|a, b| {
                b.members
                    .cmp(&a.members)
                    .then(a.l.total_cmp(&b.l))
                    .then(spec_cmp(&forest, a, b))
            });
        let Some(best) = best else { break };
        committed += best.intro;
        merge_ranked(&mut forest, &best, &mut e);
    }

    let mut picked = Vec::new();
    let (mut dsum, mut lsum) = (0.0, 0.0);
    for &i in &e {
        if dsum + EPS >= d_min {
            break;
        }
        let s = &forest.slots[i];
        if lsum + s.l <= l_max + EPS {
            dsum += s.d;
            lsum += s.l;
            picked.push(i);
        }
    }
    let feasible = dsum + EPS >= d_min;
    finish(&forest, objective, &picked, feasible, leaves)
}
