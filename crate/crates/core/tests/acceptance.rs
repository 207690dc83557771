// SPDX-License-Identifier: Apache-2.0

//! Acceptance checks. Prints one PASS/FAIL line per check and exits non-zero
//! if any check fails.

use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use adf_core::experiment::{run_simulate, Budget, Problem, SimulateConfig};
use adf_core::flow::{batch_flows, build_leaves};
use adf_core::placement::{place_rules, rule_distribution, uniform_capacities};
use adf_core::protocol::{
    decode, encode, node_handle, shared_table, subscriber_submit, AckCode, Endpoint, Message,
    NodeServer, RawSpec, RuleAck, RuleSubmission, RuleTable, TcpTransport, SUBMISSION_LEN, VERSION,
};
use adf_core::topology::{
    apply_profile, generate_attack, synthesize, AttackConfig, FilterProfile, SynthConfig, Topology,
    VolumeModel,
};
use adf_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 1e-6;

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, id: &str, ok: bool, detail: String) {
        println!("{} [{id}] {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failures += 1;
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= EPS * (1.0 + a.abs().max(b.abs()))
}

fn set(v: &[u32]) -> BTreeSet<NodeId> {
    v.iter().copied().map(NodeId).collect()
}

fn leaf(src: &str, f: &[u32], d: f64, l: f64) -> FTreeNode {
    FTreeNode::leaf(src.parse().unwrap(), set(f), d, l)
}

fn all_nodes(t: &Topology) -> BTreeSet<NodeId> {
    t.nodes().iter().copied().collect()
}

/// 1000 bots and 500 legitimate sources homed uniformly over every AS.
fn spread_leaves(
    topo: &Topology,
    all: &BTreeSet<NodeId>,
    seed: u64,
    ddos: usize,
    legit: usize,
) -> Vec<FTreeNode> {
    let cfg = AttackConfig {
        ddos_sources: ddos,
        legit_sources: legit,
        volume: VolumeModel::LogNormal {
            mu: 3.0,
            sigma: 0.5,
        },
        seed,
        ..Default::default()
    };
    let trace = generate_attack(topo, all, &cfg).unwrap();
    build_leaves(&batch_flows(trace.flows, 1.0)[0])
}

/// Benchmark family: bots concentrated in 10 ASes, legitimate sources spread.
fn benchmark_trace(topo: &Topology, all: &BTreeSet<NodeId>, seed: u64) -> adf_core::Batch {
    let cfg = AttackConfig {
        ddos_home_ases: 10,
        volume: VolumeModel::LogNormal {
            mu: 3.0,
            sigma: 0.5,
        },
        seed,
        ..Default::default()
    };
    let trace = generate_attack(topo, all, &cfg).unwrap();
    batch_flows(trace.flows, 1.0).remove(0)
}

fn totals(leaves: &[FTreeNode]) -> (f64, f64, f64) {
    let d = leaves.iter().map(|l| l.ddos()).sum();
    let fd = leaves
        .iter()
        .filter(|l| !l.filters().is_empty())
        .map(|l| l.ddos())
        .sum();
    let l = leaves.iter().map(|l| l.legit()).sum();
    (d, fd, l)
}

fn fig2(r: &mut Report) {
    let t0 = Instant::now();
    let c1 = leaf("10.0.0.1", &[3, 4], 10.0, 0.0);
    let c2 = leaf("10.0.0.128", &[1, 2, 3, 5], 20.0, 0.0);
    let n1 = union_aggregate(vec![c1, c2.clone()]).unwrap();
    let c3 = leaf("10.0.0.1:2222", &[1, 2, 3, 4], 10.0, 0.0);
    let c4 = leaf("10.0.0.1:3333", &[1, 2, 6], 0.0, 5.0);
    let n2 = difference_aggregate(vec![c3.clone()], vec![c4.clone()]).unwrap();
    let combined = union_aggregate(vec![n2.clone(), c2.clone()]).unwrap();
    let took = t0.elapsed();
    let ok = n1.filters() == &set(&[3])
        && n1.source().to_string() == "10.0.0.0/24"
        && n2.filters() == &set(&[3, 4])
        && (n2.ddos(), n2.legit()) == (10.0, 0.0)
        && combined.source().to_string() == "10.0.0.0/24"
        && combined.filters() == &set(&[3])
        && (combined.ddos(), combined.legit()) == (30.0, 0.0)
        && combined.audit().is_ok();
    r.check(
        "1 f-tree example",
        ok && took < Duration::from_millis(1),
        format!(
            "N1.F={:?} N2.F={:?} combined {} F={:?}; {took:?}",
            n1.filters(),
            n2.filters(),
            combined.source(),
            combined.filters()
        ),
    );
    let rs = solve_min_rules(&[c2, c3, c4], 30.0, 0.0);
    let ok = rs.len() == 1
        && rs.rules[0].source.to_string() == "10.0.0.0/24"
        && rs.rules[0].candidates == set(&[3]);
    r.check(
        "1 f-tree example via min-rules",
        ok,
        format!(
            "rules {:?}",
            rs.rules
                .iter()
                .map(|r| (r.source.to_string(), r.candidates.clone()))
                .collect::<Vec<_>>()
        ),
    );
}

fn feasibility(r: &mut Report, topo: &Topology, all: &BTreeSet<NodeId>) {
    let t0 = Instant::now();
    let (mut checked, mut bad, mut infeasible) = (0, Vec::new(), 0);
    for seed in 0..200u64 {
        let trace = generate_attack(
            topo,
            all,
            &AttackConfig {
                volume: VolumeModel::LogNormal {
                    mu: 3.0,
                    sigma: 0.5,
                },
                seed,
                ..Default::default()
            },
        )
        .unwrap();
        let batch = batch_flows(trace.flows, 1.0).remove(0);
        let leaves = build_leaves(&batch);
        let (_, fd, tl) = totals(&leaves);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfeed);
        for obj in Objective::ALL {
            let c = Constraints {
                min_coverage: fd * rng.random_range(0.05..0.6),
                max_collateral: tl * rng.random_range(0.0..0.3),
                rule_budget: rng.random_range(5..200),
            };
            let rs = solve(&leaves, obj, &c);
            let m = evaluate(&rs.rules, &batch);
            let agrees = close(m.coverage, rs.coverage()) && close(m.collateral, rs.collateral());
            if !rs.feasible {
                infeasible += 1;
            } else {
                checked += 1;
            }
            if !agrees || (rs.feasible && !c.satisfied(obj, m.coverage, m.collateral, m.count)) {
                bad.push((seed, obj));
            }
        }
    }
    let took = t0.elapsed();
    r.check(
        "2 constraint feasibility",
        bad.is_empty() && took < Duration::from_secs(60),
        format!("{checked} feasible outputs verified by evaluate(), {infeasible} flagged infeasible, violations {bad:?}; {took:?}"),
    );
}

/// Maximal prefixes whose leaves are all pure DDoS and share a filtering node.
fn pure_groups(leaves: &[FTreeNode]) -> Vec<f64> {
    let mut sorted: Vec<&FTreeNode> = leaves.iter().collect();
    sorted.sort_by_key(|l| l.source());
    let mut cands: BTreeSet<SourceSpec> = sorted.iter().map(|l| l.source()).collect();
    for w in sorted.windows(2) {
        let p = longest_common_prefix(&[w[0].source(), w[1].source()]);
        if p.prefix_len() > 0 {
            cands.insert(p);
        }
    }
    let mut groups: Vec<(SourceSpec, f64)> = Vec::new();
    for p in cands {
        let members: Vec<&&FTreeNode> = sorted.iter().filter(|l| p.covers(&l.source())).collect();
        let pure = members.iter().all(|l| l.legit() == 0.0 && l.ddos() > 0.0);
        let common = members
            .iter()
            .skip(1)
            .fold(members[0].filters().clone(), |acc, l| {
                acc.intersection(l.filters()).copied().collect()
            });
        if pure && !common.is_empty() {
            groups.push((p, members.iter().map(|l| l.ddos()).sum()));
        }
    }
    let maximal: Vec<f64> = groups
        .iter()
        .filter(|(p, _)| !groups.iter().any(|(q, _)| q != p && q.covers(p)))
        .map(|g| g.1)
        .collect();
    let mut v = maximal;
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn fig3(r: &mut Report, topo: &Topology, all: &BTreeSet<NodeId>) {
    // (a) max-coverage with M >= leaves and L >= legit total.
    let mut worst = 1.0f64;
    for seed in 0..10u64 {
        for leaves in [
            spread_leaves(topo, all, seed, 1000, 500),
            build_leaves(&benchmark_trace(topo, all, seed)),
        ] {
            let (_, fd, tl) = totals(&leaves);
            let rs = solve_max_coverage(&leaves, tl, leaves.len());
            worst = worst.min(rs.coverage() / fd);
        }
    }
    r.check(
        "3a max-coverage reaches all filterable DDoS",
        close(worst, 1.0),
        format!("worst coverage {:.6}", worst),
    );

    // (b) min-collateral with M at least the number of pure groups needed.
    let mut failures = Vec::new();
    let mut cases = 0;
    for seed in 0..10u64 {
        let leaves = build_leaves(&benchmark_trace(topo, all, seed));
        let groups = pure_groups(&leaves);
        let (_, fd, _) = totals(&leaves);
        for frac in [0.1, 0.25, 0.5, 0.8, 1.0] {
            let target = frac * fd;
            let mut acc = 0.0;
            let Some(k) = groups.iter().position(|&d| {
                acc += d;
                acc + EPS >= target
            }) else {
                continue;
            };
            cases += 1;
            let rs = solve_min_collateral(&leaves, target, k + 1);
            if !(rs.feasible && rs.collateral() == 0.0 && rs.coverage() + EPS >= target) {
                failures.push((seed, frac, k + 1, rs.collateral()));
            }
        }
    }
    r.check(
        "3b min-collateral is zero with enough pure groups",
        failures.is_empty() && cases > 0,
        format!("{cases} cases, failures {failures:?}"),
    );

    // (c) min-rules on the benchmark family.
    let mut over = Vec::new();
    let mut infeasible = 0;
    for seed in 0..20u64 {
        let leaves = build_leaves(&benchmark_trace(topo, all, seed));
        let (_, fd, tl) = totals(&leaves);
        for d in [0.1, 0.25, 0.5] {
            for l in [0.2, 0.5, 1.0] {
                let rs = solve_min_rules(&leaves, d * fd, l * tl);
                if rs.len() > 3 {
                    over.push(format!("seed {seed} D={d} L={l}: {} rules", rs.len()));
                }
                infeasible += usize::from(!rs.feasible);
            }
        }
    }
    r.check(
        "3c min-rules uses at most 3 rules",
        over.is_empty() && infeasible == 0,
        format!("180 cases, over 3: {over:?}, infeasible {infeasible}"),
    );

    // Minimality on 14-leaf subsamples against exhaustive search.
    let mut counts = Vec::new();
    for seed in 0..20u64 {
        let leaves = build_leaves(&benchmark_trace(topo, all, seed));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pick = rand::seq::index::sample(&mut rng, leaves.len(), ORACLE_MAX).into_vec();
        let sub: Vec<FTreeNode> = pick.into_iter().map(|i| leaves[i].clone()).collect();
        let (_, fd, tl) = totals(&sub);
        let c = Constraints {
            min_coverage: 0.5 * fd,
            max_collateral: 0.2 * tl,
            rule_budget: usize::MAX,
        };
        let g = solve(&sub, Objective::MinRules, &c);
        let o = oracle_solve(&sub, Objective::MinRules, &c).unwrap();
        counts.push((g.len(), o.len()));
    }
    let golden: Vec<(usize, usize)> = GOLDEN_3C.to_vec();
    let minimal = counts.iter().all(|(g, o)| g == o);
    r.check(
        "3c min-rules minimal on subsamples",
        minimal && counts == golden,
        format!("(greedy, oracle) per subsample {counts:?}"),
    );
}

const ORACLE_MAX: usize = 14;
const GOLDEN_3C: [(usize, usize); 20] = [
    (1, 1),
    (3, 3),
    (2, 2),
    (1, 1),
    (2, 2),
    (2, 2),
    (2, 2),
    (1, 1),
    (2, 2),
    (2, 2),
    (2, 2),
    (2, 2),
    (1, 1),
    (1, 1),
    (3, 3),
    (2, 2),
    (2, 2),
    (2, 2),
    (1, 1),
    (1, 1),
];

/// Small instances on a random tree of 15 nodes where about 60% of nodes
/// filter; leaves are pure DDoS or pure legitimate sources.
fn small_instance(seed: u64) -> (Vec<FTreeNode>, Constraints) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nn = 15u32;
    let parent: Vec<u32> = (0..nn)
        .map(|i| if i == 0 { 0 } else { rng.random_range(0..i) })
        .collect();
    let part: Vec<bool> = (0..nn).map(|i| i == 0 || rng.random_bool(0.6)).collect();
    let n = rng.random_range(2..=12);
    let mut used = BTreeSet::new();
    let mut leaves = Vec::new();
    while leaves.len() < n {
        let home = rng.random_range(1..nn);
        let addr = 0x0a00_0000u32 + home * 16 + rng.random_range(0..16);
        if !used.insert(addr) {
            continue;
        }
        let mut node = home;
        let mut f = BTreeSet::new();
        loop {
            if part[node as usize] {
                f.insert(NodeId(node));
            }
            if node == 0 {
                break;
            }
            node = parent[node as usize];
        }
        let v = rng.random_range(1..20) as f64;
        let (d, l) = if rng.random_bool(0.6) {
            (v, 0.0)
        } else {
            (0.0, v)
        };
        leaves.push(FTreeNode::leaf(
            SourceSpec::address(Ipv4Addr::from(addr)),
            f,
            d,
            l,
        ));
    }
    let (d, _, l) = totals(&leaves);
    let c = Constraints {
        min_coverage: (d * rng.random_range(0.2..1.0)).round(),
        max_collateral: (l * rng.random_range(0.0..0.5)).round(),
        rule_budget: rng.random_range(1..5),
    };
    (leaves, c)
}

fn oracle_equivalence(r: &mut Report) {
    let t0 = Instant::now();
    let mut gaps: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    let mut lines = Vec::new();
    let mut ok = true;
    for obj in Objective::ALL {
        let (mut equal, mut infeasible_gap) = (0, 0);
        for seed in 0..100u64 {
            let (leaves, c) = small_instance(seed);
            let g = solve(&leaves, obj, &c);
            let o = oracle_solve(&leaves, obj, &c).unwrap();
            let same = match obj {
                Objective::MaxCoverage => close(g.coverage(), o.coverage()),
                Objective::MinCollateral => {
                    g.feasible == o.feasible
                        && (!o.feasible || close(g.collateral(), o.collateral()))
                }
                Objective::MinRules => {
                    g.feasible == o.feasible && (!o.feasible || g.len() == o.len())
                }
            };
            if o.feasible && !g.feasible {
                infeasible_gap += 1;
            }
            if same {
                equal += 1;
            } else {
                gaps.entry(obj.as_str()).or_default().push(seed);
            }
        }
        ok &= equal >= 90 && infeasible_gap == 0;
        lines.push(format!(
            "{obj}: {equal}/100 equal, {infeasible_gap} infeasible where oracle feasible"
        ));
    }
    let known: BTreeMap<&str, Vec<u64>> =
        KNOWN_GAPS.iter().map(|(k, v)| (*k, v.to_vec())).collect();
    let took = t0.elapsed();
    r.check(
        "4 oracle equivalence",
        ok && took < Duration::from_secs(300),
        format!("{}; {took:?}", lines.join("; ")),
    );
    r.check(
        "4 known gaps unchanged",
        gaps == known,
        format!("gaps {gaps:?}"),
    );
}

const KNOWN_GAPS: [(&str, &[u64]); 3] = [
    ("max-coverage", &[25, 89]),
    ("min-collateral", &[77, 97]),
    ("min-rules", &[87, 89, 92]),
];

fn deployment(r: &mut Report, topo: &Topology) {
    let t0 = Instant::now();
    let limits = [1usize, 10, 100, 1000];
    let mut rates: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut singles: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for p in FilterProfile::all_presets(1) {
        let part = apply_profile(topo, &p);
        let cfg = AttackConfig {
            ddos_sources: 5000,
            legit_sources: 0,
            seed: 3,
            ..Default::default()
        };
        let trace = generate_attack(topo, &part, &cfg).unwrap();
        let batch = batch_flows(trace.flows, 1.0).remove(0);
        let rules: Vec<Rule> = build_leaves(&batch)
            .iter()
            .enumerate()
            .map(|(i, l)| Rule::from_node(i as u64, l))
            .collect();
        assert_eq!(rules.len(), 5000);
        let mut v = Vec::new();
        for &lim in &limits {
            let res = place_rules(&rules, &uniform_capacities(part.iter().copied(), lim));
            v.push(res.success_rate());
            if lim == 100 {
                let dist = rule_distribution(&res);
                let one = dist.iter().find(|x| x.0 == 1).map_or(0.0, |x| x.1);
                let ten = dist.iter().rfind(|x| x.0 <= 10).map_or(0.0, |x| x.1);
                singles.insert(p.name.clone(), (one, ten));
            }
        }
        rates.insert(p.name.clone(), v);
    }
    let took = t0.elapsed();
    let monotone = rates
        .values()
        .all(|v| v.windows(2).all(|w| w[1] + 1e-12 >= w[0]));
    let victim = &rates["victim-only"];
    let full = &rates["full-participation"];
    let victim_lowest = rates
        .values()
        .all(|v| v.iter().zip(victim).all(|(a, b)| a + 1e-12 >= *b));
    let full_highest = rates.values().all(|v| full[3] + 1e-12 >= v[3]);
    let summary: Vec<String> = rates.iter().map(|(k, v)| format!("{k} {v:.3?}")).collect();
    r.check(
        "5 deployment monotonicity",
        monotone && victim_lowest && full_highest && took < Duration::from_secs(600),
        format!("{}; {took:?}", summary.join("; ")),
    );

    let spread = [
        "full-participation",
        "top-centered",
        "middle-centered",
        "bottom-centered",
    ];
    let ok = spread
        .iter()
        .all(|n| singles[*n].0 >= 0.5 && singles[*n].1 >= 0.9);
    let detail: Vec<String> = spread
        .iter()
        .map(|n| format!("{n} one={:.2} le10={:.2}", singles[*n].0, singles[*n].1))
        .collect();
    r.check("6 rule concentration", ok, detail.join("; "));
    let (one, ten) = singles["victim-only"];
    r.check(
        "6 rule concentration, victim-only",
        one >= 0.5 && ten >= 0.9,
        format!("victim-only one={one:.2} le10={ten:.2}"),
    );
}

fn random_spec(rng: &mut ChaCha8Rng) -> RawSpec {
    RawSpec {
        kind: rng.random_range(0..3),
        addr: rng.random(),
        plen: rng.random_range(0..=32),
        port: rng.random(),
    }
}

fn protocol(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut mismatches = 0;
    for i in 0..10_000u32 {
        let msg = if i % 2 == 0 {
            Message::Submission(RuleSubmission {
                version: VERSION,
                rule_id: rng.random(),
                source: random_spec(&mut rng),
                protocol: Protocol::ALL[rng.random_range(0..Protocol::ALL.len())],
                tcp_flags: TcpFlags::ALL[rng.random_range(0..TcpFlags::ALL.len())],
                destination: random_spec(&mut rng),
                start_time: rng.random(),
                end_time: rng.random(),
            })
        } else {
            Message::Ack(RuleAck {
                version: VERSION,
                rule_id: rng.random(),
                code: AckCode::ALL[rng.random_range(0..6)],
            })
        };
        let bytes = encode(&msg);
        if decode(&bytes) != Ok(msg) || encode(&decode(&bytes).unwrap()) != bytes {
            mismatches += 1;
        }
    }
    r.check(
        "7 wire round-trip",
        mismatches == 0,
        format!("10000 messages, {mismatches} mismatches"),
    );

    let sub = |id: u64, start: u64, end: u64| RuleSubmission {
        version: VERSION,
        rule_id: id,
        source: SourceSpec::address(Ipv4Addr::from(0x0a00_0000 + id as u32)).into(),
        protocol: Protocol::Udp,
        tcp_flags: TcpFlags::Any,
        destination: SourceSpec::ANY.into(),
        start_time: start,
        end_time: end,
    };
    let mut ok = true;
    for cap in [0usize, 1, 7, 50] {
        let mut t = RuleTable::new(cap);
        for id in 0..cap as u64 + 5 {
            let code = node_handle(&mut t, &sub(id, 0, 100), 10).code;
            let expect = if (id as usize) < cap {
                AckCode::Ok
            } else {
                AckCode::OutOfRuleSpace
            };
            ok &= code == expect;
        }
        ok &= t.len() == cap;
    }
    let mut t = RuleTable::new(10);
    ok &= node_handle(&mut t, &sub(1, 0, 10), 10).code == AckCode::Timing;
    ok &= node_handle(&mut t, &sub(2, 20, 20), 10).code == AckCode::Timing;
    ok &= node_handle(&mut t, &sub(3, 30, 25), 10).code == AckCode::Timing;
    ok &= t.is_empty();
    r.check(
        "7 node_handle codes",
        ok,
        "code 3 exactly at capacity, code 2 on expired or empty windows".into(),
    );

    let t0 = Instant::now();
    let table = shared_table(1000);
    let server = NodeServer::spawn("127.0.0.1:0", table.clone(), Arc::new(|| 10)).unwrap();
    let ep = [Endpoint {
        node: NodeId(1),
        addr: server.local_addr().to_string(),
    }];
    let transport = TcpTransport::default();
    let mut good = 0;
    for id in 0..1000 {
        if let Ok((NodeId(1), ack)) = subscriber_submit(&sub(id, 0, 100), &ep, &transport) {
            good += usize::from(ack.code == AckCode::Ok && ack.rule_id == id);
        }
    }
    let full = subscriber_submit(&sub(5000, 0, 100), &ep, &transport).is_err();
    let took = t0.elapsed();
    server.shutdown();
    r.check(
        "7 local submission of 1000 rules",
        good == 1000
            && full
            && table.read().unwrap().len() == 1000
            && took < Duration::from_secs(10),
        format!("{good} code-0 acks, 1001st rejected: {full}; {took:?}"),
    );
    r.check(
        "7 submission size",
        SUBMISSION_LEN <= 64 && encode(&Message::Submission(sub(1, 0, 1))).len() == SUBMISSION_LEN,
        format!("{SUBMISSION_LEN} bytes per submission"),
    );
}

fn performance(r: &mut Report, topo: &Topology, all: &BTreeSet<NodeId>) {
    let time = |leaves: &[FTreeNode], obj: Objective| -> Duration {
        let (_, fd, tl) = totals(leaves);
        let c = match obj {
            Objective::MaxCoverage => Constraints {
                max_collateral: 0.1 * tl,
                rule_budget: 20,
                ..Default::default()
            },
            Objective::MinCollateral => Constraints {
                min_coverage: 0.8 * fd,
                rule_budget: 50,
                ..Default::default()
            },
            Objective::MinRules => Constraints {
                min_coverage: 0.5 * fd,
                max_collateral: 0.2 * tl,
                ..Default::default()
            },
        };
        (0..3)
            .map(|_| {
                let t0 = Instant::now();
                solve(leaves, obj, &c);
                t0.elapsed()
            })
            .min()
            .unwrap()
    };
    let small = spread_leaves(topo, all, 11, 1000, 500);
    let large = spread_leaves(topo, all, 11, 2000, 1000);
    let mut ok = small.len() == 1500 && large.len() == 3000;
    let mut parts = Vec::new();
    for obj in Objective::ALL {
        let (a, b) = (time(&small, obj), time(&large, obj));
        let ratio = b.as_secs_f64() / a.as_secs_f64();
        ok &= a < Duration::from_millis(1050) && ratio <= 5.0;
        parts.push(format!("{obj} {a:.1?} -> {b:.1?} (x{ratio:.2})"));
    }
    r.check("8 performance", ok, parts.join("; "));
}

fn simulate(r: &mut Report, topo: &Topology, all: &BTreeSet<NodeId>) {
    let cfg = AttackConfig {
        duration: 60,
        ramp: 10,
        seed: 5,
        ..Default::default()
    };
    let trace = generate_attack(topo, all, &cfg).unwrap();
    let problem = Problem::new(
        Objective::MinRules,
        Some(Budget::Fraction(1.0)),
        Some(Budget::Absolute(0.0)),
        None,
    )
    .unwrap();
    let sc = SimulateConfig {
        problem: Some(problem),
        window: 1.0,
        lifetime: 2.0,
        rule_limit: 1000,
        participants: None,
    };
    let out = run_simulate(&trace, &sc).unwrap();
    let full_from = out
        .seconds
        .iter()
        .position(|s| s.ddos_filtered == s.ddos_arrivals && s.ddos_arrivals > 0);
    let holds = full_from.is_some_and(|k| {
        out.seconds[k..]
            .iter()
            .all(|s| s.ddos_filtered == s.ddos_arrivals)
    });
    let legit: usize = out.seconds.iter().map(|s| s.legit_filtered).sum();
    let conserved = out
        .seconds
        .iter()
        .all(|s| s.ddos_arrivals == s.ddos_filtered + s.ddos_reached);
    r.check(
        "9 end-to-end simulate",
        full_from.is_some_and(|k| k <= 20)
            && holds
            && legit == 0
            && conserved
            && out.seconds.len() == 60,
        format!("full filtering from batch {full_from:?}, holds {holds}, legit filtered {legit}"),
    );
}

fn main() {
    let t0 = Instant::now();
    let mut r = Report { failures: 0 };
    let topo = synthesize(&SynthConfig::INTERNET);
    let all = all_nodes(&topo);
    fig2(&mut r);
    feasibility(&mut r, &topo, &all);
    fig3(&mut r, &topo, &all);
    oracle_equivalence(&mut r);
    deployment(&mut r, &topo);
    protocol(&mut r);
    performance(&mut r, &topo, &all);
    simulate(&mut r, &topo, &all);
    println!("acceptance: {} failed; {:?}", r.failures, t0.elapsed());
    if r.failures > 0 {
        std::process::exit(1);
    }
}
