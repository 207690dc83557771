// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use adf_core::experiment::{
    parse_rule_budget, run_generate, run_simulate, write_generate_report, write_placement_report,
    write_seconds_report, write_timings, Budget, Problem, SimulateConfig,
};
use adf_core::flow::{parse_trace, write_trace, Trace};
use adf_core::placement::{uniform_capacities, write_distribution_csv};
use adf_core::rulegen::{parse_rule_file, write_rule_file};
use adf_core::topology::{
    apply_profile, generate_attack, load_topology, synthesize, write_topology, AttackConfig,
    FilterProfile, SynthConfig, Topology,
};
use adf_core::{place_rules, rule_distribution, NodeId, Objective};
use anyhow::{bail, Context, Result};

use crate::args::{
    AttackArgs, GenAttackArgs, GenTopologyArgs, GenerateArgs, InputArgs, PlaceArgs, ProblemArgs,
    ProfileArgs, SimulateArgs,
};
use crate::output::{create, open, Manifest, OutDir};

fn read_topology(path: &Path) -> Result<Topology> {
    let (topo, warnings) = load_topology(open(path)?)
        .with_context(|| format!("cannot load topology {}", path.display()))?;
    for w in warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(topo)
}

fn profile(args: &ProfileArgs) -> Result<FilterProfile> {
    let mut p: FilterProfile = args
        .profile
        .parse()
        .with_context(|| format!("bad --profile {:?}", args.profile))?;
    p.seed = args.profile_seed;
    Ok(p)
}

fn attack_config(args: &AttackArgs) -> Result<AttackConfig> {
    let mut cfg = match &args.attack {
        Some(path) => AttackConfig::parse(open(path)?)
            .with_context(|| format!("bad attack file {}", path.display()))?,
        None => AttackConfig::default(),
    };
    for kv in &args.set {
        let Some((k, v)) = kv.split_once('=') else {
            bail!("--set {kv:?}: expected KEY=VALUE");
        };
        cfg.set(k.trim(), v.trim()).map_err(|msg| {
            if msg.is_empty() {
                anyhow::anyhow!("--set {kv:?}: unknown key {:?}", k.trim())
            } else {
                anyhow::anyhow!("--set {kv:?}: {msg}")
            }
        })?;
    }
    Ok(cfg)
}

fn echo_attack(m: &mut Manifest, cfg: &AttackConfig) {
    for line in cfg.to_string().lines() {
        if let Some((k, v)) = line.split_once('=') {
            m.set(&format!("attack.{k}"), v);
        }
    }
}

fn echo_profile(m: &mut Manifest, p: &FilterProfile) {
    m.set("profile", &p.name)
        .set(
            "profile_rates",
            format!("{}:{}:{}", p.rates[0], p.rates[1], p.rates[2]),
        )
        .set("profile_seed", p.seed);
}

/// Flows plus the participating ASes when a topology was given.
struct Input {
    trace: Trace,
    participants: Option<BTreeSet<NodeId>>,
}

fn load_input(args: &InputArgs, m: &mut Manifest) -> Result<Input> {
    let topo = args.topology.as_deref().map(read_topology).transpose()?;
    m.opt("topology", args.topology.as_ref().map(|p| p.display()));
    let participants = match &topo {
        Some(t) => {
            let p = profile(&args.profile)?;
            echo_profile(m, &p);
            Some(apply_profile(t, &p))
        }
        None => None,
    };
    let trace = if let Some(path) = &args.trace {
        m.set("trace", path.display());
        parse_trace(open(path)?)
            .with_context(|| format!("cannot parse trace {}", path.display()))?
    } else {
        let Some(t) = &topo else {
            bail!("give either --trace or --topology to generate traffic");
        };
        let cfg = attack_config(&args.attack)?;
        echo_attack(m, &cfg);
        generate_attack(t, participants.as_ref().expect("topology given"), &cfg)
            .context("cannot generate traffic")?
    };
    log::info!("{} flows", trace.flows.len());
    Ok(Input {
        trace,
        participants,
    })
}

fn rule_budget(s: Option<&str>) -> Result<Option<Option<usize>>> {
    s.map(parse_rule_budget)
        .transpose()
        .map_err(|e| anyhow::anyhow!("bad --rule-budget: {e}"))
}

fn problem(
    objective: Objective,
    d: Option<Budget>,
    l: Option<Budget>,
    m: Option<&str>,
    manifest: &mut Manifest,
) -> Result<Problem> {
    let p = Problem::new(objective, d, l, rule_budget(m)?)?;
    manifest
        .set("problem", p.objective)
        .opt("min_coverage", d)
        .opt("max_collateral", l)
        .opt("rule_budget", m);
    Ok(p)
}

fn problem_args(a: &ProblemArgs, m: &mut Manifest) -> Result<Problem> {
    problem(
        a.problem,
        a.min_coverage,
        a.max_collateral,
        a.rule_budget.as_deref(),
        m,
    )
}

pub fn generate(args: &GenerateArgs) -> Result<()> {
    let mut m = Manifest::new("generate");
    let input = load_input(&args.input, &mut m)?;
    let p = problem_args(&args.problem, &mut m)?;
    let lifetime = args.window.lifetime();
    m.set("window_s", args.window.window)
        .set("lifetime_s", lifetime)
        .set("unit", input.trace.unit);
    let out = run_generate(&input.trace, &p, args.window.window, lifetime)?;
    let rules = out.rules;
    let dir = OutDir::new(&args.out)?;
    dir.write("rules.txt", |w| write_rule_file(&rules, w))?;
    dir.write("report.csv", |w| write_generate_report(&out.rows, w))?;
    dir.write("timings.csv", |w| write_timings(&out.timings, w))?;
    m.set("batches", out.rows.len()).set("rules", rules.len());
    m.write_to(&dir)?;
    log::info!("{} batches, {} rules", out.rows.len(), rules.len());
    Ok(())
}

pub fn place(args: &PlaceArgs) -> Result<()> {
    let mut m = Manifest::new("place");
    let mut rules = parse_rule_file(open(&args.rules)?)
        .with_context(|| format!("cannot parse rules {}", args.rules.display()))?;
    m.set("rules_file", args.rules.display())
        .set("limit", args.limit);
    m.opt("topology", args.topology.as_ref().map(|p| p.display()));
    if let Some(path) = &args.topology {
        let topo = read_topology(path)?;
        let p = profile(&args.profile)?;
        echo_profile(&mut m, &p);
        let parts = apply_profile(&topo, &p);
        for r in &mut rules {
            r.candidates.retain(|n| parts.contains(n));
        }
    }
    let nodes: BTreeSet<NodeId> = rules
        .iter()
        .flat_map(|r| r.candidates.iter().copied())
        .collect();
    let result = place_rules(&rules, &uniform_capacities(nodes, args.limit));
    let dir = OutDir::new(&args.out)?;
    dir.write("placement.txt", |w| result.write(w))?;
    dir.write("distribution.csv", |w| {
        write_distribution_csv(&rule_distribution(&result), w)
    })?;
    m.set("rules", rules.len())
        .set("placed", result.placed.len())
        .set("success_rate", format!("{:.6}", result.success_rate()));
    m.write_to(&dir)?;
    log::info!("placed {} of {} rules", result.placed.len(), rules.len());
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let mut m = Manifest::new("simulate");
    let input = load_input(&args.input, &mut m)?;
    let p = match args.problem {
        Some(o) => Some(problem(
            o,
            args.min_coverage,
            args.max_collateral,
            args.rule_budget.as_deref(),
            &mut m,
        )?),
        None => {
            m.set("problem", "none");
            None
        }
    };
    let cfg = SimulateConfig {
        problem: p,
        window: args.window.window,
        lifetime: args.window.lifetime(),
        rule_limit: args.limit,
        participants: input.participants,
    };
    m.set("window_s", cfg.window)
        .set("lifetime_s", cfg.lifetime)
        .set("limit", cfg.rule_limit);
    let out = run_simulate(&input.trace, &cfg)?;
    let dir = OutDir::new(&args.out)?;
    dir.write("seconds.csv", |w| write_seconds_report(&out.seconds, w))?;
    dir.write("placement.csv", |w| {
        write_placement_report(&out.placements, w)
    })?;
    dir.write("distribution.csv", |w| {
        write_distribution_csv(&rule_distribution(&out.as_placement()), w)
    })?;
    m.set("seconds", out.seconds.len());
    m.write_to(&dir)?;
    Ok(())
}

pub fn gen_topology(args: &GenTopologyArgs) -> Result<()> {
    let cfg = SynthConfig {
        tier1: args.tier1,
        tier2: args.tier2,
        tier3: args.tier3,
        tier2_peers: args.tier2_peers,
        seed: args.seed,
    };
    if cfg.tier1 == 0 {
        bail!("--tier1 must be at least 1");
    }
    let topo = synthesize(&cfg);
    let mut w = create(&args.out)?;
    write_topology(&topo, &mut w)
        .and_then(|_| w.flush())
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    log::info!("{} ASes, {} edges", topo.len(), topo.edge_count());
    Ok(())
}

pub fn gen_attack(args: &GenAttackArgs) -> Result<()> {
    let topo = read_topology(&args.topology)?;
    let cfg = attack_config(&args.attack)?;
    let parts = apply_profile(&topo, &profile(&args.profile)?);
    let trace = generate_attack(&topo, &parts, &cfg).context("cannot generate traffic")?;
    let mut w = create(&args.out)?;
    write_trace(&trace, &mut w)
        .and_then(|_| w.flush())
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    log::info!("{} flows", trace.flows.len());
    Ok(())
}
