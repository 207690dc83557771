// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};
use std::sync::Arc;
use std::time::Duration;

use adf_core::placement::parse_placement;
use adf_core::protocol::{
    shared_table, subscriber_submit, unix_now, Endpoint, NodeServer, Outcome, RuleSubmission,
    TcpTransport,
};
use adf_core::rulegen::parse_rule_file;
use adf_core::NodeId;
use anyhow::{bail, Context, Result};

use crate::args::{ServeNodeArgs, SubmitArgs};
use crate::output::{create, open};

pub fn serve(args: &ServeNodeArgs) -> Result<()> {
    let server = NodeServer::spawn(
        &args.listen,
        shared_table(args.capacity),
        Arc::new(unix_now),
    )
    .with_context(|| format!("cannot listen on {}", args.listen))?;
    println!("listening on {}", server.local_addr());
    io::stdout().flush()?;
    log::info!("capacity {}", args.capacity);
    server.join();
    Ok(())
}

fn parse_endpoint(s: &str) -> Result<(NodeId, String)> {
    let Some((id, addr)) = s.split_once('=') else {
        bail!("{s:?}: expected ID=HOST:PORT");
    };
    let id: NodeId = id.parse().with_context(|| format!("{s:?}: bad node id"))?;
    Ok((id, addr.trim().to_string()))
}

fn endpoints(args: &SubmitArgs) -> Result<BTreeMap<NodeId, String>> {
    let mut map = BTreeMap::new();
    if let Some(path) = &args.node_file {
        for (i, line) in open(path)?.lines().enumerate() {
            let line = line.with_context(|| format!("cannot read {}", path.display()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (id, addr) =
                parse_endpoint(line).with_context(|| format!("{}:{}", path.display(), i + 1))?;
            map.insert(id, addr);
        }
    }
    for s in &args.nodes {
        let (id, addr) = parse_endpoint(s)?;
        map.insert(id, addr);
    }
    Ok(map)
}

fn outcome_label(o: &Outcome) -> (String, &'static str) {
    match o {
        Outcome::Ack(code) => (code.code().to_string(), "rejected"),
        Outcome::Transport(_) => (String::new(), "unreachable"),
    }
}

/// Submits every rule and writes `rule_id,node,code,status` rows: one per
/// refusal, then either `installed` or `all-failed`.
pub fn submit(args: &SubmitArgs) -> Result<()> {
    let rules = parse_rule_file(open(&args.rules)?)
        .with_context(|| format!("cannot parse rules {}", args.rules.display()))?;
    let placement = match &args.placement {
        Some(path) => Some(
            parse_placement(open(path)?)
                .with_context(|| format!("cannot parse placement {}", path.display()))?,
        ),
        None => None,
    };
    let addrs = endpoints(args)?;
    let epoch = match args.epoch.as_str() {
        "now" => unix_now(),
        s => s.parse().with_context(|| format!("bad --epoch {s:?}"))?,
    };
    let mut transport = TcpTransport::default();
    transport.timeout = Duration::from_millis(args.timeout_ms);
    transport.retries = args.retries;

    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(create(path)?),
        None => Box::new(io::BufWriter::new(io::stdout())),
    };
    writeln!(out, "rule_id,node,code,status")?;
    let (mut installed, mut attempted) = (0usize, 0usize);
    for rule in &rules {
        let first = match &placement {
            Some(p) => match p.get(&rule.id) {
                Some(&node) => Some(node),
                None => continue,
            },
            None => None,
        };
        let order = first.into_iter().chain(
            rule.candidates
                .iter()
                .copied()
                .filter(|&n| Some(n) != first),
        );
        let eps: Vec<Endpoint> = order
            .map(|node| Endpoint {
                node,
                addr: addrs.get(&node).cloned().unwrap_or_default(),
            })
            .collect();
        let mut msg = RuleSubmission::from_rule(rule);
        msg.start_time = epoch.saturating_add(rule.start);
        msg.end_time = epoch.saturating_add(rule.end);
        attempted += 1;
        match subscriber_submit(&msg, &eps, &transport) {
            Ok((node, ack)) => {
                installed += 1;
                writeln!(out, "{},{},{},installed", rule.id, node, ack.code.code())?;
            }
            Err(failed) => {
                for (node, o) in &failed.outcomes {
                    if let Outcome::Transport(e) = o {
                        log::warn!("rule {} at node {node}: {e}", rule.id);
                    }
                    let (code, status) = outcome_label(o);
                    writeln!(out, "{},{},{},{}", rule.id, node, code, status)?;
                }
                writeln!(out, "{},,,all-failed", rule.id)?;
            }
        }
    }
    out.flush()?;
    eprintln!("installed {installed} of {attempted} rules");
    Ok(())
}
