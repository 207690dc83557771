// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::flow::{Protocol, SourceSpec, TcpFlags};
use crate::ftree::{fmt_set, FTreeNode};
use crate::{NodeId, Volume};

/// A drop rule for one source, deployable at any of its candidate nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub id: u64,
    pub source: SourceSpec,
    pub protocol: Protocol,
    pub tcp_flags: TcpFlags,
    pub destination: SourceSpec,
    pub candidates: BTreeSet<NodeId>,
    /// Set once the rule has been placed.
    pub deployed_at: Option<NodeId>,
    pub coverage: Volume,
    pub collateral: Volume,
    pub start: u64,
    pub end: u64,
}

impl Rule {
    pub fn from_node(id: u64, node: &FTreeNode) -> Self {
        Rule {
            id,
            source: node.source(),
            protocol: Protocol::Any,
            tcp_flags: TcpFlags::Any,
            destination: SourceSpec::ANY,
            candidates: node.filters().clone(),
            deployed_at: None,
            coverage: node.ddos(),
            collateral: node.legit(),
            start: 0,
            end: u64::MAX,
        }
    }

    pub fn is_active(&self, now: u64) -> bool {
        self.start <= now && now < self.end
    }
}

/// Per-batch values applied to every rule of a [`super::RuleSet`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RuleStamp {
    pub first_id: u64,
    pub destination: SourceSpec,
    pub start: u64,
    pub end: u64,
}

#[derive(Debug, Error)]
pub enum RuleFileError {
    #[error("line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: expected 8 comma-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: bad {field} {value:?}")]
    BadField {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("line {line}: rule has no candidate nodes")]
    NoCandidates { line: usize },
    #[error("line {line}: end time must be after start time")]
    EmptyLifetime { line: usize },
}

/// Writes `id,source,protocol,tcp_flags,destination,candidates,start,end`
/// lines.
pub fn write_rule_file<W: Write>(rules: &[Rule], mut w: W) -> io::Result<()> {
    writeln!(
        w,
        "# id,source,protocol,tcp_flags,destination,candidates,start,end"
    )?;
    for r in rules {
        let cands = fmt_set(&r.candidates);
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.id,
            r.source,
            r.protocol,
            r.tcp_flags,
            r.destination,
            cands
                .trim_matches(|c| c == '{' || c == '}')
                .replace(',', "|"),
            r.start,
            r.end
        )?;
    }
    Ok(())
}

/// Reads a rule file. Coverage and collateral are not stored in the file and
/// come back as zero.
pub fn parse_rule_file<R: BufRead>(reader: R) -> Result<Vec<Rule>, RuleFileError> {
    let mut rules = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| RuleFileError::Io {
            line: line_no,
            source,
        })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        rules.push(parse_rule_line(line, line_no)?);
    }
    Ok(rules)
}

fn parse_rule_line(line: &str, line_no: usize) -> Result<Rule, RuleFileError> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 8 {
        return Err(RuleFileError::FieldCount {
            line: line_no,
            found: fields.len(),
        });
    }
    let bad = |field: &'static str, value: &str| RuleFileError::BadField {
        line: line_no,
        field,
        value: value.to_string(),
    };
    let id: u64 = fields[0].parse().map_err(|_| bad("id", fields[0]))?;
    let source: SourceSpec = fields[1].parse().map_err(|_| bad("source", fields[1]))?;
    let protocol: Protocol = fields[2].parse().map_err(|_| bad("protocol", fields[2]))?;
    let tcp_flags: TcpFlags = fields[3].parse().map_err(|_| bad("tcp_flags", fields[3]))?;
    let destination: SourceSpec = fields[4]
        .parse()
        .map_err(|_| bad("destination", fields[4]))?;
    if fields[5].is_empty() {
        return Err(RuleFileError::NoCandidates { line: line_no });
    }
    let candidates = fields[5]
        .split('|')
        .map(|n| {
            n.parse::<NodeId>()
                .map_err(|_| bad("candidates", fields[5]))
        })
        .collect::<Result<BTreeSet<_>, _>>()?;
    let start: u64 = fields[6].parse().map_err(|_| bad("start", fields[6]))?;
    let end: u64 = fields[7].parse().map_err(|_| bad("end", fields[7]))?;
    if end <= start {
        return Err(RuleFileError::EmptyLifetime { line: line_no });
    }
    Ok(Rule {
        id,
        source,
        protocol,
        tcp_flags,
        destination,
        candidates,
        deployed_at: None,
        coverage: 0.0,
        collateral: 0.0,
        start,
        end,
    })
}
