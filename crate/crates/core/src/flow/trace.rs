// SPDX-License-Identifier: Apache-2.0

//! Line-oriented trace files.
//!
//! ```text
//! #unit=packets
//! # timestamp,source,protocol,tcp_flags,destination,volume,label,path
//! 0.5,10.0.0.1:2222,UDP,ANY,192.0.2.1,100,ddos,3|4
//! ```
//!
//! The first line declares the volume unit. Every other line is either a
//! comment (`#`), blank, or a flow. Paths list filtering-node ids from the
//! source side to the victim side.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::flow::{FlowRecord, Label, Protocol, SourceSpec, TcpFlags, VolumeUnit};
use crate::NodeId;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: io::Error,
    },
    #[error("missing `#unit=` header")]
    MissingHeader,
    #[error("line {line}: unknown volume unit {unit:?}")]
    UnknownUnit { line: usize, unit: String },
    #[error("line {line}: expected 8 comma-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: bad {field} {value:?}")]
    BadField {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("line {line}: unknown {field} token {value:?}")]
    UnknownToken {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("line {line}: empty path")]
    EmptyPath { line: usize },
}

/// A parsed trace: the declared unit plus flows in file order.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Trace {
    pub unit: VolumeUnit,
    pub flows: Vec<FlowRecord>,
}

pub fn parse_trace<R: BufRead>(reader: R) -> Result<Trace, TraceError> {
    let mut unit = None;
    let mut flows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| TraceError::Io {
            line: line_no,
            source,
        })?;
        let line = line.trim();
        if unit.is_none() {
            let Some(value) = line.strip_prefix("#unit=") else {
                return Err(TraceError::MissingHeader);
            };
            let value = value.trim();
            unit = Some(
                value
                    .parse::<VolumeUnit>()
                    .map_err(|_| TraceError::UnknownUnit {
                        line: line_no,
                        unit: value.to_string(),
                    })?,
            );
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        flows.push(parse_flow_line(line, line_no)?);
    }
    let unit = unit.ok_or(TraceError::MissingHeader)?;
    Ok(Trace { unit, flows })
}

pub fn parse_trace_str(s: &str) -> Result<Trace, TraceError> {
    parse_trace(s.as_bytes())
}

fn parse_flow_line(line: &str, line_no: usize) -> Result<FlowRecord, TraceError> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 8 {
        return Err(TraceError::FieldCount {
            line: line_no,
            found: fields.len(),
        });
    }
    let bad = |field: &'static str, value: &str| TraceError::BadField {
        line: line_no,
        field,
        value: value.to_string(),
    };
    let unknown = |field: &'static str, value: &str| TraceError::UnknownToken {
        line: line_no,
        field,
        value: value.to_string(),
    };

    let timestamp: f64 = fields[0].parse().map_err(|_| bad("timestamp", fields[0]))?;
    if !timestamp.is_finite() {
        return Err(bad("timestamp", fields[0]));
    }
    let source: SourceSpec = fields[1].parse().map_err(|_| bad("source", fields[1]))?;
    let protocol: Protocol = fields[2]
        .parse()
        .map_err(|_| unknown("protocol", fields[2]))?;
    let tcp_flags: TcpFlags = fields[3]
        .parse()
        .map_err(|_| unknown("tcp_flags", fields[3]))?;
    let destination: SourceSpec = fields[4]
        .parse()
        .map_err(|_| bad("destination", fields[4]))?;
    let volume: f64 = fields[5].parse().map_err(|_| bad("volume", fields[5]))?;
    if !volume.is_finite() || volume < 0.0 {
        return Err(bad("volume", fields[5]));
    }
    let label: Label = fields[6].parse().map_err(|_| unknown("label", fields[6]))?;
    if fields[7].is_empty() {
        return Err(TraceError::EmptyPath { line: line_no });
    }
    let path = fields[7]
        .split('|')
        .map(|n| n.parse::<NodeId>().map_err(|_| bad("path", fields[7])))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(FlowRecord {
        timestamp,
        source,
        protocol,
        tcp_flags,
        destination,
        volume,
        label,
        path,
    })
}

pub fn write_trace<W: Write>(trace: &Trace, mut w: W) -> io::Result<()> {
    writeln!(w, "#unit={}", trace.unit)?;
    writeln!(
        w,
        "# timestamp,source,protocol,tcp_flags,destination,volume,label,path"
    )?;
    for f in &trace.flows {
        write_flow_line(f, &mut w)?;
    }
    Ok(())
}

pub fn write_flow_line<W: Write>(f: &FlowRecord, w: &mut W) -> io::Result<()> {
    write!(
        w,
        "{},{},{},{},{},{},{},",
        f.timestamp, f.source, f.protocol, f.tcp_flags, f.destination, f.volume, f.label
    )?;
    for (i, n) in f.path.iter().enumerate() {
        if i > 0 {
            w.write_all(b"|")?;
        }
        write!(w, "{n}")?;
    }
    writeln!(w)
}
