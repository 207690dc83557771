// SPDX-License-Identifier: Apache-2.0

//! Flows, source specifications, trace ingest and F-tree leaf construction.

mod batch;
mod record;
mod source;
mod trace;

pub use batch::{batch_flows, build_leaves, Batch};
pub use record::{FlowRecord, Label, Protocol, TcpFlags, UnknownToken, VolumeUnit};
pub use source::{SourceKind, SourceSpec, SpecError};
pub use trace::{parse_trace, parse_trace_str, write_flow_line, write_trace, Trace, TraceError};
