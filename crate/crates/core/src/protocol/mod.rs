// SPDX-License-Identifier: Apache-2.0

//! Rule submission between a subscriber and filtering nodes.
//!
//! A subscriber sends a [`RuleSubmission`] to a candidate node and gets back a
//! [`RuleAck`]. Messages travel as length-prefixed frames over TCP. Nodes keep
//! their rules in a [`RuleTable`] with a fixed capacity and drop rules when
//! their end time passes.

mod net;
mod table;
mod wire;

pub use net::{
    read_frame, respond, subscriber_submit, unix_now, write_frame, AllFailed, Clock, Endpoint,
    FrameError, InMemoryTransport, NodeServer, Outcome, TcpTransport, Transport, TransportError,
    MAX_FRAME,
};
pub use table::{
    filter_packet, node_handle, node_handle_verified, shared_table, AcceptAll, InstalledRule,
    Packet, RuleTable, SharedTable, Verdict, Verifier,
};
pub use wire::{
    decode, encode, flags_code, flags_from_code, protocol_code, protocol_from_code, AckCode,
    DecodeError, Message, RawSpec, RuleAck, RuleSubmission, ACK_LEN, MSG_ACK, MSG_SUBMISSION,
    SUBMISSION_LEN, VERSION,
};
