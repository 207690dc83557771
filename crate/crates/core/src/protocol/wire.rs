// SPDX-License-Identifier: Apache-2.0

//! Message encoding.
//!
//! Every message starts with `version(1) | msg_type(1) | rule_id(8)`. A
//! submission (type 1) continues with
//!
//! ```text
//! source  kind(1) addr(4) plen(1) port(2)
//! protocol(1) tcp_flags(1)
//! dest    kind(1) addr(4) plen(1) port(2)
//! start(8) end(8)
//! ```
//!
//! and an acknowledgment (type 2) with a single error code. Integers are
//! big-endian. Protocols use their IANA numbers (0 for any) and flags their
//! TCP header bits (0 for any).

use std::net::Ipv4Addr;

use thiserror::Error;

use crate::flow::{Protocol, SourceKind, SourceSpec, SpecError, TcpFlags};
use crate::rulegen::Rule;

pub const VERSION: u8 = 1;
pub const MSG_SUBMISSION: u8 = 1;
pub const MSG_ACK: u8 = 2;
const HEADER_LEN: usize = 10;
const SPEC_LEN: usize = 8;
pub const SUBMISSION_LEN: usize = HEADER_LEN + SPEC_LEN * 2 + 2 + 16;
pub const ACK_LEN: usize = HEADER_LEN + 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("message truncated: need {need} bytes, have {have}")]
    TruncatedMessage { need: usize, have: usize },
    #[error("unsupported version {0}")]
    UnknownVersion(u8),
    #[error("unknown message type {0}")]
    UnknownType(u8),
    #[error("{0} trailing bytes")]
    TrailingBytes(usize),
    #[error("unknown protocol number {0}")]
    BadProtocol(u8),
    #[error("unknown tcp flags {0:#04x}")]
    BadFlags(u8),
    #[error("unknown error code {0}")]
    BadErrorCode(u8),
}

/// A source or destination as carried on the wire, before validation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RawSpec {
    pub kind: u8,
    pub addr: u32,
    pub plen: u8,
    pub port: u16,
}

impl RawSpec {
    pub const KIND_PREFIX: u8 = 0;
    pub const KIND_ADDRESS: u8 = 1;
    pub const KIND_ADDRESS_PORT: u8 = 2;

    /// Checks structure: a known kind, a consistent prefix length, no host
    /// bits, and a port only on port-carrying specs.
    pub fn validate(&self) -> Result<SourceSpec, SpecError> {
        let addr = Ipv4Addr::from(self.addr);
        let bad = || SpecError::Syntax(format!("{self:?}"));
        match self.kind {
            Self::KIND_PREFIX if self.port == 0 => SourceSpec::prefix(addr, self.plen),
            Self::KIND_ADDRESS if self.plen == 32 && self.port == 0 => {
                Ok(SourceSpec::address(addr))
            }
            Self::KIND_ADDRESS_PORT if self.plen == 32 => {
                Ok(SourceSpec::address_port(addr, self.port))
            }
            _ => Err(bad()),
        }
    }
}

impl From<SourceSpec> for RawSpec {
    fn from(s: SourceSpec) -> Self {
        let kind = match s.kind() {
            SourceKind::Prefix => Self::KIND_PREFIX,
            SourceKind::Address => Self::KIND_ADDRESS,
            SourceKind::AddressPort => Self::KIND_ADDRESS_PORT,
        };
        RawSpec {
            kind,
            addr: s.addr_bits(),
            plen: s.prefix_len(),
            port: s.port().unwrap_or(0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RuleSubmission {
    pub version: u8,
    pub rule_id: u64,
    pub source: RawSpec,
    pub protocol: Protocol,
    pub tcp_flags: TcpFlags,
    pub destination: RawSpec,
    pub start_time: u64,
    pub end_time: u64,
}

impl RuleSubmission {
    pub fn from_rule(r: &Rule) -> Self {
        RuleSubmission {
            version: VERSION,
            rule_id: r.id,
            source: r.source.into(),
            protocol: r.protocol,
            tcp_flags: r.tcp_flags,
            destination: r.destination.into(),
            start_time: r.start,
            end_time: r.end,
        }
    }
}

/// Outcome of a submission.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AckCode {
    Ok = 0,
    Verification = 1,
    Timing = 2,
    OutOfRuleSpace = 3,
    Internal = 4,
    Other = 5,
}

impl AckCode {
    pub const ALL: [AckCode; 6] = [
        AckCode::Ok,
        AckCode::Verification,
        AckCode::Timing,
        AckCode::OutOfRuleSpace,
        AckCode::Internal,
        AckCode::Other,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Self::ALL.get(c as usize).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RuleAck {
    pub version: u8,
    pub rule_id: u64,
    pub code: AckCode,
}

impl RuleAck {
    pub fn new(rule_id: u64, code: AckCode) -> Self {
        RuleAck {
            version: VERSION,
            rule_id,
            code,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Message {
    Submission(RuleSubmission),
    Ack(RuleAck),
}

pub fn protocol_code(p: Protocol) -> u8 {
    match p {
        Protocol::Any => 0,
        Protocol::Icmp => 1,
        Protocol::Tcp => 6,
        Protocol::Udp => 17,
        Protocol::Ipsec => 50,
    }
}

pub fn protocol_from_code(c: u8) -> Option<Protocol> {
    Protocol::ALL.into_iter().find(|&p| protocol_code(p) == c)
}

pub fn flags_code(f: TcpFlags) -> u8 {
    match f {
        TcpFlags::Any => 0,
        TcpFlags::Fin => 0x01,
        TcpFlags::Syn => 0x02,
        TcpFlags::Rst => 0x04,
        TcpFlags::Ack => 0x10,
        TcpFlags::SynAck => 0x12,
    }
}

pub fn flags_from_code(c: u8) -> Option<TcpFlags> {
    TcpFlags::ALL.into_iter().find(|&f| flags_code(f) == c)
}

fn put_spec(out: &mut Vec<u8>, s: &RawSpec) {
    out.push(s.kind);
    out.extend_from_slice(&s.addr.to_be_bytes());
    out.push(s.plen);
    out.extend_from_slice(&s.port.to_be_bytes());
}

pub fn encode(msg: &Message) -> Vec<u8> {
    match msg {
        Message::Submission(m) => {
            let mut out = Vec::with_capacity(SUBMISSION_LEN);
            out.extend_from_slice(&[m.version, MSG_SUBMISSION]);
            out.extend_from_slice(&m.rule_id.to_be_bytes());
            put_spec(&mut out, &m.source);
            out.push(protocol_code(m.protocol));
            out.push(flags_code(m.tcp_flags));
            put_spec(&mut out, &m.destination);
            out.extend_from_slice(&m.start_time.to_be_bytes());
            out.extend_from_slice(&m.end_time.to_be_bytes());
            out
        }
        Message::Ack(a) => {
            let mut out = Vec::with_capacity(ACK_LEN);
            out.extend_from_slice(&[a.version, MSG_ACK]);
            out.extend_from_slice(&a.rule_id.to_be_bytes());
            out.push(a.code.code());
            out
        }
    }
}

struct Reader<'a>(&'a [u8]);

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let (head, rest) = self.0.split_at(N);
        self.0 = rest;
        head.try_into().expect("length checked up front")
    }

    fn u8(&mut self) -> u8 {
        self.take::<1>()[0]
    }

    fn u64(&mut self) -> u64 {
        u64::from_be_bytes(self.take())
    }

    fn spec(&mut self) -> RawSpec {
        let kind = self.u8();
        let addr = u32::from_be_bytes(self.take());
        let plen = self.u8();
        let port = u16::from_be_bytes(self.take());
        RawSpec {
            kind,
            addr,
            plen,
            port,
        }
    }
}

pub fn decode(buf: &[u8]) -> Result<Message, DecodeError> {
    if buf.len() < HEADER_LEN {
        return Err(DecodeError::TruncatedMessage {
            need: HEADER_LEN,
            have: buf.len(),
        });
    }
    let version = buf[0];
    if version != VERSION {
        return Err(DecodeError::UnknownVersion(version));
    }
    let need = match buf[1] {
        MSG_SUBMISSION => SUBMISSION_LEN,
        MSG_ACK => ACK_LEN,
        t => return Err(DecodeError::UnknownType(t)),
    };
    if buf.len() < need {
        return Err(DecodeError::TruncatedMessage {
            need,
            have: buf.len(),
        });
    }
    if buf.len() > need {
        return Err(DecodeError::TrailingBytes(buf.len() - need));
    }
    let mut r = Reader(&buf[2..]);
    let rule_id = r.u64();
    if buf[1] == MSG_ACK {
        let c = r.u8();
        let code = AckCode::from_code(c).ok_or(DecodeError::BadErrorCode(c))?;
        return Ok(Message::Ack(RuleAck {
            version,
            rule_id,
            code,
        }));
    }
    let source = r.spec();
    let p = r.u8();
    let protocol = protocol_from_code(p).ok_or(DecodeError::BadProtocol(p))?;
    let f = r.u8();
    let tcp_flags = flags_from_code(f).ok_or(DecodeError::BadFlags(f))?;
    let destination = r.spec();
    let start_time = r.u64();
    let end_time = r.u64();
    Ok(Message::Submission(RuleSubmission {
        version,
        rule_id,
        source,
        protocol,
        tcp_flags,
        destination,
        start_time,
        end_time,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sub() -> RuleSubmission {
        RuleSubmission {
            version: VERSION,
            rule_id: 42,
            source: "10.0.0.0/24".parse::<SourceSpec>().unwrap().into(),
            protocol: Protocol::Udp,
            tcp_flags: TcpFlags::Any,
            destination: "192.0.2.1".parse::<SourceSpec>().unwrap().into(),
            start_time: 100,
            end_time: 200,
        }
    }

    #[test]
    fn ack_layout() {
        let bytes = encode(&Message::Ack(RuleAck::new(7, AckCode::Ok)));
        assert_eq!(bytes, [1, 2, 0, 0, 0, 0, 0, 0, 0, 7, 0]);
        assert_eq!(
            decode(&bytes),
            Ok(Message::Ack(RuleAck::new(7, AckCode::Ok)))
        );
    }

    #[test]
    fn submission_layout() {
        let bytes = encode(&Message::Submission(sub()));
        assert_eq!(bytes.len(), 44);
        assert_eq!(&bytes[10..18], &[0, 10, 0, 0, 0, 24, 0, 0]);
        assert_eq!(&bytes[18..20], &[17, 0]);
        assert_eq!(&bytes[20..28], &[1, 192, 0, 2, 1, 32, 0, 0]);
        assert_eq!(decode(&bytes), Ok(Message::Submission(sub())));
    }

    #[test]
    fn errors() {
        let bytes = encode(&Message::Submission(sub()));
        assert_eq!(
            decode(&bytes[..30]),
            Err(DecodeError::TruncatedMessage { need: 44, have: 30 })
        );
        assert_eq!(
            decode(&bytes[..3]),
            Err(DecodeError::TruncatedMessage { need: 10, have: 3 })
        );
        let mut b = bytes.clone();
        b.push(0);
        assert_eq!(decode(&b), Err(DecodeError::TrailingBytes(1)));
        let mut b = bytes.clone();
        b[0] = 9;
        assert_eq!(decode(&b), Err(DecodeError::UnknownVersion(9)));
        let mut b = bytes.clone();
        b[18] = 99;
        assert_eq!(decode(&b), Err(DecodeError::BadProtocol(99)));
        let mut b = bytes;
        b[19] = 0xff;
        assert_eq!(decode(&b), Err(DecodeError::BadFlags(0xff)));
        assert_eq!(
            decode(&[1, 2, 0, 0, 0, 0, 0, 0, 0, 7, 6]),
            Err(DecodeError::BadErrorCode(6))
        );
    }

    #[test]
    fn raw_spec_validation() {
        let ok: RawSpec = "10.0.0.1:80".parse::<SourceSpec>().unwrap().into();
        assert_eq!(ok.validate().unwrap().to_string(), "10.0.0.1:80");
        for bad in [
            RawSpec {
                kind: 0,
                addr: 0x0a000001,
                plen: 24,
                port: 0,
            },
            RawSpec {
                kind: 0,
                addr: 0,
                plen: 33,
                port: 0,
            },
            RawSpec {
                kind: 1,
                addr: 1,
                plen: 24,
                port: 0,
            },
            RawSpec {
                kind: 1,
                addr: 1,
                plen: 32,
                port: 5,
            },
            RawSpec {
                kind: 7,
                addr: 1,
                plen: 32,
                port: 0,
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }
}
