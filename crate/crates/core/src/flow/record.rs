// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::str::FromStr;

use crate::flow::SourceSpec;
use crate::{NodeId, Volume};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Protocol {
    Tcp,
    Udp,
    Icmp,
    Ipsec,
    Any,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TcpFlags {
    Syn,
    SynAck,
    Ack,
    Fin,
    Rst,
    Any,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Ddos,
    Legit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum VolumeUnit {
    Bytes,
    #[default]
    Packets,
    Connections,
}

/// Token that failed to parse as one of the enumerations above.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownToken(pub String);

impl fmt::Display for UnknownToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown token {:?}", self.0)
    }
}

impl std::error::Error for UnknownToken {}

macro_rules! token_enum {
    ($ty:ty { $($variant:ident => $tok:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(&self) -> &'static str {
                match self {
                    $(Self::$variant => $tok,)+
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = UnknownToken;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let t = s.trim();
                $(if t.eq_ignore_ascii_case($tok) {
                    return Ok(Self::$variant);
                })+
                Err(UnknownToken(t.to_string()))
            }
        }
    };
}

token_enum!(Protocol { Tcp => "TCP", Udp => "UDP", Icmp => "ICMP", Ipsec => "IPSEC", Any => "ANY" });
token_enum!(TcpFlags { Syn => "SYN", SynAck => "SYNACK", Ack => "ACK", Fin => "FIN", Rst => "RST", Any => "ANY" });
token_enum!(Label { Ddos => "ddos", Legit => "legit" });
token_enum!(VolumeUnit { Bytes => "bytes", Packets => "packets", Connections => "connections" });

impl Protocol {
    pub const ALL: [Protocol; 5] = [
        Protocol::Tcp,
        Protocol::Udp,
        Protocol::Icmp,
        Protocol::Ipsec,
        Protocol::Any,
    ];

    /// Rule-side match: `ANY` matches everything, otherwise exact equality.
    pub fn matches(&self, packet: Protocol) -> bool {
        *self == Protocol::Any || *self == packet
    }
}

impl TcpFlags {
    pub const ALL: [TcpFlags; 6] = [
        TcpFlags::Syn,
        TcpFlags::SynAck,
        TcpFlags::Ack,
        TcpFlags::Fin,
        TcpFlags::Rst,
        TcpFlags::Any,
    ];

    pub fn matches(&self, packet: TcpFlags) -> bool {
        *self == TcpFlags::Any || *self == packet
    }
}

/// One labeled flow observation with the filtering nodes on its path.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowRecord {
    pub timestamp: f64,
    pub source: SourceSpec,
    pub protocol: Protocol,
    pub tcp_flags: TcpFlags,
    pub destination: SourceSpec,
    pub volume: Volume,
    pub label: Label,
    /// Filtering nodes ordered from the source side to the victim side.
    pub path: Vec<NodeId>,
}

impl FlowRecord {
    pub fn is_ddos(&self) -> bool {
        self.label == Label::Ddos
    }

    pub fn traverses(&self, node: NodeId) -> bool {
        self.path.contains(&node)
    }
}
