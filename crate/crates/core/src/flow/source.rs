// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use thiserror::Error;

/// Granularity of a [`SourceSpec`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SourceKind {
    Prefix,
    Address,
    AddressPort,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("prefix length {0} exceeds 32")]
    PrefixTooLong(u8),
    #[error("host bits set below /{len} in {addr}")]
    HostBitsSet { addr: Ipv4Addr, len: u8 },
    #[error("cannot parse source specification {0:?}")]
    Syntax(String),
}

/// A traffic source: an IPv4 prefix, a single address, or an address plus a
/// source port.
///
/// A `/32` prefix is the same thing as the address, so it is always stored as
/// [`SourceKind::Address`]. The wildcard source is `0.0.0.0/0`.
///
/// Ordering is lexicographic on (address, prefix length, port) with a portless
/// spec sorting before any port-carrying one on the same address.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourceSpec {
    addr: u32,
    len: u8,
    port: Option<u16>,
}

pub(crate) fn mask(len: u8) -> u32 {
    if len == 0 {
        0
    } else {
        u32::MAX << (32 - u32::from(len))
    }
}

impl SourceSpec {
    pub const ANY: SourceSpec = SourceSpec {
        addr: 0,
        len: 0,
        port: None,
    };

    pub fn prefix(addr: Ipv4Addr, len: u8) -> Result<Self, SpecError> {
        if len > 32 {
            return Err(SpecError::PrefixTooLong(len));
        }
        let bits = u32::from(addr);
        if bits & !mask(len) != 0 {
            return Err(SpecError::HostBitsSet { addr, len });
        }
        Ok(SourceSpec {
            addr: bits,
            len,
            port: None,
        })
    }

    /// Builds the prefix of length `len` containing `addr`, clearing host bits.
    pub fn covering_prefix(addr: Ipv4Addr, len: u8) -> Self {
        let len = len.min(32);
        SourceSpec {
            addr: u32::from(addr) & mask(len),
            len,
            port: None,
        }
    }

    pub fn address(addr: Ipv4Addr) -> Self {
        SourceSpec {
            addr: addr.into(),
            len: 32,
            port: None,
        }
    }

    pub fn address_port(addr: Ipv4Addr, port: u16) -> Self {
        SourceSpec {
            addr: addr.into(),
            len: 32,
            port: Some(port),
        }
    }

    pub fn kind(&self) -> SourceKind {
        match (self.len, self.port) {
            (_, Some(_)) => SourceKind::AddressPort,
            (32, None) => SourceKind::Address,
            _ => SourceKind::Prefix,
        }
    }

    pub fn addr(&self) -> Ipv4Addr {
        Ipv4Addr::from(self.addr)
    }

    pub fn addr_bits(&self) -> u32 {
        self.addr
    }

    pub fn prefix_len(&self) -> u8 {
        self.len
    }

    pub fn port(&self) -> Option<u16> {
        self.port
    }

    /// First address of the covered range.
    pub fn first(&self) -> u32 {
        self.addr
    }

    /// Last address of the covered range.
    pub fn last(&self) -> u32 {
        self.addr | !mask(self.len)
    }

    /// True for single-host sources (address or address plus port).
    pub fn is_concrete(&self) -> bool {
        self.len == 32
    }

    pub fn is_wildcard(&self) -> bool {
        self.len == 0
    }

    /// The same source with the port dropped.
    pub fn without_port(&self) -> Self {
        SourceSpec {
            port: None,
            ..*self
        }
    }

    /// True iff every packet from `other` also matches `self`.
    ///
    /// Address ranges must nest; a port-specific spec only covers the same
    /// address with the same port.
    pub fn covers(&self, other: &SourceSpec) -> bool {
        if let Some(p) = self.port {
            return other.port == Some(p) && other.addr == self.addr;
        }
        self.len <= other.len && (other.addr & mask(self.len)) == self.addr
    }

    /// True iff the two specs share at least one packet.
    pub fn overlaps(&self, other: &SourceSpec) -> bool {
        self.covers(other) || other.covers(self)
    }
}

impl fmt::Display for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            SourceKind::Prefix => write!(f, "{}/{}", self.addr(), self.len),
            SourceKind::Address => write!(f, "{}", self.addr()),
            SourceKind::AddressPort => write!(f, "{}:{}", self.addr(), self.port.unwrap_or(0)),
        }
    }
}

impl fmt::Debug for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for SourceSpec {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "*" {
            return Ok(SourceSpec::ANY);
        }
        let syntax = || SpecError::Syntax(s.to_string());
        if let Some((addr, len)) = s.split_once('/') {
            let addr: Ipv4Addr = addr.parse().map_err(|_| syntax())?;
            let len: u8 = len.parse().map_err(|_| syntax())?;
            return SourceSpec::prefix(addr, len);
        }
        if let Some((addr, port)) = s.split_once(':') {
            let addr: Ipv4Addr = addr.parse().map_err(|_| syntax())?;
            let port: u16 = port.parse().map_err(|_| syntax())?;
            return Ok(SourceSpec::address_port(addr, port));
        }
        let addr: Ipv4Addr = s.parse().map_err(|_| syntax())?;
        Ok(SourceSpec::address(addr))
    }
}
