// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::net::Ipv4Addr;
use std::sync::{Arc, RwLock};

use crate::flow::{Protocol, SourceSpec, TcpFlags};
use crate::protocol::wire::{AckCode, RuleAck, RuleSubmission};

/// A validated, installed rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InstalledRule {
    pub source: SourceSpec,
    pub protocol: Protocol,
    pub tcp_flags: TcpFlags,
    pub destination: SourceSpec,
    pub start: u64,
    /// Expiry: the rule stops matching at this second.
    pub end: u64,
}

impl InstalledRule {
    pub fn is_active(&self, now: u64) -> bool {
        self.start <= now && now < self.end
    }

    pub fn matches(&self, pkt: &Packet) -> bool {
        self.source.covers(&pkt.source)
            && self.protocol.matches(pkt.protocol)
            && self.tcp_flags.matches(pkt.tcp_flags)
            && self
                .destination
                .covers(&SourceSpec::address(pkt.destination))
    }
}

/// Hook for submission authentication; the default accepts everything.
pub trait Verifier: Send + Sync {
    fn verify(&self, msg: &RuleSubmission) -> bool;
}

pub struct AcceptAll;

impl Verifier for AcceptAll {
    fn verify(&self, _: &RuleSubmission) -> bool {
        true
    }
}

/// Rules installed at one filtering node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleTable {
    capacity: usize,
    entries: BTreeMap<u64, InstalledRule>,
}

impl RuleTable {
    pub fn new(capacity: usize) -> Self {
        RuleTable {
            capacity,
            entries: BTreeMap::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&InstalledRule> {
        self.entries.get(&id)
    }

    pub fn entries(&self) -> impl Iterator<Item = (u64, &InstalledRule)> {
        self.entries.iter().map(|(&id, r)| (id, r))
    }

    /// Drops rules whose end time has passed.
    pub fn purge_expired(&mut self, now: u64) {
        self.entries.retain(|_, r| r.end > now);
    }

    /// Rules as `rule <id> deny <proto> from <src> to <dst> flags <flags>
    /// active <start>-<end>` lines, by id.
    pub fn export_acl(&self) -> String {
        let mut out = String::new();
        for (id, r) in &self.entries {
            let _ = writeln!(
                out,
                "rule {id} deny {} from {} to {} flags {} active {}-{}",
                r.protocol.as_str().to_ascii_lowercase(),
                r.source,
                r.destination,
                r.tcp_flags,
                r.start,
                r.end
            );
        }
        out
    }
}

pub type SharedTable = Arc<RwLock<RuleTable>>;

pub fn shared_table(capacity: usize) -> SharedTable {
    Arc::new(RwLock::new(RuleTable::new(capacity)))
}

/// Processes a submission at time `now` (seconds).
///
/// Checks run in this order: timing (end not after now or start: code 2),
/// rule space after purging expired rules (code 3; re-submitting an installed
/// id replaces it and needs no new space), structural validation and
/// verification (code 1). Otherwise the rule is installed.
pub fn node_handle(table: &mut RuleTable, msg: &RuleSubmission, now: u64) -> RuleAck {
    node_handle_verified(table, msg, now, &AcceptAll)
}

pub fn node_handle_verified(
    table: &mut RuleTable,
    msg: &RuleSubmission,
    now: u64,
    v: &dyn Verifier,
) -> RuleAck {
    let ack = |code| RuleAck::new(msg.rule_id, code);
    if msg.end_time <= now || msg.end_time <= msg.start_time {
        return ack(AckCode::Timing);
    }
    table.purge_expired(now);
    if !table.entries.contains_key(&msg.rule_id) && table.entries.len() >= table.capacity {
        return ack(AckCode::OutOfRuleSpace);
    }
    let (Ok(source), Ok(destination)) = (msg.source.validate(), msg.destination.validate()) else {
        return ack(AckCode::Verification);
    };
    if !v.verify(msg) {
        return ack(AckCode::Verification);
    }
    table.entries.insert(
        msg.rule_id,
        InstalledRule {
            source,
            protocol: msg.protocol,
            tcp_flags: msg.tcp_flags,
            destination,
            start: msg.start_time,
            end: msg.end_time,
        },
    );
    ack(AckCode::Ok)
}

/// Header fields a filtering node inspects.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Packet {
    /// Source address, with the source port when known.
    pub source: SourceSpec,
    pub protocol: Protocol,
    pub tcp_flags: TcpFlags,
    pub destination: Ipv4Addr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Drop,
    Pass,
}

/// Drops the packet iff a rule active at `now` matches all four fields.
pub fn filter_packet(table: &RuleTable, pkt: &Packet, now: u64) -> Verdict {
    if table
        .entries
        .values()
        .any(|r| r.is_active(now) && r.matches(pkt))
    {
        Verdict::Drop
    } else {
        Verdict::Pass
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::wire::{RawSpec, VERSION};

    fn sub(id: u64, src: &str, start: u64, end: u64) -> RuleSubmission {
        RuleSubmission {
            version: VERSION,
            rule_id: id,
            source: src.parse::<SourceSpec>().unwrap().into(),
            protocol: Protocol::Any,
            tcp_flags: TcpFlags::Any,
            destination: SourceSpec::ANY.into(),
            start_time: start,
            end_time: end,
        }
    }

    fn pkt(src: &str) -> Packet {
        Packet {
            source: src.parse().unwrap(),
            protocol: Protocol::Udp,
            tcp_flags: TcpFlags::Any,
            destination: Ipv4Addr::new(192, 0, 2, 1),
        }
    }

    #[test]
    fn install_and_codes() {
        let mut t = RuleTable::new(1);
        assert_eq!(
            node_handle(&mut t, &sub(1, "10.0.0.0/24", 0, 100), 10).code,
            AckCode::Ok
        );
        assert_eq!(t.len(), 1);
        assert_eq!(
            node_handle(&mut t, &sub(2, "10.0.1.0/24", 0, 100), 10).code,
            AckCode::OutOfRuleSpace
        );
        assert_eq!(
            node_handle(&mut t, &sub(1, "10.0.2.0/24", 0, 100), 10).code,
            AckCode::Ok
        );
        assert_eq!(t.get(1).unwrap().source.to_string(), "10.0.2.0/24");
        assert_eq!(
            node_handle(&mut t, &sub(3, "10.0.0.0/24", 0, 5), 10).code,
            AckCode::Timing
        );
        assert_eq!(
            node_handle(&mut t, &sub(3, "10.0.0.0/24", 50, 50), 10).code,
            AckCode::Timing
        );
        // Rule 1 expires at 100, freeing its slot.
        assert_eq!(
            node_handle(&mut t, &sub(4, "10.0.0.0/24", 0, 300), 100).code,
            AckCode::Ok
        );
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn malformed_spec_is_a_verification_error() {
        let mut t = RuleTable::new(4);
        let mut m = sub(1, "10.0.0.0/24", 0, 100);
        m.source = RawSpec {
            kind: 0,
            addr: 0x0a000001,
            plen: 24,
            port: 0,
        };
        assert_eq!(node_handle(&mut t, &m, 0).code, AckCode::Verification);
        assert!(t.is_empty());
    }

    #[test]
    fn filtering() {
        let mut t = RuleTable::new(4);
        node_handle(&mut t, &sub(1, "10.0.0.0/24", 0, 100), 0);
        node_handle(&mut t, &sub(2, "10.0.1.1:2222", 0, 100), 0);
        assert_eq!(filter_packet(&t, &pkt("10.0.0.128"), 50), Verdict::Drop);
        assert_eq!(filter_packet(&t, &pkt("10.0.0.128"), 100), Verdict::Pass);
        assert_eq!(filter_packet(&t, &pkt("10.0.1.1:3333"), 50), Verdict::Pass);
        assert_eq!(filter_packet(&t, &pkt("10.0.1.1:2222"), 50), Verdict::Drop);
        assert_eq!(filter_packet(&t, &pkt("10.9.0.1"), 50), Verdict::Pass);
    }

    #[test]
    fn acl_export() {
        let mut t = RuleTable::new(4);
        node_handle(&mut t, &sub(7, "10.0.0.0/24", 5, 10), 0);
        assert_eq!(
            t.export_acl(),
            "rule 7 deny any from 10.0.0.0/24 to 0.0.0.0/0 flags ANY active 5-10\n"
        );
    }
}
