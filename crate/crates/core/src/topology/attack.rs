// SPDX-License-Identifier: Apache-2.0

//! Synthetic attack traffic over a topology.
//!
//! Configuration is a `key=value` text file; every key is optional.
//!
//! ```text
//! ddos_sources=1000
//! legit_sources=500
//! duration=60
//! ramp=10
//! volume=lognormal:3:0.5
//! spoof_fraction=0.1
//! ports=true
//! seed=7
//! ```

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::net::Ipv4Addr;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Pareto};
use thiserror::Error;

use crate::flow::{FlowRecord, Label, Protocol, SourceSpec, TcpFlags, Trace, VolumeUnit};
use crate::topology::{Topology, TopologyError};
use crate::{NodeId, Volume};

/// Per-source volume distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VolumeModel {
    Constant(f64),
    Uniform(f64, f64),
    LogNormal { mu: f64, sigma: f64 },
    Pareto { scale: f64, shape: f64 },
}

impl VolumeModel {
    fn sample<R: Rng>(&self, rng: &mut R) -> Volume {
        match *self {
            VolumeModel::Constant(v) => v,
            VolumeModel::Uniform(a, b) if a == b => a,
            VolumeModel::Uniform(a, b) => rng.random_range(a..b),
            VolumeModel::LogNormal { mu, sigma } => {
                LogNormal::new(mu, sigma).expect("validated").sample(rng)
            }
            VolumeModel::Pareto { scale, shape } => {
                Pareto::new(scale, shape).expect("validated").sample(rng)
            }
        }
    }
}

impl fmt::Display for VolumeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VolumeModel::Constant(v) => write!(f, "constant:{v}"),
            VolumeModel::Uniform(a, b) => write!(f, "uniform:{a}:{b}"),
            VolumeModel::LogNormal { mu, sigma } => write!(f, "lognormal:{mu}:{sigma}"),
            VolumeModel::Pareto { scale, shape } => write!(f, "pareto:{scale}:{shape}"),
        }
    }
}

impl FromStr for VolumeModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let nums = parts[1..]
            .iter()
            .map(|p| p.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| format!("bad number in volume model {s:?}"))?;
        let model = match (parts[0], nums.as_slice()) {
            ("constant", &[v]) if v > 0.0 => VolumeModel::Constant(v),
            ("uniform", &[a, b]) if 0.0 < a && a <= b => VolumeModel::Uniform(a, b),
            ("lognormal", &[mu, sigma]) if sigma >= 0.0 => VolumeModel::LogNormal { mu, sigma },
            ("pareto", &[scale, shape]) if scale > 0.0 && shape > 0.0 => VolumeModel::Pareto { scale, shape },
            _ => {
                return Err(format!(
                    "volume model {s:?} is not one of constant:v, uniform:a:b, lognormal:mu:sigma, pareto:scale:shape"
                ))
            }
        };
        Ok(model)
    }
}

/// Attack generator settings.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackConfig {
    pub ddos_sources: usize,
    pub legit_sources: usize,
    /// Seconds of traffic; every active source sends one flow per second.
    pub duration: u32,
    /// Bots join at a random whole second in `[0, ramp)`; 0 means all at once.
    pub ramp: u32,
    pub volume: VolumeModel,
    /// Chance that a bot forges the address of a legitimate source.
    pub spoof_fraction: f64,
    /// Give every source a random ephemeral port.
    pub ports: bool,
    /// Home all bots in this many random ASes; 0 spreads them over every AS.
    pub ddos_home_ases: usize,
    /// Same for legitimate sources.
    pub legit_home_ases: usize,
    pub destination: Ipv4Addr,
    pub protocol: Protocol,
    pub unit: VolumeUnit,
    pub seed: u64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            ddos_sources: 1000,
            legit_sources: 500,
            duration: 1,
            ramp: 0,
            volume: VolumeModel::Constant(1.0),
            spoof_fraction: 0.0,
            ports: false,
            ddos_home_ases: 0,
            legit_home_ases: 0,
            destination: Ipv4Addr::new(203, 0, 113, 1),
            protocol: Protocol::Udp,
            unit: VolumeUnit::Packets,
            seed: 1,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AttackConfigError {
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for {key}: {msg}")]
    BadValue {
        line: usize,
        key: String,
        msg: String,
    },
    #[error("line {line}: read failed: {msg}")]
    Io { line: usize, msg: String },
}

impl AttackConfig {
    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(v: &str) -> Result<T, String> {
            v.parse()
                .map_err(|_| format!("{v:?} is not a valid number"))
        }
        match key {
            "ddos_sources" => self.ddos_sources = num(value)?,
            "legit_sources" => self.legit_sources = num(value)?,
            "duration" => self.duration = num(value)?,
            "ramp" => self.ramp = num(value)?,
            "volume" => self.volume = value.parse()?,
            "spoof_fraction" => {
                let f: f64 = num(value)?;
                if !(0.0..=1.0).contains(&f) {
                    return Err(format!("{f} outside [0, 1]"));
                }
                self.spoof_fraction = f;
            }
            "ports" => {
                self.ports = value
                    .parse()
                    .map_err(|_| format!("{value:?} is not true or false"))?
            }
            "ddos_home_ases" => self.ddos_home_ases = num(value)?,
            "legit_home_ases" => self.legit_home_ases = num(value)?,
            "destination" => {
                self.destination = value
                    .parse()
                    .map_err(|_| format!("{value:?} is not an IPv4 address"))?
            }
            "protocol" => {
                self.protocol = value
                    .parse()
                    .map_err(|_| format!("unknown protocol {value:?}"))?
            }
            "unit" => {
                self.unit = value
                    .parse()
                    .map_err(|_| format!("unknown unit {value:?}"))?
            }
            "seed" => self.seed = num(value)?,
            _ => return Err(String::new()),
        }
        Ok(())
    }

    pub fn parse<R: BufRead>(reader: R) -> Result<Self, AttackConfigError> {
        let mut cfg = AttackConfig::default();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| AttackConfigError::Io {
                line: line_no,
                msg: e.to_string(),
            })?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(AttackConfigError::Syntax { line: line_no })?;
            let (key, value) = (key.trim(), value.trim());
            cfg.set(key, value).map_err(|msg| {
                if msg.is_empty() {
                    AttackConfigError::UnknownKey {
                        line: line_no,
                        key: key.to_string(),
                    }
                } else {
                    AttackConfigError::BadValue {
                        line: line_no,
                        key: key.to_string(),
                        msg,
                    }
                }
            })?;
        }
        Ok(cfg)
    }
}

impl fmt::Display for AttackConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ddos_sources={}", self.ddos_sources)?;
        writeln!(f, "legit_sources={}", self.legit_sources)?;
        writeln!(f, "duration={}", self.duration)?;
        writeln!(f, "ramp={}", self.ramp)?;
        writeln!(f, "volume={}", self.volume)?;
        writeln!(f, "spoof_fraction={}", self.spoof_fraction)?;
        writeln!(f, "ports={}", self.ports)?;
        writeln!(f, "ddos_home_ases={}", self.ddos_home_ases)?;
        writeln!(f, "legit_home_ases={}", self.legit_home_ases)?;
        writeln!(f, "destination={}", self.destination)?;
        writeln!(f, "protocol={}", self.protocol)?;
        writeln!(f, "unit={}", self.unit)?;
        writeln!(f, "seed={}", self.seed)
    }
}

struct Source {
    spec: SourceSpec,
    path: Vec<NodeId>,
    volume: Volume,
    label: Label,
    join: u32,
}

/// Hands out one random /20 block per home AS and distinct hosts inside it.
struct AddressBook {
    blocks: HashMap<NodeId, u32>,
    used_blocks: HashSet<u32>,
    used_hosts: HashSet<u32>,
}

impl AddressBook {
    fn host<R: Rng>(&mut self, rng: &mut R, home: NodeId) -> Ipv4Addr {
        let block = *self.blocks.entry(home).or_insert_with(|| loop {
            // First octet 1..=223.
            let b = rng.random_range(1u32 << 12..224u32 << 12);
            if self.used_blocks.insert(b) {
                break b;
            }
        });
        loop {
            let addr = block << 12 | rng.random_range(1..4095u32);
            if self.used_hosts.insert(addr) {
                return Ipv4Addr::from(addr);
            }
        }
    }
}

/// Generates a labeled trace toward the topology's victim.
///
/// Sources get random addresses inside a /20 block owned by their home AS.
/// A flow's path lists the participating ASes on the shortest path from its
/// home AS to the victim, followed by the victim AS when it is not already
/// there. Spoofing bots reuse a legitimate source's address (with their own
/// port when ports are on) but keep their own path.
pub fn generate_attack(
    topo: &Topology,
    participants: &BTreeSet<NodeId>,
    cfg: &AttackConfig,
) -> Result<Trace, TopologyError> {
    let victim = topo.victim().ok_or(TopologyError::NoSuchNode(NodeId(0)))?;
    let routes = topo.routes_to(victim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let homes: Vec<NodeId> = topo
        .nodes()
        .iter()
        .copied()
        .filter(|&n| n != victim)
        .collect();
    let homes = if homes.is_empty() {
        vec![victim]
    } else {
        homes
    };
    let pick_homes = |rng: &mut ChaCha8Rng, k: usize| -> Vec<NodeId> {
        if k == 0 || k >= homes.len() {
            homes.clone()
        } else {
            rand::seq::index::sample(rng, homes.len(), k)
                .into_iter()
                .map(|i| homes[i])
                .collect()
        }
    };
    let ddos_homes = pick_homes(&mut rng, cfg.ddos_home_ases);
    let legit_homes = pick_homes(&mut rng, cfg.legit_home_ases);

    let mut paths: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
    let mut path_of = |home: NodeId| -> Result<Vec<NodeId>, TopologyError> {
        if let Some(p) = paths.get(&home) {
            return Ok(p.clone());
        }
        let mut p: Vec<NodeId> = routes
            .path(home)?
            .into_iter()
            .filter(|n| participants.contains(n))
            .collect();
        if p.last() != Some(&victim) {
            p.push(victim);
        }
        paths.insert(home, p.clone());
        Ok(p)
    };
    let mut book = AddressBook {
        blocks: HashMap::new(),
        used_blocks: HashSet::new(),
        used_hosts: HashSet::new(),
    };
    let port = |rng: &mut ChaCha8Rng| rng.random_range(1024..=65535u16);
    let spec = |addr: Ipv4Addr, port: Option<u16>| match port {
        Some(p) => SourceSpec::address_port(addr, p),
        None => SourceSpec::address(addr),
    };

    let mut sources = Vec::with_capacity(cfg.ddos_sources + cfg.legit_sources);
    for _ in 0..cfg.legit_sources {
        let home = legit_homes[rng.random_range(0..legit_homes.len())];
        let addr = book.host(&mut rng, home);
        let p = cfg.ports.then(|| port(&mut rng));
        let volume = cfg.volume.sample(&mut rng);
        sources.push(Source {
            spec: spec(addr, p),
            path: path_of(home)?,
            volume,
            label: Label::Legit,
            join: 0,
        });
    }
    let legit_count = sources.len();
    for _ in 0..cfg.ddos_sources {
        let home = ddos_homes[rng.random_range(0..ddos_homes.len())];
        let spoof =
            legit_count > 0 && cfg.spoof_fraction > 0.0 && rng.random_bool(cfg.spoof_fraction);
        let addr = if spoof {
            sources[rng.random_range(0..legit_count)].spec.addr()
        } else {
            book.host(&mut rng, home)
        };
        let p = cfg.ports.then(|| port(&mut rng));
        let volume = cfg.volume.sample(&mut rng);
        let join = if cfg.ramp > 0 {
            rng.random_range(0..cfg.ramp)
        } else {
            0
        };
        sources.push(Source {
            spec: spec(addr, p),
            path: path_of(home)?,
            volume,
            label: Label::Ddos,
            join,
        });
    }

    let destination = SourceSpec::address(cfg.destination);
    let mut flows = Vec::new();
    for second in 0..cfg.duration {
        for s in sources.iter().filter(|s| s.join <= second) {
            flows.push(FlowRecord {
                timestamp: second as f64 + rng.random_range(0..1000u32) as f64 / 1000.0,
                source: s.spec,
                protocol: cfg.protocol,
                tcp_flags: TcpFlags::Any,
                destination,
                volume: s.volume,
                label: s.label,
                path: s.path.clone(),
            });
        }
    }
    flows.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    Ok(Trace {
        unit: cfg.unit,
        flows,
    })
}
