// SPDX-License-Identifier: Apache-2.0

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::topology::Topology;
use crate::NodeId;

/// Shape of a synthetic three-tier AS graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SynthConfig {
    pub tier1: u32,
    pub tier2: u32,
    pub tier3: u32,
    /// Extra peering links per tier-2 AS with other tier-2 ASes.
    pub tier2_peers: u32,
    pub seed: u64,
}

impl SynthConfig {
    /// Tier sizes of the measured AS-level Internet.
    pub const INTERNET: SynthConfig = SynthConfig {
        tier1: 89,
        tier2: 8442,
        tier3: 47052,
        tier2_peers: 1,
        seed: 1,
    };

    pub fn total(&self) -> u32 {
        self.tier1 + self.tier2 + self.tier3
    }
}

/// Preferential-attachment sampler: every node appears once per incident edge.
struct Urn(Vec<u32>);

impl Urn {
    fn pick<R: Rng>(&self, rng: &mut R, exclude: &[u32]) -> Option<u32> {
        (0..64)
            .map(|_| self.0[rng.random_range(0..self.0.len())])
            .find(|n| !exclude.contains(n))
    }
}

/// Builds a connected three-tier graph.
///
/// AS ids run from 1 in tier order. Tier-1 ASes form a clique. Each tier-2 AS
/// buys transit from one to three tier-1 or earlier tier-2 providers and may
/// peer with other tier-2 ASes; each tier-3 AS attaches to one or two tier-2
/// providers. Providers are picked with probability proportional to their
/// degree. The victim is a seeded tier-3 AS (or the last AS when tier 3 is
/// empty).
pub fn synthesize(cfg: &SynthConfig) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let t1 = cfg.tier1.max(1);
    let t2_end = t1 + cfg.tier2;
    let total = t2_end + cfg.tier3;
    let mut nodes = Vec::with_capacity(total as usize);
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for id in 1..=total {
        let tier = if id <= t1 {
            1
        } else if id <= t2_end {
            2
        } else {
            3
        };
        nodes.push((NodeId(id), tier));
    }

    for a in 1..=t1 {
        for b in a + 1..=t1 {
            edges.push((a, b));
        }
    }
    let mut upper = Urn((1..=t1)
        .flat_map(|a| std::iter::repeat_n(a, t1 as usize - 1).chain([a]))
        .collect());
    let mut tier2 = Urn(Vec::new());

    for id in t1 + 1..=t2_end {
        let n_up = rng.random_range(1..=3u32);
        let mut chosen: Vec<u32> = Vec::new();
        for _ in 0..n_up {
            chosen.extend(upper.pick(&mut rng, &chosen));
        }
        if !tier2.0.is_empty() {
            for _ in 0..cfg.tier2_peers {
                if rng.random_bool(0.5) {
                    chosen.extend(tier2.pick(&mut rng, &chosen));
                }
            }
        }
        for &p in &chosen {
            edges.push((id, p));
            upper.0.push(p);
            if p > t1 {
                tier2.0.push(p);
            }
        }
        for _ in &chosen {
            upper.0.push(id);
            tier2.0.push(id);
        }
    }

    // Stub ASes attach below tier 2 when it exists, otherwise to tier 1.
    let stub_urn = if tier2.0.is_empty() {
        &mut upper
    } else {
        &mut tier2
    };
    for id in t2_end + 1..=total {
        let n_up = if rng.random_bool(0.3) { 2 } else { 1 };
        let mut chosen: Vec<u32> = Vec::new();
        for _ in 0..n_up {
            chosen.extend(stub_urn.pick(&mut rng, &chosen));
        }
        for &p in &chosen {
            edges.push((id, p));
            stub_urn.0.push(p);
        }
    }

    let victim = if cfg.tier3 > 0 {
        rng.random_range(t2_end + 1..=total)
    } else {
        total
    };
    Topology::from_parts(
        nodes,
        edges.into_iter().map(|(a, b)| (NodeId(a), NodeId(b))),
        Some(NodeId(victim)),
    )
    .expect("generated edges reference generated nodes")
}
