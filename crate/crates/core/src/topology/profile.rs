// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::topology::Topology;
use crate::NodeId;

/// Per-tier participation rates in distributed filtering.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterProfile {
    pub name: String,
    pub rates: [f64; 3],
    pub seed: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("unknown profile {0:?}")]
    Unknown(String),
    #[error("participation rate {0} outside [0, 1]")]
    Rate(f64),
}

impl FilterProfile {
    /// Named presets, in the order they are usually reported.
    pub const PRESETS: [(&'static str, [f64; 3]); 6] = [
        ("full-participation", [1.0, 1.0, 1.0]),
        ("tier1-only", [1.0, 0.0, 0.0]),
        ("top-centered", [1.0, 0.5, 0.0]),
        ("middle-centered", [0.0, 0.8, 0.2]),
        ("bottom-centered", [0.0, 0.2, 0.8]),
        ("victim-only", [0.0, 0.0, 0.0]),
    ];

    pub fn new(name: &str, rates: [f64; 3], seed: u64) -> Result<Self, ProfileError> {
        if let Some(&r) = rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(ProfileError::Rate(r));
        }
        Ok(FilterProfile {
            name: name.to_string(),
            rates,
            seed,
        })
    }

    pub fn preset(name: &str, seed: u64) -> Result<Self, ProfileError> {
        let (n, rates) = Self::PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| ProfileError::Unknown(name.to_string()))?;
        Self::new(n, *rates, seed)
    }

    pub fn all_presets(seed: u64) -> Vec<FilterProfile> {
        Self::PRESETS
            .iter()
            .map(|(n, r)| FilterProfile {
                name: n.to_string(),
                rates: *r,
                seed,
            })
            .collect()
    }
}

impl fmt::Display for FilterProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// Parses a preset name or `r1:r2:r3` rates (seed 0).
impl FromStr for FilterProfile {
    type Err = ProfileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() == 3 {
            let mut rates = [0.0; 3];
            for (r, p) in rates.iter_mut().zip(&parts) {
                *r = p
                    .trim()
                    .parse()
                    .map_err(|_| ProfileError::Unknown(s.to_string()))?;
            }
            return Self::new(s, rates, 0);
        }
        Self::preset(s, 0)
    }
}

/// Participating ASes: per tier, a seeded uniform subset of
/// `floor(rate * tier size)` ASes. With all rates zero the victim alone
/// participates.
pub fn apply_profile(topo: &Topology, profile: &FilterProfile) -> BTreeSet<NodeId> {
    if profile.rates.iter().all(|&r| r == 0.0) {
        return topo.victim().into_iter().collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let mut out = BTreeSet::new();
    for (tier, &rate) in (1u8..=3).zip(&profile.rates) {
        let members = topo.tier_members(tier);
        let k = (rate * members.len() as f64).floor() as usize;
        out.extend(
            sample(&mut rng, members.len(), k.min(members.len()))
                .into_iter()
                .map(|i| members[i]),
        );
    }
    out
}
