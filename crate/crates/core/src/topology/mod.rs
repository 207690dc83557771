// SPDX-License-Identifier: Apache-2.0

//! AS-level topologies, participation profiles and attack generation.

mod attack;
mod graph;
mod profile;
mod synth;

pub use attack::{generate_attack, AttackConfig, AttackConfigError, VolumeModel};
pub use graph::{compute_path, load_topology, write_topology, Routes, Topology, TopologyError};
pub use profile::{apply_profile, FilterProfile, ProfileError};
pub use synth::{synthesize, SynthConfig};
