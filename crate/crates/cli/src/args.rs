// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use adf_core::experiment::Budget;
use adf_core::topology::SynthConfig;
use adf_core::Objective;
use clap::Args;

/// Where the flows come from: a trace file, or traffic generated over a
/// topology.
#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Trace file
    #[arg(long, conflicts_with_all = ["attack", "set"])]
    pub trace: Option<PathBuf>,
    /// Topology file; used to generate traffic when no trace is given and to
    /// pick participating ASes
    #[arg(long)]
    pub topology: Option<PathBuf>,
    #[command(flatten)]
    pub attack: AttackArgs,
    #[command(flatten)]
    pub profile: ProfileArgs,
}

#[derive(Args, Debug, Clone)]
pub struct AttackArgs {
    /// Attack settings, one key=value per line
    #[arg(long)]
    pub attack: Option<PathBuf>,
    /// Override one attack setting (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Args, Debug, Clone)]
pub struct ProfileArgs {
    /// Filtering profile: a preset name or tier rates `r1:r2:r3`
    #[arg(long, default_value = "full-participation")]
    pub profile: String,
    /// Seed for picking participating ASes
    #[arg(long, default_value_t = 1)]
    pub profile_seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct ProblemArgs {
    /// Objective to optimize
    #[arg(long)]
    pub problem: Objective,
    /// Minimum DDoS coverage D: volume, percentage of filterable DDoS, or `inf`
    #[arg(long)]
    pub min_coverage: Option<Budget>,
    /// Maximum collateral L: volume, percentage of legitimate traffic, or `inf`
    #[arg(long)]
    pub max_collateral: Option<Budget>,
    /// Rule budget M: a count or `inf`
    #[arg(long)]
    pub rule_budget: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct WindowArgs {
    /// Batch window in seconds
    #[arg(long, default_value_t = 1.0)]
    pub window: f64,
    /// Rule lifetime in seconds [default: twice the window]
    #[arg(long)]
    pub lifetime: Option<f64>,
}

impl WindowArgs {
    pub fn lifetime(&self) -> f64 {
        self.lifetime.unwrap_or(2.0 * self.window)
    }
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PlaceArgs {
    /// Rule file
    #[arg(long)]
    pub rules: PathBuf,
    /// Rules each node can hold
    #[arg(long)]
    pub limit: usize,
    /// Topology file; restricts candidates to the profile's participants
    #[arg(long)]
    pub topology: Option<PathBuf>,
    #[command(flatten)]
    pub profile: ProfileArgs,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Objective to optimize; omit together with the constraints to replay
    /// without filtering
    #[arg(long)]
    pub problem: Option<Objective>,
    #[arg(long, requires = "problem")]
    pub min_coverage: Option<Budget>,
    #[arg(long, requires = "problem")]
    pub max_collateral: Option<Budget>,
    #[arg(long, requires = "problem")]
    pub rule_budget: Option<String>,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Rules each node can hold
    #[arg(long, default_value_t = 100)]
    pub limit: usize,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct GenTopologyArgs {
    #[arg(long, default_value_t = SynthConfig::INTERNET.tier1)]
    pub tier1: u32,
    #[arg(long, default_value_t = SynthConfig::INTERNET.tier2)]
    pub tier2: u32,
    #[arg(long, default_value_t = SynthConfig::INTERNET.tier3)]
    pub tier3: u32,
    /// Extra tier-2 peering links per tier-2 AS
    #[arg(long, default_value_t = SynthConfig::INTERNET.tier2_peers)]
    pub tier2_peers: u32,
    #[arg(long, default_value_t = SynthConfig::INTERNET.seed)]
    pub seed: u64,
    /// Output file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct GenAttackArgs {
    /// Topology file
    #[arg(long)]
    pub topology: PathBuf,
    #[command(flatten)]
    pub attack: AttackArgs,
    #[command(flatten)]
    pub profile: ProfileArgs,
    /// Output trace file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ServeNodeArgs {
    /// Address to listen on; port 0 picks a free port
    #[arg(long, default_value = "127.0.0.1:7700")]
    pub listen: String,
    /// Rules the node can hold
    #[arg(long)]
    pub capacity: usize,
}

#[derive(Args, Debug)]
pub struct SubmitArgs {
    /// Rule file
    #[arg(long)]
    pub rules: PathBuf,
    /// Placement file; placed rules go to their node first
    #[arg(long)]
    pub placement: Option<PathBuf>,
    /// Node address as ID=HOST:PORT (repeatable)
    #[arg(long = "node", value_name = "ID=HOST:PORT")]
    pub nodes: Vec<String>,
    /// File of ID=HOST:PORT lines
    #[arg(long)]
    pub node_file: Option<PathBuf>,
    /// Unix time added to rule start and end times, or `now`
    #[arg(long, default_value = "now")]
    pub epoch: String,
    /// Per-request timeout in milliseconds
    #[arg(long, default_value_t = 5000)]
    pub timeout_ms: u64,
    /// Retries on a fresh connection after a failed exchange
    #[arg(long, default_value_t = 1)]
    pub retries: u32,
    /// Ack report; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}
