// SPDX-License-Identifier: Apache-2.0

//! `adf`: rule generation, placement and replay experiments.

mod args;
mod experiment;
mod node;
mod output;

use clap::{Parser, Subcommand};

use args::{
    GenAttackArgs, GenTopologyArgs, GenerateArgs, PlaceArgs, ServeNodeArgs, SimulateArgs,
    SubmitArgs,
};

#[derive(Parser, Debug)]
#[command(
    name = "adf",
    version,
    about = "Adaptive distributed filtering experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate filtering rules for each batch of a trace
    Generate(GenerateArgs),
    /// Assign rules to filtering nodes under a per-node limit
    Place(PlaceArgs),
    /// Replay a trace second by second with rules generated and placed online
    Simulate(SimulateArgs),
    /// Write a synthetic three-tier AS topology
    GenTopology(GenTopologyArgs),
    /// Write a labeled attack trace over a topology
    GenAttack(GenAttackArgs),
    /// Run one filtering node
    ServeNode(ServeNodeArgs),
    /// Push placed rules to filtering nodes and report the acks
    Submit(SubmitArgs),
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => experiment::generate(&a),
        Command::Place(a) => experiment::place(&a),
        Command::Simulate(a) => experiment::simulate(&a),
        Command::GenTopology(a) => experiment::gen_topology(&a),
        Command::GenAttack(a) => experiment::gen_attack(&a),
        Command::ServeNode(a) => node::serve(&a),
        Command::Submit(a) => node::submit(&a),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
