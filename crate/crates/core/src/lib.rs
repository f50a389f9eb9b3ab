//! Complexifying neuroevolution (NEAT) coupled to a deterministic two-robot
//! duel, with host/parasite coevolution and dominance-tournament progress
//! measurement.
//!
//! Module map:
//!
//! - [`genome`]: genetic encoding, mutation, crossover, compatibility distance
//!   and the genome text format.
//! - [`network`]: recurrent phenotype built from a genome.
//! - [`speciation`]: species assignment, fitness sharing, offspring allocation
//!   and reproduction.
//! - [`duel`]: the robot duel simulator.
//! - [`coevolution`]: the two-population generational loop and run archives.
//! - [`dominance`]: 288-game comparisons, dominance hierarchy and scoring.
//! - [`cli`]: configuration files, archive I/O and the operator commands.

pub mod cli;
pub mod coevolution;
pub mod dominance;
pub mod duel;
pub mod genome;
pub mod network;
pub mod params;
pub mod rng;
pub mod speciation;

pub use coevolution::{run_coevolution, CoevolutionConfig, EvolutionMode, FixedTopology, RunArchive};
pub use dominance::{compare, ComparisonResult, DominanceHierarchy};
pub use duel::{run_duel, DuelConfig, DuelOutcome, Winner};
pub use genome::{Genome, InnovationRegistry, IoSpec};
pub use network::Network;
pub use params::EvolutionParams;
