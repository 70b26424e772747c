//! Building-block hill-climbing for hierarchical problems.
//!
//! The search runs a hill-climber over *building blocks* instead of single
//! bits. Each block is a set of loci together with the bit patterns it may
//! take, and the neighborhood of a state is every single-block configuration
//! swap. Results of repeated climbs are kept in a memory; blocks whose
//! configurations correspond one-to-one across that memory are merged, so the
//! neighborhood grows level by level until the hierarchy is solved.
//!
//! Crate layout:
//!
//! - [`hfuncs`]: hIFF, hXOR and hTrap evaluators, shuffling, optimum values.
//! - [`bbmodel`]: building blocks, block structures, states and decoding.
//! - [`hillclimb`]: the block-wise climber and the bit-flip baseline.
//! - [`linkage`]: memory buffer, linkage detection and structure rebuild.
//! - [`driver`]: the outer accumulate/learn loop.
//! - [`bench`]: sweeps, scaling fits, baseline comparison and file output.

pub mod bbmodel;
pub mod bench;
pub mod driver;
mod error;
pub mod hfuncs;
pub mod hillclimb;
pub mod linkage;
pub mod seeds;

pub use bbmodel::{BbState, BbStructure, BuildingBlock};
pub use driver::{run_bbhc, structure_correct, EpochRecord, RunConfig, RunResult};
pub use error::{BbhcError, Result};
pub use hfuncs::{Evaluator, Genotype, LevelWeight, Problem, ProblemKind, ProblemSpec};
pub use hillclimb::{bb_hill_climb, bitflip_hill_climb, random_restart_bitflip, ClimbResult};
pub use linkage::{detect_clusters, linked, rebuild_structure, MemoryBuffer, MemoryEntry};
