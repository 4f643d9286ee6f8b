//! Bunkbed percolation on graphs, hypergraphs and digraphs.
//!
//! The models E0..E8 are uniform families of configurations over the bunkbed
//! double of a structure. This crate enumerates them exactly, samples them,
//! searches small structures for violations of the bunkbed inequality, and
//! rebuilds the known counterexamples together with the threshold arithmetic
//! behind their blown-up versions.

pub mod bunkbed;
pub mod connectivity;
pub mod constructions;
pub mod error;
pub mod exact;
pub mod models;
pub mod montecarlo;
pub mod rng;
pub mod search;
pub mod structure;
pub mod symmetry;
pub mod thresholds;

pub use bunkbed::{build_bunkbed, Bunk, BunkbedInstance, NodeRef, VerticalMode};
pub use error::{Error, Result};
pub use models::{Configuration, Family, Model, ModelSpec, Semantics};
pub use structure::{parse_structure, Structure, StructureKind};
