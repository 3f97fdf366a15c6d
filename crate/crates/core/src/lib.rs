//! Five-layer driving scenario model with originality and diversity metrics.
//!
//! This crate is `no_std` and only needs `alloc`. File IO, HTTP providers,
//! caching and the command line live in the `scenelayer` crate.

#![no_std]

extern crate alloc;

pub mod augment;
pub mod embedding;
pub mod metrics;
pub mod scenario;

pub use scenario::{
    Component, ContextMode, LayerIndex, Provenance, Scenario, ScenarioError, StructureMode,
    Taxonomy,
};
