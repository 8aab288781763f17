//! Deterministic scene-layout compiler.
//!
//! The crate turns a symbolic letter-matrix scene layout plus a hierarchical
//! environment configuration into engine-ready artifacts: per-class grayscale
//! weight masks and a placement manifest of asset, building, and agent
//! instances. Around that core sit terrain raster tooling (heightmaps,
//! sketches, flow accumulation, thermal erosion), a validating bridge to
//! external text generators, and a dataset-construction pipeline.
//!
//! All operations are pure functions over immutable inputs and are
//! deterministic for a given seed. Data-parallel stages run on rayon when the
//! `parallel` feature (default) is enabled and a caller selects
//! [`exec::ExecMode::Parallel`]; sequential and parallel execution produce
//! bit-identical results.

pub mod bridge;
pub mod config;
pub mod decoder;
pub mod exec;
pub mod forge;
pub mod layout;
pub mod placement;
pub mod raster;
pub mod seed;
pub mod terrain;
