//! Toolkit for a parameterized moving-MNIST video benchmark.
//!
//! * [`mnist`] reads the IDX digit files.
//! * [`video`] simulates bouncing, blinking, quadrant-masked digit videos.
//! * [`dataset`] stores them in a flat binary container with a TOML manifest.
//! * [`predictions`] is the line-oriented model-output format.
//! * [`rf`] propagates spatial/temporal receptive fields through layer stacks.
//! * [`eval`] turns predictions into per-(S, V) metric grids.

pub mod dataset;
pub mod eval;
pub mod mnist;
pub mod predictions;
pub mod rf;
pub mod video;
