//! Support library for the `tw` binary: configuration, output formatting,
//! and the synthetic dataset generator.

pub mod config;
pub mod gen;
pub mod output;
