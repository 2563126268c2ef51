//! Library surface of the `distib` command-line tool.
//!
//! The binary in `main.rs` is a thin argument parser over these modules;
//! exposing them as a library lets integration tests drive the same config
//! parsing, checkpoint IO, and artifact writers the binary uses.

pub mod artifacts;
pub mod checkpoint;
pub mod config;
pub mod error;
pub mod idx;
pub mod ops;
