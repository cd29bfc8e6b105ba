//! File formats and subcommands behind the `relay-sentinel` binary.

pub mod commands;
pub mod files;
pub mod traces;
