//! Command implementations behind the `entperc` binary.

pub mod commands;
pub mod config;
pub mod output;
