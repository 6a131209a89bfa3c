//! Scenario runner behind the `squeezelab` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
