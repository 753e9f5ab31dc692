//! Simulation driver, file formats and command-line front end for the
//! export-network entry model in `tradenet-core`.
//!
//! - [`config`]: the TOML simulation config and its validation.
//! - [`world`]: country files, distance matrices and the world generator.
//! - [`sim`]: the period loop.
//! - [`panel`]: the firm x destination x period regression panel.
//! - [`history`] and [`stats`]: the event log and descriptive tables.
//! - [`presets`]: named regression specifications.
//! - [`report`] and [`cli`]: fit reports, manifests and the commands.

pub mod cli;
pub mod config;
pub mod error;
pub mod format;
pub mod history;
pub mod panel;
pub mod presets;
pub mod report;
pub mod sim;
pub mod stats;
pub mod world;

pub use error::{Error, Result};
