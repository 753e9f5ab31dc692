//! Core model for industry-level export-network expansion.
//!
//! Firms in an industry enter foreign markets through four search channels
//! (local, remote, following peers, and searching next to peers' markets).
//! Channel costs depend on distances, on how many industry peers already
//! serve a market, and on the industry's product heterogeneity `gamma`.
//!
//! The crate is `no_std` (with `alloc`) and holds only pure computation:
//!
//! - [`geo`]: countries, distances and the distance aggregates used by the
//!   model and by the regressions.
//! - [`market`]: demand, pricing and profit under linear demand.
//! - [`entry`]: two-part entry cost, zero-profit cutoff, the equilibrium
//!   number of exporters and its comparative statics.
//! - [`search`]: per-channel entry profits and the channel-choice rule.
//! - [`statics`]: finite-difference verification of the analytic derivatives.
//! - [`econometrics`]: design matrices, probit and Poisson maximum likelihood
//!   with firm-clustered sandwich covariance.
//! - [`rng`]: counter-based seed splitting so every draw is addressable.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod econometrics;
pub mod entry;
mod error;
pub mod geo;
pub mod market;
pub mod rng;
pub mod roots;
pub mod search;
pub mod statics;

pub use error::ModelError;

pub type Result<T, E = ModelError> = core::result::Result<T, E>;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
