//! Deterministic one- and two-location epidemic dynamics.
//!
//! The two-location system couples two cubic infection dynamics through
//! trade: agents export when the other location's utility beats their own by
//! more than a random cost. With identical locations, linear utilities and
//! uniform costs the field is continuous and piecewise polynomial across the
//! diagonal. This crate integrates it, finds and classifies its equilibria,
//! traces the stable separatrix of the interior saddle, measures basins of
//! attraction and compares shock outcomes against the uncoupled (autarkic)
//! system.

pub mod basins;
pub mod equilibria;
pub mod error;
pub mod integrator;
pub mod linear_approx;
pub mod model;
pub mod output;
pub mod separatrix;
pub mod shocks;

pub use error::{Error, Result};
pub use model::{EpidemicParams, PhasePoint, PriceCostSpec, Regime};
