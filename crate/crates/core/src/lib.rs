//! Distributed magnetic-resonant-coupling wireless power transfer.
//!
//! Models a multiple-input single-output (MISO) system of identical
//! transmitter coils driving a single receiver coil, computes the
//! sum-power-constrained optimal transmitter currents (magnetic
//! beamforming) and searches transmitter placements that maximize the
//! minimum power deliverable to the receiver over a target line or disk.
//!
//! Module map:
//!
//! - [`coil`]: physical coil descriptions and derived electrical parameters.
//! - [`magnetics`]: Bessel functions and exact/approximate mutual inductance.
//! - [`circuit`]: phasor-domain Kirchhoff relations and power accounting.
//! - [`beamforming`]: optimal, equal-current and selection allocations.
//! - [`metrics`]: load-power profiles over a region and their summary metrics.
//! - [`placement_1d`]: bisection + gradient search over symmetric line layouts.
//! - [`placement_2d`]: rotationally symmetric ring structures on a disk.

pub mod beamforming;
pub mod circuit;
pub mod coil;
mod error;
pub mod magnetics;
pub mod metrics;
pub mod placement_1d;
pub mod placement_2d;
mod search;

pub use error::{Error, Result};

/// Magnetic permeability of free space (N/A²).
pub const MU_0: f64 = 4.0e-7 * std::f64::consts::PI;

/// Version of this crate, recorded in run reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
