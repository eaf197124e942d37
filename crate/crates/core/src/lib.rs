//! Simulation of mechanical states prepared by photon counting.
//!
//! A weak coherent state probes a mechanical resonator inside an
//! interferometer; conditioning on the photon counts at the outputs applies a
//! position-diagonal measurement operator to the mechanics. This crate
//! evaluates those operators ([`twoport`], [`multiport`]), the resulting
//! conditional density kernels and Wigner functions ([`wigner`]), emulates the
//! click-conditioned experiment by rejection sampling ([`montecarlo`]), and
//! recovers phase-space points from interferometric readout traces
//! ([`tracefit`]).
//!
//! Positions and momenta are in quantum-noise units unless tagged otherwise;
//! see [`units`].

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod montecarlo;
pub mod multiport;
#[allow(clippy::excessive_precision)]
pub mod quad;
pub mod tracefit;
pub mod twoport;
pub mod units;
pub mod wigner;

pub use error::{Error, Result};
pub use multiport::Measurement;
pub use twoport::ClickEvent;
pub use units::{CouplingConfig, MechanicalConstants, PhaseSpacePoint, ThermalState, Unit};
