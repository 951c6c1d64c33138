//! Photon production in a one-dimensional cavity whose two walls oscillate
//! with independent frequencies, amplitudes and phases.
//!
//! Two engines compute photon spectra: [`analytic`] evaluates the secular
//! first-order resonance formulas, and [`dynamics`] integrates the truncated
//! coupled-mode equations directly. [`sweep`] runs parameter scans and
//! cross-checks the engines; [`cli`] drives everything from the command line.

pub mod analytic;
pub mod cavity;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod spectrum;
pub mod sweep;
pub mod tolerances;

pub use cavity::{CavityConfig, CouplingTables, ModeBasis, Side, Truncation};
pub use error::{Error, Result};
pub use spectrum::{Engine, Spectrum};
