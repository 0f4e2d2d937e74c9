//! Simulation, estimation and detection for ligand-receptor biosensor
//! receivers in molecular communication links.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`]: advection-diffusion propagation from the transmitter to the
//!   receiver and the concentration seen at the sampling time.
//! - [`kinetics`]: receptor occupancy statistics, the linearised three-state
//!   master equation, and an exact event-driven simulator of receptor states.
//! - [`transduction`]: the graphene bioFET model (Debye screening, gate
//!   capacitance, gain) and its 1/f noise.
//! - [`spectral`]: periodograms and the parametric binding-noise PSD models.
//! - [`estimation`]: Whittle maximum-likelihood fitting of ligand
//!   concentrations and Fisher-information variances.
//! - [`detection`]: time-domain and frequency-domain detectors, thresholds
//!   and closed-form bit error probabilities.
//! - [`pipeline`]: the end-to-end receiver observation used by the Monte Carlo
//!   paths (kinetics, front-end, flicker, periodogram).
//! - [`experiments`]: scenarios, sweeps and CSV/SVG output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod detection;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod kinetics;
pub mod linalg;
pub mod pipeline;
pub mod quadrature;
pub mod rng;
pub mod spectral;
pub mod transduction;

pub use error::{Error, Result};
