//! One-dimensional advection-diffusion channel between the transmitter and
//! the receiver.
//!
//! Molecules are released instantly and uniformly across the channel cross
//! section at the inlet and drift with the mean flow while dispersing with the
//! Taylor-Aris corrected diffusivity. Concentrations are in molecules/m³.

use crate::error::{require_nonnegative, require_positive, Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Microfluidic channel geometry, flow and ligand diffusivity (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSpec {
    /// Channel height (m).
    pub height: f64,
    /// Channel width (m).
    pub width: f64,
    /// Mean flow velocity along the channel (m/s).
    pub flow_velocity: f64,
    /// Intrinsic diffusion coefficient of the ligand (m²/s).
    pub diffusion: f64,
    /// Distance from the transmitter to the receiver centre (m).
    pub rx_distance: f64,
    /// Temperature (K).
    pub temperature: f64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        ChannelSpec {
            height: 5e-6,
            width: 10e-6,
            flow_velocity: 10e-6,
            diffusion: 2e-11,
            rx_distance: 1e-3,
            temperature: 300.0,
        }
    }
}

impl ChannelSpec {
    pub fn validate(&self) -> Result<()> {
        require_positive("channel.height", self.height)?;
        require_positive("channel.width", self.width)?;
        require_nonnegative("channel.flow_velocity", self.flow_velocity)?;
        require_positive("channel.diffusion", self.diffusion)?;
        require_nonnegative("channel.rx_distance", self.rx_distance)?;
        require_positive("channel.temperature", self.temperature)?;
        Ok(())
    }

    /// Cross-sectional area `h·l` (m²).
    pub fn cross_section(&self) -> f64 {
        self.height * self.width
    }
}

/// Number of molecules released for one transmitted symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseEvent {
    pub molecules: u64,
}

impl ReleaseEvent {
    pub fn new(molecules: u64) -> Self {
        ReleaseEvent { molecules }
    }
}

/// Effective (dispersion-enhanced) diffusion coefficient for a rectangular
/// cross section.
pub fn effective_diffusion(spec: &ChannelSpec) -> f64 {
    let (h, l, u, d0) = (spec.height, spec.width, spec.flow_velocity, spec.diffusion);
    let correction =
        8.5 * u * u * h * h * l * l / (210.0 * d0 * d0 * (h * h + 2.4 * h * l + l * l));
    (1.0 + correction) * d0
}

/// Concentration at position `x` (m) and time `t` (s) after the release.
pub fn concentration_at(release: ReleaseEvent, spec: &ChannelSpec, x: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("concentration_at requires t > 0, got {t}")));
    }
    let d = effective_diffusion(spec);
    let drift = x - spec.flow_velocity * t;
    let peak = release.molecules as f64 / (spec.cross_section() * (4.0 * PI * d * t).sqrt());
    Ok(peak * (-drift * drift / (4.0 * d * t)).exp())
}

/// Time at which the concentration peak reaches the receiver centre.
pub fn peak_arrival_time(spec: &ChannelSpec) -> Result<f64> {
    if !(spec.flow_velocity > 0.0) {
        return Err(Error::domain(
            "peak arrival time requires a positive flow velocity",
        ));
    }
    Ok(spec.rx_distance / spec.flow_velocity)
}

/// Ligand concentration at the receiver at the sampling time `t_D = x_R/u`.
///
/// A receiver at the inlet (`x_R = 0`, `t_D = 0`) has no finite sampling-time
/// concentration and is rejected.
pub fn received_concentration(release: ReleaseEvent, spec: &ChannelSpec) -> Result<f64> {
    let t_d = peak_arrival_time(spec)?;
    concentration_at(release, spec, spec.rx_distance, t_d)
}
