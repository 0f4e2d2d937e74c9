//! Graphene bioFET transduction: bound ligand charge to drain-current
//! deviation, plus the device 1/f noise.

use crate::error::{require_nonnegative, require_positive, Error, Result};
use crate::spectral::fft_inverse;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// CODATA 2018 exact SI constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Elementary charge (C).
    pub q: f64,
    /// Boltzmann constant (J/K).
    pub kb: f64,
    /// Avogadro constant (1/mol).
    pub avogadro: f64,
    /// Vacuum permittivity (F/m).
    pub eps0: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    q: 1.602_176_634e-19,
    kb: 1.380_649e-23,
    avogadro: 6.022_140_76e23,
    eps0: 8.854_187_812_8e-12,
};

/// Converts mol/m³ to molecules/m³.
pub fn molar_to_molecules(c_mol_per_m3: f64) -> f64 {
    c_mol_per_m3 * CONSTANTS.avogadro
}

/// Receiver (bioFET) parameters in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReceiverSpec {
    /// Number of independent surface receptors.
    pub receptors: u32,
    /// Receptor length (m).
    pub receptor_length: f64,
    /// Average number of free electrons per ligand.
    pub electrons_per_ligand: f64,
    /// Transconductance (A/V).
    pub transconductance: f64,
    /// Quantum capacitance per unit area (F/m²).
    pub quantum_capacitance: f64,
    /// Graphene width (m).
    pub graphene_width: f64,
    /// Graphene area exposed to the electrolyte (m²).
    pub graphene_area: f64,
    /// Ionic concentration of the medium (mol/m³).
    pub ionic_concentration: f64,
    /// Relative permittivity of the medium.
    pub relative_permittivity: f64,
    /// 1/f noise power at 1 Hz (A²/Hz).
    pub flicker_1hz: f64,
    /// 1/f noise exponent.
    pub flicker_exponent: f64,
}

impl Default for ReceiverSpec {
    fn default() -> Self {
        ReceiverSpec {
            receptors: 120,
            receptor_length: 2e-9,
            electrons_per_ligand: 3.0,
            transconductance: 1.9044e-4,
            quantum_capacitance: 2e-2,
            graphene_width: 10e-6,
            // square graphene channel
            graphene_area: 10e-6 * 10e-6,
            ionic_concentration: 30.0,
            relative_permittivity: 80.0,
            flicker_1hz: 1e-23,
            flicker_exponent: 1.0,
        }
    }
}

impl ReceiverSpec {
    pub fn validate(&self) -> Result<()> {
        if self.receptors == 0 {
            return Err(Error::invalid("receiver.receptors", "must be >= 1"));
        }
        require_nonnegative("receiver.receptor_length", self.receptor_length)?;
        require_positive("receiver.electrons_per_ligand", self.electrons_per_ligand)?;
        require_positive("receiver.transconductance", self.transconductance)?;
        require_positive("receiver.quantum_capacitance", self.quantum_capacitance)?;
        require_positive("receiver.graphene_width", self.graphene_width)?;
        require_positive("receiver.graphene_area", self.graphene_area)?;
        require_positive("receiver.ionic_concentration", self.ionic_concentration)?;
        require_positive("receiver.relative_permittivity", self.relative_permittivity)?;
        require_nonnegative("receiver.flicker_1hz", self.flicker_1hz)?;
        if !(0.8..=1.2).contains(&self.flicker_exponent) {
            return Err(Error::invalid(
                "receiver.flicker_exponent",
                format!("must lie in [0.8, 1.2], got {}", self.flicker_exponent),
            ));
        }
        Ok(())
    }

    /// Absolute permittivity of the medium (F/m).
    pub fn permittivity(&self) -> f64 {
        self.relative_permittivity * CONSTANTS.eps0
    }
}

/// Debye screening length (m) at temperature `temperature` (K).
pub fn debye_length(spec: &ReceiverSpec, temperature: f64) -> f64 {
    let c = &CONSTANTS;
    (spec.permittivity() * c.kb * temperature
        / (2.0 * c.avogadro * c.q * c.q * spec.ionic_concentration))
        .sqrt()
}

/// Screened charge (C) of one electron of a bound ligand.
pub fn effective_charge(spec: &ReceiverSpec, debye: f64) -> f64 {
    CONSTANTS.q * (-spec.receptor_length / debye).exp()
}

/// Electrical double-layer capacitance between graphene and electrolyte (F).
pub fn double_layer_capacitance(spec: &ReceiverSpec, debye: f64) -> f64 {
    spec.graphene_area * spec.permittivity() / debye
}

/// Quantum capacitance of the graphene sheet (F).
pub fn quantum_capacitance(spec: &ReceiverSpec) -> f64 {
    spec.quantum_capacitance * spec.graphene_area
}

/// Series combination of the double-layer and quantum capacitances (F).
pub fn gate_capacitance(spec: &ReceiverSpec, debye: f64) -> f64 {
    let c_gr = double_layer_capacitance(spec, debye);
    let c_q = quantum_capacitance(spec);
    1.0 / (1.0 / c_gr + 1.0 / c_q)
}

/// Current deviation per bound receptor, `ζ = q_eff·N_e·g/C_G` (A).
pub fn gain(spec: &ReceiverSpec, q_eff: f64, c_g: f64) -> f64 {
    q_eff * spec.electrons_per_ligand * spec.transconductance / c_g
}

/// One-sided 1/f noise PSD (A²/Hz).
pub fn flicker_psd(f: f64, spec: &ReceiverSpec) -> Result<f64> {
    if !(f > 0.0) {
        return Err(Error::domain(format!("flicker PSD requires f > 0, got {f}")));
    }
    Ok(flicker_psd_unchecked(f, spec))
}

#[inline]
pub(crate) fn flicker_psd_unchecked(f: f64, spec: &ReceiverSpec) -> f64 {
    spec.flicker_1hz * f.powf(-spec.flicker_exponent)
}

/// 1/f noise variance over an observation window: flat below `f_low`,
/// negligible above `f_high`.
pub fn flicker_variance(f_low: f64, f_high: f64, spec: &ReceiverSpec) -> Result<f64> {
    if !(f_low > 0.0) || !(f_high >= f_low) {
        return Err(Error::domain(format!(
            "flicker variance requires 0 < f_L <= f_H, got ({f_low}, {f_high})"
        )));
    }
    let flat = f_low * flicker_psd_unchecked(f_low, spec);
    // ∫ S1·f^-β df = S1·f_L^(1-β)·(r^(1-β) - 1)/(1-β), r = f_H/f_L
    let a = 1.0 - spec.flicker_exponent;
    let ln_r = (f_high / f_low).ln();
    let x = a * ln_r;
    let ratio = if x.abs() < 1e-300 { ln_r } else { x.exp_m1() / a };
    Ok(flat + spec.flicker_1hz * f_low.powf(a) * ratio)
}

/// Derived transduction chain for one receiver at one temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transducer {
    pub debye_length: f64,
    pub effective_charge: f64,
    pub gate_capacitance: f64,
    /// `ζ`, current deviation per bound receptor (A).
    pub gain: f64,
}

impl Transducer {
    pub fn new(spec: &ReceiverSpec, temperature: f64) -> Self {
        let debye = debye_length(spec, temperature);
        let q_eff = effective_charge(spec, debye);
        let c_g = gate_capacitance(spec, debye);
        Transducer {
            debye_length: debye,
            effective_charge: q_eff,
            gate_capacitance: c_g,
            gain: gain(spec, q_eff, c_g),
        }
    }

    /// Current deviation for `bound` receptors.
    pub fn current(&self, bound: f64) -> f64 {
        self.gain * bound
    }

    /// Charge-to-current factor `q_eff·g/C_G` (A per elementary charge).
    pub fn charge_gain(&self, spec: &ReceiverSpec) -> f64 {
        self.effective_charge * spec.transconductance / self.gate_capacitance
    }
}

/// Zero-mean Gaussian 1/f noise of `n` samples at period `dt`, shaped in the
/// frequency domain so that its expected one-sided periodogram equals
/// [`flicker_psd`] at every bin.
pub fn synthesize_flicker<R: Rng + ?Sized>(
    n: usize,
    dt: f64,
    spec: &ReceiverSpec,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::domain(format!("flicker synthesis needs even n >= 2, got {n}")));
    }
    if !(dt > 0.0) {
        return Err(Error::domain(format!("sampling period must be > 0, got {dt}")));
    }
    if spec.flicker_1hz == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let half = n / 2;
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
    for k in 1..half {
        let f = k as f64 / (n as f64 * dt);
        let scale = (flicker_psd_unchecked(f, spec) * n as f64 / (2.0 * dt)).sqrt();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let z = Complex64::new(re, im) * (scale * std::f64::consts::FRAC_1_SQRT_2);
        spectrum[k] = z;
        spectrum[n - k] = z.conj();
    }
    let f_nyq = 0.5 / dt;
    let nyq_scale = (flicker_psd_unchecked(f_nyq, spec) * n as f64 / (2.0 * dt)).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    spectrum[half] = Complex64::new(re * nyq_scale, 0.0);

    fft_inverse(&mut spectrum);
    Ok(spectrum.iter().map(|z| z.re / n as f64).collect())
}
