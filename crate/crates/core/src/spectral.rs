//! Periodograms and the parametric receiver-noise PSD models.
//!
//! All spectra are one-sided. Only bins `k = 1..N/2−1` are used; DC and
//! Nyquist are excluded everywhere.

use crate::error::{Error, Result};
use crate::kinetics::{
    equilibrium_probabilities, gamma_matrix, omega_matrix, ConcentrationPair, LigandKinetics,
    REDUCTION,
};
use crate::linalg::{resolvent_real, Mat2};
use crate::transduction::{flicker_psd_unchecked, ReceiverSpec, Transducer};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::f64::consts::PI;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place unnormalised forward DFT.
pub(crate) fn fft_forward(buf: &mut [Complex64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()).process(buf));
}

/// In-place unnormalised inverse DFT.
pub(crate) fn fft_inverse(buf: &mut [Complex64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()).process(buf));
}

/// Fourier frequencies `f_k = k/(N·dt)` for `k = 1..N/2−1`.
pub fn frequency_grid(n: usize, dt: f64) -> Vec<f64> {
    (1..n / 2).map(|k| k as f64 / (n as f64 * dt)).collect()
}

/// Raw one-sided periodogram on the interior Fourier frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Periodogram {
    pub n: usize,
    pub dt: f64,
    pub freqs: Vec<f64>,
    pub ordinates: Vec<f64>,
}

impl Periodogram {
    /// Wraps externally produced ordinates for the grid of an `n`-sample
    /// record at period `dt`.
    pub fn from_ordinates(n: usize, dt: f64, ordinates: Vec<f64>) -> Result<Self> {
        check_record(n, dt)?;
        if ordinates.len() != n / 2 - 1 {
            return Err(Error::domain(format!(
                "expected {} ordinates for n = {n}, got {}",
                n / 2 - 1,
                ordinates.len()
            )));
        }
        if ordinates.iter().any(|y| !(*y >= 0.0)) {
            return Err(Error::domain("periodogram ordinates must be >= 0"));
        }
        Ok(Periodogram {
            n,
            dt,
            freqs: frequency_grid(n, dt),
            ordinates,
        })
    }

    pub fn len(&self) -> usize {
        self.ordinates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordinates.is_empty()
    }

    /// Frequency resolution `1/(N·dt)`.
    pub fn resolution(&self) -> f64 {
        1.0 / (self.n as f64 * self.dt)
    }
}

fn check_record(n: usize, dt: f64) -> Result<()> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::domain(format!("record length must be even and >= 4, got {n}")));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::domain(format!("sampling period must be > 0, got {dt}")));
    }
    Ok(())
}

/// `Y_k = (2·dt/N)·|X_k|²` of the mean-removed samples.
pub fn periodogram(x: &[f64], dt: f64) -> Result<Periodogram> {
    let n = x.len();
    check_record(n, dt)?;
    let mean = x.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v - mean, 0.0)).collect();
    fft_forward(&mut buf);
    let scale = 2.0 * dt / n as f64;
    let ordinates = buf[1..n / 2].iter().map(|z| scale * z.norm_sqr()).collect();
    Ok(Periodogram {
        n,
        dt,
        freqs: frequency_grid(n, dt),
        ordinates,
    })
}

/// Binding term used by the receiver's no-interference threshold model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoInterferenceForm {
    /// `1/(2πf + 1/τ_m)`, the receiver's threshold model.
    #[default]
    Printed,
    /// `τ_m/(1 + (2πf·τ_m)²)`, the exact single-species Lorentzian.
    Lorentzian,
}

/// Everything the PSD models need apart from the concentrations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdModel {
    pub info: LigandKinetics,
    pub interferer: LigandKinetics,
    pub receiver: ReceiverSpec,
    pub transducer: Transducer,
    pub no_interference_form: NoInterferenceForm,
}

impl PsdModel {
    pub fn new(
        info: LigandKinetics,
        interferer: LigandKinetics,
        receiver: ReceiverSpec,
        temperature: f64,
    ) -> Self {
        PsdModel {
            info,
            interferer,
            receiver,
            transducer: Transducer::new(&receiver, temperature),
            no_interference_form: NoInterferenceForm::default(),
        }
    }

    pub fn with_form(mut self, form: NoInterferenceForm) -> Self {
        self.no_interference_form = form;
        self
    }

    pub fn with_receiver(mut self, receiver: ReceiverSpec) -> Self {
        self.receiver = receiver;
        self
    }

    /// `Rᵀz`: charge weights of the reduced states (RM, RI).
    fn reduced_charge_weights(&self) -> [f64; 2] {
        let ne = self.receiver.electrons_per_ligand;
        let z = [ne, ne, 0.0];
        let mut w = [0.0; 2];
        for (row, zr) in REDUCTION.iter().zip(z) {
            w[0] += row[0] * zr;
            w[1] += row[1] * zr;
        }
        w
    }

    /// Binding-noise PSD `S_b(f)` (A²/Hz).
    pub fn binding_psd(&self, f: f64, lambda: ConcentrationPair) -> Result<f64> {
        if !(f >= 0.0) {
            return Err(Error::domain(format!("binding PSD requires f >= 0, got {f}")));
        }
        Ok(self.binding_psd_unchecked(f, lambda))
    }

    pub(crate) fn binding_psd_unchecked(&self, f: f64, lambda: ConcentrationPair) -> f64 {
        self.at(lambda).binding(f)
    }

    /// Precomputes the concentration-dependent factors of the two-species
    /// model for repeated evaluation over a frequency grid.
    pub fn at(&self, lambda: ConcentrationPair) -> OperatingPoint<'_> {
        let eq = equilibrium_probabilities(lambda, &self.info, &self.interferer);
        let k = self.transducer.charge_gain(&self.receiver);
        OperatingPoint {
            model: self,
            gamma: gamma_matrix(&eq),
            omega: omega_matrix(lambda, &self.info, &self.interferer),
            weights: self.reduced_charge_weights(),
            prefactor: 4.0 * f64::from(self.receiver.receptors) * k * k,
        }
    }

    /// Total receiver-noise PSD `S_b(f) + S_f(f)`.
    pub fn total_psd(&self, f: f64, lambda: ConcentrationPair) -> Result<f64> {
        if !(f > 0.0) {
            return Err(Error::domain(format!("total PSD requires f > 0, got {f}")));
        }
        Ok(self.total_psd_unchecked(f, lambda))
    }

    #[inline]
    pub(crate) fn total_psd_unchecked(&self, f: f64, lambda: ConcentrationPair) -> f64 {
        self.binding_psd_unchecked(f, lambda) + flicker_psd_unchecked(f, &self.receiver)
    }

    /// PSD the receiver assumes when it ignores interference.
    pub fn no_interference_psd(&self, f: f64, c_m: f64) -> Result<f64> {
        if !(f > 0.0) {
            return Err(Error::domain(format!("PSD requires f > 0, got {f}")));
        }
        Ok(self.no_interference_psd_unchecked(f, c_m))
    }

    pub(crate) fn no_interference_psd_unchecked(&self, f: f64, c_m: f64) -> f64 {
        let tau = self.info.correlation_time(c_m);
        let p_b = c_m / (self.info.dissociation() + c_m);
        let shape = match self.no_interference_form {
            NoInterferenceForm::Printed => 1.0 / (2.0 * PI * f + 1.0 / tau),
            NoInterferenceForm::Lorentzian => tau / (1.0 + (2.0 * PI * f * tau).powi(2)),
        };
        let zeta = self.transducer.gain;
        4.0 * f64::from(self.receiver.receptors) * zeta * zeta * shape * p_b * (1.0 - p_b)
            + flicker_psd_unchecked(f, &self.receiver)
    }
}

/// Two-species model frozen at one concentration pair.
#[derive(Debug, Clone, Copy)]
pub struct OperatingPoint<'a> {
    model: &'a PsdModel,
    gamma: Mat2,
    omega: Mat2,
    weights: [f64; 2],
    prefactor: f64,
}

impl OperatingPoint<'_> {
    /// `4·N_r·(q_eff·g/C_G)²·zᵀR·Γ·Re{(j2πf·I − Ω)⁻¹}ᵀ·Rᵀz`
    #[inline]
    pub fn binding(&self, f: f64) -> f64 {
        let resolvent = resolvent_real(2.0 * PI * f, &self.omega);
        self.prefactor * (self.gamma * resolvent.transpose()).bilinear(self.weights, self.weights)
    }

    #[inline]
    pub fn total(&self, f: f64) -> f64 {
        self.binding(f) + flicker_psd_unchecked(f, &self.model.receiver)
    }
}

/// Corner frequencies `(f₊, f₋)` (Hz) of the two-species binding noise; `f₊`
/// pairs with the `+` branch of the square root.
pub fn characteristic_frequencies(
    lambda: ConcentrationPair,
    m: &LigandKinetics,
    i: &LigandKinetics,
) -> (f64, f64) {
    let rate_m = 1.0 / m.correlation_time(lambda.info);
    let rate_i = 1.0 / i.correlation_time(lambda.interferer);
    let coupling = 4.0 * m.k_plus * lambda.info * i.k_plus * lambda.interferer;
    let root = ((rate_m - rate_i).powi(2) + coupling).sqrt();
    let sum = rate_m + rate_i;
    ((sum + root) / (4.0 * PI), (sum - root) / (4.0 * PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model() -> PsdModel {
        PsdModel::new(
            LigandKinetics::information(),
            LigandKinetics::interferer(),
            ReceiverSpec::default(),
            300.0,
        )
    }

    /// Naive O(N²) DFT, independent of the FFT path.
    fn naive_periodogram(x: &[f64], dt: f64) -> Vec<f64> {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        (1..n / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (t, v) in x.iter().enumerate() {
                    let ph = -2.0 * PI * (k * t) as f64 / n as f64;
                    re += (v - mean) * ph.cos();
                    im += (v - mean) * ph.sin();
                }
                2.0 * dt / n as f64 * (re * re + im * im)
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        let x: Vec<f64> = (0..64).map(|t| ((t * 7919) % 31) as f64 - 3.0).collect();
        let pg = periodogram(&x, 0.01).unwrap();
        for (a, b) in pg.ordinates.iter().zip(naive_periodogram(&x, 0.01)) {
            assert_relative_eq!(*a, b, max_relative = 1e-10, epsilon = 1e-12);
        }
        assert_eq!(pg.len(), 31);
        assert_relative_eq!(pg.freqs[0], 1.0 / 0.64, max_relative = 1e-14);
    }

    #[test]
    fn constant_input_has_no_power() {
        let pg = periodogram(&[3.5; 16], 0.1).unwrap();
        assert!(pg.ordinates.iter().all(|&y| y < 1e-25));
    }

    #[test]
    fn bin_aligned_sinusoid() {
        let (n, dt, j) = (128usize, 0.005, 9usize);
        let x: Vec<f64> = (0..n)
            .map(|t| (2.0 * PI * j as f64 * t as f64 / n as f64).cos())
            .collect();
        let pg = periodogram(&x, dt).unwrap();
        // |X_j| = N/2  =>  Y_j = (2dt/N)(N/2)² = dt·N/2
        assert_relative_eq!(pg.ordinates[j - 1], dt * n as f64 / 2.0, max_relative = 1e-12);
        for (k, y) in pg.ordinates.iter().enumerate() {
            if k != j - 1 {
                assert!(*y < 1e-20, "leak at bin {}", k + 1);
            }
        }
    }

    #[test]
    fn rejects_bad_records() {
        assert!(periodogram(&[1.0, 2.0, 3.0], 0.1).is_err());
        assert!(periodogram(&[1.0, 2.0], 0.1).is_err());
        assert!(periodogram(&[1.0; 8], 0.0).is_err());
        assert!(Periodogram::from_ordinates(8, 0.1, vec![1.0; 2]).is_err());
        assert!(Periodogram::from_ordinates(8, 0.1, vec![1.0, -1.0, 1.0]).is_err());
    }

    #[test]
    fn no_receptors_no_binding_noise() {
        let mut m = model();
        m.receiver.receptors = 0;
        let lam = ConcentrationPair::new(6e17, 6e17);
        assert_eq!(m.binding_psd(3.0, lam).unwrap(), 0.0);
    }

    #[test]
    fn single_species_reduces_to_lorentzian() {
        let m = model();
        let c = 6e17;
        let lam = ConcentrationPair::new(c, 0.0);
        let tau = m.info.correlation_time(c);
        let p = c / (m.info.dissociation() + c);
        let zeta = m.transducer.gain;
        for k in 0..100 {
            let f = 0.01 * 1.1f64.powi(k);
            let want = 4.0 * 120.0 * zeta * zeta * p * (1.0 - p) * tau
                / (1.0 + (2.0 * PI * f * tau).powi(2));
            assert_relative_eq!(m.binding_psd(f, lam).unwrap(), want, max_relative = 1e-9);
            let lor = m.with_form(NoInterferenceForm::Lorentzian);
            assert_relative_eq!(
                lor.no_interference_psd(f, c).unwrap() - crate::transduction::flicker_psd(f, &m.receiver).unwrap(),
                want,
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn total_is_binding_plus_flicker() {
        let m = model();
        let lam = ConcentrationPair::new(6e17, 6e17);
        assert_eq!(
            m.total_psd(1.0, lam).unwrap(),
            m.binding_psd(1.0, lam).unwrap() + 1e-23
        );
        let mut quiet = m;
        quiet.receiver.flicker_1hz = 0.0;
        assert_eq!(quiet.total_psd(2.0, lam).unwrap(), quiet.binding_psd(2.0, lam).unwrap());
        // binding rolls off as f⁻², flicker as f⁻¹
        let s = m.total_psd(1e6, lam).unwrap();
        assert_relative_eq!(s, 1e-29, max_relative = 0.01);
        let r3 = m.binding_psd(1e3, lam).unwrap() / m.total_psd(1e3, lam).unwrap();
        let r4 = m.binding_psd(1e4, lam).unwrap() / m.total_psd(1e4, lam).unwrap();
        assert!(r4 < r3);
        assert!(m.total_psd(0.0, lam).is_err());
        assert!(m.binding_psd(-1.0, lam).is_err());
    }

    #[test]
    fn no_interference_printed_limits() {
        let m = model();
        let spec = m.receiver;
        assert_eq!(
            m.no_interference_psd(2.0, 0.0).unwrap(),
            crate::transduction::flicker_psd(2.0, &spec).unwrap()
        );
        let c = 6e17;
        let tau = m.info.correlation_time(c);
        let p = c / (m.info.dissociation() + c);
        let zeta = m.transducer.gain;
        let plateau = 4.0 * 120.0 * zeta * zeta * tau * p * (1.0 - p);
        let near_zero = m.no_interference_psd(1e-9, c).unwrap() - 1e-23 * 1e9;
        assert_relative_eq!(near_zero, plateau, max_relative = 1e-6);
        // direct evaluation at 1 Hz
        let at_one = 4.0 * 120.0 * zeta * zeta / (2.0 * PI + 1.0 / tau) * p * (1.0 - p) + 1e-23;
        assert_relative_eq!(m.no_interference_psd(1.0, c).unwrap(), at_one, max_relative = 1e-14);
        assert!(m.no_interference_psd(0.0, c).is_err());
    }

    #[test]
    fn corner_frequencies_single_species() {
        let (m, i) = (LigandKinetics::information(), LigandKinetics::interferer());
        let (hi, lo) = characteristic_frequencies(ConcentrationPair::new(6e17, 0.0), &m, &i);
        assert_relative_eq!(hi, 26.0 / (2.0 * PI), max_relative = 1e-12);
        assert_relative_eq!(lo, 8.0 / (2.0 * PI), max_relative = 1e-12);
        assert_relative_eq!(hi, 4.1, max_relative = 0.01);
    }
}
