//! The simulated receiver observation: receptor kinetics, transduction to a
//! current, the sampling front-end, additive 1/f noise and the periodogram.

use crate::error::{Error, Result};
use crate::kinetics::{simulate_counts, ConcentrationPair};
use crate::spectral::{fft_forward, fft_inverse, periodogram, Periodogram, PsdModel};
use crate::transduction::synthesize_flicker;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// How the continuous receptor current becomes `N` samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FrontEnd {
    /// Instantaneous samples of the current. The binding noise extends well
    /// past the Nyquist frequency, so its periodogram is aliased.
    PointSample,
    /// Sample `oversample` times faster, then band-limit to the output
    /// Nyquist frequency with an ideal (FFT) low-pass before decimating.
    AntiAlias { oversample: usize },
}

impl Default for FrontEnd {
    fn default() -> Self {
        FrontEnd::AntiAlias { oversample: 8 }
    }
}

impl FrontEnd {
    pub fn validate(&self) -> Result<()> {
        match self {
            FrontEnd::AntiAlias { oversample: 0 } => {
                Err(Error::invalid("front_end.oversample", "must be >= 1"))
            }
            _ => Ok(()),
        }
    }
}

/// A simulated receiver: its PSD model parameters, record length and front-end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observer {
    pub model: PsdModel,
    pub n: usize,
    pub dt: f64,
    pub front_end: FrontEnd,
}

impl Observer {
    pub fn new(model: PsdModel, n: usize, dt: f64) -> Self {
        Observer {
            model,
            n,
            dt,
            front_end: FrontEnd::default(),
        }
    }

    pub fn with_front_end(mut self, front_end: FrontEnd) -> Self {
        self.front_end = front_end;
        self
    }

    /// Binding-noise current `ζ·(n_m + n_i)` after the front-end (A).
    pub fn binding_current<R: Rng + ?Sized>(&self, lambda: ConcentrationPair, rng: &mut R) -> Result<Vec<f64>> {
        self.front_end.validate()?;
        let m = &self.model;
        let zeta = m.transducer.gain;
        let receptors = m.receiver.receptors;
        match self.front_end {
            FrontEnd::PointSample => {
                let (cm, ci) = simulate_counts(receptors, lambda, &m.info, &m.interferer, self.n, self.dt, rng)?;
                Ok(cm.iter().zip(&ci).map(|(a, b)| zeta * f64::from(a + b)).collect())
            }
            FrontEnd::AntiAlias { oversample } => {
                let fine_n = self.n * oversample;
                let fine_dt = self.dt / oversample as f64;
                let (cm, ci) = simulate_counts(receptors, lambda, &m.info, &m.interferer, fine_n, fine_dt, rng)?;
                let fine: Vec<f64> = cm.iter().zip(&ci).map(|(a, b)| zeta * f64::from(a + b)).collect();
                Ok(band_limit_decimate(&fine, oversample))
            }
        }
    }

    /// Full receiver output: binding current plus 1/f noise (A).
    pub fn current<R: Rng + ?Sized>(&self, lambda: ConcentrationPair, rng: &mut R) -> Result<Vec<f64>> {
        let mut x = self.binding_current(lambda, rng)?;
        let flicker = synthesize_flicker(self.n, self.dt, &self.model.receiver, rng)?;
        x.iter_mut().zip(flicker).for_each(|(a, b)| *a += b);
        Ok(x)
    }

    /// Periodogram of one simulated record.
    pub fn periodogram<R: Rng + ?Sized>(&self, lambda: ConcentrationPair, rng: &mut R) -> Result<Periodogram> {
        periodogram(&self.current(lambda, rng)?, self.dt)
    }
}

/// Keeps the DFT bins below the decimated Nyquist frequency and returns every
/// `factor`-th sample of the resulting band-limited signal. The decimated
/// Nyquist bin itself is dropped.
pub fn band_limit_decimate(x: &[f64], factor: usize) -> Vec<f64> {
    assert!(factor >= 1 && x.len().is_multiple_of(factor), "length must be a multiple of the factor");
    if factor == 1 {
        return x.to_vec();
    }
    let n = x.len() / factor;
    let mut fine: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_forward(&mut fine);
    let scale = 1.0 / factor as f64;
    let mut coarse = vec![Complex64::new(0.0, 0.0); n];
    coarse[0] = fine[0] * scale;
    for k in 1..n.div_ceil(2) {
        coarse[k] = fine[k] * scale;
        coarse[n - k] = coarse[k].conj();
    }
    fft_inverse(&mut coarse);
    coarse.iter().map(|z| z.re / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::LigandKinetics;
    use crate::transduction::ReceiverSpec;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn decimation_keeps_in_band_tones() {
        let (n, m) = (64usize, 4usize);
        let x: Vec<f64> = (0..n * m)
            .map(|s| {
                let t = s as f64 / (n * m) as f64;
                1.5 + (2.0 * PI * 5.0 * t).cos() + 0.3 * (2.0 * PI * 100.0 * t).sin()
            })
            .collect();
        let y = band_limit_decimate(&x, m);
        assert_eq!(y.len(), n);
        for (t, v) in y.iter().enumerate() {
            let want = 1.5 + (2.0 * PI * 5.0 * t as f64 / n as f64).cos();
            assert_relative_eq!(*v, want, epsilon = 1e-12);
        }
        assert_eq!(band_limit_decimate(&x, 1), x);
    }

    #[test]
    fn observer_output_shape_and_determinism() {
        let model = PsdModel::new(
            LigandKinetics::information(),
            LigandKinetics::interferer(),
            ReceiverSpec::default(),
            300.0,
        );
        let lam = ConcentrationPair::new(6e17, 6e17);
        for fe in [FrontEnd::PointSample, FrontEnd::AntiAlias { oversample: 4 }] {
            let obs = Observer::new(model, 128, 0.005).with_front_end(fe);
            let a = obs.current(lam, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
            let b = obs.current(lam, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
            assert_eq!(a.len(), 128);
            assert_eq!(a, b);
        }
        let bad = Observer::new(model, 128, 0.005).with_front_end(FrontEnd::AntiAlias { oversample: 0 });
        assert!(bad.current(lam, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
    }
}
