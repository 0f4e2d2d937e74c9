//! Time-domain (TDD) and frequency-domain (FDD) symbol detectors: ML
//! thresholds, decision rules, closed-form bit error probabilities and Monte
//! Carlo estimates of the same.

use crate::error::{Error, Result};
use crate::estimation::{estimator_variance, fisher_matrix, ml_estimate_with, EstimatorConfig, ModelKind, WhittleFit};
use crate::kinetics::{bound_probability, draw_interferer, ConcentrationPair, InterfererModel};
use crate::pipeline::Observer;
use crate::quadrature::checked_lognormal_expectation;
use crate::rng::trial_rng;
use crate::spectral::PsdModel;
use crate::transduction::flicker_variance;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

/// Mean and variance of a Gaussian observable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianStats {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianStats {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() || !mean.is_finite() {
            return Err(Error::domain(format!(
                "Gaussian stats need finite mean and variance > 0, got ({mean}, {variance})"
            )));
        }
        Ok(GaussianStats { mean, variance })
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdRegime {
    General,
    /// Variances agree to 1e-12 relative; the midpoint is used.
    EqualVarianceFallback,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionThreshold {
    pub value: f64,
    pub regime: ThresholdRegime,
}

/// Crossing point of the two Gaussian densities between the means: the ML
/// threshold for the rule "decide 1 above".
pub fn ml_threshold(s0: GaussianStats, s1: GaussianStats) -> Result<DecisionThreshold> {
    let (m0, m1, v0, v1) = (s0.mean, s1.mean, s0.variance, s1.variance);
    if !(m0 < m1) {
        return Err(Error::domain(format!("threshold needs mean0 < mean1, got {m0} >= {m1}")));
    }
    let dv = v1 - v0;
    let rel = dv.abs() / v0.max(v1);
    if rel < 1e-12 {
        return Ok(DecisionThreshold {
            value: 0.5 * (m0 + m1),
            regime: ThresholdRegime::EqualVarianceFallback,
        });
    }
    let (sd0, sd1) = (v0.sqrt(), v1.sqrt());
    let log_ratio = 0.5 * (v1 / v0).ln();
    let root = ((m1 - m0).powi(2) + 2.0 * dv * log_ratio).sqrt();
    let value = if rel > 1e-4 {
        (v1 * m0 - v0 * m1 + sd1 * sd0 * root) / dv
    } else {
        // same root with the (v1 - v0) factor cancelled analytically
        (v1 * m0 * m0 - v0 * m1 * m1 - 2.0 * v1 * v0 * log_ratio) / (v1 * m0 - v0 * m1 - sd1 * sd0 * root)
    };
    Ok(DecisionThreshold {
        value,
        regime: ThresholdRegime::General,
    })
}

/// `¼·erfc((γ−μ₀)/√(2σ₀²)) + ¼·erfc((μ₁−γ)/√(2σ₁²))` for equiprobable bits.
pub fn gaussian_bep(s0: GaussianStats, s1: GaussianStats, threshold: f64) -> f64 {
    let false_alarm = erfc((threshold - s0.mean) / (2.0 * s0.variance).sqrt());
    let miss = erfc((s1.mean - threshold) / (2.0 * s1.variance).sqrt());
    (0.25 * (false_alarm + miss)).clamp(0.0, 0.5)
}

/// Frequency band `[f_L, f_H]` over which the 1/f noise of one time-domain
/// sample is accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlickerBand {
    pub f_low: f64,
    pub f_high: f64,
}

impl FlickerBand {
    /// `f_L = 1/(N·dt)`, `f_H = 1/(2·dt)`.
    pub fn from_sampling(n: usize, dt: f64) -> Self {
        FlickerBand {
            f_low: 1.0 / (n as f64 * dt),
            f_high: 0.5 / dt,
        }
    }

    pub fn variance(&self, model: &PsdModel) -> Result<f64> {
        flicker_variance(self.f_low, self.f_high, &model.receiver)
    }
}

/// Statistics of the one-shot current sample `ζ·N_b + n_f` for a given
/// information concentration.
///
/// With `interferer = Some(..)` the bound count is marginalized over the
/// log-normal interferer (law of total expectation and variance). With `None`
/// only the information ligand binds; this is the receiver's own threshold
/// model.
pub fn tdd_output_stats(
    c_m: f64,
    interferer: Option<&InterfererModel>,
    model: &PsdModel,
    band: FlickerBand,
) -> Result<GaussianStats> {
    let n_r = f64::from(model.receiver.receptors);
    let zeta = model.transducer.gain;
    let flicker = band.variance(model)?;
    let (mean_p, var_within, var_between) = match interferer {
        None => {
            let p = c_m / (model.info.dissociation() + c_m);
            (p, p * (1.0 - p), 0.0)
        }
        Some(im) => {
            im.validate()?;
            let (mu, sigma) = im.log_params();
            let pb = |ci: f64| bound_probability(c_m, ci, &model.info, &model.interferer);
            let e1 = checked_lognormal_expectation(mu, sigma, pb)?;
            let e2 = checked_lognormal_expectation(mu, sigma, |ci| pb(ci).powi(2))?;
            (e1, e1 - e2, (e2 - e1 * e1).max(0.0))
        }
    };
    let mean = zeta * n_r * mean_p;
    let variance = zeta * zeta * (n_r * var_within + n_r * n_r * var_between) + flicker;
    GaussianStats::new(mean, variance)
}

/// Decide 1 strictly above the threshold; ties go to 0.
pub fn tdd_decide(delta_i: f64, threshold: &DecisionThreshold) -> u8 {
    u8::from(delta_i > threshold.value)
}

/// The receiver's TDD threshold: ML threshold of the no-interference stats.
pub fn tdd_threshold(c_m: [f64; 2], model: &PsdModel, band: FlickerBand) -> Result<DecisionThreshold> {
    let s0 = tdd_output_stats(c_m[0], None, model, band)?;
    let s1 = tdd_output_stats(c_m[1], None, model, band)?;
    ml_threshold(s0, s1)
}

/// TDD bit error probability given the true (marginalized) statistics.
pub fn tdd_bep(stats0: GaussianStats, stats1: GaussianStats, threshold: &DecisionThreshold) -> f64 {
    gaussian_bep(stats0, stats1, threshold.value)
}

/// Everything the closed-form TDD evaluation produces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TddAnalysis {
    pub threshold: DecisionThreshold,
    /// True statistics per bit, interference included.
    pub stats: [GaussianStats; 2],
    pub bep: f64,
}

pub fn tdd_analysis(
    c_m: [f64; 2],
    interferer: &InterfererModel,
    model: &PsdModel,
    band: FlickerBand,
) -> Result<TddAnalysis> {
    let threshold = tdd_threshold(c_m, model, band)?;
    let stats = [
        tdd_output_stats(c_m[0], Some(interferer), model, band)?,
        tdd_output_stats(c_m[1], Some(interferer), model, band)?,
    ];
    Ok(TddAnalysis {
        threshold,
        stats,
        bep: tdd_bep(stats[0], stats[1], &threshold),
    })
}

/// CRLB variance of `ĉ_m` under the no-interference model at `c_m`.
pub fn no_interference_variance(c_m: f64, model: &PsdModel, freqs: &[f64]) -> Result<f64> {
    let f = fisher_matrix(&[c_m], model, freqs, ModelKind::NoInterference)?;
    Ok(estimator_variance(&f)?[0])
}

/// CRLB variance of `ĉ_m` under the two-species model at `(c_m, c_i)`.
pub fn two_species_variance(lambda: ConcentrationPair, model: &PsdModel, freqs: &[f64]) -> Result<f64> {
    let f = fisher_matrix(&[lambda.info, lambda.interferer], model, freqs, ModelKind::TwoSpecies)?;
    Ok(estimator_variance(&f)?[0])
}

/// FDD threshold on `ĉ_m`, computed as if there were no interference.
pub fn fdd_threshold(c_m: [f64; 2], model: &PsdModel, freqs: &[f64]) -> Result<DecisionThreshold> {
    let s0 = GaussianStats::new(c_m[0], no_interference_variance(c_m[0], model, freqs)?)?;
    let s1 = GaussianStats::new(c_m[1], no_interference_variance(c_m[1], model, freqs)?)?;
    ml_threshold(s0, s1)
}

/// Decide 1 when the estimated information concentration exceeds the
/// threshold; ties go to 0.
pub fn fdd_decide(fit: &WhittleFit, threshold: &DecisionThreshold) -> u8 {
    u8::from(fit.lambda_hat.info > threshold.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FddAnalysis {
    pub threshold: DecisionThreshold,
    /// `σ²_ĉm|s` from the two-species Fisher matrix at `(c_m|s, μ_ci)`.
    pub variances: [f64; 2],
    pub bep: f64,
}

/// Closed-form (asymptotic Gaussian) FDD bit error probability.
pub fn fdd_analysis(c_m: [f64; 2], interferer_mean: f64, model: &PsdModel, freqs: &[f64]) -> Result<FddAnalysis> {
    let threshold = fdd_threshold(c_m, model, freqs)?;
    let variances = [
        two_species_variance(ConcentrationPair::new(c_m[0], interferer_mean), model, freqs)?,
        two_species_variance(ConcentrationPair::new(c_m[1], interferer_mean), model, freqs)?,
    ];
    let s0 = GaussianStats::new(c_m[0], variances[0])?;
    let s1 = GaussianStats::new(c_m[1], variances[1])?;
    Ok(FddAnalysis {
        threshold,
        variances,
        bep: gaussian_bep(s0, s1, threshold.value),
    })
}

/// As [`fdd_analysis`] but only the probability; indistinguishable symbols
/// give ½.
pub fn fdd_bep(c_m: [f64; 2], interferer_mean: f64, model: &PsdModel, freqs: &[f64]) -> Result<f64> {
    if c_m[0] == c_m[1] {
        return Ok(0.5);
    }
    Ok(fdd_analysis(c_m, interferer_mean, model, freqs)?.bep)
}

/// Error count over a block of equiprobable symbols with its Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BepEstimate {
    pub errors: u64,
    pub symbols: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl BepEstimate {
    /// 95% Wilson score interval.
    pub fn new(errors: u64, symbols: u64) -> Self {
        let (lo, hi) = wilson_interval(errors, symbols, 1.959_963_984_540_054);
        BepEstimate {
            errors,
            symbols,
            rate: if symbols == 0 { f64::NAN } else { errors as f64 / symbols as f64 },
            ci_low: lo,
            ci_high: hi,
        }
    }
}

pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).clamp(0.0, p), (centre + half).clamp(p, 1.0))
}

/// Sample-path construction for the TDD Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TddSampler {
    /// `N_b ~ N(N_r·p, N_r·p·(1−p))` given the drawn interferer, matching the
    /// Gaussian assumption of the closed form.
    #[default]
    Gaussian,
    /// `N_b ~ Binomial(N_r, p)` given the drawn interferer.
    Binomial,
}

/// Symbol `k` of a Monte Carlo block carries bit `k mod 2`.
fn symbol_bit(k: u64) -> usize {
    (k & 1) as usize
}

/// One TDD observation for bit concentration `c_m`.
pub fn tdd_sample<R: Rng + ?Sized>(
    c_m: f64,
    interferer: &InterfererModel,
    model: &PsdModel,
    flicker_var: f64,
    sampler: TddSampler,
    rng: &mut R,
) -> Result<f64> {
    let c_i = draw_interferer(interferer, rng);
    let p = bound_probability(c_m, c_i, &model.info, &model.interferer);
    let n_r = f64::from(model.receiver.receptors);
    let bound = match sampler {
        TddSampler::Gaussian => {
            let z: f64 = rng.sample(StandardNormal);
            n_r * p + (n_r * p * (1.0 - p)).sqrt() * z
        }
        TddSampler::Binomial => f64::from(crate::kinetics::sample_bound_count(model.receiver.receptors, p, rng)?),
    };
    let z: f64 = rng.sample(StandardNormal);
    Ok(model.transducer.gain * bound + flicker_var.sqrt() * z)
}

/// Monte Carlo TDD bit error rate over `symbols` equiprobable symbols.
/// Symbol `k` uses the RNG stream `(seed, stream…, k)`.
#[allow(clippy::too_many_arguments)]
pub fn tdd_monte_carlo(
    c_m: [f64; 2],
    interferer: &InterfererModel,
    model: &PsdModel,
    band: FlickerBand,
    threshold: &DecisionThreshold,
    sampler: TddSampler,
    symbols: u64,
    seed: u64,
    stream: &[u64],
) -> Result<BepEstimate> {
    let flicker_var = band.variance(model)?;
    let errors = (0..symbols)
        .into_par_iter()
        .map(|k| -> Result<u64> {
            let mut rng = trial_rng(seed, &[stream, &[k]].concat());
            let bit = symbol_bit(k);
            let x = tdd_sample(c_m[bit], interferer, model, flicker_var, sampler, &mut rng)?;
            Ok(u64::from(usize::from(tdd_decide(x, threshold)) != bit))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(BepEstimate::new(errors, symbols))
}

/// Outcome of the end-to-end FDD Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FddMonteCarlo {
    pub bep: BepEstimate,
    /// Fits that hit the iteration limit or stalled; still decided.
    pub unconverged: u64,
}

/// End-to-end FDD Monte Carlo: per symbol, draw the interferer, simulate the
/// receiver record, fit the two-species model and threshold `ĉ_m`.
#[allow(clippy::too_many_arguments)]
pub fn fdd_monte_carlo(
    c_m: [f64; 2],
    interferer: &InterfererModel,
    observer: &Observer,
    threshold: &DecisionThreshold,
    estimator: &EstimatorConfig,
    symbols: u64,
    seed: u64,
    stream: &[u64],
) -> Result<FddMonteCarlo> {
    let (errors, unconverged) = (0..symbols)
        .into_par_iter()
        .map(|k| -> Result<(u64, u64)> {
            let mut rng = trial_rng(seed, &[stream, &[k]].concat());
            let bit = symbol_bit(k);
            let c_i = draw_interferer(interferer, &mut rng);
            let pg = observer.periodogram(ConcentrationPair::new(c_m[bit], c_i), &mut rng)?;
            let fit = ml_estimate_with(&pg, &observer.model, ModelKind::TwoSpecies, estimator)?;
            let wrong = usize::from(fdd_decide(&fit, threshold)) != bit;
            Ok((u64::from(wrong), u64::from(!fit.converged)))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    Ok(FddMonteCarlo {
        bep: BepEstimate::new(errors, symbols),
        unconverged,
    })
}
