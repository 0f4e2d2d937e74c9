//! Ligand-receptor kinetics with one information and one interferer species.
//!
//! Each receptor is a three-state Markov chain: unbound (R), bound to an
//! information molecule (RM) or bound to an interferer (RI). Rates are
//! `R→RM: k⁺_m·c_m`, `R→RI: k⁺_i·c_i`, `RM→R: k⁻_m`, `RI→R: k⁻_i`.

use crate::error::{require_nonnegative, require_positive, Error, Result};
use crate::linalg::Mat2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp1, LogNormal};
use serde::{Deserialize, Serialize};

/// Binding (m³/s) and unbinding (1/s) rates of one ligand species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LigandKinetics {
    pub k_plus: f64,
    pub k_minus: f64,
}

impl LigandKinetics {
    pub fn new(k_plus: f64, k_minus: f64) -> Self {
        LigandKinetics { k_plus, k_minus }
    }

    /// Default information molecule rates.
    pub fn information() -> Self {
        LigandKinetics::new(4e-17, 2.0)
    }

    /// Default interferer rates.
    pub fn interferer() -> Self {
        LigandKinetics::new(4e-17, 8.0)
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        require_positive(&format!("{name}.k_plus"), self.k_plus)?;
        require_positive(&format!("{name}.k_minus"), self.k_minus)
    }

    /// Dissociation constant `K_D = k⁻/k⁺` (molecules/m³).
    pub fn dissociation(&self) -> f64 {
        self.k_minus / self.k_plus
    }

    /// Correlation time `1/(k⁺·c + k⁻)` of a single-species receptor.
    pub fn correlation_time(&self, c: f64) -> f64 {
        1.0 / (self.k_plus * c + self.k_minus)
    }
}

/// Information and interferer concentrations `λ = [c_m, c_i]`
/// (molecules/m³).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationPair {
    pub info: f64,
    pub interferer: f64,
}

impl ConcentrationPair {
    pub fn new(info: f64, interferer: f64) -> Self {
        ConcentrationPair { info, interferer }
    }

    pub fn validate(&self) -> Result<()> {
        require_nonnegative("c_m", self.info)?;
        require_nonnegative("c_i", self.interferer)
    }
}

/// Equilibrium state occupation probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumState {
    pub bound_info: f64,
    pub bound_interferer: f64,
    pub unbound: f64,
}

impl EquilibriumState {
    pub fn bound(&self) -> f64 {
        self.bound_info + self.bound_interferer
    }
}

/// Log-normal interferer concentration with arithmetic mean and standard
/// deviation in molecules/m³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfererModel {
    pub mean: f64,
    pub std_dev: f64,
}

impl InterfererModel {
    pub fn new(mean: f64, std_dev: f64) -> Self {
        InterfererModel { mean, std_dev }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("interferer.mean", self.mean)?;
        require_nonnegative("interferer.std_dev", self.std_dev)
    }

    /// `(μ_log, σ_log)` of the underlying normal, by moment matching.
    pub fn log_params(&self) -> (f64, f64) {
        let var_log = (1.0 + (self.std_dev / self.mean).powi(2)).ln();
        (self.mean.ln() - 0.5 * var_log, var_log.sqrt())
    }
}

/// Probability that a receptor is bound to either species.
pub fn bound_probability(
    c_m: f64,
    c_i: f64,
    m: &LigandKinetics,
    i: &LigandKinetics,
) -> f64 {
    let x = c_m / m.dissociation() + c_i / i.dissociation();
    x / (1.0 + x)
}

pub fn equilibrium_probabilities(
    lambda: ConcentrationPair,
    m: &LigandKinetics,
    i: &LigandKinetics,
) -> EquilibriumState {
    let xm = lambda.info / m.dissociation();
    let xi = lambda.interferer / i.dissociation();
    let den = 1.0 + xm + xi;
    let bound_info = xm / den;
    let bound_interferer = xi / den;
    EquilibriumState {
        bound_info,
        bound_interferer,
        unbound: 1.0 / den,
    }
}

/// Full 3x3 generator acting on `[p_RM, p_RI, p_R]`.
pub fn generator_matrix(
    lambda: ConcentrationPair,
    m: &LigandKinetics,
    i: &LigandKinetics,
) -> [[f64; 3]; 3] {
    let am = m.k_plus * lambda.info;
    let ai = i.k_plus * lambda.interferer;
    [
        [-m.k_minus, 0.0, am],
        [0.0, -i.k_minus, ai],
        [m.k_minus, i.k_minus, -am - ai],
    ]
}

/// Linearised fluctuation dynamics `d Δp'/dt = Ω Δp'` with
/// `Δp' = [Δp_RM, Δp_RI]`, obtained by eliminating `p_R = 1 − p_RM − p_RI`.
pub fn omega_matrix(lambda: ConcentrationPair, m: &LigandKinetics, i: &LigandKinetics) -> Mat2 {
    let am = m.k_plus * lambda.info;
    let ai = i.k_plus * lambda.interferer;
    Mat2::new(-(am + m.k_minus), -am, -ai, -(ai + i.k_minus))
}

/// Maps reduced fluctuations to all three states: `Δp = R Δp'`.
pub const REDUCTION: [[f64; 2]; 3] = [[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]];

/// Equal-time covariance of the per-receptor state indicators (RM, RI).
pub fn gamma_matrix(eq: &EquilibriumState) -> Mat2 {
    let (pm, pi) = (eq.bound_info, eq.bound_interferer);
    Mat2::new(pm * (1.0 - pm), -pm * pi, -pm * pi, pi * (1.0 - pi))
}

/// Receptor occupancy sampled on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceptorTrace {
    pub dt: f64,
    /// Receptors bound to an information molecule at `k·dt`.
    pub counts_info: Vec<u32>,
    /// Receptors bound to an interferer at `k·dt`.
    pub counts_interferer: Vec<u32>,
    pub seed: u64,
}

impl ReceptorTrace {
    pub fn len(&self) -> usize {
        self.counts_info.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts_info.is_empty()
    }

    /// Total bound receptors at each sample.
    pub fn bound(&self) -> impl Iterator<Item = u32> + '_ {
        self.counts_info
            .iter()
            .zip(&self.counts_interferer)
            .map(|(a, b)| a + b)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Unbound,
    Info,
    Interferer,
}

/// Exact event-driven simulation of `receptors` independent receptors over
/// `n` samples spaced `dt` apart, started from the equilibrium distribution.
pub fn simulate_trace(
    receptors: u32,
    lambda: ConcentrationPair,
    m: &LigandKinetics,
    i: &LigandKinetics,
    n: usize,
    dt: f64,
    seed: u64,
) -> Result<ReceptorTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (counts_info, counts_interferer) =
        simulate_counts(receptors, lambda, m, i, n, dt, &mut rng)?;
    Ok(ReceptorTrace {
        dt,
        counts_info,
        counts_interferer,
        seed,
    })
}

/// As [`simulate_trace`] but drawing from a caller-supplied RNG.
pub fn simulate_counts<R: Rng + ?Sized>(
    receptors: u32,
    lambda: ConcentrationPair,
    m: &LigandKinetics,
    i: &LigandKinetics,
    n: usize,
    dt: f64,
    rng: &mut R,
) -> Result<(Vec<u32>, Vec<u32>)> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::domain(format!("trace length must be even and > 0, got {n}")));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::domain(format!("sampling period must be > 0, got {dt}")));
    }
    if receptors == 0 {
        return Err(Error::domain("at least one receptor is required"));
    }
    lambda.validate()?;

    let eq = equilibrium_probabilities(lambda, m, i);
    let on_m = m.k_plus * lambda.info;
    let on_i = i.k_plus * lambda.interferer;
    let on_total = on_m + on_i;
    let t_end = (n - 1) as f64 * dt;

    // difference arrays over grid indices; state on [t0, t1) covers
    // indices ceil(t0/dt) .. ceil(t1/dt)
    let mut diff_m = vec![0i64; n + 1];
    let mut diff_i = vec![0i64; n + 1];
    let grid_index = |t: f64| -> usize { ((t / dt).ceil() as usize).min(n) };

    for _ in 0..receptors {
        let u: f64 = rng.random();
        let mut state = if u < eq.bound_info {
            State::Info
        } else if u < eq.bound_info + eq.bound_interferer {
            State::Interferer
        } else {
            State::Unbound
        };
        let mut start = 0usize;
        let mut t = 0.0;
        loop {
            let rate = match state {
                State::Unbound => on_total,
                State::Info => m.k_minus,
                State::Interferer => i.k_minus,
            };
            let next_t = if rate > 0.0 {
                let e: f64 = rng.sample(Exp1);
                t + e / rate
            } else {
                f64::INFINITY
            };
            let end = if next_t > t_end { n } else { grid_index(next_t) };
            match state {
                State::Info => {
                    diff_m[start] += 1;
                    diff_m[end] -= 1;
                }
                State::Interferer => {
                    diff_i[start] += 1;
                    diff_i[end] -= 1;
                }
                State::Unbound => {}
            }
            if next_t > t_end {
                break;
            }
            t = next_t;
            start = end;
            state = match state {
                State::Unbound => {
                    if rng.random::<f64>() * on_total < on_m {
                        State::Info
                    } else {
                        State::Interferer
                    }
                }
                _ => State::Unbound,
            };
        }
    }

    let integrate = |diff: &[i64]| -> Vec<u32> {
        let mut acc = 0i64;
        diff[..n]
            .iter()
            .map(|d| {
                acc += d;
                acc as u32
            })
            .collect()
    };
    Ok((integrate(&diff_m), integrate(&diff_i)))
}

/// One binomial draw of the bound-receptor count.
pub fn sample_bound_count<R: Rng + ?Sized>(receptors: u32, p_bound: f64, rng: &mut R) -> Result<u32> {
    if !(0.0..=1.0).contains(&p_bound) {
        return Err(Error::domain(format!("bound probability must lie in [0, 1], got {p_bound}")));
    }
    let dist = Binomial::new(u64::from(receptors), p_bound)
        .map_err(|e| Error::domain(format!("binomial: {e}")))?;
    Ok(dist.sample(rng) as u32)
}

/// One log-normal draw of the interferer concentration.
pub fn draw_interferer<R: Rng + ?Sized>(model: &InterfererModel, rng: &mut R) -> f64 {
    if model.std_dev == 0.0 {
        return model.mean;
    }
    let (mu, sigma) = model.log_params();
    LogNormal::new(mu, sigma)
        .expect("validated log-normal parameters")
        .sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rates() -> (LigandKinetics, LigandKinetics) {
        (LigandKinetics::information(), LigandKinetics::interferer())
    }

    #[test]
    fn bound_probability_examples() {
        let (m, i) = rates();
        assert_eq!(bound_probability(0.0, 0.0, &m, &i), 0.0);
        assert_relative_eq!(bound_probability(m.dissociation(), 0.0, &m, &i), 0.5);
        let same = LigandKinetics::new(4e-17, 2.0);
        let kd = same.dissociation();
        assert_relative_eq!(bound_probability(kd, kd, &same, &same), 2.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn equilibrium_examples() {
        let (m, i) = rates();
        let eq = equilibrium_probabilities(ConcentrationPair::new(0.0, 0.0), &m, &i);
        assert_eq!((eq.bound_info, eq.bound_interferer, eq.unbound), (0.0, 0.0, 1.0));

        let c = 3.3e17;
        let eq = equilibrium_probabilities(ConcentrationPair::new(c, 0.0), &m, &i);
        assert_relative_eq!(eq.bound_info, c / (m.dissociation() + c), max_relative = 1e-15);

        let lam = ConcentrationPair::new(6e17, 6e17);
        let eq = equilibrium_probabilities(lam, &m, &i);
        assert_relative_eq!(eq.bound_info + eq.bound_interferer + eq.unbound, 1.0, max_relative = 1e-15);
        assert_relative_eq!(
            eq.bound(),
            bound_probability(lam.info, lam.interferer, &m, &i),
            max_relative = 1e-15
        );
    }

    #[test]
    fn omega_structure() {
        let (m, i) = rates();
        let om = omega_matrix(ConcentrationPair::new(0.0, 0.0), &m, &i);
        assert_eq!(om, Mat2::diag(-m.k_minus, -i.k_minus));

        let same = LigandKinetics::new(4e-17, 3.0);
        let om = omega_matrix(ConcentrationPair::new(5e16, 5e16), &same, &same);
        assert_eq!(om[(0, 0)], om[(1, 1)]);
        assert_eq!(om[(0, 1)] / om[(1, 0)], 1.0);

        let om = omega_matrix(ConcentrationPair::new(6e17, 6e17), &m, &i);
        let (hi, lo) = om.real_eigenvalues().unwrap();
        assert!(hi < 0.0 && lo < 0.0);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn generator_columns_sum_to_zero() {
        let (m, i) = rates();
        let g = generator_matrix(ConcentrationPair::new(6e17, 2e17), &m, &i);
        for col in 0..3 {
            let s: f64 = (0..3).map(|r| g[r][col]).sum();
            assert!(s.abs() < 1e-12, "column {col} sums to {s}");
        }
    }

    #[test]
    fn gamma_examples() {
        let zero = EquilibriumState {
            bound_info: 0.0,
            bound_interferer: 0.0,
            unbound: 1.0,
        };
        assert_eq!(gamma_matrix(&zero), Mat2::ZERO);
        let single = EquilibriumState {
            bound_info: 0.3,
            bound_interferer: 0.0,
            unbound: 0.7,
        };
        assert_eq!(gamma_matrix(&single), Mat2::diag(0.3 * 0.7, 0.0));
    }

    #[test]
    fn trace_validation() {
        let (m, i) = rates();
        let lam = ConcentrationPair::new(1e17, 1e17);
        assert!(simulate_trace(10, lam, &m, &i, 7, 0.01, 1).is_err());
        assert!(simulate_trace(10, lam, &m, &i, 0, 0.01, 1).is_err());
        assert!(simulate_trace(10, lam, &m, &i, 8, 0.0, 1).is_err());
        assert!(simulate_trace(0, lam, &m, &i, 8, 0.01, 1).is_err());
    }

    #[test]
    fn trace_without_ligand_stays_unbound() {
        let (m, i) = rates();
        let tr = simulate_trace(120, ConcentrationPair::new(0.0, 0.0), &m, &i, 700, 0.005, 9).unwrap();
        assert!(tr.bound().all(|b| b == 0));
    }

    #[test]
    fn trace_is_deterministic_and_bounded() {
        let (m, i) = rates();
        let lam = ConcentrationPair::new(6e17, 6e17);
        let a = simulate_trace(120, lam, &m, &i, 700, 0.005, 42).unwrap();
        let b = simulate_trace(120, lam, &m, &i, 700, 0.005, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 700);
        assert!(a.bound().all(|x| x <= 120));
    }

    #[test]
    fn instant_unbinding_keeps_receptors_free() {
        let m = LigandKinetics::new(4e-17, 1e6);
        let i = LigandKinetics::new(4e-17, 1e6);
        let tr = simulate_trace(120, ConcentrationPair::new(6e17, 6e17), &m, &i, 700, 0.005, 5).unwrap();
        let occ: f64 = tr.bound().map(f64::from).sum::<f64>() / (120.0 * 700.0);
        assert!(occ < 1e-3, "occupancy {occ}");
    }

    #[test]
    fn binomial_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_bound_count(120, 0.0, &mut rng).unwrap(), 0);
        assert_eq!(sample_bound_count(120, 1.0, &mut rng).unwrap(), 120);
        assert!(sample_bound_count(120, 1.5, &mut rng).is_err());
    }

    #[test]
    fn binomial_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| f64::from(sample_bound_count(120, 0.5, &mut rng).unwrap()))
            .sum::<f64>()
            / n as f64;
        let se = (120.0 * 0.25 / n as f64).sqrt();
        assert!((mean - 60.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn degenerate_interferer_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let model = InterfererModel::new(6e17, 0.0);
        assert_eq!(draw_interferer(&model, &mut rng), 6e17);
    }

    #[test]
    fn lognormal_moment_matching() {
        let n = 1_000_000;
        let model = InterfererModel::new(6e17, 6e16);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let xs: Vec<f64> = (0..n).map(|_| draw_interferer(&model, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        // standard errors of the sample mean and sample std
        let se_mean = model.std_dev / (n as f64).sqrt();
        assert!((mean - model.mean).abs() < 3.0 * se_mean, "mean {mean}");
        let cv = model.std_dev / model.mean;
        let kurt_excess = cv.powi(8) + 6.0 * cv.powi(6) + 15.0 * cv.powi(4) + 16.0 * cv.powi(2);
        let se_sd = model.std_dev * ((kurt_excess + 2.0) / (4.0 * n as f64)).sqrt();
        assert!((sd - model.std_dev).abs() < 3.0 * se_sd, "sd {sd}");

        // scale family
        let doubled = InterfererModel::new(1.2e18, 1.2e17);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mean2 = (0..n).map(|_| draw_interferer(&doubled, &mut rng)).sum::<f64>() / n as f64;
        assert_relative_eq!(mean2, 2.0 * mean, max_relative = 1e-9);
    }
}
