//! Whittle maximum-likelihood estimation of ligand concentrations from a
//! periodogram, and Fisher-information variances.

use crate::error::{Error, Result};
use crate::kinetics::ConcentrationPair;
use crate::spectral::{Periodogram, PsdModel};
use serde::{Deserialize, Serialize};

/// Which PSD model the receiver fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Full two-species model, parameters `[c_m, c_i]`.
    TwoSpecies,
    /// Single-species model the detector uses, parameter `[c_m]`.
    NoInterference,
}

impl ModelKind {
    pub fn dim(self) -> usize {
        match self {
            ModelKind::TwoSpecies => 2,
            ModelKind::NoInterference => 1,
        }
    }
}

/// Model PSD over a frequency grid for the given parameters.
pub fn model_spectrum(model: &PsdModel, kind: ModelKind, params: &[f64], freqs: &[f64]) -> Vec<f64> {
    match kind {
        ModelKind::TwoSpecies => {
            let op = model.at(ConcentrationPair::new(params[0], params[1]));
            freqs.iter().map(|&f| op.total(f)).collect()
        }
        ModelKind::NoInterference => freqs
            .iter()
            .map(|&f| model.no_interference_psd_unchecked(f, params[0]))
            .collect(),
    }
}

/// Optimizer settings. The defaults are the ones used everywhere else.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Seed grid points per species.
    pub grid_points: usize,
    /// Newton runs from this many seed-grid points (local minima of the grid
    /// first); the lowest final likelihood wins.
    pub starts: usize,
    /// Seed grid spans `K_D·10^(±grid_decades)`.
    pub grid_decades: f64,
    /// Search is clamped to the seed grid widened by this many decades.
    pub bound_margin_decades: f64,
    pub max_iterations: usize,
    /// Stop when `‖∇l‖∞ < tol · (number of bins)`. A line search that cannot
    /// decrease `l` also counts as converged if the Newton model predicts a
    /// decrease below `1e-12` relative.
    pub gradient_tolerance: f64,
    /// Finite-difference step for the gradient (log space).
    pub gradient_step: f64,
    /// Finite-difference step for the Hessian (log space).
    pub hessian_step: f64,
    /// Largest Newton step per coordinate (log space).
    pub max_step: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            grid_points: 16,
            starts: 4,
            grid_decades: 3.0,
            bound_margin_decades: 3.0,
            max_iterations: 100,
            gradient_tolerance: 1e-8,
            gradient_step: 1e-4,
            hessian_step: 1e-3,
            max_step: 2.0,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 2 {
            return Err(Error::invalid("estimation.grid_points", "must be >= 2"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("estimation.max_iterations", "must be >= 1"));
        }
        for (name, v) in [
            ("estimation.grid_decades", self.grid_decades),
            ("estimation.gradient_tolerance", self.gradient_tolerance),
            ("estimation.gradient_step", self.gradient_step),
            ("estimation.hessian_step", self.hessian_step),
            ("estimation.max_step", self.max_step),
        ] {
            crate::error::require_positive(name, v)?;
        }
        crate::error::require_nonnegative("estimation.bound_margin_decades", self.bound_margin_decades)
    }
}

/// Result of [`ml_estimate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhittleFit {
    /// Estimate; `interferer` is 0 for the no-interference model.
    pub lambda_hat: ConcentrationPair,
    pub neg_log_lik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Seed-grid point the returned fit started from.
    pub init: ConcentrationPair,
    /// Projected gradient ∞-norm (log space) at `lambda_hat`.
    pub gradient_norm: f64,
}

/// `l(λ) = Σ_k [Y_k/S(f_k, λ) + ln S(f_k, λ)]` for the two-species model.
pub fn whittle_neg_log_lik(lambda: ConcentrationPair, pg: &Periodogram, model: &PsdModel) -> Result<f64> {
    lambda.validate()?;
    whittle_neg_log_lik_for(ModelKind::TwoSpecies, &[lambda.info, lambda.interferer], pg, model)
}

/// Whittle negative log-likelihood for either model.
pub fn whittle_neg_log_lik_for(
    kind: ModelKind,
    params: &[f64],
    pg: &Periodogram,
    model: &PsdModel,
) -> Result<f64> {
    check_params(kind, params)?;
    let s = model_spectrum(model, kind, params, &pg.freqs);
    if let Some(bad) = s.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::domain(format!("model PSD must be positive, got {bad}")));
    }
    Ok(whittle_sum(&pg.ordinates, &s))
}

fn check_params(kind: ModelKind, params: &[f64]) -> Result<()> {
    if params.len() != kind.dim() {
        return Err(Error::domain(format!(
            "{kind:?} takes {} parameters, got {}",
            kind.dim(),
            params.len()
        )));
    }
    if params.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::domain("concentrations must be finite and >= 0"));
    }
    Ok(())
}

fn whittle_sum(y: &[f64], s: &[f64]) -> f64 {
    y.iter().zip(s).map(|(y, s)| y / s + s.ln()).sum()
}

struct Objective<'a> {
    pg: &'a Periodogram,
    model: &'a PsdModel,
    kind: ModelKind,
}

impl Objective<'_> {
    /// `l − Σ ln r_k` at log-concentrations `theta`, with `r_k = Y_k` (1 for
    /// empty bins) so each term is O(1) and finite differences stay accurate.
    /// +inf where the model breaks down.
    fn eval(&self, theta: &[f64]) -> f64 {
        let params: Vec<f64> = theta.iter().map(|t| t.exp()).collect();
        let s = model_spectrum(self.model, self.kind, &params, &self.pg.freqs);
        if s.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return f64::INFINITY;
        }
        self.pg
            .ordinates
            .iter()
            .zip(&s)
            .map(|(&y, s)| {
                let r = if y > 0.0 { y } else { 1.0 };
                y / s + (s / r).ln()
            })
            .sum()
    }

    fn offset(&self) -> f64 {
        self.pg.ordinates.iter().filter(|y| **y > 0.0).map(|y| y.ln()).sum()
    }

    fn gradient(&self, theta: &[f64], h: f64) -> Vec<f64> {
        let mut g = vec![0.0; theta.len()];
        let mut t = theta.to_vec();
        for i in 0..theta.len() {
            t[i] = theta[i] + h;
            let up = self.eval(&t);
            t[i] = theta[i] - h;
            let down = self.eval(&t);
            t[i] = theta[i];
            g[i] = (up - down) / (2.0 * h);
        }
        g
    }

    fn hessian(&self, theta: &[f64], h_grad: f64, h: f64) -> [[f64; 2]; 2] {
        let d = theta.len();
        let mut hess = [[0.0; 2]; 2];
        let mut t = theta.to_vec();
        for j in 0..d {
            t[j] = theta[j] + h;
            let up = self.gradient(&t, h_grad);
            t[j] = theta[j] - h;
            let down = self.gradient(&t, h_grad);
            t[j] = theta[j];
            for i in 0..d {
                hess[i][j] = (up[i] - down[i]) / (2.0 * h);
            }
        }
        if d == 2 {
            let off = 0.5 * (hess[0][1] + hess[1][0]);
            hess[0][1] = off;
            hess[1][0] = off;
        }
        hess
    }
}

/// Dissociation constants of the fitted species, in parameter order.
fn scales(model: &PsdModel, kind: ModelKind) -> Vec<f64> {
    match kind {
        ModelKind::TwoSpecies => vec![model.info.dissociation(), model.interferer.dissociation()],
        ModelKind::NoInterference => vec![model.info.dissociation()],
    }
}

/// Whittle ML estimate with the default [`EstimatorConfig`].
pub fn ml_estimate(pg: &Periodogram, model: &PsdModel, kind: ModelKind) -> Result<WhittleFit> {
    ml_estimate_with(pg, model, kind, &EstimatorConfig::default())
}

/// Whittle ML estimate: damped Newton in log-concentration space with
/// finite-difference derivatives, started from the best points of a
/// log-spaced seed grid.
///
/// Non-convergence is reported through [`WhittleFit::converged`], not as an
/// error.
pub fn ml_estimate_with(
    pg: &Periodogram,
    model: &PsdModel,
    kind: ModelKind,
    cfg: &EstimatorConfig,
) -> Result<WhittleFit> {
    cfg.validate()?;
    if pg.is_empty() {
        return Err(Error::domain("empty periodogram"));
    }
    let obj = Objective { pg, model, kind };
    let d = kind.dim();
    let ln10 = std::f64::consts::LN_10;
    let centres: Vec<f64> = scales(model, kind).iter().map(|k| k.ln()).collect();
    let half = cfg.grid_decades * ln10;
    let lower: Vec<f64> = centres.iter().map(|c| c - half - cfg.bound_margin_decades * ln10).collect();
    let upper: Vec<f64> = centres.iter().map(|c| c + half + cfg.bound_margin_decades * ln10).collect();

    // Seed grid, c_i in the outer loop.
    let axis = |i: usize| -> Vec<f64> {
        (0..cfg.grid_points)
            .map(|k| centres[i] - half + 2.0 * half * k as f64 / (cfg.grid_points - 1) as f64)
            .collect()
    };
    let grid: Vec<Vec<f64>> = (0..d).map(axis).collect();
    let n = cfg.grid_points;
    let (rows, cols) = if d == 1 { (1, n) } else { (n, n) };
    // values[r][c]: interferer index r (outer), information index c
    let values: Vec<Vec<f64>> = (0..rows)
        .map(|r| {
            (0..cols)
                .map(|c| {
                    let v = if d == 1 { obj.eval(&[grid[0][c]]) } else { obj.eval(&[grid[0][c], grid[1][r]]) };
                    if v.is_finite() { v } else { f64::INFINITY }
                })
                .collect()
        })
        .collect();
    let point = |r: usize, c: usize| if d == 1 { vec![grid[0][c]] } else { vec![grid[0][c], grid[1][r]] };
    // Discrete local minima first (one per basin the grid resolves), then the
    // remaining points, each group by likelihood.
    let mut seeds: Vec<(bool, f64, Vec<f64>)> = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = values[r][c];
            if !v.is_finite() {
                continue;
            }
            let mut minimum = true;
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    let (rr, cc) = (r as i64 + dr, c as i64 + dc);
                    if (dr, dc) == (0, 0) || rr < 0 || cc < 0 || rr >= rows as i64 || cc >= cols as i64 {
                        continue;
                    }
                    minimum &= v <= values[rr as usize][cc as usize];
                }
            }
            seeds.push((!minimum, v, point(r, c)));
        }
    }
    if seeds.is_empty() {
        return Err(Error::domain("likelihood is not finite anywhere on the seed grid"));
    }
    // stable: among equal values the smaller c_i (earlier row) stays first
    seeds.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let seeds: Vec<(f64, Vec<f64>)> = seeds.into_iter().map(|(_, v, p)| (v, p)).collect();

    let bounds = Bounds { lower, upper };
    let mut best: Option<(Local, Vec<f64>)> = None;
    for (l0, theta0) in seeds.into_iter().take(cfg.starts.max(1)) {
        let local = newton(&obj, theta0.clone(), l0, &bounds, cfg);
        if best.as_ref().is_none_or(|(b, _)| local.l < b.l) {
            best = Some((local, theta0));
        }
    }
    let (local, theta0) = best.expect("at least one start");

    let mut lambda_hat = to_pair(&local.theta);
    if d == 1 {
        lambda_hat.interferer = 0.0;
    }
    Ok(WhittleFit {
        lambda_hat,
        neg_log_lik: local.l + obj.offset(),
        iterations: local.iterations,
        converged: local.converged,
        init: to_pair(&theta0),
        gradient_norm: local.gradient_norm,
    })
}

struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

struct Local {
    theta: Vec<f64>,
    l: f64,
    iterations: usize,
    converged: bool,
    gradient_norm: f64,
}

/// Damped Newton from one seed, clamped to `bounds`.
fn newton(obj: &Objective<'_>, mut theta: Vec<f64>, mut l: f64, bounds: &Bounds, cfg: &EstimatorConfig) -> Local {
    let d = theta.len();
    let (lower, upper) = (&bounds.lower, &bounds.upper);
    let n_bins = obj.pg.len() as f64;
    let tol = cfg.gradient_tolerance * n_bins;
    let mut converged = false;
    let mut iterations = 0;
    let mut gnorm;
    loop {
        let g = obj.gradient(&theta, cfg.gradient_step);
        let free: Vec<bool> = (0..d)
            .map(|i| {
                let at_low = theta[i] <= lower[i] && g[i] > 0.0;
                let at_high = theta[i] >= upper[i] && g[i] < 0.0;
                !(at_low || at_high)
            })
            .collect();
        gnorm = (0..d).filter(|&i| free[i]).map(|i| g[i].abs()).fold(0.0, f64::max);
        if gnorm < tol {
            converged = true;
            // one polishing step; the gradient test alone leaves errors of
            // order tol/curvature along weakly identified directions
            let h = obj.hessian(&theta, cfg.gradient_step, cfg.hessian_step);
            let step = newton_direction(&h, &g, &free);
            let trial: Vec<f64> = (0..d).map(|i| (theta[i] + step[i]).clamp(lower[i], upper[i])).collect();
            let v = obj.eval(&trial);
            if v < l {
                theta = trial;
                l = v;
            }
            break;
        }
        if iterations >= cfg.max_iterations {
            break;
        }
        iterations += 1;

        let h = obj.hessian(&theta, cfg.gradient_step, cfg.hessian_step);
        let mut step = newton_direction(&h, &g, &free);
        let predicted = -0.5 * step.iter().zip(&g).map(|(s, g)| s * g).sum::<f64>();
        let biggest = step.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        if biggest > cfg.max_step {
            step.iter_mut().for_each(|s| *s *= cfg.max_step / biggest);
        }

        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let trial: Vec<f64> = (0..d)
                .map(|i| (theta[i] + alpha * step[i]).clamp(lower[i], upper[i]))
                .collect();
            let v = obj.eval(&trial);
            if v < l {
                theta = trial;
                l = v;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // no decrease is resolvable in floating point: stationary to
            // working precision when the model predicts a negligible gain
            converged = predicted.abs() <= 1e-12 * (l.abs() + n_bins);
            break;
        }
    }
    Local {
        theta,
        l,
        iterations,
        converged,
        gradient_norm: gnorm,
    }
}

fn to_pair(theta: &[f64]) -> ConcentrationPair {
    ConcentrationPair::new(theta[0].exp(), theta.get(1).map_or(0.0, |t| t.exp()))
}

/// Solves `(H + μI)·s = −g` on the free coordinates, with the Levenberg shift
/// `μ` just large enough to make the system positive definite.
fn newton_direction(h: &[[f64; 2]; 2], g: &[f64], free: &[bool]) -> Vec<f64> {
    let idx: Vec<usize> = (0..g.len()).filter(|&i| free[i]).collect();
    let mut step = vec![0.0; g.len()];
    match idx.as_slice() {
        [] => {}
        &[i] => {
            let a = h[i][i];
            let scale = a.abs().max(g[i].abs()).max(1e-300);
            let a = if a > 1e-10 * scale { a } else { a.abs() + 1e-6 * scale };
            step[i] = -g[i] / a;
        }
        &[i, j] => {
            let (a, b, d) = (h[i][i], h[i][j], h[j][j]);
            let mid = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            let (lmin, lmax) = (mid - rad, mid + rad);
            let scale = lmax.abs().max(lmin.abs()).max(1e-300);
            let mu = if lmin > 1e-10 * scale { 0.0 } else { -lmin + 1e-6 * scale };
            let (a, d) = (a + mu, d + mu);
            let det = a * d - b * b;
            step[i] = -(d * g[i] - b * g[j]) / det;
            step[j] = -(a * g[j] - b * g[i]) / det;
        }
        _ => unreachable!("at most two parameters"),
    }
    step
}

/// Smoothed Fisher information `F_ij = Σ_k S⁻²·∂S/∂θ_i·∂S/∂θ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    pub dim: usize,
    /// Only the leading `dim × dim` block is meaningful.
    pub entries: [[f64; 2]; 2],
    pub evaluated_at: Vec<f64>,
}

impl FisherMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.dim && j < self.dim, "index out of range");
        self.entries[i][j]
    }
}

/// Relative central-difference step for `∂S/∂θ`.
const DERIVATIVE_STEP: f64 = 1e-6;

fn fd_step(p: f64, params: &[f64]) -> f64 {
    let scale = if p != 0.0 {
        p.abs()
    } else {
        params.iter().fold(0.0f64, |m, q| m.max(q.abs())).max(1.0)
    };
    DERIVATIVE_STEP * scale
}

/// Derivatives of the spectrum w.r.t. each parameter; one-sided where a
/// parameter sits at 0.
fn spectrum_derivatives(spectrum: &impl Fn(&[f64]) -> Vec<f64>, params: &[f64]) -> Vec<Vec<f64>> {
    let mut p = params.to_vec();
    (0..params.len())
        .map(|i| {
            let h = fd_step(params[i], params);
            let central = params[i] - h >= 0.0;
            p[i] = params[i] + h;
            let up = spectrum(&p);
            p[i] = if central { params[i] - h } else { params[i] };
            let down = spectrum(&p);
            p[i] = params[i];
            let span = if central { 2.0 * h } else { h };
            up.iter().zip(&down).map(|(u, d)| (u - d) / span).collect()
        })
        .collect()
}

/// Smoothed Fisher information for an arbitrary spectrum over a fixed grid.
/// `spectrum` maps a parameter vector (length 1 or 2) to the model PSD at
/// every grid frequency.
pub fn fisher_information(spectrum: impl Fn(&[f64]) -> Vec<f64>, params: &[f64]) -> FisherMatrix {
    let d = params.len();
    assert!((1..=2).contains(&d), "one or two parameters supported");
    let s = spectrum(params);
    let ds = spectrum_derivatives(&spectrum, params);
    let mut entries = [[0.0; 2]; 2];
    for i in 0..d {
        for j in i..d {
            let v: f64 = (0..s.len()).map(|k| ds[i][k] * ds[j][k] / (s[k] * s[k])).sum();
            entries[i][j] = v;
            entries[j][i] = v;
        }
    }
    FisherMatrix {
        dim: d,
        entries,
        evaluated_at: params.to_vec(),
    }
}

/// Smoothed Fisher information of the chosen model on `freqs`.
pub fn fisher_matrix(params: &[f64], model: &PsdModel, freqs: &[f64], kind: ModelKind) -> Result<FisherMatrix> {
    check_params(kind, params)?;
    Ok(fisher_information(|p| model_spectrum(model, kind, p, freqs), params))
}

/// Observed information: the Hessian of `l` at `params` for one periodogram,
/// `Σ_k [(2Y−S)/S³·S_i·S_j + (S−Y)/S²·S_ij]`. Its expectation is the smoothed
/// form of [`fisher_matrix`].
pub fn observed_information(
    params: &[f64],
    pg: &Periodogram,
    model: &PsdModel,
    kind: ModelKind,
) -> Result<FisherMatrix> {
    check_params(kind, params)?;
    let d = params.len();
    let spectrum = |p: &[f64]| model_spectrum(model, kind, p, &pg.freqs);
    let s = spectrum(params);
    let ds = spectrum_derivatives(&spectrum, params);
    // second derivatives need a coarser step
    let step = |i: usize| 1e-3 * fd_step(params[i], params) / DERIVATIVE_STEP;
    let mut entries = [[0.0; 2]; 2];
    for i in 0..d {
        for j in i..d {
            let (hi, hj) = (step(i), step(j));
            let mut p = params.to_vec();
            let mut at = |di: f64, dj: f64| {
                p.copy_from_slice(params);
                p[i] += di;
                p[j] += dj;
                spectrum(&p)
            };
            let sij: Vec<f64> = if i == j {
                let (up, down) = (at(hi, 0.0), at(-hi, 0.0));
                (0..s.len()).map(|k| (up[k] - 2.0 * s[k] + down[k]) / (hi * hi)).collect()
            } else {
                let (pp, pm, mp, mm) = (at(hi, hj), at(hi, -hj), at(-hi, hj), at(-hi, -hj));
                (0..s.len())
                    .map(|k| (pp[k] - pm[k] - mp[k] + mm[k]) / (4.0 * hi * hj))
                    .collect()
            };
            let v: f64 = (0..s.len())
                .map(|k| {
                    let (sk, y) = (s[k], pg.ordinates[k]);
                    (2.0 * y - sk) / sk.powi(3) * ds[i][k] * ds[j][k] + (sk - y) / (sk * sk) * sij[k]
                })
                .sum();
            entries[i][j] = v;
            entries[j][i] = v;
        }
    }
    Ok(FisherMatrix {
        dim: d,
        entries,
        evaluated_at: params.to_vec(),
    })
}

/// Cramér-Rao variances: the diagonal of `F⁻¹`.
pub fn estimator_variance(f: &FisherMatrix) -> Result<Vec<f64>> {
    let e = &f.entries;
    let vars = match f.dim {
        1 => {
            if !(e[0][0] > 0.0) || !e[0][0].is_finite() {
                return Err(Error::Singular(format!("Fisher information {} is not invertible", e[0][0])));
            }
            vec![1.0 / e[0][0]]
        }
        2 => {
            let det = e[0][0] * e[1][1] - e[0][1] * e[1][0];
            let scale = (e[0][0] * e[1][1]).abs();
            if !(det > 1e-12 * scale) || !det.is_finite() {
                return Err(Error::Singular(format!(
                    "Fisher matrix is not invertible (det = {det:e}); parameters not identifiable here"
                )));
            }
            vec![e[1][1] / det, e[0][0] / det]
        }
        d => return Err(Error::domain(format!("unsupported Fisher dimension {d}"))),
    };
    Ok(vars)
}
