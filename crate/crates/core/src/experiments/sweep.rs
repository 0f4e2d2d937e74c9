use super::scenario::Scenario;
use crate::detection::{fdd_analysis, fdd_monte_carlo, tdd_analysis, tdd_monte_carlo, BepEstimate};
use crate::error::Result;
use crate::kinetics::ConcentrationPair;
use crate::spectral::{characteristic_frequencies, frequency_grid};
use rayon::prelude::*;

/// One sweep point. Monte Carlo fields are `None` when `trials = 0`;
/// numeric fields are NaN when the point failed (see `error`).
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub value: f64,
    pub tdd_bep: f64,
    pub fdd_bep: f64,
    pub tdd_mc: Option<BepEstimate>,
    pub fdd_mc: Option<BepEstimate>,
    /// FDD Monte Carlo fits that did not meet the convergence test.
    pub fdd_unconverged: u64,
    /// `σ²_ĉm|s` from the two-species Fisher matrix.
    pub var_cm: [f64; 2],
    pub threshold_fdd: f64,
    pub threshold_tdd: f64,
    /// `(f₊, f₋)` at `(c_m|s, μ_ci)` for bit 0 and bit 1.
    pub f_ch: [(f64, f64); 2],
    pub error: Option<String>,
}

impl ResultRow {
    fn failed(value: f64, err: String) -> Self {
        ResultRow {
            value,
            tdd_bep: f64::NAN,
            fdd_bep: f64::NAN,
            tdd_mc: None,
            fdd_mc: None,
            fdd_unconverged: 0,
            var_cm: [f64::NAN; 2],
            threshold_fdd: f64::NAN,
            threshold_tdd: f64::NAN,
            f_ch: [(f64::NAN, f64::NAN); 2],
            error: Some(err),
        }
    }
}

/// Analytic and (if `run.trials > 0`) Monte Carlo BEPs at every sweep value.
///
/// Point `p`, detector `d` (0 = TDD, 1 = FDD), symbol `k` draws from the RNG
/// stream `(seed, p, d, k)`, so the table does not depend on scheduling.
/// Failures at individual points are recorded in the row.
pub fn run_sweep(scn: &Scenario) -> Result<Vec<ResultRow>> {
    scn.validate()?;
    let rows = scn
        .sweep
        .values
        .par_iter()
        .enumerate()
        .map(|(p, &v)| {
            let point = scn.at(scn.sweep.variable, v);
            evaluate_point(&point, p as u64, v).unwrap_or_else(|e| ResultRow::failed(v, e.to_string()))
        })
        .collect();
    Ok(rows)
}

fn evaluate_point(scn: &Scenario, point: u64, value: f64) -> Result<ResultRow> {
    scn.validate()?;
    let c_m = scn.concentrations()?;
    let interferer = scn.interferer()?;
    let model = scn.psd_model();
    let band = scn.flicker_band();
    let freqs = frequency_grid(scn.sampling.n, scn.sampling.dt);

    let tdd = tdd_analysis(c_m, &interferer, &model, band)?;
    let fdd = fdd_analysis(c_m, interferer.mean, &model, &freqs)?;
    let f_ch = c_m.map(|c| {
        characteristic_frequencies(ConcentrationPair::new(c, interferer.mean), &model.info, &model.interferer)
    });

    let trials = scn.run.trials;
    let seed = scn.run.seed;
    let (tdd_mc, fdd_mc, unconverged) = if trials > 0 {
        let t = tdd_monte_carlo(
            c_m,
            &interferer,
            &model,
            band,
            &tdd.threshold,
            scn.detection.tdd_sampler,
            trials,
            seed,
            &[point, 0],
        )?;
        let f = fdd_monte_carlo(
            c_m,
            &interferer,
            &scn.observer(),
            &fdd.threshold,
            &scn.estimation,
            trials,
            seed,
            &[point, 1],
        )?;
        (Some(t), Some(f.bep), f.unconverged)
    } else {
        (None, None, 0)
    };

    Ok(ResultRow {
        value,
        tdd_bep: tdd.bep,
        fdd_bep: fdd.bep,
        tdd_mc,
        fdd_mc,
        fdd_unconverged: unconverged,
        var_cm: fdd.variances,
        threshold_fdd: fdd.threshold.value,
        threshold_tdd: tdd.threshold.value,
        f_ch,
        error: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::scenario::SweepVariable;

    #[test]
    fn analytic_only_sweep() {
        let mut s = Scenario::default();
        s.run.trials = 0;
        let rows = run_sweep(&s).unwrap();
        assert_eq!(rows.len(), 5);
        for r in &rows {
            assert!(r.error.is_none());
            assert!(r.tdd_mc.is_none() && r.fdd_mc.is_none());
            assert!(r.fdd_bep < r.tdd_bep);
        }
        for w in rows.windows(2) {
            assert!(w[1].tdd_bep >= w[0].tdd_bep);
        }
    }

    #[test]
    fn failing_point_is_recorded() {
        let mut s = Scenario::default();
        s.run.trials = 0;
        s.sweep.variable = SweepVariable::Dt;
        // at this period the record holds no binding information at all
        s.sweep.values = vec![0.005, 1e-300];
        let rows = run_sweep(&s).unwrap();
        assert!(rows[0].error.is_none());
        let err = rows[1].error.as_deref().unwrap();
        assert!(err.contains("invertible"), "{err}");
        assert!(rows[1].tdd_bep.is_nan());
    }
}
