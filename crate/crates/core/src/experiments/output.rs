use super::scenario::{Scenario, SweepVariable};
use super::sweep::ResultRow;
use crate::error::Result;
use crate::kinetics::ConcentrationPair;
use crate::spectral::characteristic_frequencies;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

const RESULT_HEADER: [&str; 20] = [
    "tdd_bep_analytic [1]",
    "fdd_bep_analytic [1]",
    "tdd_bep_mc [1]",
    "tdd_bep_mc_ci_low [1]",
    "tdd_bep_mc_ci_high [1]",
    "tdd_mc_errors [symbols]",
    "fdd_bep_mc [1]",
    "fdd_bep_mc_ci_low [1]",
    "fdd_bep_mc_ci_high [1]",
    "fdd_mc_errors [symbols]",
    "mc_symbols [symbols]",
    "fdd_unconverged [fits]",
    "var_cm_bit0 [m^-6]",
    "var_cm_bit1 [m^-6]",
    "threshold_fdd [m^-3]",
    "threshold_tdd [A]",
    "f_ch_plus_bit0 [Hz]",
    "f_ch_minus_bit0 [Hz]",
    "f_ch_plus_bit1 [Hz]",
    "f_ch_minus_bit1 [Hz]",
];

fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:e}")
    }
}

/// Writes the sweep table as CSV to any writer.
pub fn write_results_to<W: Write>(rows: &[ResultRow], variable: SweepVariable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![variable.header()];
    header.extend(RESULT_HEADER);
    header.push("error");
    w.write_record(&header)?;
    for r in rows {
        let mc = |e: &Option<crate::detection::BepEstimate>| match e {
            Some(e) => [num(e.rate), num(e.ci_low), num(e.ci_high), e.errors.to_string()],
            None => Default::default(),
        };
        let mut rec = vec![num(r.value), num(r.tdd_bep), num(r.fdd_bep)];
        rec.extend(mc(&r.tdd_mc));
        rec.extend(mc(&r.fdd_mc));
        rec.push(r.tdd_mc.map_or(String::new(), |e| e.symbols.to_string()));
        rec.push(r.fdd_unconverged.to_string());
        rec.extend(r.var_cm.map(num));
        rec.push(num(r.threshold_fdd));
        rec.push(num(r.threshold_tdd));
        for (p, m) in r.f_ch {
            rec.push(num(p));
            rec.push(num(m));
        }
        rec.push(r.error.clone().unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results(rows: &[ResultRow], variable: SweepVariable, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_results_to(rows, variable, std::io::BufWriter::new(file))
}

/// Model PSD curves for both bits with their corner-frequency markers.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdFigure {
    pub freqs: Vec<f64>,
    /// `S(f)` at `(c_m|s, μ_ci)`, A²/Hz.
    pub curves: [Vec<f64>; 2],
    /// `(bit, f₊, f₋)`.
    pub markers: [(u8, f64, f64); 2],
    pub lambda: [ConcentrationPair; 2],
}

/// Log-spaced total PSD of both symbols from a decade below the record's
/// resolution to a decade above its Nyquist frequency.
pub fn emit_psd_figure(scn: &Scenario, points: usize) -> Result<PsdFigure> {
    scn.validate()?;
    let points = points.max(2);
    let model = scn.psd_model();
    let c_m = scn.concentrations()?;
    let mu_i = scn.interferer()?.mean;
    let lo = (0.1 / (scn.sampling.n as f64 * scn.sampling.dt)).log10();
    let hi = (5.0 / scn.sampling.dt).log10();
    let freqs: Vec<f64> = (0..points)
        .map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / (points - 1) as f64))
        .collect();
    let lambda = c_m.map(|c| ConcentrationPair::new(c, mu_i));
    let curves = lambda.map(|l| {
        let op = model.at(l);
        freqs.iter().map(|&f| op.total(f)).collect::<Vec<_>>()
    });
    let markers = [0u8, 1].map(|b| {
        let (p, m) = characteristic_frequencies(lambda[b as usize], &model.info, &model.interferer);
        (b, p, m)
    });
    Ok(PsdFigure { freqs, curves, markers, lambda })
}

impl PsdFigure {
    /// Rows `curve,f,S0,S1` followed by `marker,f,bit,label` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kind", "f [Hz]", "s_bit0 [A^2/Hz]", "s_bit1 [A^2/Hz]", "label"])?;
        for (k, f) in self.freqs.iter().enumerate() {
            w.write_record([
                "curve".to_string(),
                num(*f),
                num(self.curves[0][k]),
                num(self.curves[1][k]),
                String::new(),
            ])?;
        }
        for (bit, p, m) in self.markers {
            for (f, label) in [(p, "f_ch_plus"), (m, "f_ch_minus")] {
                w.write_record(["marker".to_string(), num(f), String::new(), String::new(), format!("{label}_bit{bit}")])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Log-log plot of both curves with dashed marker lines.
    pub fn to_svg(&self) -> String {
        let (w, h, pad) = (640.0, 420.0, 60.0);
        let lx: Vec<f64> = self.freqs.iter().map(|f| f.log10()).collect();
        let ly: Vec<Vec<f64>> = self.curves.iter().map(|c| c.iter().map(|s| s.log10()).collect()).collect();
        let (x0, x1) = (lx[0], lx[lx.len() - 1]);
        let y0 = ly.iter().flatten().cloned().fold(f64::INFINITY, f64::min).floor();
        let y1 = ly.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max).ceil();
        let px = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
        let py = |y: f64| h - pad - (y - y0) / (y1 - y0).max(1e-12) * (h - 2.0 * pad);

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#);
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<path d="M{a},{b} L{a},{c} L{d},{c}" stroke="black" fill="none"/>"#,
            a = pad,
            b = pad,
            c = h - pad,
            d = w - pad
        );
        for d in (x0.ceil() as i32)..=(x1.floor() as i32) {
            let x = px(f64::from(d));
            let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">1e{d}</text>"#, h - pad + 16.0);
        }
        for d in (y0 as i32)..=(y1 as i32) {
            let y = py(f64::from(d));
            let _ = writeln!(s, r#"<text x="{:.1}" y="{y:.1}" text-anchor="end">1e{d}</text>"#, pad - 4.0);
        }
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">f [Hz]</text>"#, w / 2.0, h - 12.0);
        let _ = writeln!(s, r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})" text-anchor="middle">S(f) [A^2/Hz]</text>"#, h / 2.0, h / 2.0);
        let colours = ["#1f77b4", "#d62728"];
        for (b, curve) in ly.iter().enumerate() {
            let pts: Vec<String> = lx.iter().zip(curve).map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
            let _ = writeln!(s, r#"<polyline points="{}" stroke="{}" fill="none" stroke-width="1.5"/>"#, pts.join(" "), colours[b]);
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" fill="{}">bit {b}</text>"#, w - pad - 40.0, pad + 14.0 * (b as f64 + 1.0), colours[b]);
        }
        for (b, p, m) in self.markers {
            for f in [p, m] {
                let x = f.log10();
                if x >= x0 && x <= x1 {
                    let _ = writeln!(
                        s,
                        r#"<line x1="{x:.2}" y1="{:.1}" x2="{x:.2}" y2="{:.1}" stroke="{}" stroke-dasharray="4 3"/>"#,
                        pad,
                        h - pad,
                        colours[b as usize],
                        x = px(x)
                    );
                }
            }
        }
        s.push_str("</svg>\n");
        s
    }
}
