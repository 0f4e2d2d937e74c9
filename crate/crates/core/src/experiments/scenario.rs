use crate::channel::{received_concentration, ChannelSpec, ReleaseEvent};
use crate::detection::{FlickerBand, TddSampler};
use crate::error::{require_positive, Error, Result};
use crate::estimation::EstimatorConfig;
use crate::kinetics::{InterfererModel, LigandKinetics};
use crate::pipeline::{FrontEnd, Observer};
use crate::spectral::{NoInterferenceForm, PsdModel};
use crate::transduction::ReceiverSpec;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Binding kinetics of both species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KineticsSection {
    pub info: LigandKinetics,
    pub interferer: LigandKinetics,
}

impl Default for KineticsSection {
    fn default() -> Self {
        KineticsSection {
            info: LigandKinetics::information(),
            interferer: LigandKinetics::interferer(),
        }
    }
}

/// Molecules released for bit 0 and bit 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransmitterSection {
    pub molecules: [u64; 2],
}

impl Default for TransmitterSection {
    fn default() -> Self {
        TransmitterSection { molecules: [1_000, 5_000] }
    }
}

/// Log-normal interferer: mean `gamma·c_m|1`, standard deviation
/// `mean/mean_to_std`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterferenceSection {
    pub gamma: f64,
    pub mean_to_std: f64,
}

impl Default for InterferenceSection {
    fn default() -> Self {
        InterferenceSection { gamma: 1.0, mean_to_std: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSection {
    /// Samples per symbol window.
    pub n: usize,
    /// Sampling period (s).
    pub dt: f64,
    pub front_end: FrontEnd,
    /// 1/f band of the time-domain sample. Defaults to
    /// `[1/(n·dt), 1/(2·dt)]` of this section, held fixed across N and dt
    /// sweeps.
    pub flicker_band: Option<FlickerBand>,
}

impl Default for SamplingSection {
    fn default() -> Self {
        SamplingSection {
            n: 700,
            dt: 0.005,
            front_end: FrontEnd::default(),
            flicker_band: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionSection {
    /// Binding term of the FDD threshold model.
    pub no_interference_form: NoInterferenceForm,
    /// Sample-path construction of the TDD Monte Carlo.
    pub tdd_sampler: TddSampler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVariable {
    /// Interferer mean relative to `c_m|1`.
    Gamma,
    /// Affinity ratio `K_Di/K_Dm`, realized through `k⁻_i` at fixed `k⁺_i`.
    Eta,
    /// Samples per window.
    N,
    /// Sampling period (s).
    Dt,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Gamma => "gamma",
            SweepVariable::Eta => "eta",
            SweepVariable::N => "n",
            SweepVariable::Dt => "dt",
        }
    }

    /// Column header including the unit.
    pub fn header(self) -> &'static str {
        match self {
            SweepVariable::Gamma => "gamma [1]",
            SweepVariable::Eta => "eta [1]",
            SweepVariable::N => "n [samples]",
            SweepVariable::Dt => "dt [s]",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            variable: SweepVariable::Gamma,
            values: vec![0.5, 1.0, 1.5, 2.0, 3.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Monte Carlo symbols per sweep point and detector; 0 disables Monte Carlo.
    pub trials: u64,
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { trials: 2_000, seed: 1 }
    }
}

/// A complete experiment description. Every section and key is optional;
/// missing values take the defaults of the reference receiver.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub channel: ChannelSpec,
    pub receiver: ReceiverSpec,
    pub kinetics: KineticsSection,
    pub transmitter: TransmitterSection,
    pub interference: InterferenceSection,
    pub sampling: SamplingSection,
    pub detection: DetectionSection,
    pub estimation: EstimatorConfig,
    pub sweep: SweepSection,
    pub run: RunSection,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let scn: Scenario = toml::from_str(text)?;
        scn.validate()?;
        Ok(scn)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.receiver.validate()?;
        self.kinetics.info.validate("kinetics.info")?;
        self.kinetics.interferer.validate("kinetics.interferer")?;
        let [m0, m1] = self.transmitter.molecules;
        if m0 >= m1 {
            return Err(Error::invalid(
                "transmitter.molecules",
                format!("bit 0 must release fewer molecules than bit 1, got [{m0}, {m1}]"),
            ));
        }
        require_positive("interference.gamma", self.interference.gamma)?;
        require_positive("interference.mean_to_std", self.interference.mean_to_std)?;
        check_record_length("sampling.n", self.sampling.n as f64)?;
        require_positive("sampling.dt", self.sampling.dt)?;
        self.sampling.front_end.validate()?;
        if let Some(b) = self.sampling.flicker_band {
            require_positive("sampling.flicker_band.f_low", b.f_low)?;
            if !(b.f_high >= b.f_low) {
                return Err(Error::invalid("sampling.flicker_band.f_high", "must be >= f_low"));
            }
        }
        self.estimation.validate()?;
        if self.sweep.values.is_empty() {
            return Err(Error::invalid("sweep.values", "must not be empty"));
        }
        for &v in &self.sweep.values {
            match self.sweep.variable {
                SweepVariable::N => check_record_length("sweep.values", v)?,
                _ => require_positive("sweep.values", v)?,
            }
        }
        // the channel must deliver a finite concentration
        self.concentrations()?;
        Ok(())
    }

    /// Received information concentrations `[c_m|0, c_m|1]` (molecules/m³).
    pub fn concentrations(&self) -> Result<[f64; 2]> {
        let [a, b] = self.transmitter.molecules;
        Ok([
            received_concentration(ReleaseEvent::new(a), &self.channel)?,
            received_concentration(ReleaseEvent::new(b), &self.channel)?,
        ])
    }

    pub fn interferer(&self) -> Result<InterfererModel> {
        let mean = self.interference.gamma * self.concentrations()?[1];
        Ok(InterfererModel::new(mean, mean / self.interference.mean_to_std))
    }

    pub fn psd_model(&self) -> PsdModel {
        PsdModel::new(
            self.kinetics.info,
            self.kinetics.interferer,
            self.receiver,
            self.channel.temperature,
        )
        .with_form(self.detection.no_interference_form)
    }

    pub fn observer(&self) -> Observer {
        Observer::new(self.psd_model(), self.sampling.n, self.sampling.dt).with_front_end(self.sampling.front_end)
    }

    pub fn flicker_band(&self) -> FlickerBand {
        self.sampling
            .flicker_band
            .unwrap_or_else(|| FlickerBand::from_sampling(self.sampling.n, self.sampling.dt))
    }

    /// The scenario at one sweep value. The flicker band is pinned to the
    /// base scenario's so that N and dt sweeps only change the FDD record.
    pub fn at(&self, variable: SweepVariable, value: f64) -> Scenario {
        let mut s = self.clone();
        s.sampling.flicker_band = Some(self.flicker_band());
        match variable {
            SweepVariable::Gamma => s.interference.gamma = value,
            SweepVariable::Eta => {
                let k_dm = self.kinetics.info.dissociation();
                s.kinetics.interferer.k_minus = value * k_dm * s.kinetics.interferer.k_plus;
            }
            SweepVariable::N => s.sampling.n = value as usize,
            SweepVariable::Dt => s.sampling.dt = value,
        }
        s
    }
}

fn check_record_length(field: &str, v: f64) -> Result<()> {
    if !(v >= 4.0) || v.fract() != 0.0 || !(v as u64).is_multiple_of(2) {
        return Err(Error::invalid(field, format!("record length must be an even integer >= 4, got {v}")));
    }
    Ok(())
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    Scenario::from_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn empty_config_gives_defaults() {
        let s = Scenario::from_toml("").unwrap();
        assert_eq!(s, Scenario::default());
        assert_eq!(s.receiver.receptors, 120);
        assert_eq!(s.sampling.n, 700);
        let c = s.concentrations().unwrap();
        assert_relative_eq!(c[1], 6.0054e17, max_relative = 1e-4);
        assert_relative_eq!(s.interferer().unwrap().mean, c[1]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Scenario::from_toml("[receiver]\nreceptorz = 3\n").is_err());
        assert!(Scenario::from_toml("[bogus]\n").is_err());
        assert!(Scenario::from_toml("extra = 1\n").is_err());
    }

    #[test]
    fn validation_names_the_field() {
        let err = Scenario::from_toml("[receiver]\nreceptors = -5\n").unwrap_err().to_string();
        assert!(err.contains("receptors"), "{err}");
        let err = Scenario::from_toml("[sampling]\ndt = 0.0\n").unwrap_err().to_string();
        assert!(err.contains("sampling.dt"), "{err}");
        let err = Scenario::from_toml("[sampling]\nn = 701\n").unwrap_err().to_string();
        assert!(err.contains("sampling.n"), "{err}");
        let err = Scenario::from_toml("[transmitter]\nmolecules = [5000, 1000]\n").unwrap_err().to_string();
        assert!(err.contains("transmitter.molecules"), "{err}");
        let err = Scenario::from_toml("[sweep]\nvariable = \"n\"\nvalues = [350, 333]\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("sweep.values"), "{err}");
    }

    #[test]
    fn toml_round_trip() {
        let mut s = Scenario::default();
        s.sweep.variable = SweepVariable::Eta;
        s.sampling.front_end = FrontEnd::PointSample;
        s.run.seed = 77;
        let back = Scenario::from_toml(&s.to_toml()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn sweep_application() {
        let s = Scenario::default();
        let e = s.at(SweepVariable::Eta, 4.0);
        assert_relative_eq!(
            e.kinetics.interferer.dissociation() / e.kinetics.info.dissociation(),
            4.0,
            max_relative = 1e-12
        );
        let n = s.at(SweepVariable::N, 1400.0);
        assert_eq!(n.sampling.n, 1400);
        assert_eq!(n.flicker_band(), s.flicker_band());
        assert_eq!(s.at(SweepVariable::Gamma, 2.5).interference.gamma, 2.5);
        assert_eq!(s.at(SweepVariable::Dt, 0.01).sampling.dt, 0.01);
    }
}
