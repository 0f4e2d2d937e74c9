//! Scenarios, parameter sweeps and CSV/SVG output.

mod output;
mod scenario;
mod sweep;

pub use output::{emit_psd_figure, write_results, write_results_to, PsdFigure};
pub use scenario::{
    load_scenario, DetectionSection, InterferenceSection, KineticsSection, RunSection, SamplingSection, Scenario,
    SweepSection, SweepVariable, TransmitterSection,
};
pub use sweep::{run_sweep, ResultRow};
