//! Scenario configuration, Monte-Carlo experiments and run reports for the
//! radar/communication coexistence loop built on `specx-core`.

pub mod config;
pub mod error;
pub mod report;
pub mod run;
pub mod scenario;
pub mod trials;

pub use config::{BandLayout, Preset, ScenarioConfig};
pub use error::{PipelineError, Result};
pub use report::RunReport;
pub use run::{run_radar, run_select_bands, run_sense, run_specx, sweep, SweepAxis};
