//! Experiment runner: reads experiment specifications, evaluates the
//! analysis and the simulator over parameter sweeps and writes flat rows.

pub mod error;
pub mod output;
pub mod presets;
pub mod run;
pub mod spec;

pub use error::CliError;
pub use output::{read_csv, write_rows, Format, ResultRow};
pub use presets::{preset, PRESET_NAMES};
pub use run::{run, run_with_threads};
pub use spec::{ExperimentSpec, Metric, Mode, ProfileSpec, Sweep};
