//! Experiment runner: spec files in, CSV tables and JSON verdicts out.
//!
//! The mathematics lives in `carpetslice-core`; this crate adds file
//! formats, the `carpetslice` binary and rayon-parallel drivers for the
//! expensive loops.

pub mod output;
pub mod parallel;
pub mod run;
pub mod spec;

pub use run::{run, RunError, RunOptions, RunOutcome, Status};
pub use spec::{parse_spec, ExperimentSpec, Kind, SpecError};
