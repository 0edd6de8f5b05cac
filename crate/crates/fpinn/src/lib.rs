//! File formats, the training runner, parameter sweeps and the `fpinn`
//! command line on top of `fpinn-core`.

pub mod caputo_eval;
pub mod checkpoint;
pub mod config;
pub mod output;
pub mod runner;
pub mod sweep;

pub use checkpoint::Checkpoint;
pub use config::{preset, RunConfig};
pub use runner::{run, RunSummary, ValidationError, WallClock};
pub use sweep::{SweepAxis, SweepSpec};
