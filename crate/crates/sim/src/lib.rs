//! Monte-Carlo simulation harness for distributed tracking with label-space
//! matched GCI fusion.
//!
//! A [`ScenarioConfig`] describes targets, sensors, the communication graph and
//! filter settings. [`run_experiment`] simulates every run, filters each sensor
//! locally, fuses over the network with divergence-based label matching and
//! with the naive label-name baseline, and averages OSPA and cardinality per scan.

pub mod config;
pub mod error;
pub mod experiment;
pub mod measure;
pub mod output;
pub mod presets;
pub mod truth;

pub use config::ScenarioConfig;
pub use error::{Error, Result};
pub use experiment::{run_experiment, run_traces, ExperimentResult, Method, MethodSelection};
pub use presets::Preset;
