//! Simulation harness for the `stopkey` protocols: seeded Monte Carlo runs
//! with confidence intervals, exact oracles, bound dashboards, next-bit
//! fairness tests and transcript analysis.

pub mod config;
pub mod corpus;
pub mod dashboard;
pub mod eavesdropper;
pub mod error;
pub mod fairness;
pub mod report;
pub mod simulate;

pub use config::{ExperimentConfig, HashSpec, Protocol, ReconcilerSpec};
pub use dashboard::{bounds_dashboard, Dashboard};
pub use eavesdropper::{eavesdropper_view, EavesdropperSummary, TranscriptLog};
pub use error::{HarnessError, Result};
pub use fairness::{fairness_test, FairnessReport};
pub use report::{render_text, BoundCheck, Report, Status};
pub use simulate::{run_simulation, simulate, Runner, SimulationOutput};
