//! Ground truth and the coupled parameter/state estimator.

pub mod forward;
pub mod run;
pub mod step;
pub mod trace;
pub mod truth;

pub use forward::{forward_solve, temporal_refinement, RefinementRow};
pub use run::{run, Regime, RunSetup};
pub use step::{coupled_step, mixed_samples, StepInputs, StepOperators};
pub use trace::{RunTrace, Snapshot, StepRecord, StepState};
pub use truth::{Provenance, TruthModel};
