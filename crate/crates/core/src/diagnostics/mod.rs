//! Post-hoc analysis of runs: excitation probing, link constants,
//! semiconvergence and the proposition audits.

pub mod audit;
pub mod link;
pub mod pe;
pub mod semiconvergence;

pub use audit::{audit_propositions, first_cond_d_failure, AuditInput, AuditLine, AuditOptions, AuditReport, AuditStatus};
pub use link::{estimate_link_constants, power_law_fit, LinkConstantsReport, LinkSample};
pub use pe::{canonical_directions, excitation_trajectory, probe_pe, probe_run, PeProbeReport, PeRow};
pub use semiconvergence::{detect_semiconvergence, moving_average, Semiconvergence};
