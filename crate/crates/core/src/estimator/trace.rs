use serde::{Deserialize, Serialize};

use super::run::Regime;
use crate::error::Error;
use crate::fem1d::HermiteField;
use crate::gains::{ErrorNorms, GainConstants};

/// One row of the run log, describing the state at `t` and the gains used
/// for the step leaving it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub norms: ErrorNorms,
    pub mu: f64,
    pub nu: f64,
    /// `mu / |r_alpha|_Vtil`, 0 when the stabilization is dropped.
    pub gamma: f64,
    pub cond_d_rhs: f64,
    /// Defect condition fails at this step (only for `t > 0`).
    pub cond_d_violated: bool,
    pub z_norm: f64,
    pub noise_norm: f64,
}

impl StepRecord {
    pub fn lyapunov(&self) -> f64 {
        self.norms.e_q * self.norms.e_q + self.norms.r_x * self.norms.r_x
    }

    /// Same with the observed error measured against the lifted data.
    pub fn lyapunov_alpha(&self) -> f64 {
        self.norms.e_q * self.norms.e_q + self.norms.ra_x * self.norms.ra_x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub q_hat: HermiteField,
    pub u_hat: HermiteField,
    pub q_star: HermiteField,
    pub u_star: HermiteField,
}

/// Full state at one step, kept for post-hoc diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepState {
    pub step: usize,
    pub t: f64,
    pub q_hat: HermiteField,
    pub u_hat: HermiteField,
    /// Lifted observation.
    pub y: HermiteField,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub regime: Regime,
    pub h_t: f64,
    pub constants: GainConstants,
    pub records: Vec<StepRecord>,
    pub snapshots: Vec<Snapshot>,
    pub states: Vec<StepState>,
    /// `sup_t |P u*(t)|_Vhat` over the step times.
    pub sup_pu_vhat: f64,
    /// `|q*|_Q`.
    pub q_star_q: f64,
    pub warnings: Vec<String>,
    pub failure: Option<Error>,
}

impl RunTrace {
    /// First step with `t > 0` violating the defect condition.
    pub fn tstar_step(&self) -> Option<usize> {
        self.records.iter().position(|r| r.t > 0.0 && r.cond_d_violated)
    }

    pub fn tstar(&self) -> Option<f64> {
        self.tstar_step().map(|i| self.records[i].t)
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn lyapunov(&self) -> Vec<f64> {
        self.records.iter().map(StepRecord::lyapunov).collect()
    }

    /// Trapezoid rule over the stored steps of `|R u_hat - R u*|_X^2`.
    pub fn observed_error_integral(&self) -> f64 {
        let v: Vec<f64> = self.records.iter().map(|r| r.norms.r_x * r.norms.r_x).collect();
        trapezoid(&self.times(), &v)
    }

    pub fn last(&self) -> Option<&StepRecord> {
        self.records.last()
    }

    pub fn first(&self) -> Option<&StepRecord> {
        self.records.first()
    }
}

/// Trapezoid rule on possibly nonuniform abscissae.
pub fn trapezoid(t: &[f64], v: &[f64]) -> f64 {
    t.windows(2)
        .zip(v.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}
