use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::step::{coupled_step, mixed_samples, StepInputs, StepOperators};
use super::trace::{RunTrace, Snapshot, StepRecord, StepState};
use super::truth::TruthModel;
use crate::error::{Error, Result};
use crate::fem1d::{norm, norm_samples, BoundaryKind, Diffusion, FieldSamples, HermiteField, NormKind, QuadGrid};
use crate::gains::{ErrorNorms, GainSchedule};
use crate::observation::{
    cond_d_threshold, cond_d_violated, make_noisy, project_p_samples, project_r_samples, regularized_lift, smooth,
    NoiseModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Exact,
    Noisy,
    Smooth,
}

/// Fully resolved inputs of one estimator run.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub grid: Arc<QuadGrid>,
    pub truth: TruthModel,
    pub regime: Regime,
    pub noise: NoiseModel,
    pub gains: GainSchedule,
    pub h_t: f64,
    pub n_steps: usize,
    pub q_hat0: HermiteField,
    pub u_hat0: HermiteField,
    pub snapshot_steps: Vec<usize>,
}

struct Observer<'a> {
    setup: &'a RunSetup,
    history: Vec<HermiteField>,
}

struct Observation {
    y: HermiteField,
    z_norm: f64,
    noise_norm: f64,
    warning: Option<String>,
}

impl Observer<'_> {
    fn observe(&mut self, step: usize, u_star: &HermiteField) -> Result<Observation> {
        let s = self.setup;
        let grid = &s.grid;
        let d = Diffusion::default();
        let z_norm = norm(grid, u_star, NormKind::Z, &d)?;
        if s.regime == Regime::Exact {
            return Ok(Observation {
                y: u_star.clone(),
                z_norm,
                noise_norm: 0.0,
                warning: None,
            });
        }
        let noisy = make_noisy(grid, u_star, &s.noise, step as u64)?;
        let noise_norm = norm(grid, &noisy.trace.sub(u_star)?, NormKind::Z, &d)?;
        let trace = if s.regime == Regime::Smooth {
            self.history.push(noisy.trace);
            smooth(&self.history, s.noise.smoothing_window.max(1))?
        } else {
            noisy.trace
        };
        Ok(Observation {
            y: regularized_lift(&trace, s.noise.alpha)?,
            z_norm,
            noise_norm,
            warning: noisy.warning,
        })
    }
}

fn windowed(grid: &QuadGrid, v: &FieldSamples, d: &Diffusion) -> Result<(f64, f64, f64, f64)> {
    let r = project_r_samples(grid, v);
    Ok((
        norm_samples(grid, &r, NormKind::X, d)?,
        norm_samples(grid, &r, NormKind::Vtil, d)?,
        norm_samples(grid, &r, NormKind::VXtil, d)?,
        norm_samples(grid, &r, NormKind::Z, d)?,
    ))
}

/// Error norms of the current state.
pub fn error_norms(
    grid: &QuadGrid,
    diffusion: &Diffusion,
    q_hat: &HermiteField,
    u_hat: &HermiteField,
    q_star: &HermiteField,
    u_star: &HermiteField,
    y: &HermiteField,
    d_rate: Option<&FieldSamples>,
) -> Result<ErrorNorms> {
    let one = Diffusion::default();
    let e_q = norm(grid, &q_hat.sub(q_star)?, NormKind::Q, &one)?;
    let err = grid.sample(&u_hat.sub(u_star)?);
    let (r_x, r_vtil, r_vxtil, _) = windowed(grid, &err, diffusion)?;
    let p = project_p_samples(grid, &err);
    let p_x = norm_samples(grid, &p, NormKind::X, diffusion)?;
    let p_vhat = norm_samples(grid, &p, NormKind::Vhat, diffusion)?;
    let p_vxhat = norm_samples(grid, &p, NormKind::VXhat, diffusion)?;
    let dv = grid.sample(&y.sub(u_star)?);
    let (d_x, d_vtil, _, _) = windowed(grid, &dv, diffusion)?;
    let ra = grid.sample(&u_hat.sub(y)?);
    let (ra_x, ra_vtil, ra_vxtil, _) = windowed(grid, &ra, diffusion)?;
    let dtil_x = match d_rate {
        Some(v) => windowed(grid, v, diffusion)?.0,
        None => 0.0,
    };
    Ok(ErrorNorms {
        e_q,
        r_x,
        r_vtil,
        r_vxtil,
        p_x,
        p_vhat,
        p_vxhat,
        d_x,
        d_vtil,
        dtil_x,
        ra_x,
        ra_vtil,
        ra_vxtil,
    })
}

/// Runs the estimator. A failing step ends the run; the trace up to that
/// point is returned with `failure` set.
pub fn run_partial(setup: &RunSetup) -> RunTrace {
    let grid = setup.grid.clone();
    let truth = &setup.truth;
    let diffusion = truth.diffusion();
    let sigma = if setup.regime == Regime::Noisy { setup.noise.sigma } else { 0.0 };
    let one = Diffusion::default();
    let mut trace = RunTrace {
        regime: setup.regime,
        h_t: setup.h_t,
        constants: setup.gains.constants,
        records: Vec::with_capacity(setup.n_steps + 1),
        snapshots: Vec::new(),
        states: Vec::with_capacity(setup.n_steps + 1),
        sup_pu_vhat: 0.0,
        q_star_q: norm(&grid, truth.q_star(), NormKind::Q, &one).unwrap_or(f64::NAN),
        warnings: Vec::new(),
        failure: None,
    };
    let ops = match StepOperators::new(grid.clone(), diffusion.clone()) {
        Ok(o) => o,
        Err(e) => {
            trace.failure = Some(e);
            return trace;
        }
    };
    let mut observer = Observer {
        setup,
        history: Vec::new(),
    };
    let result = (|| -> Result<()> {
        let mut q = setup.q_hat0.clone();
        let mut u = setup.u_hat0.clone();
        let mut u_star = truth.u_star(0.0)?;
        let mut obs = observer.observe(0, &u_star)?;
        let mut d_prev: Option<HermiteField> = None;
        for n in 0..=setup.n_steps {
            let t = n as f64 * setup.h_t;
            let fail = |e: Error| e.at_step(n, t);
            if let Some(w) = obs.warning.take() {
                trace.warnings.push(w);
            }
            let defect = obs.y.sub(&u_star).map_err(fail)?;
            let rate = match &d_prev {
                Some(prev) => Some(grid.sample(&defect.sub(prev).map_err(fail)?.scaled(1.0 / setup.h_t))),
                None => None,
            };
            let norms = error_norms(&grid, &diffusion, &q, &u, truth.q_star(), &u_star, &obs.y, rate.as_ref())
                .map_err(fail)?;
            let pu = project_p_samples(&grid, &grid.sample(&u_star));
            trace.sup_pu_vhat = trace
                .sup_pu_vhat
                .max(norm_samples(&grid, &pu, NormKind::Vhat, &diffusion).map_err(fail)?);
            let eps = 1e-12 * norm(&grid, &u_star, NormKind::X, &one).map_err(fail)?;
            let (mu, nu) = setup.gains.evaluate(&norms, eps);
            let gamma = if norms.ra_vtil > eps && mu > 0.0 { mu / norms.ra_vtil } else { 0.0 };
            let c = &setup.gains.constants;
            trace.records.push(StepRecord {
                step: n,
                t,
                norms,
                mu,
                nu,
                gamma,
                cond_d_rhs: cond_d_threshold(norms.r_vxtil, norms.r_x, c.c_m, c.big_c_m),
                cond_d_violated: t > 0.0 && cond_d_violated(norms.d_vtil, norms.r_vxtil, norms.r_x, c.c_m, c.big_c_m),
                z_norm: obs.z_norm,
                noise_norm: obs.noise_norm,
            });
            trace.states.push(StepState {
                step: n,
                t,
                q_hat: q.clone(),
                u_hat: u.clone(),
                y: obs.y.clone(),
            });
            if setup.snapshot_steps.contains(&n) {
                trace.snapshots.push(Snapshot {
                    t,
                    q_hat: q.clone(),
                    u_hat: u.clone(),
                    q_star: truth.q_star().clone(),
                    u_star: u_star.clone(),
                });
            }
            if n == setup.n_steps {
                break;
            }
            let t1 = (n + 1) as f64 * setup.h_t;
            let fail1 = |e: Error| e.at_step(n + 1, t1);
            let u_star1 = truth.u_star(t1).map_err(fail1)?;
            let obs1 = observer.observe(n + 1, &u_star1).map_err(fail1)?;
            let w_old = mixed_samples(&grid, &obs.y, &u);
            let load = truth.load(&grid, t1);
            let inputs = StepInputs {
                h_t: setup.h_t,
                y_next: &obs1.y,
                w_old: &w_old,
                load_next: &load,
                gamma,
                nu,
                sigma,
            };
            (q, u) = coupled_step(&ops, &q, &u, &inputs).map_err(fail1)?;
            d_prev = Some(defect);
            u_star = u_star1;
            obs = obs1;
        }
        Ok(())
    })();
    if let Err(e) = result {
        trace.failure = Some(e);
    }
    trace
}

/// Like [`run_partial`] but turns a failed step into an error.
pub fn run(setup: &RunSetup) -> Result<RunTrace> {
    let mut trace = run_partial(setup);
    match trace.failure.take() {
        Some(e) => Err(e),
        None => Ok(trace),
    }
}

impl RunSetup {
    /// `(sup_t |P u*(t)|_Vhat, |q*|_Q)` over the step times, the truth
    /// quantities the audits need besides the trace.
    pub fn truth_norms(&self) -> Result<(f64, f64)> {
        let grid = &self.grid;
        let d = self.truth.diffusion();
        let mut sup: f64 = 0.0;
        for n in 0..=self.n_steps {
            let u = self.truth.u_star(n as f64 * self.h_t)?;
            let pu = project_p_samples(grid, &grid.sample(&u));
            sup = sup.max(norm_samples(grid, &pu, NormKind::Vhat, &d)?);
        }
        let q = norm(grid, self.truth.q_star(), NormKind::Q, &Diffusion::default())?;
        Ok((sup, q))
    }

    /// Initial estimates `q_hat0 = const`, `u_hat0 = scale * u0`.
    pub fn initial_fields(truth: &TruthModel, q0: f64, u_scale: f64) -> Result<(HermiteField, HermiteField)> {
        let mesh = truth.mesh();
        let q = crate::fem1d::constant_field(mesh, q0);
        let u = truth.u_star(0.0)?.scaled(u_scale).with_dirichlet_zero();
        let q = HermiteField::from_dofs(mesh.clone(), q.into_dofs(), BoundaryKind::Free)?;
        Ok((q, u))
    }
}
