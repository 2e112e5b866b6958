//! Run configuration, stored as flat TOML.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{Provenance, Regime, RunSetup, TruthModel};
use crate::fem1d::{Mesh1D, QuadGrid};
use crate::gains::{decimal_grid, estimate_constants, GainMode, GainSchedule};
use crate::observation::{NoiseModel, ObservationWindow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TuneTarget {
    /// Scale `c1` of the exact-data lower bound on `mu`.
    C1,
    /// Constant gains `mu_bar` and `nu_bar`.
    MuNu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub n_nodes: usize,
    pub h_t: f64,
    pub horizon: f64,
    pub omega: [f64; 2],
    pub diffusion: f64,
    pub truth: Provenance,
    pub regime: Regime,
    pub delta: f64,
    pub seed: u64,
    pub sigma: f64,
    pub alpha: f64,
    pub smoothing_window: usize,
    pub gain_mode: GainMode,
    pub c1: f64,
    pub nu_min: f64,
    pub mu_bar: f64,
    pub nu_bar: f64,
    pub q_hat0: f64,
    pub u_hat0_scale: f64,
    pub snapshot_times: Vec<f64>,
    pub sample_points: usize,
    pub tune_target: TuneTarget,
    /// Grid of the tuner; the decimal grid when empty.
    pub tune_grid: Vec<f64>,
    pub pe_gamma0: f64,
    pub pe_t0: f64,
    pub pe_random_directions: usize,
    pub link_lambda: f64,
    pub link_kappa: f64,
    pub output_dir: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_nodes: 31,
            h_t: 0.6,
            horizon: 60.0,
            omega: [0.3, 0.87],
            diffusion: 1.0,
            truth: Provenance::Analytic,
            regime: Regime::Exact,
            delta: 0.0,
            seed: 0,
            sigma: 0.0,
            alpha: 0.0,
            smoothing_window: 0,
            gain_mode: GainMode::OracleExact,
            c1: 1.0,
            nu_min: 1.0,
            mu_bar: 1.0,
            nu_bar: 1.0,
            q_hat0: 0.0,
            u_hat0_scale: 0.9,
            snapshot_times: vec![0.0, 6.0, 15.0, 30.0, 45.0, 60.0],
            sample_points: 201,
            tune_target: TuneTarget::C1,
            tune_grid: Vec::new(),
            pe_gamma0: 6.0,
            pe_t0: 12.0,
            pe_random_directions: 8,
            link_lambda: 2.0,
            link_kappa: 2.0,
            output_dir: None,
        }
    }
}

fn bad(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Contract(format!("config field `{field}`: {msg}"))
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::Contract(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.h_t).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 3 {
            return Err(bad("n_nodes", "needs at least 3 nodes"));
        }
        if !(self.h_t > 0.0 && self.h_t.is_finite()) {
            return Err(bad("h_t", "must be positive"));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(bad("horizon", "must be >= 0"));
        }
        let steps = self.horizon / self.h_t;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(bad("horizon", "must be a multiple of h_t"));
        }
        let [a, b] = self.omega;
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a >= b {
            return Err(bad("omega", "needs 0 <= a < b <= 1"));
        }
        if !self.diffusion.is_finite() {
            return Err(bad("diffusion", "must be finite"));
        }
        for (name, v) in [("delta", self.delta), ("sigma", self.sigma), ("alpha", self.alpha)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(bad(name, "must be >= 0"));
            }
        }
        if self.regime == Regime::Smooth && self.smoothing_window == 0 {
            return Err(bad("smoothing_window", "smooth regime needs a window >= 1"));
        }
        for (name, v) in [("c1", self.c1), ("nu_min", self.nu_min)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(name, "must be positive"));
            }
        }
        for (name, v) in [("mu_bar", self.mu_bar), ("nu_bar", self.nu_bar)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(bad(name, "must be >= 0"));
            }
        }
        for (name, v) in [("q_hat0", self.q_hat0), ("u_hat0_scale", self.u_hat0_scale)] {
            if !v.is_finite() {
                return Err(bad(name, "must be finite"));
            }
        }
        if self.snapshot_times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(bad("snapshot_times", "entries must be >= 0"));
        }
        if self.sample_points < 2 {
            return Err(bad("sample_points", "needs at least 2 points"));
        }
        if self.tune_grid.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(bad("tune_grid", "entries must be positive"));
        }
        if !(self.pe_gamma0 > 0.0 && self.pe_t0 >= 0.0) {
            return Err(bad("pe_gamma0", "window and scan length must be positive"));
        }
        if !(self.link_lambda >= 1.0 && self.link_kappa >= 1.0) {
            return Err(bad("link_lambda", "exponents must be >= 1"));
        }
        Ok(())
    }

    pub fn noise_model(&self) -> NoiseModel {
        NoiseModel {
            level: self.delta,
            seed: self.seed,
            smoothing_window: self.smoothing_window,
            sigma: self.sigma,
            alpha: self.alpha,
        }
    }

    /// Step indices whose time matches a snapshot time; times off the step
    /// grid are rounded to the nearest step.
    pub fn snapshot_steps(&self) -> Vec<usize> {
        let n = self.n_steps();
        let mut s: Vec<usize> = self
            .snapshot_times
            .iter()
            .map(|t| ((t / self.h_t).round() as usize).min(n))
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn mesh(&self) -> Result<Arc<Mesh1D>> {
        Ok(Arc::new(Mesh1D::uniform(self.n_nodes)?))
    }

    pub fn truth_model(&self, mesh: Arc<Mesh1D>) -> Result<TruthModel> {
        match self.truth {
            Provenance::Analytic => TruthModel::analytic(mesh, self.diffusion),
            Provenance::ForwardSolve => TruthModel::simulated(mesh, self.diffusion, self.h_t, self.n_steps()),
        }
    }

    /// Points of the tuning search: `[c1]` or `[mu_bar, nu_bar]` over
    /// `tune_grid` (the decimal grid when empty).
    pub fn tune_points(&self) -> Vec<Vec<f64>> {
        let g = if self.tune_grid.is_empty() { decimal_grid() } else { self.tune_grid.clone() };
        match self.tune_target {
            TuneTarget::C1 => g.iter().map(|&c| vec![c]).collect(),
            TuneTarget::MuNu => g.iter().flat_map(|&m| g.iter().map(move |&n| vec![m, n])).collect(),
        }
    }

    /// Copy with a tuning point applied. Tuning `mu_bar, nu_bar` switches to
    /// heuristic gains.
    pub fn with_tune_point(&self, p: &[f64]) -> Self {
        let mut c = self.clone();
        match self.tune_target {
            TuneTarget::C1 => c.c1 = p[0],
            TuneTarget::MuNu => {
                c.gain_mode = GainMode::Heuristic;
                c.mu_bar = p[0];
                c.nu_bar = p[1];
            }
        }
        c
    }

    /// `int_0^T |R u_hat - R u*|_X^2 dt`, the tuning objective.
    pub fn tune_score(&self) -> Result<f64> {
        Ok(crate::estimator::run(&self.setup()?)?.observed_error_integral())
    }

    pub fn setup(&self) -> Result<RunSetup> {
        self.validate()?;
        let mesh = self.mesh()?;
        let window = ObservationWindow::new(&mesh, self.omega[0], self.omega[1])?;
        let grid = Arc::new(QuadGrid::with_window(mesh.clone(), Some(window)));
        let truth = self.truth_model(mesh)?;
        // sup_t |u*(t)|_X is attained at t = 0
        let u0_x = crate::fem1d::norm(
            &grid,
            &truth.u_star(0.0)?,
            crate::fem1d::NormKind::X,
            &crate::fem1d::Diffusion::default(),
        )?;
        let mut constants = estimate_constants(truth.q_star_sup(), u0_x);
        constants.c1 = self.c1;
        constants.nu_min = self.nu_min;
        constants.sigma = if self.regime == Regime::Noisy { self.sigma } else { 0.0 };
        let (q_hat0, u_hat0) = RunSetup::initial_fields(&truth, self.q_hat0, self.u_hat0_scale)?;
        Ok(RunSetup {
            grid,
            truth,
            regime: self.regime,
            noise: self.noise_model(),
            gains: GainSchedule {
                mode: self.gain_mode,
                constants,
                mu_bar: self.mu_bar,
                nu_bar: self.nu_bar,
            },
            h_t: self.h_t,
            n_steps: self.n_steps(),
            q_hat0,
            u_hat0,
            snapshot_steps: self.snapshot_steps(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.delta = 0.05;
        c.regime = Regime::Smooth;
        c.smoothing_window = 10;
        c.gain_mode = GainMode::Heuristic;
        c.tune_grid = vec![0.1, 0.2, 1000.0];
        c.output_dir = Some("out".into());
        c.u_hat0_scale = 0.8;
        let back = RunConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn defaults_encode_the_experiment() {
        let c = RunConfig::default();
        assert_eq!(c.n_steps(), 100);
        assert_eq!(c.snapshot_steps(), vec![0, 10, 25, 50, 75, 100]);
        let empty = RunConfig::from_toml_str("").unwrap();
        assert_eq!(empty, c);
    }

    #[test]
    fn unknown_and_bad_fields_are_named() {
        let e = RunConfig::from_toml_str("n_nodez = 3").unwrap_err();
        assert!(e.to_string().contains("n_nodez"), "{e}");
        let e = RunConfig::from_toml_str("omega = [0.9, 0.2]").unwrap_err();
        assert!(e.to_string().contains("omega"), "{e}");
        let e = RunConfig::from_toml_str("h_t = -1.0").unwrap_err();
        assert!(e.to_string().contains("h_t"), "{e}");
        let e = RunConfig::from_toml_str("regime = \"smooth\"").unwrap_err();
        assert!(e.to_string().contains("smoothing_window"), "{e}");
    }

    #[test]
    fn tune_points_follow_the_target() {
        let mut c = RunConfig::default();
        assert_eq!(c.tune_points().len(), 37);
        c.tune_target = TuneTarget::MuNu;
        c.tune_grid = vec![1.0, 2.0];
        assert_eq!(c.tune_points(), vec![vec![1.0, 1.0], vec![1.0, 2.0], vec![2.0, 1.0], vec![2.0, 2.0]]);
        let p = c.with_tune_point(&[2.0, 1.0]);
        assert_eq!((p.gain_mode, p.mu_bar, p.nu_bar), (GainMode::Heuristic, 2.0, 1.0));
    }

    #[test]
    fn truth_norms_match_the_run() {
        let mut c = RunConfig::default();
        c.horizon = 3.0;
        let s = c.setup().unwrap();
        let trace = crate::estimator::run(&s).unwrap();
        let (sup, q) = s.truth_norms().unwrap();
        assert_eq!(sup, trace.sup_pu_vhat);
        assert_eq!(q, trace.q_star_q);
    }
}
