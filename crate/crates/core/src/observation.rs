//! Observation window, projections, regularized lift, noise and smoothing.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem1d::{BoundaryKind, Diffusion, FieldSamples, HermiteField, Mesh1D, NormKind, QuadGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementClass {
    Observed,
    Unobserved,
    Partial,
}

/// The subdomain `omega = (a, b)` on which the state is measured.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWindow {
    a: f64,
    b: f64,
    h: f64,
    classes: Vec<ElementClass>,
}

impl ObservationWindow {
    pub fn new(mesh: &Mesh1D, a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a < 0.0 || b > 1.0 || a >= b {
            return Err(Error::Contract(format!("window ({a}, {b}) must satisfy 0 <= a < b <= 1")));
        }
        let h = mesh.h();
        let classes = (0..mesh.n_elements())
            .map(|e| {
                let (x0, x1) = mesh.element(e);
                if x0 >= a && x1 <= b {
                    ElementClass::Observed
                } else if x1 <= a || x0 >= b {
                    ElementClass::Unobserved
                } else {
                    ElementClass::Partial
                }
            })
            .collect();
        Ok(Self { a, b, h, classes })
    }

    /// Whole-domain window.
    pub fn full(mesh: &Mesh1D) -> Self {
        Self::new(mesh, 0.0, 1.0).expect("unit interval")
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn classes(&self) -> &[ElementClass] {
        &self.classes
    }

    pub fn class(&self, e: usize) -> ElementClass {
        self.classes[e]
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.a && x < self.b
    }

    /// Sub-intervals `(s0, s1, inside)` of element `e` in local coordinates.
    pub fn pieces(&self, e: usize) -> Vec<(f64, f64, bool)> {
        match self.classes[e] {
            ElementClass::Observed => vec![(0.0, 1.0, true)],
            ElementClass::Unobserved => vec![(0.0, 1.0, false)],
            ElementClass::Partial => {
                let x0 = e as f64 * self.h;
                let sa = ((self.a - x0) / self.h).clamp(0.0, 1.0);
                let sb = ((self.b - x0) / self.h).clamp(0.0, 1.0);
                let mut cuts = vec![0.0];
                for s in [sa, sb] {
                    if s > 0.0 && s < 1.0 {
                        cuts.push(s);
                    }
                }
                cuts.push(1.0);
                cuts.windows(2)
                    .map(|w| {
                        let mid = x0 + 0.5 * (w[0] + w[1]) * self.h;
                        (w[0], w[1], self.contains(mid))
                    })
                    .collect()
            }
        }
    }

    /// Nodes whose basis support meets the window.
    pub fn touched_nodes(&self) -> Vec<usize> {
        let n_nodes = self.classes.len() + 1;
        (0..n_nodes)
            .filter(|&j| {
                let left = j > 0 && self.classes[j - 1] != ElementClass::Unobserved;
                let right = j + 1 < n_nodes && self.classes[j] != ElementClass::Unobserved;
                left || right
            })
            .collect()
    }
}

fn mask(grid: &QuadGrid, v: &FieldSamples, keep_inside: bool) -> FieldSamples {
    let mut out = v.clone();
    for (k, p) in grid.points().iter().enumerate() {
        if p.inside != keep_inside {
            out.value[k] = 0.0;
            out.d1[k] = 0.0;
            out.d2[k] = 0.0;
        }
    }
    out
}

/// `R v`: the field multiplied by the indicator of the window, at the grid
/// points.
pub fn project_r(grid: &QuadGrid, field: &HermiteField) -> FieldSamples {
    project_r_samples(grid, &grid.sample(field))
}

/// `P v = v - R v`.
pub fn project_p(grid: &QuadGrid, field: &HermiteField) -> FieldSamples {
    project_p_samples(grid, &grid.sample(field))
}

pub fn project_r_samples(grid: &QuadGrid, v: &FieldSamples) -> FieldSamples {
    mask(grid, v, true)
}

pub fn project_p_samples(grid: &QuadGrid, v: &FieldSamples) -> FieldSamples {
    mask(grid, v, false)
}

/// Tikhonov lift of a trace on the window back to the whole domain.
///
/// A trace is stored as a Hermite field whose restriction to the window is
/// the measurement; values outside the window carry no meaning. With the
/// restriction operator the normal equations decouple pointwise, so the lift
/// is `chi_omega z / (1 + alpha)` and this returns the scaled field, to be
/// read through `R`.
pub fn regularized_lift(z: &HermiteField, alpha: f64) -> Result<HermiteField> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Contract(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    if alpha == 0.0 {
        return Ok(z.clone());
    }
    Ok(z.scaled(1.0 / (1.0 + alpha)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Relative level `delta`.
    pub level: f64,
    pub seed: u64,
    /// Number of past traces averaged; 0 disables smoothing.
    pub smoothing_window: usize,
    pub sigma: f64,
    pub alpha: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            level: 0.0,
            seed: 0,
            smoothing_window: 0,
            sigma: 0.0,
            alpha: 0.0,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.level >= 0.0) || !self.level.is_finite() {
            return Err(Error::Contract(format!("noise level must be >= 0, got {}", self.level)));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::Contract(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::Contract(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyTrace {
    pub trace: HermiteField,
    /// Set when the clean trace vanished and the absolute fallback scale was
    /// used.
    pub warning: Option<String>,
}

/// Adds Gaussian noise scaled so that `|z_delta - z|_Z = delta |z|_Z`.
///
/// The perturbation lives on the value dofs of the nodes whose support meets
/// the window; step `step` draws from its own stream of the seeded generator.
pub fn make_noisy(grid: &QuadGrid, z: &HermiteField, model: &NoiseModel, step: u64) -> Result<NoisyTrace> {
    model.validate()?;
    if model.level == 0.0 {
        return Ok(NoisyTrace {
            trace: z.clone(),
            warning: None,
        });
    }
    let window = grid
        .window()
        .ok_or_else(|| Error::Contract("noise synthesis needs an observation window".into()))?;
    let mesh = z.mesh().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    rng.set_stream(step);
    let mut eta = vec![0.0; mesh.n_dofs()];
    for j in window.touched_nodes() {
        eta[2 * j] = StandardNormal.sample(&mut rng);
    }
    let eta = HermiteField::from_dofs(mesh, eta, BoundaryKind::Free)?;
    let d = Diffusion::default();
    let eta_norm = crate::fem1d::norm(grid, &eta, NormKind::Z, &d)?;
    let z_norm = crate::fem1d::norm(grid, z, NormKind::Z, &d)?;
    let (target, warning) = if z_norm > 0.0 {
        (model.level * z_norm, None)
    } else {
        (
            model.level,
            Some(format!("step {step}: clean trace vanishes on the window, noise scaled to absolute level")),
        )
    };
    if eta_norm == 0.0 {
        return Err(Error::Contract("noise sample vanished on the window".into()));
    }
    let trace = z.axpy(target / eta_norm, &eta)?;
    Ok(NoisyTrace { trace, warning })
}

/// Mean of the last `min(w, len)` traces.
pub fn smooth(history: &[HermiteField], w: usize) -> Result<HermiteField> {
    if history.is_empty() {
        return Err(Error::Contract("smoothing needs at least one trace".into()));
    }
    if w == 0 {
        return Err(Error::Contract("smoothing window must be >= 1".into()));
    }
    let take = w.min(history.len());
    let tail = &history[history.len() - take..];
    let mesh: &Arc<Mesh1D> = tail[0].mesh();
    let mut acc = vec![0.0; mesh.n_dofs()];
    for f in tail {
        if !Arc::ptr_eq(f.mesh(), mesh) && f.mesh().as_ref() != mesh.as_ref() {
            return Err(Error::MeshMismatch);
        }
        for (a, v) in acc.iter_mut().zip(f.dofs()) {
            *a += v;
        }
    }
    let inv = 1.0 / take as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    HermiteField::from_dofs(mesh.clone(), acc, tail[0].boundary())
}

/// Threshold of the smallness condition on the data defect:
/// `c_m / (2 C_M) |r|_VXtil^2 / |r|_X`.
pub fn cond_d_threshold(r_vxtil: f64, r_x: f64, c_m: f64, big_c_m: f64) -> f64 {
    if r_x == 0.0 {
        return 0.0;
    }
    c_m / (2.0 * big_c_m) * r_vxtil * r_vxtil / r_x
}

/// Whether the defect condition fails at one step. With `|r|_X = 0` the step
/// counts as a violation only when the defect is nonzero.
pub fn cond_d_violated(d_vtil: f64, r_vxtil: f64, r_x: f64, c_m: f64, big_c_m: f64) -> bool {
    if r_x == 0.0 {
        return d_vtil > 0.0;
    }
    d_vtil > cond_d_threshold(r_vxtil, r_x, c_m, big_c_m)
}

/// Per-step norms needed to locate `T*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefectSample {
    pub t: f64,
    pub d_vtil: f64,
    pub r_vxtil: f64,
    pub r_x: f64,
}

/// Index of the first step with `t > 0` at which the defect condition fails,
/// `None` when it never does.
pub fn detect_tstar(samples: &[DefectSample], c_m: f64, big_c_m: f64) -> Option<usize> {
    samples
        .iter()
        .position(|s| s.t > 0.0 && cond_d_violated(s.d_vtil, s.r_vxtil, s.r_x, c_m, big_c_m))
}

/// One row of the observation log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedRecord {
    pub t: f64,
    pub z_norm: f64,
    pub noise_norm: f64,
    pub d_vtil: f64,
    pub tstar_flag: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem1d::{constant_field, norm, norm_samples};
    use std::f64::consts::PI;

    fn setup(n: usize, a: f64, b: f64) -> (Arc<Mesh1D>, QuadGrid) {
        let m = Arc::new(Mesh1D::uniform(n).unwrap());
        let w = ObservationWindow::new(&m, a, b).unwrap();
        (m.clone(), QuadGrid::with_window(m, Some(w)))
    }

    fn sine(m: &Arc<Mesh1D>) -> HermiteField {
        HermiteField::interpolate(m.clone(), |x| (PI * x).sin(), |x| PI * (PI * x).cos()).unwrap()
    }

    fn random_field(m: &Arc<Mesh1D>, seed: u64) -> HermiteField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = (0..m.n_dofs()).map(|_| StandardNormal.sample(&mut rng)).collect();
        HermiteField::from_dofs(m.clone(), d, BoundaryKind::Free).unwrap()
    }

    #[test]
    fn element_classes_for_default_window() {
        let (m, g) = setup(31, 0.3, 0.87);
        let w = g.window().unwrap();
        assert_eq!(w.class(0), ElementClass::Unobserved);
        assert_eq!(w.class(9), ElementClass::Observed);
        assert_eq!(w.class(26), ElementClass::Partial);
        assert_eq!(w.class(29), ElementClass::Unobserved);
        assert!(ObservationWindow::new(&m, 0.5, 0.5).is_err());
        assert!(ObservationWindow::new(&m, -0.1, 0.5).is_err());
    }

    #[test]
    fn r_of_sine_at_points() {
        let (m, g) = setup(31, 0.3, 0.87);
        let s = sine(&m);
        let r = project_r(&g, &s);
        for (k, p) in g.points().iter().enumerate() {
            if p.x < 0.3 {
                assert_eq!(r.value[k], 0.0);
            }
            if (p.x - 0.5).abs() < 0.02 {
                assert!((r.value[k] - (PI * p.x).sin()).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn projections_are_complementary_and_idempotent() {
        let (m, g) = setup(31, 0.3, 0.87);
        let v = random_field(&m, 3);
        let s = g.sample(&v);
        let r = project_r(&g, &v);
        let p = project_p(&g, &v);
        for k in 0..g.len() {
            assert!((r.value[k] + p.value[k] - s.value[k]).abs() < 1e-13);
        }
        assert_eq!(project_r_samples(&g, &r), r);
        assert_eq!(project_p_samples(&g, &p), p);
        let dflt = Diffusion::default();
        let nx = |x: &FieldSamples| norm_samples(&g, x, NormKind::X, &dflt).unwrap();
        assert!((nx(&r).powi(2) + nx(&p).powi(2) - nx(&s).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn r_and_p_are_orthogonal() {
        let (m, g) = setup(31, 0.3, 0.87);
        let rv = project_r(&g, &random_field(&m, 1));
        let pw = project_p(&g, &random_field(&m, 2));
        let ip = g.integrate(crate::fem1d::Region::All, |k| rv.value[k] * pw.value[k]);
        assert!(ip.abs() < 1e-12);
    }

    #[test]
    fn lift_scales_by_one_plus_alpha() {
        let (m, g) = setup(31, 0.3, 0.87);
        let c = constant_field(&m, 3.0);
        let l = regularized_lift(&c, 1.0).unwrap();
        let r = project_r(&g, &l);
        for (k, p) in g.points().iter().enumerate() {
            let expect = if p.inside { 1.5 } else { 0.0 };
            assert!((r.value[k] - expect).abs() < 1e-14);
        }
        assert_eq!(regularized_lift(&c, 0.0).unwrap(), c);
        assert!(regularized_lift(&c, -1.0).is_err());
    }

    #[test]
    fn noise_hits_the_requested_level() {
        let (m, g) = setup(31, 0.3, 0.87);
        let z = sine(&m);
        let model = NoiseModel {
            level: 0.05,
            seed: 11,
            ..Default::default()
        };
        let d = Diffusion::default();
        let zn = norm(&g, &z, NormKind::Z, &d).unwrap();
        for step in 0..5 {
            let noisy = make_noisy(&g, &z, &model, step).unwrap();
            let eta = noisy.trace.sub(&z).unwrap();
            let rel = norm(&g, &eta, NormKind::Z, &d).unwrap() / zn;
            assert!((rel - 0.05).abs() < 1e-12);
            assert!(eta.dofs().iter().skip(1).step_by(2).all(|v| *v == 0.0));
        }
        let a = make_noisy(&g, &z, &model, 2).unwrap();
        let b = make_noisy(&g, &z, &model, 2).unwrap();
        assert_eq!(a, b);
        let c = make_noisy(&g, &z, &model, 3).unwrap();
        assert_ne!(a.trace, c.trace);
    }

    #[test]
    fn zero_level_returns_input_and_zero_trace_warns() {
        let (m, g) = setup(31, 0.3, 0.87);
        let z = sine(&m);
        let out = make_noisy(&g, &z, &NoiseModel::default(), 0).unwrap();
        assert_eq!(out.trace, z);
        let zero = HermiteField::zeros(m, BoundaryKind::Free);
        let model = NoiseModel {
            level: 0.1,
            ..Default::default()
        };
        let out = make_noisy(&g, &zero, &model, 0).unwrap();
        assert!(out.warning.is_some());
        let n = norm(&g, &out.trace, NormKind::Z, &Diffusion::default()).unwrap();
        assert!((n - 0.1).abs() < 1e-12);
    }

    #[test]
    fn smoothing_means() {
        let (m, _) = setup(11, 0.3, 0.87);
        let a = constant_field(&m, 1.0);
        let b = constant_field(&m, 3.0);
        assert_eq!(smooth(&[a.clone()], 1).unwrap(), a);
        let s = smooth(&[a.clone(), b.clone()], 2).unwrap();
        assert!(s.dofs().iter().step_by(2).all(|v| (v - 2.0).abs() < 1e-15));
        let s = smooth(&[a.clone(), b.clone()], 1).unwrap();
        assert_eq!(s, b);
        assert!(smooth(&[], 3).is_err());
    }

    #[test]
    fn smoothing_noise_converges_to_clean_trace() {
        let (m, g) = setup(31, 0.3, 0.87);
        let z = sine(&m);
        let model = NoiseModel {
            level: 0.1,
            seed: 5,
            ..Default::default()
        };
        let d = Diffusion::default();
        let zn = norm(&g, &z, NormKind::Z, &d).unwrap();
        let w = 400;
        let hist: Vec<_> = (0..w).map(|s| make_noisy(&g, &z, &model, s as u64).unwrap().trace).collect();
        let err = norm(&g, &smooth(&hist, w).unwrap().sub(&z).unwrap(), NormKind::Z, &d).unwrap();
        // each sample has Z-norm exactly delta |z|; the mean of w independent
        // ones has rms delta |z| / sqrt(w)
        assert!(err < 3.0 * 0.1 * zn / (w as f64).sqrt(), "{err}");
    }

    #[test]
    fn tstar_detection() {
        let never: Vec<_> = (0..10)
            .map(|i| DefectSample {
                t: i as f64,
                d_vtil: 0.0,
                r_vxtil: 1.0,
                r_x: 1.0,
            })
            .collect();
        assert_eq!(detect_tstar(&never, 1.0, 1.0), None);

        // d = 0.01 constant, r_X = r_VX = 0.5^n: threshold 0.5^(n+1)
        let samples: Vec<_> = (0..20)
            .map(|i| {
                let r = 0.5f64.powi(i);
                DefectSample {
                    t: 0.6 * i as f64,
                    d_vtil: 0.01,
                    r_vxtil: r,
                    r_x: r,
                }
            })
            .collect();
        let mut expect = None;
        for (i, s) in samples.iter().enumerate() {
            if s.t > 0.0 && s.d_vtil > 0.5 * s.r_vxtil * s.r_vxtil / s.r_x {
                expect = Some(i);
                break;
            }
        }
        assert_eq!(detect_tstar(&samples, 1.0, 1.0), expect);
        assert_eq!(expect, Some(6));

        let eq = [
            DefectSample { t: 0.0, d_vtil: 9.0, r_vxtil: 1.0, r_x: 1.0 },
            DefectSample { t: 1.0, d_vtil: 0.5, r_vxtil: 1.0, r_x: 1.0 },
        ];
        assert_eq!(detect_tstar(&eq, 1.0, 1.0), None);
        let zero_r = [DefectSample { t: 1.0, d_vtil: 0.0, r_vxtil: 0.0, r_x: 0.0 }];
        assert_eq!(detect_tstar(&zero_r, 1.0, 1.0), None);
        let zero_r = [DefectSample { t: 1.0, d_vtil: 1e-9, r_vxtil: 0.0, r_x: 0.0 }];
        assert_eq!(detect_tstar(&zero_r, 1.0, 1.0), Some(0));
    }
}
