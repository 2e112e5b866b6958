use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::forward::forward_solve;
use crate::error::{Error, Result};
use crate::fem1d::{BoundaryKind, Diffusion, HermiteField, Mesh1D, QuadGrid, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// `u*(t, x) = sin(pi x) / (1 + t)`.
    Analytic,
    /// Backward Euler trajectory with the exact parameter.
    ForwardSolve,
}

/// Exact parameter `q*(x) = 0.025 x^2 - 0.025 x`.
pub fn q_star(x: f64) -> f64 {
    0.025 * x * x - 0.025 * x
}

pub fn q_star_dx(x: f64) -> f64 {
    0.05 * x - 0.025
}

/// Ground truth of the diffusion experiment with constant `D`.
#[derive(Debug, Clone)]
pub struct TruthModel {
    mesh: Arc<Mesh1D>,
    d: f64,
    q_star: HermiteField,
    provenance: Provenance,
    h_t: f64,
    trajectory: Vec<HermiteField>,
}

impl TruthModel {
    pub fn analytic(mesh: Arc<Mesh1D>, d: f64) -> Result<Self> {
        if !d.is_finite() {
            return Err(Error::NonFinite("diffusion coefficient".into()));
        }
        let q_star = HermiteField::interpolate(mesh.clone(), q_star, q_star_dx)?;
        Ok(Self {
            mesh,
            d,
            q_star,
            provenance: Provenance::Analytic,
            h_t: 0.0,
            trajectory: Vec::new(),
        })
    }

    /// Truth obtained by simulating with `q*` from `u0 = sin(pi x)` with step
    /// `h_t` for `n_steps` steps; states are available at the step times only.
    pub fn simulated(mesh: Arc<Mesh1D>, d: f64, h_t: f64, n_steps: usize) -> Result<Self> {
        let mut model = Self::analytic(mesh.clone(), d)?;
        let grid = QuadGrid::with_window(mesh.clone(), None);
        let u0 = model.u_star(0.0)?;
        let trajectory = {
            let f = model.forcing_fn();
            forward_solve(&grid, &model.q_star, &u0, &f, &Diffusion::Constant(d), h_t, n_steps)?
        };
        model.trajectory = trajectory;
        model.h_t = h_t;
        model.provenance = Provenance::ForwardSolve;
        Ok(model)
    }

    pub fn mesh(&self) -> &Arc<Mesh1D> {
        &self.mesh
    }

    pub fn diffusion(&self) -> Diffusion {
        Diffusion::Constant(self.d)
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn q_star(&self) -> &HermiteField {
        &self.q_star
    }

    /// `sup_x |q*|`, attained at the vertex `x = 1/2`.
    pub fn q_star_sup(&self) -> f64 {
        q_star(0.5).abs()
    }

    pub fn u_exact(t: f64, x: f64) -> f64 {
        (PI * x).sin() / (1.0 + t)
    }

    pub fn forcing(&self, t: f64, x: f64) -> f64 {
        let s = 1.0 / (1.0 + t);
        s * (self.d * PI * PI - s + q_star(x)) * (PI * x).sin()
    }

    pub fn forcing_fn(&self) -> impl Fn(f64, f64) -> f64 + Sync + '_ {
        move |t, x| self.forcing(t, x)
    }

    /// Discrete truth state at time `t`.
    pub fn u_star(&self, t: f64) -> Result<HermiteField> {
        match self.provenance {
            Provenance::Analytic => {
                let s = 1.0 / (1.0 + t);
                Ok(HermiteField::interpolate(
                    self.mesh.clone(),
                    |x| s * (PI * x).sin(),
                    |x| s * PI * (PI * x).cos(),
                )?
                .with_dirichlet_zero())
            }
            Provenance::ForwardSolve => {
                let n = (t / self.h_t).round();
                if (n * self.h_t - t).abs() > 1e-9 * (1.0 + t) || n < 0.0 || n as usize >= self.trajectory.len() {
                    return Err(Error::Contract(format!("simulated truth has no state at t = {t}")));
                }
                Ok(self.trajectory[n as usize].clone())
            }
        }
    }

    /// Load vector of the forcing at time `t`.
    pub fn load(&self, grid: &QuadGrid, t: f64) -> Vec<f64> {
        grid.load_vector(Region::All, |x| self.forcing(t, x))
    }
}

/// Zero-dof field with Dirichlet boundary, for convenience.
pub fn zero_state(mesh: &Arc<Mesh1D>) -> HermiteField {
    HermiteField::zeros(mesh.clone(), BoundaryKind::DirichletZero)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_solution_satisfies_the_equation() {
        let m = Arc::new(Mesh1D::uniform(31).unwrap());
        let truth = TruthModel::analytic(m, 1.0).unwrap();
        for (t, x) in [(1.0, 0.5), (0.0, 0.2), (7.3, 0.91)] {
            let u_t = -(PI * x).sin() / ((1.0 + t) * (1.0 + t));
            let u_xx = -PI * PI * (PI * x).sin() / (1.0 + t);
            let residual = u_t - u_xx + q_star(x) * TruthModel::u_exact(t, x) - truth.forcing(t, x);
            assert!(residual.abs() < 1e-14, "{residual}");
        }
    }

    #[test]
    fn initial_and_boundary_values() {
        let m = Arc::new(Mesh1D::uniform(31).unwrap());
        let truth = TruthModel::analytic(m, 1.0).unwrap();
        let u0 = truth.u_star(0.0).unwrap();
        assert!((u0.eval(0.5).unwrap() - 1.0).abs() < 1e-14);
        let u = truth.u_star(3.0).unwrap();
        assert_eq!(u.eval(0.0).unwrap(), 0.0);
        assert!(u.eval(1.0).unwrap().abs() < 1e-16);
        assert!((truth.q_star_sup() - 0.00625).abs() < 1e-16);
    }
}
