use std::sync::Arc;

use super::forward::boundary_value_dofs;
use crate::error::{Error, Result};
use crate::fem1d::{BandMatrix, Diffusion, HermiteField, Mesh1D, QuadGrid, Region};

/// Half-bandwidth of the interleaved `(q_hat, u_hat)` system: per node the
/// unknowns are `[q, q', u, u']`, and one element couples two nodes.
pub const COUPLED_BANDWIDTH: usize = 7;

#[inline]
pub fn q_index(dof: usize) -> usize {
    2 * (dof / 2) * 2 + dof % 2
}

#[inline]
pub fn u_index(dof: usize) -> usize {
    q_index(dof) + 2
}

/// Matrices that do not change between steps.
#[derive(Debug, Clone)]
pub struct StepOperators {
    pub grid: Arc<QuadGrid>,
    pub diffusion: Diffusion,
    /// Gram matrix of the parameter space (`H1`).
    pub k_q: BandMatrix,
    pub mass: BandMatrix,
    pub k_in: BandMatrix,
    pub k_out: BandMatrix,
    /// `|D|`-stiffness plus mass on the window: the operator `M`.
    pub s_in: BandMatrix,
    /// Same on the complement: the operator `N`.
    pub s_out: BandMatrix,
}

impl StepOperators {
    pub fn new(grid: Arc<QuadGrid>, diffusion: Diffusion) -> Result<Self> {
        let mass = grid.mass(Region::All);
        let mut k_q = mass.clone();
        k_q.add_scaled(1.0, &grid.stiffness(Region::All, &Diffusion::Constant(1.0), false)?);
        let k_in = grid.stiffness(Region::Inside, &diffusion, false)?;
        let k_out = grid.stiffness(Region::Outside, &diffusion, false)?;
        let mut s_in = grid.stiffness(Region::Inside, &diffusion, true)?;
        s_in.add_scaled(1.0, &grid.mass(Region::Inside));
        let mut s_out = grid.stiffness(Region::Outside, &diffusion, true)?;
        s_out.add_scaled(1.0, &grid.mass(Region::Outside));
        Ok(Self {
            grid,
            diffusion,
            k_q,
            mass,
            k_in,
            k_out,
            s_in,
            s_out,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh1D> {
        self.grid.mesh()
    }
}

/// Everything one step needs besides the current state.
#[derive(Debug, Clone)]
pub struct StepInputs<'a> {
    pub h_t: f64,
    /// Lifted observation at the new time level.
    pub y_next: &'a HermiteField,
    /// Values of `R y + P u_hat` at the old time level, per grid point.
    pub w_old: &'a [f64],
    /// Load vector of the forcing at the new time level.
    pub load_next: &'a [f64],
    /// `mu / |R u_hat - y|_Vtil`, or 0 when the term is dropped.
    pub gamma: f64,
    pub nu: f64,
    pub sigma: f64,
}

/// Values of `R y + P u` at the grid points.
pub fn mixed_samples(grid: &QuadGrid, y: &HermiteField, u: &HermiteField) -> Vec<f64> {
    let ys = grid.sample(y);
    let us = grid.sample(u);
    grid.points()
        .iter()
        .enumerate()
        .map(|(k, p)| if p.inside { ys.value[k] } else { us.value[k] })
        .collect()
}

fn scatter(dst: &mut BandMatrix, src: &BandMatrix, alpha: f64, rows: fn(usize) -> usize, cols: fn(usize) -> usize) {
    if alpha == 0.0 {
        return;
    }
    for (i, j, v) in src.entries() {
        if v != 0.0 {
            dst.add(rows(i), cols(j), alpha * v);
        }
    }
}

/// One semi-implicit Euler step of the coupled parameter/state system.
///
/// The parameter rows read
/// `(1 + sigma h) K_Q q' - h C_in(w) u' = K_Q q - h C_in(w) y'` and the state
/// rows
/// `[M + h K_out + h gamma S_in + h nu S_out] u' + h B(w) q'
///   = M u + h F' - h K_in y' + h gamma S_in y'`,
/// with primes at the new level and `w` frozen at the old one.
pub fn coupled_step(
    ops: &StepOperators,
    q: &HermiteField,
    u: &HermiteField,
    inp: &StepInputs<'_>,
) -> Result<(HermiteField, HermiteField)> {
    let mesh = ops.mesh().clone();
    let nd = mesh.n_dofs();
    let h = inp.h_t;
    let grid = &ops.grid;
    let c_in = grid.weighted_mass(Region::Inside, inp.w_old);
    let b_all = grid.weighted_mass(Region::All, inp.w_old);

    let mut a = BandMatrix::zeros(2 * nd, COUPLED_BANDWIDTH, COUPLED_BANDWIDTH);
    scatter(&mut a, &ops.k_q, 1.0 + inp.sigma * h, q_index, q_index);
    scatter(&mut a, &c_in, -h, q_index, u_index);
    scatter(&mut a, &ops.mass, 1.0, u_index, u_index);
    scatter(&mut a, &ops.k_out, h, u_index, u_index);
    scatter(&mut a, &ops.s_in, h * inp.gamma, u_index, u_index);
    scatter(&mut a, &ops.s_out, h * inp.nu, u_index, u_index);
    scatter(&mut a, &b_all, h, u_index, q_index);

    let y = inp.y_next.dofs();
    let kq_q = ops.k_q.mul_vec(q.dofs());
    let c_y = c_in.mul_vec(y);
    let m_u = ops.mass.mul_vec(u.dofs());
    let k_y = ops.k_in.mul_vec(y);
    let s_y = ops.s_in.mul_vec(y);
    let mut rhs = vec![0.0; 2 * nd];
    for i in 0..nd {
        rhs[q_index(i)] = kq_q[i] - h * c_y[i];
        rhs[u_index(i)] = m_u[i] + h * inp.load_next[i] - h * k_y[i] + h * inp.gamma * s_y[i];
    }
    for i in boundary_value_dofs(mesh.n_nodes()) {
        a.pin_row(u_index(i));
        rhs[u_index(i)] = 0.0;
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("step right-hand side".into()));
    }
    let lu = a.factorize()?;
    let x = lu.solve(&rhs);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("step solution".into()));
    }
    let q_new = (0..nd).map(|i| x[q_index(i)]).collect();
    let u_new = (0..nd).map(|i| x[u_index(i)]).collect();
    Ok((
        HermiteField::from_dofs(mesh.clone(), q_new, q.boundary())?,
        HermiteField::from_dofs(mesh, u_new, u.boundary())?,
    ))
}
