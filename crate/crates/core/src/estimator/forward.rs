use crate::error::{Error, Result};
use crate::fem1d::{BandMatrix, Diffusion, HermiteField, QuadGrid, Region};

/// Rows of the value dofs at the two boundary nodes.
pub(crate) fn boundary_value_dofs(n_nodes: usize) -> [usize; 2] {
    [0, 2 * (n_nodes - 1)]
}

/// Backward Euler for `u_t - (D u')' + q u = f` with homogeneous Dirichlet
/// data. Returns the states at `t = 0, h_t, ..., n_steps h_t`.
pub fn forward_solve(
    grid: &QuadGrid,
    q: &HermiteField,
    u0: &HermiteField,
    f: &(dyn Fn(f64, f64) -> f64 + Sync),
    diffusion: &Diffusion,
    h_t: f64,
    n_steps: usize,
) -> Result<Vec<HermiteField>> {
    if !(h_t > 0.0) || !h_t.is_finite() {
        return Err(Error::Contract(format!("time step must be positive, got {h_t}")));
    }
    let mesh = grid.mesh().clone();
    let mass = grid.mass(Region::All);
    let qs = grid.sample(q);
    let mut a: BandMatrix = mass.clone();
    a.add_scaled(h_t, &grid.stiffness(Region::All, diffusion, false)?);
    a.add_scaled(h_t, &grid.weighted_mass(Region::All, &qs.value));
    let bdofs = boundary_value_dofs(mesh.n_nodes());
    for &i in &bdofs {
        a.pin_row(i);
    }
    let lu = a.factorize()?;
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut u = u0.clone().with_dirichlet_zero();
    states.push(u.clone());
    for n in 0..n_steps {
        let t = (n + 1) as f64 * h_t;
        let load = grid.load_vector(Region::All, |x| f(t, x));
        let mut rhs = mass.mul_vec(u.dofs());
        for (r, l) in rhs.iter_mut().zip(&load) {
            *r += h_t * l;
        }
        for &i in &bdofs {
            rhs[i] = 0.0;
        }
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("right-hand side".into()).at_step(n + 1, t));
        }
        let next = lu.solve(&rhs);
        u = HermiteField::from_dofs(mesh.clone(), next, u.boundary()).map_err(|e| e.at_step(n + 1, t))?;
        states.push(u.clone());
    }
    Ok(states)
}

/// One level of a time-step refinement study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementRow {
    pub h_t: f64,
    /// Max over the coarse step times of the `X` error against the analytic state.
    pub max_error: f64,
    /// Observed order of `max_error` against the previous level.
    pub error_order: Option<f64>,
    /// `X` distance at the final time to the previous level's solution.
    pub self_diff: Option<f64>,
    /// Observed order from consecutive `self_diff`s.
    pub self_order: Option<f64>,
}

/// Solves with `q = q*` at `h_t, h_t/2, ..., h_t/2^(levels-1)` up to `horizon`.
pub fn temporal_refinement(
    grid: &QuadGrid,
    truth: &super::TruthModel,
    h_t: f64,
    horizon: f64,
    levels: usize,
) -> Result<Vec<RefinementRow>> {
    let one = Diffusion::default();
    let reference = super::TruthModel::analytic(grid.mesh().clone(), 1.0)?;
    let n0 = (horizon / h_t).round() as usize;
    if n0 == 0 {
        return Err(Error::Contract(format!("horizon {horizon} is shorter than one step {h_t}")));
    }
    let u0 = truth.u_star(0.0)?;
    let f = truth.forcing_fn();
    let mut rows: Vec<RefinementRow> = Vec::with_capacity(levels);
    let mut prev_final: Option<HermiteField> = None;
    for k in 0..levels {
        let scale = 1usize << k;
        let h = h_t / scale as f64;
        let states = forward_solve(grid, truth.q_star(), &u0, &f, &truth.diffusion(), h, n0 * scale)?;
        let mut max_error: f64 = 0.0;
        for j in 0..=n0 {
            let d = states[j * scale].sub(&reference.u_star(j as f64 * h_t)?)?;
            max_error = max_error.max(crate::fem1d::norm(grid, &d, crate::fem1d::NormKind::X, &one)?);
        }
        let last = states[n0 * scale].clone();
        let self_diff = match &prev_final {
            Some(p) => Some(crate::fem1d::norm(grid, &last.sub(p)?, crate::fem1d::NormKind::X, &one)?),
            None => None,
        };
        let error_order = rows.last().map(|r| (r.max_error / max_error).log2());
        let self_order = match (rows.last().and_then(|r| r.self_diff), self_diff) {
            (Some(a), Some(b)) => Some((a / b).log2()),
            _ => None,
        };
        rows.push(RefinementRow {
            h_t: h,
            max_error,
            error_order,
            self_diff,
            self_order,
        });
        prev_final = Some(last);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::truth::TruthModel;
    use crate::fem1d::{norm, BoundaryKind, Mesh1D, NormKind};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid(n: usize) -> QuadGrid {
        QuadGrid::with_window(Arc::new(Mesh1D::uniform(n).unwrap()), None)
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = grid(11);
        let z = HermiteField::zeros(g.mesh().clone(), BoundaryKind::DirichletZero);
        let s = forward_solve(&g, &z, &z, &|_, _| 0.0, &Diffusion::Constant(1.0), 0.1, 5).unwrap();
        assert!(s.iter().all(|u| u.dofs().iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn heat_decay_matches_backward_euler_factor() {
        let g = grid(41);
        let m = g.mesh().clone();
        let u0 = HermiteField::interpolate(m.clone(), |x| (PI * x).sin(), |x| PI * (PI * x).cos()).unwrap();
        let zero = HermiteField::zeros(m, BoundaryKind::Free);
        let h = 0.05;
        let s = forward_solve(&g, &zero, &u0, &|_, _| 0.0, &Diffusion::Constant(1.0), h, 1).unwrap();
        let factor = s[1].eval(0.5).unwrap() / s[0].eval(0.5).unwrap();
        assert!((factor - 1.0 / (1.0 + PI * PI * h)).abs() < 1e-6, "{factor}");
    }

    #[test]
    fn matches_analytic_truth_at_first_order() {
        let g = grid(31);
        let truth = TruthModel::analytic(g.mesh().clone(), 1.0).unwrap();
        let u0 = truth.u_star(0.0).unwrap();
        let f = truth.forcing_fn();
        let err = |h: f64| {
            let n = (6.0 / h).round() as usize;
            let s = forward_solve(&g, truth.q_star(), &u0, &f, &truth.diffusion(), h, n).unwrap();
            let d = s[n].sub(&truth.u_star(6.0).unwrap()).unwrap();
            norm(&g, &d, NormKind::X, &Diffusion::default()).unwrap()
        };
        let (e1, e2, e3) = (err(0.6), err(0.3), err(0.15));
        assert!((e1 / e2).log2() > 0.8 && (e2 / e3).log2() > 0.8, "{e1} {e2} {e3}");
    }

    #[test]
    fn refinement_orders_are_first_order() {
        let g = grid(31);
        let truth = TruthModel::analytic(g.mesh().clone(), 1.0).unwrap();
        let rows = temporal_refinement(&g, &truth, 0.6, 6.0, 3).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].error_order.is_none() && rows[1].self_order.is_none());
        assert!(rows[2].self_order.unwrap() > 0.8, "{rows:?}");
        assert!(rows[2].error_order.unwrap() > 0.8, "{rows:?}");
    }
}
