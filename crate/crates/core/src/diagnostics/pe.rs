//! Persistence-of-excitation probe over a stored trajectory.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{mixed_samples, RunTrace};
use crate::fem1d::{norm, BoundaryKind, Diffusion, HermiteField, NormKind, QuadGrid};

/// Best window found for one `(t_a, xi)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeRow {
    pub t_a: f64,
    pub direction: usize,
    pub t_b: f64,
    /// `|int_{t_b}^{t_b + gamma0} R A(u* + p) xi dtau|_X`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeProbeReport {
    pub gamma0: f64,
    pub t0: f64,
    pub n_directions: usize,
    pub rows: Vec<PeRow>,
    /// Minimum over the probed pairs of the per-pair maximum.
    pub eps0: f64,
}

/// The `2N` Hermite basis functions and `n_random` seeded Gaussian fields,
/// each scaled to unit `Q`-norm.
pub fn canonical_directions(grid: &QuadGrid, n_random: usize, seed: u64) -> Result<Vec<HermiteField>> {
    let mesh = grid.mesh().clone();
    let nd = mesh.n_dofs();
    let mut raw: Vec<Vec<f64>> = (0..nd)
        .map(|i| {
            let mut v = vec![0.0; nd];
            v[i] = 1.0;
            v
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_random {
        raw.push((0..nd).map(|_| StandardNormal.sample(&mut rng)).collect());
    }
    raw.into_iter()
        .map(|dofs| {
            let f = HermiteField::from_dofs(mesh.clone(), dofs, BoundaryKind::Free)?;
            let n = norm(grid, &f, NormKind::Q, &Diffusion::default())?;
            Ok(f.scaled(1.0 / n))
        })
        .collect()
}

/// Values of `R y + P u_hat` per stored step; with exact data this is
/// `R u* + P u_hat = u* + p`.
pub fn excitation_trajectory(grid: &QuadGrid, trace: &RunTrace) -> Vec<Vec<f64>> {
    trace
        .states
        .iter()
        .map(|s| mixed_samples(grid, &s.y, &s.u_hat))
        .collect()
}

/// Scans `t_b in [t_a, t_a + t0]` for every `t_a` and direction.
///
/// `traj[k]` holds the excitation at time `k h_t` on the points of `grid`.
/// Time integrals use the trapezoid rule over the stored steps, so `gamma0`
/// is rounded to a whole number of steps.
pub fn probe_pe(
    grid: &QuadGrid,
    h_t: f64,
    traj: &[Vec<f64>],
    directions: &[HermiteField],
    gamma0: f64,
    t0: f64,
    t_a_grid: &[f64],
) -> Result<PeProbeReport> {
    if !(gamma0 >= h_t) {
        return Err(Error::Contract(format!("gamma0 = {gamma0} is shorter than one step ({h_t})")));
    }
    if !(t0 >= 0.0) {
        return Err(Error::Contract(format!("t0 = {t0} must be >= 0")));
    }
    let one = Diffusion::default();
    for (i, d) in directions.iter().enumerate() {
        let n = norm(grid, d, NormKind::Q, &one)?;
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::Contract(format!("direction {i} has Q-norm {n}, expected 1")));
        }
    }
    let k = (gamma0 / h_t).round() as usize;
    let n_steps = traj.len();
    // cumulative trapezoid integral per grid point
    let mut cum = vec![vec![0.0; grid.len()]; n_steps];
    for s in 1..n_steps {
        for p in 0..grid.len() {
            cum[s][p] = cum[s - 1][p] + 0.5 * h_t * (traj[s - 1][p] + traj[s][p]);
        }
    }
    let xi: Vec<Vec<f64>> = directions.iter().map(|d| grid.sample(d).value).collect();
    let points = grid.points();
    let window_value = |b: usize, dir: usize| -> f64 {
        let (lo, hi) = (&cum[b], &cum[b + k]);
        let s: f64 = points
            .iter()
            .enumerate()
            .filter(|(_, q)| q.inside)
            .map(|(p, q)| {
                let v = (hi[p] - lo[p]) * xi[dir][p];
                q.weight * v * v
            })
            .sum();
        s.sqrt()
    };
    let pairs: Vec<(f64, usize)> = t_a_grid
        .iter()
        .flat_map(|&t| (0..directions.len()).map(move |d| (t, d)))
        .collect();
    let rows: Vec<PeRow> = pairs
        .par_iter()
        .filter_map(|&(t_a, dir)| {
            let first = (t_a / h_t).ceil() as usize;
            let last = ((t_a + t0) / h_t + 1e-9).floor() as usize;
            let mut best: Option<PeRow> = None;
            for b in first..=last {
                if b + k >= n_steps {
                    break;
                }
                let v = window_value(b, dir);
                if best.is_none_or(|r| v > r.value) {
                    best = Some(PeRow {
                        t_a,
                        direction: dir,
                        t_b: b as f64 * h_t,
                        value: v,
                    });
                }
            }
            best
        })
        .collect();
    let eps0 = rows.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
    Ok(PeProbeReport {
        gamma0,
        t0,
        n_directions: directions.len(),
        eps0: if rows.is_empty() { 0.0 } else { eps0 },
        rows,
    })
}

/// Same as [`probe_pe`] on a finished run with the canonical probe set.
pub fn probe_run(
    grid: &QuadGrid,
    trace: &RunTrace,
    n_random: usize,
    seed: u64,
    gamma0: f64,
    t0: f64,
    t_a_grid: &[f64],
) -> Result<PeProbeReport> {
    let dirs = canonical_directions(grid, n_random, seed)?;
    probe_pe(grid, trace.h_t, &excitation_trajectory(grid, trace), &dirs, gamma0, t0, t_a_grid)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fem1d::Mesh1D;
    use crate::observation::ObservationWindow;

    fn unit_mesh(n: usize) -> Arc<Mesh1D> {
        Arc::new(Mesh1D::uniform(n).unwrap())
    }

    fn full_grid(n: usize) -> QuadGrid {
        let m = unit_mesh(n);
        let w = ObservationWindow::full(&m);
        QuadGrid::with_window(m, Some(w))
    }

    #[test]
    fn directions_have_unit_q_norm() {
        let g = full_grid(7);
        let d = canonical_directions(&g, 3, 1).unwrap();
        assert_eq!(d.len(), 2 * 7 + 3);
        for f in &d {
            let n = norm(&g, f, NormKind::Q, &Diffusion::default()).unwrap();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_trajectory_has_no_excitation() {
        let g = full_grid(7);
        let d = canonical_directions(&g, 2, 0).unwrap();
        let traj = vec![vec![0.0; g.len()]; 20];
        let rep = probe_pe(&g, 0.5, &traj, &d, 1.0, 3.0, &[0.0, 2.0]).unwrap();
        assert!(rep.rows.iter().all(|r| r.value == 0.0));
        assert_eq!(rep.eps0, 0.0);
    }

    #[test]
    fn constant_trajectory_gives_gamma0_times_x_norm() {
        // A(1) xi = xi, so the window integral is gamma0 xi
        let g = full_grid(9);
        let d = canonical_directions(&g, 1, 4).unwrap();
        let traj = vec![vec![1.0; g.len()]; 30];
        let gamma0 = 1.5;
        let rep = probe_pe(&g, 0.5, &traj, &d[d.len() - 1..], gamma0, 2.0, &[1.0]).unwrap();
        let x = norm(&g, &d[d.len() - 1], NormKind::X, &Diffusion::default()).unwrap();
        assert!((rep.rows[0].value - gamma0 * x).abs() < 1e-12 * x.max(1.0));
    }

    #[test]
    fn short_window_is_rejected() {
        let g = full_grid(5);
        let d = canonical_directions(&g, 0, 0).unwrap();
        let traj = vec![vec![1.0; g.len()]; 5];
        assert!(matches!(
            probe_pe(&g, 0.6, &traj, &d, 0.3, 1.0, &[0.0]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn monotone_in_gamma0_for_nonnegative_integrand() {
        let g = full_grid(7);
        let d = canonical_directions(&g, 2, 9).unwrap();
        let traj: Vec<Vec<f64>> = (0..40)
            .map(|k| g.points().iter().map(|p| (1.0 + p.x) / (1.0 + 0.1 * k as f64)).collect())
            .collect();
        let small = probe_pe(&g, 0.5, &traj, &d, 1.0, 4.0, &[0.0, 3.0]).unwrap();
        let large = probe_pe(&g, 0.5, &traj, &d, 2.0, 4.0, &[0.0, 3.0]).unwrap();
        for (a, b) in small.rows.iter().zip(&large.rows) {
            assert!(b.value >= a.value);
        }
    }
}
