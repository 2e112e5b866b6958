//! Stabilization weights `mu(t)` and `nu(t)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Constants entering the lower bounds on the gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainConstants {
    /// `c_1` (or `c~_1` in the noisy regime).
    pub c1: f64,
    pub nu_min: f64,
    pub l_c: f64,
    pub c_m: f64,
    pub big_c_m: f64,
    pub c_n: f64,
    pub big_c_n: f64,
    pub c_a: f64,
    /// Embedding constant of `Vhat` into `VXhat`.
    pub c_vhat_vxhat: f64,
    /// Embedding constant of `VXhat` into `X`.
    pub c_vxhat_x: f64,
    pub sigma: f64,
}

impl Default for GainConstants {
    fn default() -> Self {
        Self {
            c1: 1.0,
            nu_min: 1.0,
            l_c: 1.0,
            c_m: 1.0,
            big_c_m: 1.0,
            c_n: 1.0,
            big_c_n: 1.0,
            c_a: h1_linf_constant(),
            c_vhat_vxhat: 1.0,
            c_vxhat_x: 1.0,
            sigma: 0.0,
        }
    }
}

/// Sharp constant of `|v|_inf <= C |v|_{H1(0,1)}`: the diagonal of the Green's
/// function of `-v'' + v` with natural boundary conditions peaks at the ends,
/// where it equals `coth(1)`.
pub fn h1_linf_constant() -> f64 {
    (1.0f64.cosh() / 1.0f64.sinh()).sqrt()
}

/// `L_C = max(1, |q*|_inf)` and `C_A = C_emb max(1, sup_t |u*(t)|_X)`, the
/// remaining constants being 1 for the operators `M`, `N` in the norms used
/// here.
pub fn estimate_constants(q_star_sup: f64, u_star_sup_x: f64) -> GainConstants {
    GainConstants {
        l_c: q_star_sup.abs().max(1.0),
        c_a: h1_linf_constant() * u_star_sup_x.max(1.0),
        ..GainConstants::default()
    }
}

/// Norms of the error fields at one time level.
///
/// `r = R(u_hat - u*)`, `p = P(u_hat - u*)`, `e = q_hat - q*`,
/// `d = u_alpha - R u*` and `r_alpha = R u_hat - u_alpha`; `dtil` is the time
/// derivative of `d`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub e_q: f64,
    pub r_x: f64,
    pub r_vtil: f64,
    pub r_vxtil: f64,
    pub p_x: f64,
    pub p_vhat: f64,
    pub p_vxhat: f64,
    pub d_x: f64,
    pub d_vtil: f64,
    pub dtil_x: f64,
    pub ra_x: f64,
    pub ra_vtil: f64,
    pub ra_vxtil: f64,
}

/// Lower bound for exact data. Returns 0 when `|r|_VXtil <= eps`.
pub fn mu_exact(n: &ErrorNorms, c: &GainConstants, eps: f64) -> f64 {
    if n.r_vxtil <= eps {
        return 0.0;
    }
    let a = 2.0 * c.l_c / c.c_m * n.p_vhat;
    let b = c.c1 * n.r_x;
    a.max(b) * n.r_x * n.r_vtil / (n.r_vxtil * n.r_vxtil)
}

/// Lower bound for exact data. Returns `nu_min` when `|p|_VXhat <= eps`.
pub fn nu_exact(n: &ErrorNorms, c: &GainConstants, eps: f64) -> f64 {
    if n.p_vxhat <= eps {
        return c.nu_min;
    }
    let k = 4.0 * (c.l_c + c.c_a * (n.e_q + 0.5 * c.c_vhat_vxhat * c.c_vxhat_x)) / c.c_n;
    c.nu_min.max(k * n.p_vhat * n.p_x / (n.p_vxhat * n.p_vxhat))
}

/// Lower bound for noisy data, including the `sigma` branch.
pub fn mu_noisy(n: &ErrorNorms, c: &GainConstants, eps: f64) -> f64 {
    if n.r_vxtil <= eps {
        return 0.0;
    }
    let first = 4.0 * c.l_c / c.c_m * (n.d_vtil + n.p_vhat) * n.r_x
        + 4.0 * c.c_a / c.c_m * (1.0 + n.d_vtil + n.p_vhat) * n.e_q * n.d_x;
    let second = c.c1 * n.r_x * n.r_x;
    let third = 2.0 * c.sigma / c.c_m * n.r_x * n.r_x;
    first.max(second).max(third) * n.ra_vtil / (n.r_vxtil * n.r_vxtil)
}

/// Shared by the noisy and the smoothed regime.
pub fn nu_noisy(n: &ErrorNorms, c: &GainConstants, eps: f64) -> f64 {
    if n.p_vxhat <= eps {
        return c.nu_min;
    }
    let k = 4.0 * (c.l_c + c.c_a * n.e_q) / c.c_n * (n.p_vhat + n.d_vtil)
        + 2.0 * c.c_a * c.c_vhat_vxhat * c.c_vxhat_x / c.c_n * n.p_vhat;
    c.nu_min.max(k * n.p_x / (n.p_vxhat * n.p_vxhat))
}

/// Lower bound for time-smoothed noisy data.
pub fn mu_smooth(n: &ErrorNorms, c: &GainConstants, eps: f64) -> f64 {
    if n.ra_vxtil <= eps {
        return 0.0;
    }
    let a = 2.0 / c.c_m * (c.l_c * (n.d_vtil + n.p_vhat) + n.dtil_x);
    let b = c.c1 * n.ra_x;
    a.max(b) * n.ra_x * n.ra_vtil / (n.ra_vxtil * n.ra_vxtil)
}

pub fn nu_smooth(n: &ErrorNorms, c: &GainConstants, eps: f64) -> f64 {
    nu_noisy(n, c, eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainMode {
    OracleExact,
    OracleNoisy,
    OracleSmooth,
    /// Constant `mu_bar`, `nu_bar`.
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSchedule {
    pub mode: GainMode,
    pub constants: GainConstants,
    pub mu_bar: f64,
    pub nu_bar: f64,
}

impl GainSchedule {
    /// `(mu, nu)` for the given error norms.
    pub fn evaluate(&self, n: &ErrorNorms, eps: f64) -> (f64, f64) {
        let c = &self.constants;
        match self.mode {
            GainMode::OracleExact => (mu_exact(n, c, eps), nu_exact(n, c, eps)),
            GainMode::OracleNoisy => (mu_noisy(n, c, eps), nu_noisy(n, c, eps)),
            GainMode::OracleSmooth => (mu_smooth(n, c, eps), nu_smooth(n, c, eps)),
            GainMode::Heuristic => (self.mu_bar, self.nu_bar),
        }
    }
}

/// `{0.1, ..., 0.9, 1, ..., 9, 10, ..., 90, 100, ..., 900, 1000}`.
pub fn decimal_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (1..10).map(|k| k as f64 / 10.0).collect();
    for scale in [1.0, 10.0, 100.0] {
        g.extend((1..10).map(|k| k as f64 * scale));
    }
    g.push(1000.0);
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow<P> {
    pub index: usize,
    pub point: P,
    pub score: f64,
    pub status: ScoreStatus,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult<P> {
    pub best_index: usize,
    pub best: P,
    pub best_score: f64,
    pub table: Vec<ScoreRow<P>>,
}

fn score_point<P: Clone, F>(index: usize, point: &P, objective: &F) -> ScoreRow<P>
where
    F: Fn(&P) -> Result<f64>,
{
    match objective(point) {
        Ok(s) if s.is_finite() => ScoreRow {
            index,
            point: point.clone(),
            score: s,
            status: ScoreStatus::Ok,
            message: None,
        },
        Ok(s) => ScoreRow {
            index,
            point: point.clone(),
            score: f64::INFINITY,
            status: ScoreStatus::Failed,
            message: Some(format!("objective returned {s}")),
        },
        Err(e) => ScoreRow {
            index,
            point: point.clone(),
            score: f64::INFINITY,
            status: ScoreStatus::Failed,
            message: Some(e.to_string()),
        },
    }
}

/// First minimum in grid order, so listing the grid ascending breaks ties
/// toward the smaller constant.
pub fn best_of<P: Clone>(table: &[ScoreRow<P>]) -> Option<(usize, P, f64)> {
    let mut best: Option<&ScoreRow<P>> = None;
    for row in table {
        if best.is_none_or(|b| row.score < b.score) {
            best = Some(row);
        }
    }
    best.map(|b| (b.index, b.point.clone(), b.score))
}

/// Exhaustive search. Points are scored in parallel, `sink` sees the rows in
/// grid order one chunk at a time.
pub fn tune_heuristic_chunked<P, F, S>(grid: &[P], chunk: usize, objective: F, mut sink: S) -> Option<TuneResult<P>>
where
    P: Clone + Send + Sync,
    F: Fn(&P) -> Result<f64> + Sync,
    S: FnMut(&[ScoreRow<P>]),
{
    if grid.is_empty() {
        return None;
    }
    let chunk = chunk.max(1);
    let mut table = Vec::with_capacity(grid.len());
    for (c, points) in grid.chunks(chunk).enumerate() {
        let rows: Vec<ScoreRow<P>> = points
            .par_iter()
            .enumerate()
            .map(|(i, p)| score_point(c * chunk + i, p, &objective))
            .collect();
        sink(&rows);
        table.extend(rows);
    }
    let (best_index, best, best_score) = best_of(&table)?;
    Some(TuneResult {
        best_index,
        best,
        best_score,
        table,
    })
}

pub fn tune_heuristic<P, F>(grid: &[P], objective: F) -> Option<TuneResult<P>>
where
    P: Clone + Send + Sync,
    F: Fn(&P) -> Result<f64> + Sync,
{
    tune_heuristic_chunked(grid, grid.len().max(1), objective, |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn unit() -> GainConstants {
        GainConstants {
            c1: 1.0,
            nu_min: 0.5,
            l_c: 1.0,
            c_m: 1.0,
            big_c_m: 1.0,
            c_n: 1.0,
            big_c_n: 1.0,
            c_a: 1.0,
            c_vhat_vxhat: 1.0,
            c_vxhat_x: 1.0,
            sigma: 0.0,
        }
    }

    #[test]
    fn mu_exact_cases() {
        let c = unit();
        assert_eq!(mu_exact(&ErrorNorms::default(), &c, 1e-12), 0.0);
        let n = ErrorNorms {
            r_x: 0.3,
            r_vtil: 2.0,
            r_vxtil: 0.7,
            ..Default::default()
        };
        let expect = 0.3 * 0.3 * 2.0 / 0.49;
        assert!((mu_exact(&n, &c, 1e-12) - expect).abs() < 1e-15);
        let n = ErrorNorms {
            r_x: 2.0,
            r_vtil: 3.0,
            r_vxtil: 6f64.sqrt(),
            p_vhat: 1.0,
            ..Default::default()
        };
        assert!((mu_exact(&n, &c, 1e-12) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn nu_exact_cases() {
        let c = unit();
        assert_eq!(nu_exact(&ErrorNorms::default(), &c, 1e-12), 0.5);
        let n = ErrorNorms {
            p_vhat: 1.0,
            p_x: 1.0,
            p_vxhat: 1.0,
            ..Default::default()
        };
        assert!((nu_exact(&n, &c, 1e-12) - 6.0).abs() < 1e-14);
        let big = GainConstants { nu_min: 10.0, ..c };
        assert_eq!(nu_exact(&n, &big, 1e-12), 10.0);
    }

    #[test]
    fn mu_noisy_hand_cases() {
        let c = GainConstants { c1: 0.1, ..unit() };
        // first branch: 4(0.5 + 1)2 + 4(1 + 0.5 + 1)(1)(0.2) = 12 + 2 = 14
        let n = ErrorNorms {
            r_x: 2.0,
            r_vxtil: 2.0,
            p_vhat: 1.0,
            d_vtil: 0.5,
            d_x: 0.2,
            e_q: 1.0,
            ra_vtil: 3.0,
            ..Default::default()
        };
        assert!((mu_noisy(&n, &c, 1e-12) - 14.0 * 3.0 / 4.0).abs() < 1e-14);
        // sigma branch dominates: 2 * 10 * 4 = 80
        let s = GainConstants { sigma: 10.0, ..c };
        assert!((mu_noisy(&n, &s, 1e-12) - 80.0 * 3.0 / 4.0).abs() < 1e-13);
    }

    #[test]
    fn mu_smooth_hand_cases() {
        let c = unit();
        // (2)(1 (0.5 + 1) + 0.25) = 3.5 beats c1 |r_a| = 0.5
        let n = ErrorNorms {
            ra_x: 0.5,
            ra_vtil: 2.0,
            ra_vxtil: 1.0,
            p_vhat: 1.0,
            d_vtil: 0.5,
            dtil_x: 0.25,
            ..Default::default()
        };
        assert!((mu_smooth(&n, &c, 1e-12) - 3.5 * 0.5 * 2.0).abs() < 1e-14);
        let n = ErrorNorms {
            ra_x: 4.0,
            ra_vtil: 1.0,
            ra_vxtil: 2.0,
            ..Default::default()
        };
        assert!((mu_smooth(&n, &c, 1e-12) - 4.0 * 4.0 / 4.0).abs() < 1e-14);
    }

    #[test]
    fn regimes_agree_without_noise() {
        let c = GainConstants { c_a: 1.3, ..unit() };
        for (p, r) in [(0.1, 0.7), (2.0, 0.3)] {
            let n = ErrorNorms {
                e_q: 0.4,
                r_x: r,
                r_vtil: 1.7 * r,
                r_vxtil: 1.2 * r,
                p_x: 0.6,
                p_vhat: p,
                p_vxhat: 0.9,
                ra_x: r,
                ra_vtil: 1.7 * r,
                ra_vxtil: 1.2 * r,
                ..Default::default()
            };
            let ex = mu_exact(&n, &c, 0.0);
            let no = mu_noisy(&n, &c, 0.0);
            let first_dominates = 2.0 * c.l_c * p > c.c1 * r;
            let ratio = if first_dominates { 2.0 } else { 1.0 };
            assert!((no / ex - ratio).abs() < 1e-12, "{no} {ex}");
            assert!((mu_smooth(&n, &c, 0.0) - ex).abs() < 1e-14);
            assert!((nu_noisy(&n, &c, 0.0) - nu_exact(&n, &c, 0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn embedding_constant() {
        assert!((h1_linf_constant() - 1.145_877_5).abs() < 1e-7);
        let k = estimate_constants(0.00625, 0.5f64.sqrt());
        assert_eq!(k.l_c, 1.0);
        assert_eq!(k.c_a, h1_linf_constant());
        assert_eq!(estimate_constants(3.0, 2.0).l_c, 3.0);
    }

    #[test]
    fn grid_shape() {
        let g = decimal_grid();
        assert_eq!(g.len(), 37);
        assert_eq!(g[0], 0.1);
        assert_eq!(g[2], 0.3);
        assert_eq!(*g.last().unwrap(), 1000.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn tuner_basics() {
        let one = tune_heuristic(&[5.0], |_| Ok(1.0)).unwrap();
        assert_eq!(one.best, 5.0);
        let r = tune_heuristic(&[1.0, 2.0, 3.0, 4.0], |c| Ok((c - 3.0) * (c - 3.0))).unwrap();
        assert_eq!(r.best, 3.0);
        assert_eq!(r.table.len(), 4);
        let tie = tune_heuristic(&[1.0, 2.0, 3.0], |c| Ok((c - 2.0f64).abs().min(1.0) * 0.0)).unwrap();
        assert_eq!(tie.best, 1.0);
        let fail = tune_heuristic(&[1.0, 2.0, 3.0], |c| {
            if *c == 3.0 {
                Err(Error::Singular { condition: 1e20 })
            } else {
                Ok(*c)
            }
        })
        .unwrap();
        assert_eq!(fail.best, 1.0);
        assert_eq!(fail.table[2].status, ScoreStatus::Failed);
        assert!(fail.table[2].score.is_infinite());
        assert!(tune_heuristic::<f64, _>(&[], |_| Ok(0.0)).is_none());
    }

    #[test]
    fn chunked_sink_sees_rows_in_order() {
        let grid = decimal_grid();
        let mut seen = Vec::new();
        let r = tune_heuristic_chunked(&grid, 5, |c| Ok((c.ln() - 2.0).powi(2)), |rows| {
            seen.extend(rows.iter().map(|r| r.index))
        })
        .unwrap();
        assert_eq!(seen, (0..grid.len()).collect::<Vec<_>>());
        assert_eq!(r.best, 7.0);
    }
}
