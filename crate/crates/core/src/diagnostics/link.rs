//! Empirical constants of the link conditions and the interpolation estimate.

use serde::{Deserialize, Serialize};

use crate::estimator::StepRecord;

/// The per-step quantities the link conditions are built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkSample {
    pub t: f64,
    pub r_x: f64,
    pub r_vtil: f64,
    pub r_vxtil: f64,
    pub p_vhat: f64,
    pub mu: f64,
}

impl LinkSample {
    /// `theta = mu |r|_VXtil^2 / |r|_Vtil`.
    pub fn theta(&self) -> f64 {
        if self.r_vtil > 0.0 {
            self.mu * self.r_vxtil * self.r_vxtil / self.r_vtil
        } else {
            0.0
        }
    }
}

impl From<&StepRecord> for LinkSample {
    fn from(r: &StepRecord) -> Self {
        Self {
            t: r.t,
            r_x: r.norms.r_x,
            r_vtil: r.norms.r_vtil,
            r_vxtil: r.norms.r_vxtil,
            p_vhat: r.norms.p_vhat,
            mu: r.mu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkConstantsReport {
    /// Exponent of `|p|_Vhat <= C_rho |r|_X^rho`; `None` with fewer than three
    /// usable pairs.
    pub rho: Option<f64>,
    pub c_rho: Option<f64>,
    pub c_int: f64,
    pub big_c_int: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub c_lambda: f64,
    pub c_kappa: f64,
    pub n_pairs: usize,
}

/// Least-squares line through `(ln x, ln y)`: returns `(slope, exp(intercept))`.
pub fn power_law_fit(pairs: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pairs.len() < 3 {
        return None;
    }
    let n = pairs.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    let den = n * sxx - sx * sx;
    if den.abs() <= f64::EPSILON * n * sxx.abs() {
        return None;
    }
    let slope = (n * sxy - sx * sy) / den;
    let intercept = (sy - slope * sx) / n;
    Some((slope, intercept.exp()))
}

/// Windowed link quantity over `[t, t + gamma0]` for exponent `e` applied to
/// `f(tau) / theta(tau)`. For `e = 1` the sup branch is used.
fn windowed(samples: &[LinkSample], h_t: f64, k: usize, e: f64, num: impl Fn(&LinkSample) -> f64) -> f64 {
    let ratio = |s: &LinkSample| {
        let th = s.theta();
        if th > 0.0 {
            num(s) / th
        } else if num(s) == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let mut worst: f64 = 0.0;
    if samples.len() <= k {
        return f64::NAN;
    }
    for b in 0..samples.len() - k {
        let win = &samples[b..=b + k];
        let v = if e == 1.0 {
            win.iter().map(ratio).fold(0.0, f64::max)
        } else {
            let g: Vec<f64> = win.iter().map(|s| ratio(s).powf(1.0 / (e - 1.0))).collect();
            let integral: f64 = g.windows(2).map(|w| 0.5 * h_t * (w[0] + w[1])).sum();
            integral.powf((e - 1.0) / e)
        };
        worst = worst.max(v);
    }
    worst
}

/// Fits `rho` on the pairs with `|r|_X > eps_norm`, bounds the interpolation
/// ratio and evaluates the windowed link integrals for `(lambda, kappa)`.
pub fn estimate_link_constants(
    samples: &[LinkSample],
    h_t: f64,
    gamma0: f64,
    lambda: f64,
    kappa: f64,
    eps_norm: f64,
) -> LinkConstantsReport {
    let usable: Vec<&LinkSample> = samples.iter().filter(|s| s.r_x > eps_norm).collect();
    let pairs: Vec<(f64, f64)> = usable
        .iter()
        .filter(|s| s.p_vhat > 0.0)
        .map(|s| (s.r_x, s.p_vhat))
        .collect();
    let fit = power_law_fit(&pairs);
    let (mut c_int, mut big_c_int) = (f64::INFINITY, 0.0f64);
    for s in &usable {
        if s.r_vtil > 0.0 {
            let q = s.r_vxtil * s.r_vxtil / (s.r_vtil * s.r_x);
            c_int = c_int.min(q);
            big_c_int = big_c_int.max(q);
        }
    }
    if big_c_int == 0.0 {
        c_int = f64::NAN;
        big_c_int = f64::NAN;
    }
    let k = ((gamma0 / h_t).round() as usize).max(1);
    LinkConstantsReport {
        rho: fit.map(|f| f.0),
        c_rho: fit.map(|f| f.1),
        c_int,
        big_c_int,
        lambda,
        kappa,
        c_lambda: windowed(samples, h_t, k, lambda, |s| s.p_vhat.powf(lambda)),
        c_kappa: windowed(samples, h_t, k, kappa, |s| s.mu.powf(kappa)),
        n_pairs: pairs.len(),
    }
}
