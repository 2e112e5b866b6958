use super::assembly::{Diffusion, FieldSamples, QuadGrid, Region};
use super::field::HermiteField;
use crate::error::{Error, Result};

/// The norms used by the estimator and its diagnostics.
///
/// Windowed kinds look only at one side of the observation window; apply
/// them to `R v` or `P v` by passing `v` itself, the restriction is implied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormKind {
    /// `L2(Omega)`.
    X,
    /// `H1(Omega)`, standing in for the parameter space.
    Q,
    /// `|(D v')'|_{L2(omega)} + |v|_{L2(omega)}`.
    Vtil,
    /// Same on the complement of the window.
    Vhat,
    /// `sqrt(int_omega |D| v'^2 + int_omega v^2)`.
    VXtil,
    VXhat,
    /// `L2(omega)`.
    Z,
}

impl NormKind {
    pub fn needs_window(self) -> bool {
        !matches!(self, NormKind::X | NormKind::Q)
    }

    pub const ALL: [NormKind; 7] = [
        NormKind::X,
        NormKind::Q,
        NormKind::Vtil,
        NormKind::Vhat,
        NormKind::VXtil,
        NormKind::VXhat,
        NormKind::Z,
    ];
}

/// Norm of a field. `grid` must carry the window for the windowed kinds.
pub fn norm(grid: &QuadGrid, field: &HermiteField, kind: NormKind, diffusion: &Diffusion) -> Result<f64> {
    norm_samples(grid, &grid.sample(field), kind, diffusion)
}

/// Norm of a function given by its samples at the grid points. Useful for
/// piecewise objects such as `R u + P w` that are not a single Hermite field.
pub fn norm_samples(grid: &QuadGrid, v: &FieldSamples, kind: NormKind, diffusion: &Diffusion) -> Result<f64> {
    if kind.needs_window() && grid.window().is_none() {
        return Err(Error::Contract(format!("{kind:?} norm requested without an observation window")));
    }
    let l2 = |region: Region| grid.integrate(region, |k| v.value[k] * v.value[k]);
    let out = match kind {
        NormKind::X => l2(Region::All).sqrt(),
        NormKind::Z => l2(Region::Inside).sqrt(),
        NormKind::Q => (l2(Region::All) + grid.integrate(Region::All, |k| v.d1[k] * v.d1[k])).sqrt(),
        NormKind::Vtil | NormKind::Vhat => {
            let region = if kind == NormKind::Vtil { Region::Inside } else { Region::Outside };
            let d = diffusion.sample(grid)?;
            let flux = grid.integrate(region, |k| {
                let g = d.d1[k] * v.d1[k] + d.value[k] * v.d2[k];
                g * g
            });
            flux.sqrt() + l2(region).sqrt()
        }
        NormKind::VXtil | NormKind::VXhat => {
            let region = if kind == NormKind::VXtil { Region::Inside } else { Region::Outside };
            let d = diffusion.sample(grid)?;
            let grad = grid.integrate(region, |k| d.value[k].abs() * v.d1[k] * v.d1[k]);
            (grad + l2(region)).sqrt()
        }
    };
    Ok(out)
}
