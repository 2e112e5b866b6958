//! Cubic Hermite shape functions.
//!
//! On an element of width `h` with local coordinate `s in [0, 1]` the four
//! shape functions are, in dof order (value left, slope left, value right,
//! slope right):
//!
//! ```text
//! N0 = 1 - 3s^2 + 2s^3        N1 = h (s - 2s^2 + s^3)
//! N2 = 3s^2 - 2s^3            N3 = h (s^3 - s^2)
//! ```
//!
//! The global value function `phi_j` is `N2` on the element left of node `j`
//! and `N0` on the element right of it; the slope function `psi_j` is `N3`
//! then `N1`.

use super::mesh::Mesh1D;
use crate::error::{Error, Result};

/// Which of the two Hermite functions attached to a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// Value function, `phi_j(x_j) = 1`.
    Phi,
    /// Slope function, `psi_j'(x_j) = 1`.
    Psi,
}

/// Local shape values, first and second derivatives (w.r.t. `x`) at local
/// coordinate `s`.
#[derive(Debug, Clone, Copy)]
pub struct LocalShapes {
    pub value: [f64; 4],
    pub d1: [f64; 4],
    pub d2: [f64; 4],
}

pub fn local_shapes(s: f64, h: f64) -> LocalShapes {
    let s2 = s * s;
    let s3 = s2 * s;
    LocalShapes {
        value: [
            1.0 - 3.0 * s2 + 2.0 * s3,
            h * (s - 2.0 * s2 + s3),
            3.0 * s2 - 2.0 * s3,
            h * (s3 - s2),
        ],
        d1: [
            (-6.0 * s + 6.0 * s2) / h,
            1.0 - 4.0 * s + 3.0 * s2,
            (6.0 * s - 6.0 * s2) / h,
            3.0 * s2 - 2.0 * s,
        ],
        d2: [
            (-6.0 + 12.0 * s) / (h * h),
            (-4.0 + 6.0 * s) / h,
            (6.0 - 12.0 * s) / (h * h),
            (6.0 * s - 2.0) / h,
        ],
    }
}

/// Evaluates the global basis function of `kind` attached to node `j`
/// (zero-based) at `x`. Boundary nodes carry the one-sided half of the
/// function.
pub fn eval_basis(mesh: &Mesh1D, j: usize, kind: BasisKind, x: f64) -> Result<f64> {
    eval_basis_derivative(mesh, j, kind, x, 0)
}

/// `order`-th derivative (0, 1 or 2) of a global basis function.
pub fn eval_basis_derivative(
    mesh: &Mesh1D,
    j: usize,
    kind: BasisKind,
    x: f64,
    order: usize,
) -> Result<f64> {
    if j >= mesh.n_nodes() {
        return Err(Error::IndexOutOfRange {
            index: j,
            n_nodes: mesh.n_nodes(),
        });
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::CoordinateOutOfRange(x));
    }
    let h = mesh.h();
    let xj = mesh.node(j);
    let pick = |shapes: &LocalShapes, idx: usize| match order {
        0 => shapes.value[idx],
        1 => shapes.d1[idx],
        _ => shapes.d2[idx],
    };
    // Left piece (x_{j-1}, x_j]: node j is the right node of element j-1.
    if j > 0 && x <= xj && x >= xj - h {
        let s = (x - mesh.node(j - 1)) / h;
        let shapes = local_shapes(s, h);
        let idx = match kind {
            BasisKind::Phi => 2,
            BasisKind::Psi => 3,
        };
        return Ok(pick(&shapes, idx));
    }
    if j + 1 < mesh.n_nodes() && x >= xj && x <= xj + h {
        let s = (x - xj) / h;
        let shapes = local_shapes(s, h);
        let idx = match kind {
            BasisKind::Phi => 0,
            BasisKind::Psi => 1,
        };
        return Ok(pick(&shapes, idx));
    }
    Ok(0.0)
}
