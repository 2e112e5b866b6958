use std::sync::Arc;

use super::basis::local_shapes;
use super::mesh::Mesh1D;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// Value dofs at `x = 0` and `x = 1` are pinned to zero; slopes stay free.
    DirichletZero,
    Free,
}

/// Scalar field in the cubic Hermite space: dof `2j` is the value at node
/// `j`, dof `2j + 1` the slope there.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteField {
    mesh: Arc<Mesh1D>,
    dofs: Vec<f64>,
    boundary: BoundaryKind,
}

impl HermiteField {
    pub fn zeros(mesh: Arc<Mesh1D>, boundary: BoundaryKind) -> Self {
        let n = mesh.n_dofs();
        Self {
            mesh,
            dofs: vec![0.0; n],
            boundary,
        }
    }

    pub fn from_dofs(mesh: Arc<Mesh1D>, dofs: Vec<f64>, boundary: BoundaryKind) -> Result<Self> {
        if dofs.len() != mesh.n_dofs() {
            return Err(Error::Contract(format!(
                "expected {} dofs, got {}",
                mesh.n_dofs(),
                dofs.len()
            )));
        }
        let mut field = Self {
            mesh,
            dofs,
            boundary,
        };
        field.apply_boundary();
        Ok(field)
    }

    /// Hermite interpolant of `f` using nodal values and slopes `df`.
    /// Reproduces every cubic exactly.
    pub fn interpolate(
        mesh: Arc<Mesh1D>,
        f: impl Fn(f64) -> f64,
        df: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let mut dofs = Vec::with_capacity(mesh.n_dofs());
        for &x in mesh.nodes() {
            let v = f(x);
            let d = df(x);
            if !v.is_finite() || !d.is_finite() {
                return Err(Error::NonFinite(format!("interpolation sample at x = {x}")));
            }
            dofs.push(v);
            dofs.push(d);
        }
        Ok(Self {
            mesh,
            dofs,
            boundary: BoundaryKind::Free,
        })
    }

    /// Same field with the boundary values forced to zero.
    pub fn with_dirichlet_zero(mut self) -> Self {
        self.boundary = BoundaryKind::DirichletZero;
        self.apply_boundary();
        self
    }

    fn apply_boundary(&mut self) {
        if self.boundary == BoundaryKind::DirichletZero {
            let last = self.dofs.len() - 2;
            self.dofs[0] = 0.0;
            self.dofs[last] = 0.0;
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh1D> {
        &self.mesh
    }

    pub fn dofs(&self) -> &[f64] {
        &self.dofs
    }

    pub fn boundary(&self) -> BoundaryKind {
        self.boundary
    }

    pub fn into_dofs(self) -> Vec<f64> {
        self.dofs
    }

    pub fn node_value(&self, j: usize) -> f64 {
        self.dofs[2 * j]
    }

    pub fn node_slope(&self, j: usize) -> f64 {
        self.dofs[2 * j + 1]
    }

    /// Value, first and second derivative on element `e` at local coordinate `s`.
    pub fn eval_local(&self, e: usize, s: f64) -> (f64, f64, f64) {
        let shapes = local_shapes(s, self.mesh.h());
        let d = &self.dofs[2 * e..2 * e + 4];
        let mut out = (0.0, 0.0, 0.0);
        for i in 0..4 {
            out.0 += d[i] * shapes.value[i];
            out.1 += d[i] * shapes.d1[i];
            out.2 += d[i] * shapes.d2[i];
        }
        out
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let (e, s) = self.mesh.locate(x)?;
        Ok(self.eval_local(e, s).0)
    }

    pub fn eval_derivative(&self, x: f64) -> Result<f64> {
        let (e, s) = self.mesh.locate(x)?;
        Ok(self.eval_local(e, s).1)
    }

    fn check_same_mesh(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh {
            Ok(())
        } else {
            Err(Error::MeshMismatch)
        }
    }

    /// `self + alpha * other`, keeping the boundary kind of `self`.
    pub fn axpy(&self, alpha: f64, other: &Self) -> Result<Self> {
        self.check_same_mesh(other)?;
        let dofs = self
            .dofs
            .iter()
            .zip(&other.dofs)
            .map(|(a, b)| a + alpha * b)
            .collect();
        Ok(Self {
            mesh: self.mesh.clone(),
            dofs,
            boundary: self.boundary,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            mesh: self.mesh.clone(),
            dofs: self.dofs.iter().map(|v| v * factor).collect(),
            boundary: self.boundary,
        }
    }

    /// Samples on a uniform grid of `n` points including both ends.
    pub fn sample_uniform(&self, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let x = i as f64 / (n - 1) as f64;
                (x, self.eval(x).expect("x in [0, 1]"))
            })
            .collect()
    }
}
