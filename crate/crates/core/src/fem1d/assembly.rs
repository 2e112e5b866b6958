use std::sync::Arc;

use super::band::BandMatrix;
use super::basis::{local_shapes, LocalShapes};
use super::field::{BoundaryKind, HermiteField};
use super::mesh::Mesh1D;
use super::quadrature::QuadratureRule;
use crate::error::{Error, Result};
use crate::observation::ObservationWindow;

/// Half-bandwidth of a single-field Hermite matrix (one element couples four
/// consecutive dofs).
pub const FIELD_BANDWIDTH: usize = 3;

/// Part of the domain an integral runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    All,
    /// The observation window `omega`.
    Inside,
    /// Its complement.
    Outside,
}

impl Region {
    #[inline]
    pub fn contains(self, inside: bool) -> bool {
        match self {
            Region::All => true,
            Region::Inside => inside,
            Region::Outside => !inside,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    pub elem: usize,
    /// Local coordinate in `[0, 1]`.
    pub s: f64,
    pub x: f64,
    /// Physical weight (already multiplied by the piece length).
    pub weight: f64,
    pub inside: bool,
}

/// Quadrature points of the whole mesh, with elements cut at the window
/// endpoints so that integrals over `omega` and its complement are exact for
/// piecewise polynomials.
#[derive(Debug, Clone)]
pub struct QuadGrid {
    mesh: Arc<Mesh1D>,
    window: Option<ObservationWindow>,
    points: Vec<QuadPoint>,
    shapes: Vec<LocalShapes>,
}

/// Values and derivatives of a field at every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSamples {
    pub value: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl FieldSamples {
    pub fn zeros(n: usize) -> Self {
        Self {
            value: vec![0.0; n],
            d1: vec![0.0; n],
            d2: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    /// `self - other`, pointwise.
    pub fn minus(&self, other: &FieldSamples) -> FieldSamples {
        let sub = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        FieldSamples {
            value: sub(&self.value, &other.value),
            d1: sub(&self.d1, &other.d1),
            d2: sub(&self.d2, &other.d2),
        }
    }
}

impl QuadGrid {
    pub fn new(mesh: Arc<Mesh1D>, rule: &QuadratureRule, window: Option<ObservationWindow>) -> Self {
        let h = mesh.h();
        let mut points = Vec::new();
        let mut shapes = Vec::new();
        for e in 0..mesh.n_elements() {
            let x0 = mesh.node(e);
            let pieces = match &window {
                Some(w) => w.pieces(e),
                None => vec![(0.0, 1.0, true)],
            };
            for (s0, s1, inside) in pieces {
                let len = s1 - s0;
                for (t, w) in rule.iter() {
                    let s = s0 + t * len;
                    points.push(QuadPoint {
                        elem: e,
                        s,
                        x: x0 + s * h,
                        weight: w * len * h,
                        inside,
                    });
                    shapes.push(local_shapes(s, h));
                }
            }
        }
        Self {
            mesh,
            window,
            points,
            shapes,
        }
    }

    /// Grid with the default five-point rule.
    pub fn with_window(mesh: Arc<Mesh1D>, window: Option<ObservationWindow>) -> Self {
        Self::new(mesh, &QuadratureRule::default_rule(), window)
    }

    pub fn mesh(&self) -> &Arc<Mesh1D> {
        &self.mesh
    }

    pub fn window(&self) -> Option<&ObservationWindow> {
        self.window.as_ref()
    }

    pub fn points(&self) -> &[QuadPoint] {
        &self.points
    }

    pub fn shapes(&self) -> &[LocalShapes] {
        &self.shapes
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn sample(&self, field: &HermiteField) -> FieldSamples {
        let d = field.dofs();
        let mut out = FieldSamples::zeros(self.points.len());
        for (k, (p, sh)) in self.points.iter().zip(&self.shapes).enumerate() {
            let loc = &d[2 * p.elem..2 * p.elem + 4];
            for i in 0..4 {
                out.value[k] += loc[i] * sh.value[i];
                out.d1[k] += loc[i] * sh.d1[i];
                out.d2[k] += loc[i] * sh.d2[i];
            }
        }
        out
    }

    /// Sum of `weight * f(k)` over the points of `region`.
    pub fn integrate(&self, region: Region, f: impl Fn(usize) -> f64) -> f64 {
        self.points
            .iter()
            .enumerate()
            .filter(|(_, p)| region.contains(p.inside))
            .map(|(k, p)| p.weight * f(k))
            .sum()
    }

    /// Load vector `b_i = integral over region of g(x) phi_i(x)`.
    pub fn load_vector(&self, region: Region, g: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut b = vec![0.0; self.mesh.n_dofs()];
        for (p, sh) in self.points.iter().zip(&self.shapes) {
            if !region.contains(p.inside) {
                continue;
            }
            let gw = g(p.x) * p.weight;
            for i in 0..4 {
                b[2 * p.elem + i] += gw * sh.value[i];
            }
        }
        b
    }

    fn assemble(&self, region: Region, local: impl Fn(usize, usize, usize) -> f64) -> BandMatrix {
        let n = self.mesh.n_dofs();
        let mut m = BandMatrix::zeros(n, FIELD_BANDWIDTH, FIELD_BANDWIDTH);
        for (k, p) in self.points.iter().enumerate() {
            if !region.contains(p.inside) {
                continue;
            }
            let base = 2 * p.elem;
            for i in 0..4 {
                for j in 0..4 {
                    let v = local(k, i, j);
                    if v != 0.0 {
                        m.add(base + i, base + j, p.weight * v);
                    }
                }
            }
        }
        m
    }

    /// `integral over region of phi_i phi_j`.
    pub fn mass(&self, region: Region) -> BandMatrix {
        self.assemble(region, |k, i, j| {
            let s = &self.shapes[k];
            s.value[i] * s.value[j]
        })
    }

    /// `integral over region of D phi_i' phi_j'`, or with `|D|` when
    /// `absolute` is set.
    pub fn stiffness(&self, region: Region, diffusion: &Diffusion, absolute: bool) -> Result<BandMatrix> {
        let d = diffusion.sample(self)?;
        Ok(self.assemble(region, |k, i, j| {
            let s = &self.shapes[k];
            let dk = if absolute { d.value[k].abs() } else { d.value[k] };
            dk * s.d1[i] * s.d1[j]
        }))
    }

    /// `integral over region of w phi_i phi_j` for pointwise weights `w`.
    pub fn weighted_mass(&self, region: Region, weights: &[f64]) -> BandMatrix {
        assert_eq!(weights.len(), self.points.len());
        self.assemble(region, |k, i, j| {
            let s = &self.shapes[k];
            weights[k] * s.value[i] * s.value[j]
        })
    }
}

/// Diffusion coefficient: a constant or a Hermite field.
#[derive(Debug, Clone, PartialEq)]
pub enum Diffusion {
    Constant(f64),
    Field(HermiteField),
}

impl Default for Diffusion {
    fn default() -> Self {
        Diffusion::Constant(1.0)
    }
}

impl Diffusion {
    /// Values and first derivatives of `D` at the grid points.
    pub fn sample(&self, grid: &QuadGrid) -> Result<FieldSamples> {
        match self {
            Diffusion::Constant(c) => {
                if !c.is_finite() {
                    return Err(Error::NonFinite("diffusion coefficient".into()));
                }
                let mut s = FieldSamples::zeros(grid.len());
                s.value.iter_mut().for_each(|v| *v = *c);
                Ok(s)
            }
            Diffusion::Field(f) => {
                if f.dofs().iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("diffusion field".into()));
                }
                Ok(grid.sample(f))
            }
        }
    }
}

/// Mass matrix over the whole domain with the default rule.
pub fn assemble_mass(mesh: &Arc<Mesh1D>) -> BandMatrix {
    QuadGrid::with_window(mesh.clone(), None).mass(Region::All)
}

pub fn assemble_stiffness(mesh: &Arc<Mesh1D>, diffusion: &Diffusion) -> Result<BandMatrix> {
    QuadGrid::with_window(mesh.clone(), None).stiffness(Region::All, diffusion, false)
}

/// `integral of w phi_i phi_j` with `w` a Hermite field.
pub fn assemble_weighted_mass(mesh: &Arc<Mesh1D>, w: &HermiteField) -> Result<BandMatrix> {
    if w.dofs().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("weight field".into()));
    }
    let grid = QuadGrid::with_window(mesh.clone(), None);
    let samples = grid.sample(w);
    Ok(grid.weighted_mass(Region::All, &samples.value))
}

/// Constant-one field (value dofs 1, slopes 0).
pub fn constant_field(mesh: &Arc<Mesh1D>, c: f64) -> HermiteField {
    let dofs = (0..mesh.n_dofs())
        .map(|k| if k % 2 == 0 { c } else { 0.0 })
        .collect();
    HermiteField::from_dofs(mesh.clone(), dofs, BoundaryKind::Free).expect("dof count")
}
