//! Uniform 1D mesh, cubic Hermite elements, quadrature, assembly and norms.

pub mod assembly;
pub mod band;
pub mod basis;
pub mod field;
pub mod mesh;
pub mod norms;
pub mod quadrature;

pub use assembly::{
    assemble_mass, assemble_stiffness, assemble_weighted_mass, constant_field, Diffusion, FieldSamples, QuadGrid,
    QuadPoint, Region,
};
pub use band::{solve_linear, BandLu, BandMatrix};
pub use basis::{eval_basis, eval_basis_derivative, BasisKind};
pub use field::{BoundaryKind, HermiteField};
pub use mesh::Mesh1D;
pub use norms::{norm, norm_samples, NormKind};
pub use quadrature::QuadratureRule;
