//! Structured bilinear finite elements on the unit square and the unit torus.

mod assembly;
mod calculus;
mod field;
mod grid;
mod norms;

pub use assembly::{assemble, assemble_with, AssembledOperator, Mode, SolverKind, Source};
pub use calculus::{
    arc_derivative, element_center_gradients, gradient_qp, interpolate_qp, lumped_dual_norm, recover_gradient,
    recover_hessian, tangential_derivative, tensor_qp,
};
pub use field::{BoundaryField, Field, QpField};
pub use grid::{qp_offset, Geometry, SquareMesh, StructuredGrid, TorusGrid};
pub use norms::{boundary_h1, boundary_lp, norm, qp_norm, qp_norm_masked, NormKind};
