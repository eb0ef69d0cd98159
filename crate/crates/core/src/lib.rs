// `!(x > 0.0)` rejects NaN along with the out-of-range values, and the
// index loops walk several arrays in step.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cell;
pub mod coeff;
pub mod correctors;
pub mod error;
pub mod expand;
pub mod kernels;
pub mod linalg;
pub mod mesh;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision aliases for the generic types.
pub type CoefficientField = coeff::CoefficientField<f64>;
pub type ScaledCoefficient = coeff::ScaledCoefficient<f64>;
pub type ConstantTensor = coeff::ConstantTensor<f64>;
pub type Field = mesh::Field<f64>;
pub type BoundaryField = mesh::BoundaryField<f64>;
pub type QpField = mesh::QpField<f64>;
pub type Source = mesh::Source<f64>;
pub type AssembledOperator = mesh::AssembledOperator<f64>;
pub type CellSolution = cell::CellSolution<f64>;
pub type CorrectorSet = correctors::CorrectorSet<f64>;
pub type Expansion = expand::Expansion<f64>;
pub type KernelTable = kernels::KernelTable<f64>;
pub type OmegaTable = kernels::OmegaTable<f64>;
