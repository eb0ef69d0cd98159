//! Sparse linear algebra: storage, assembly trees, a multifrontal direct
//! solver and a conjugate-gradient fallback.

mod cg;
mod csr;
mod multifrontal;
mod ordering;

pub use cg::conjugate_gradient;
pub use csr::CsrMatrix;
pub use multifrontal::{Factorization, Structure};
pub use ordering::{grid_nested_dissection, EliminationTree, TreeNode};
