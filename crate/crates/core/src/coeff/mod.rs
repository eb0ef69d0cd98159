//! Periodic coefficient tensors `A(y) = (a_ij^{αβ}(y))` and their rescalings.
//!
//! A tensor for dimension `d` and `m` components is stored as a dense
//! `(d·m) × (d·m)` row-major matrix with row `α·d + i` and column `β·d + j`,
//! so the bilinear form is `Σ a[(α,i),(β,j)] ∂_j u^β ∂_i v^α`. Symmetry
//! `a_ij^{αβ} = a_ji^{βα}` is plain matrix symmetry in this layout.

mod builtin;
mod eigen;
mod validate;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use builtin::{checkerboard, constant, layered, trigonometric, user_matrix, user_scalar};
pub use eigen::symmetric_eigenvalues;
pub use validate::{validate, ValidationReport};

pub type Evaluator<T> = Arc<dyn Fn(&[T], &mut [T]) + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Constant,
    Layered,
    Trigonometric,
    SmoothedCheckerboard,
    User,
}

/// Flat index of `a_ij^{αβ}`.
#[inline]
pub fn tensor_index(d: usize, m: usize, i: usize, alpha: usize, j: usize, beta: usize) -> usize {
    (alpha * d + i) * (d * m) + beta * d + j
}

/// Anything that can be sampled as a coefficient tensor at a physical point.
pub trait TensorField<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;
    fn components(&self) -> usize;
    fn eval(&self, x: &[T], out: &mut [T]);
    fn is_symmetric(&self) -> bool;
    /// True when the tensor does not depend on `x`.
    fn is_constant(&self) -> bool;
    /// Length of the oscillation period in physical units, if any.
    fn period(&self) -> Option<T>;

    fn tensor_len(&self) -> usize {
        let n = self.dim() * self.components();
        n * n
    }
}

#[derive(Clone)]
pub struct CoefficientField<T> {
    dim: usize,
    m: usize,
    eval: Evaluator<T>,
    family: Family,
    mu: T,
    holder: (T, T),
    symmetric: bool,
}

impl<T: Scalar> fmt::Debug for CoefficientField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("dim", &self.dim)
            .field("m", &self.m)
            .field("family", &self.family)
            .field("mu", &self.mu)
            .field("holder", &self.holder)
            .field("symmetric", &self.symmetric)
            .finish()
    }
}

impl<T: Scalar> CoefficientField<T> {
    /// Wraps a 1-periodic evaluator. `mu` is the declared ellipticity
    /// constant in `(0, 1]` and `holder` the declared `(λ, τ)` pair.
    pub fn new(
        dim: usize,
        m: usize,
        family: Family,
        mu: T,
        holder: (T, T),
        symmetric: bool,
        eval: Evaluator<T>,
    ) -> Result<Self> {
        if dim == 0 || m == 0 {
            return Err(Error::InvalidParameter(format!("dimension {dim} and components {m} must be positive")));
        }
        if !(mu > T::zero() && mu <= T::one()) {
            return Err(Error::InvalidParameter(format!("ellipticity constant {mu} outside (0, 1]")));
        }
        let (lambda, tau) = holder;
        if !(lambda > T::zero() && lambda <= T::one() && tau >= T::zero()) {
            return Err(Error::InvalidParameter(format!("Hölder pair ({lambda}, {tau}) out of range")));
        }
        Ok(Self { dim, m, eval, family, mu, holder, symmetric })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn holder(&self) -> (T, T) {
        self.holder
    }

    pub fn evaluator(&self) -> &Evaluator<T> {
        &self.eval
    }

    pub fn at(&self, y: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.tensor_len()];
        self.eval(y, &mut out);
        out
    }

    /// The coefficient of the adjoint operator, `a*_ij^{αβ} = a_ji^{βα}`.
    pub fn adjoint(&self) -> Self {
        if self.symmetric {
            return self.clone();
        }
        let inner = self.eval.clone();
        let n = self.dim * self.m;
        let eval: Evaluator<T> = Arc::new(move |y: &[T], out: &mut [T]| {
            inner(y, out);
            for r in 0..n {
                for c in r + 1..n {
                    out.swap(r * n + c, c * n + r);
                }
            }
        });
        Self { eval, ..self.clone() }
    }

    pub fn require_symmetric(&self, what: &str) -> Result<()> {
        if self.symmetric {
            Ok(())
        } else {
            Err(Error::Precondition(format!("{what} requires a symmetric coefficient")))
        }
    }
}

impl<T: Scalar> TensorField<T> for CoefficientField<T> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn components(&self) -> usize {
        self.m
    }
    fn eval(&self, y: &[T], out: &mut [T]) {
        (self.eval)(y, out)
    }
    fn is_symmetric(&self) -> bool {
        self.symmetric
    }
    fn is_constant(&self) -> bool {
        self.family == Family::Constant
    }
    fn period(&self) -> Option<T> {
        (!self.is_constant()).then(T::one)
    }
}

/// `A(x/ε)`.
#[derive(Clone, Debug)]
pub struct ScaledCoefficient<T: Scalar> {
    base: CoefficientField<T>,
    epsilon: T,
}

pub fn rescale<T: Scalar>(field: &CoefficientField<T>, epsilon: T) -> Result<ScaledCoefficient<T>> {
    if !(epsilon > T::zero()) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(ScaledCoefficient { base: field.clone(), epsilon })
}

impl<T: Scalar> ScaledCoefficient<T> {
    pub fn base(&self) -> &CoefficientField<T> {
        &self.base
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn adjoint(&self) -> Self {
        Self { base: self.base.adjoint(), epsilon: self.epsilon }
    }
}

impl<T: Scalar> TensorField<T> for ScaledCoefficient<T> {
    fn dim(&self) -> usize {
        self.base.dim
    }
    fn components(&self) -> usize {
        self.base.m
    }
    fn eval(&self, x: &[T], out: &mut [T]) {
        let mut y = [T::zero(); 8];
        let d = x.len();
        if d <= y.len() {
            for (yi, &xi) in y.iter_mut().zip(x) {
                *yi = xi / self.epsilon;
            }
            self.base.eval(&y[..d], out);
        } else {
            let y: Vec<T> = x.iter().map(|&xi| xi / self.epsilon).collect();
            self.base.eval(&y, out);
        }
    }
    fn is_symmetric(&self) -> bool {
        self.base.symmetric
    }
    fn is_constant(&self) -> bool {
        self.base.is_constant()
    }
    fn period(&self) -> Option<T> {
        self.base.period().map(|p| p * self.epsilon)
    }
}

/// A spatially constant tensor, e.g. the homogenized `Â`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantTensor<T> {
    dim: usize,
    m: usize,
    values: Vec<T>,
}

impl<T: Scalar> ConstantTensor<T> {
    pub fn new(dim: usize, m: usize, values: Vec<T>) -> Result<Self> {
        let n = dim * m;
        if values.len() != n * n {
            return Err(Error::Shape(format!("expected {} tensor entries, got {}", n * n, values.len())));
        }
        Ok(Self { dim, m, values })
    }

    pub fn identity(dim: usize, m: usize) -> Self {
        let n = dim * m;
        let mut values = vec![T::zero(); n * n];
        for r in 0..n {
            values[r * n + r] = T::one();
        }
        Self { dim, m, values }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, i: usize, alpha: usize, j: usize, beta: usize) -> T {
        self.values[tensor_index(self.dim, self.m, i, alpha, j, beta)]
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim * self.m;
        let mut values = self.values.clone();
        for r in 0..n {
            for c in 0..n {
                values[r * n + c] = self.values[c * n + r];
            }
        }
        Self { values, ..self.clone() }
    }

    /// Largest `|a_ij^{αβ} − a_ji^{βα}|`.
    pub fn asymmetry(&self) -> T {
        let n = self.dim * self.m;
        let mut w = T::zero();
        for r in 0..n {
            for c in 0..n {
                w = w.max((self.values[r * n + c] - self.values[c * n + r]).abs());
            }
        }
        w
    }

    /// The tensor as a coefficient field, so it can be fed to `validate`.
    pub fn to_field(&self) -> Result<CoefficientField<T>> {
        constant(self.dim, self.m, self.values.clone())
    }
}

impl<T: Scalar> TensorField<T> for ConstantTensor<T> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn components(&self) -> usize {
        self.m
    }
    fn eval(&self, _x: &[T], out: &mut [T]) {
        out.copy_from_slice(&self.values);
    }
    fn is_symmetric(&self) -> bool {
        self.asymmetry() == T::zero()
    }
    fn is_constant(&self) -> bool {
        true
    }
    fn period(&self) -> Option<T> {
        None
    }
}

/// Reduces each coordinate into `[0, 1)`, so that `y + z` and `y` evaluate
/// identically whenever `y + z` is representable.
#[inline]
pub(crate) fn wrap<T: Scalar>(y: T) -> T {
    y - y.floor()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rescale_rejects_nonpositive_epsilon() {
        let a = constant::<f64>(2, 1, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(rescale(&a, 0.0).is_err());
        assert!(rescale(&a, -0.5).is_err());
    }

    #[test]
    fn rescale_is_substitution() {
        let a = layered::<f64>(2.0, 1.0).unwrap();
        let s = rescale(&a, 0.25).unwrap();
        let mut out = [0.0; 4];
        s.eval(&[0.125, 0.0], &mut out);
        assert!((out[0] - 2.0).abs() < 1e-14);
        assert_eq!(out[1], 0.0);
        let id = rescale(&constant::<f64>(2, 1, vec![1.0, 0.0, 0.0, 1.0]).unwrap(), 0.125).unwrap();
        id.eval(&[0.3, 0.7], &mut out);
        assert_eq!(out, [1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn adjoint_transposes() {
        let a = constant::<f64>(2, 1, vec![2.0, 0.5, -0.5, 1.0]).unwrap();
        let b = a.adjoint();
        assert_eq!(b.at(&[0.1, 0.2]), vec![2.0, -0.5, 0.5, 1.0]);
    }

    #[test]
    fn tensor_index_layout() {
        // d = 2, m = 2: a_{12}^{21} lives at row α·d+i = 2+0, col β·d+j = 0+1.
        assert_eq!(tensor_index(2, 2, 0, 1, 1, 0), 2 * 4 + 1);
    }
}
