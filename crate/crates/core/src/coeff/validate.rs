use super::eigen::symmetric_eigenvalues;
use super::{CoefficientField, TensorField};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sampled diagnostics of a coefficient field.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport<T> {
    /// Smallest Rayleigh quotient `ξ·A(y)ξ / |ξ|²` over the samples.
    pub lower: T,
    /// Largest Rayleigh quotient.
    pub upper: T,
    /// `max |A(y + e_k) − A(y)|` (entrywise).
    pub periodicity_residual: T,
    /// `max |A(x) − A(y)| / |x − y|^λ` over neighboring sample pairs.
    pub holder_quotient: T,
    pub points: usize,
}

impl<T: Scalar> ValidationReport<T> {
    /// Largest `μ` with `μ ≤ lower` and `upper ≤ 1/μ`.
    pub fn measured_mu(&self) -> T {
        self.lower.min(self.upper.recip())
    }
}

fn max_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()))
}

/// Samples the field on the lattice `{k/s}^d` with `s = samples`.
pub fn validate<T: Scalar>(field: &CoefficientField<T>, samples: usize) -> Result<ValidationReport<T>> {
    if samples < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 samples per axis, got {samples}")));
    }
    let d = field.dim();
    let n = d * field.components();
    let total = samples.checked_pow(d as u32).ok_or_else(|| Error::InvalidParameter("sample lattice too large".into()))?;
    let s = T::from_usize_lossy(samples);
    let (lambda, _) = field.holder();
    let step = (T::lit(2.0) * s).recip();

    let mut lower = T::infinity();
    let mut upper = T::neg_infinity();
    let mut periodicity = T::zero();
    let mut holder = T::zero();
    let mut a = vec![T::zero(); n * n];
    let mut b = vec![T::zero(); n * n];
    let mut sym = vec![T::zero(); n * n];
    let mut y = vec![T::zero(); d];
    let mut z = vec![T::zero(); d];
    for flat in 0..total {
        let mut rest = flat;
        for yi in y.iter_mut() {
            *yi = T::from_usize_lossy(rest % samples) / s;
            rest /= samples;
        }
        field.eval(&y, &mut a);
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { point: y.iter().map(|v| v.to_f64_lossy()).collect() });
        }
        for r in 0..n {
            for c in 0..n {
                sym[r * n + c] = (a[r * n + c] + a[c * n + r]) * T::lit(0.5);
            }
        }
        let ev = symmetric_eigenvalues(&sym, n);
        lower = lower.min(ev[0]);
        upper = upper.max(ev[n - 1]);
        for k in 0..d {
            z.copy_from_slice(&y);
            z[k] += T::one();
            field.eval(&z, &mut b);
            periodicity = periodicity.max(max_diff(&a, &b));
            z[k] = y[k] + step;
            field.eval(&z, &mut b);
            holder = holder.max(max_diff(&a, &b) / step.powf(lambda));
        }
    }
    if !(lower > T::zero()) {
        return Err(Error::NotElliptic { lower: lower.to_f64_lossy() });
    }
    Ok(ValidationReport { lower, upper, periodicity_residual: periodicity, holder_quotient: holder, points: total })
}
