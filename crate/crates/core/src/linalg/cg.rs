use super::csr::CsrMatrix;
use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};

/// Jacobi-preconditioned conjugate gradients for symmetric positive definite
/// systems. Starts from zero; stops when `‖r‖ ≤ tol ‖b‖`.
pub fn conjugate_gradient<T: Scalar>(a: &CsrMatrix<T>, b: &[T], tol: T, max_iter: usize) -> Result<Vec<T>> {
    let n = b.len();
    let inv_diag: Vec<T> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > T::zero() { d.recip() } else { T::one() })
        .collect();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![T::zero(); n];
    if bnorm == T::zero() {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<T> = r.iter().zip(&inv_diag).map(|(&r, &d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![T::zero(); n];
    let mut rz = dot(&r, &z);
    let mut rnorm = bnorm;
    for _ in 0..max_iter {
        a.mul_vec(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rnorm = dot(&r, &r).sqrt();
        if rnorm <= tol * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged { residual: (rnorm / bnorm).to_f64_lossy(), iterations: max_iter })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_solve() {
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
        let b = vec![1.0; n];
        let x = conjugate_gradient(&a, &b, 1e-12, 500).unwrap();
        // Exact solution of the discrete -u'' = 1 with zero ends.
        for (i, xi) in x.iter().enumerate() {
            let k = (i + 1) as f64;
            assert!((xi - k * (n as f64 + 1.0 - k) / 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0), (0, 1, 0.5), (1, 0, 0.5)]).unwrap();
        let err = conjugate_gradient(&a, &[1.0, 1.0, 1.0], 1e-14, 0).unwrap_err();
        assert!(matches!(err, Error::NotConverged { iterations: 0, .. }));
    }
}
