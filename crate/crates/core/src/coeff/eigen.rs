use crate::scalar::Scalar;

/// Eigenvalues of a small symmetric matrix (row-major `n × n`), ascending,
/// by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues<T: Scalar>(a: &[T], n: usize) -> Vec<T> {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let off = |m: &[T]| -> T {
        let mut s = T::zero();
        for r in 0..n {
            for c in 0..n {
                if r != c {
                    s += m[r * n + c] * m[r * n + c];
                }
            }
        }
        s
    };
    let scale: T = m.iter().map(|v| *v * *v).sum::<T>().max(T::min_positive_value());
    for _sweep in 0..64 {
        if off(&m) <= scale * T::epsilon() * T::epsilon() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = (t * t + T::one()).sqrt().recip();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k * n + p], m[k * n + q]);
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p * n + k], m[q * n + k]);
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| m[i * n + i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let ev = symmetric_eigenvalues(&[2.0f64, 1.0, 1.0, 2.0], 2);
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_passthrough() {
        assert_eq!(symmetric_eigenvalues(&[3.0f64, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0], 3), vec![1.0, 2.0, 3.0]);
    }
}
