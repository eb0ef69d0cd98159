use super::calculus::{gradient_qp, interpolate_qp};
use super::field::{BoundaryField, Field, QpField};
use super::grid::{Reference, SquareMesh, StructuredGrid};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Norms of nodal fields on the unit square. `p = ∞` is allowed wherever a
/// `p` appears.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormKind {
    /// `‖u‖_{L^p(Ω)}`; `p = ∞` is the nodal maximum.
    Lp(f64),
    /// `‖∇u‖_{L^p(Ω)}`.
    GradLp(f64),
    /// `(‖u‖_p^p + ‖∇u‖_p^p)^{1/p}`, or the larger of the two for `p = ∞`.
    W1p(f64),
    /// `‖u‖_{L^p(∂Ω)}` of the trace, dropping positions closer than
    /// `corner_margin` steps to a corner.
    BoundaryLp { p: f64, corner_margin: usize },
    /// `(‖u‖²_{L²(∂Ω)} + ‖∂_s u‖²_{L²(∂Ω)})^{1/2}` with arc-length differences.
    BoundaryH1,
    /// `(∫ |∇u|² dist(x, ∂Ω) dx)^{1/2}`.
    WeightedGrad,
    /// `‖u‖₂^{1/2} ‖u‖_{H¹}^{1/2}`, a stand-in for the `H^{1/2}(Ω)` norm.
    HalfProxy,
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("norm exponent must be >= 1, got {p}")))
    }
}

/// Euclidean magnitude of each quadrature point.
fn magnitude<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// `‖q‖_{L^p}` of quadrature-point data (pointwise Euclidean magnitude).
pub fn qp_norm<T: Scalar>(grid: &dyn StructuredGrid, q: &QpField<T>, p: f64) -> T {
    qp_norm_masked(grid, q, p, |_, _| true)
}

/// Like [`qp_norm`], restricted to quadrature points where `keep(e, q)`.
pub fn qp_norm_masked<T: Scalar>(
    grid: &dyn StructuredGrid,
    q: &QpField<T>,
    p: f64,
    keep: impl Fn(usize, usize) -> bool,
) -> T {
    let h = T::from_usize_lossy(grid.n()).recip();
    let w = h * h * T::lit(0.25);
    let ne = q.num_elements();
    if p.is_infinite() {
        let mut mx = T::zero();
        for e in 0..ne {
            for k in 0..4 {
                if keep(e, k) {
                    mx = mx.max(magnitude(q.point(e, k)));
                }
            }
        }
        return mx;
    }
    let pt = T::lit(p);
    let mut s = T::zero();
    for e in 0..ne {
        for k in 0..4 {
            if keep(e, k) {
                let v = magnitude(q.point(e, k));
                s += w * if p == 2.0 { v * v } else { v.powf(pt) };
            }
        }
    }
    s.powf(pt.recip())
}

/// `‖f‖_{L^p(∂Ω)}` with lumped arc-length weights.
pub fn boundary_lp<T: Scalar>(mesh: &SquareMesh, f: &BoundaryField<T>, p: f64, corner_margin: usize) -> Result<T> {
    check_p(p)?;
    if f.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { point: vec![] });
    }
    let m = f.components();
    let keep = |pos: usize| mesh.corner_distance_steps(pos) >= corner_margin;
    if p.is_infinite() {
        return Ok((0..f.len())
            .filter(|&pos| keep(pos))
            .map(|pos| magnitude(&f.values()[pos * m..(pos + 1) * m]))
            .fold(T::zero(), T::max));
    }
    let pt = T::lit(p);
    let s: T = (0..f.len())
        .filter(|&pos| keep(pos))
        .map(|pos| mesh.boundary_weight::<T>(pos) * magnitude(&f.values()[pos * m..(pos + 1) * m]).powf(pt))
        .sum();
    Ok(s.powf(pt.recip()))
}

/// Boundary `H¹` norm from the closed loop of boundary nodes.
pub fn boundary_h1<T: Scalar>(mesh: &SquareMesh, f: &BoundaryField<T>) -> Result<T> {
    let l2 = boundary_lp(mesh, f, 2.0, 0)?;
    let h = mesh.h::<T>();
    let nb = f.len();
    let m = f.components();
    let mut s = T::zero();
    for pos in 0..nb {
        let next = (pos + 1) % nb;
        for c in 0..m {
            let d = (f.at(next, c) - f.at(pos, c)) / h;
            s += h * d * d;
        }
    }
    Ok((l2 * l2 + s).sqrt())
}

pub fn norm<T: Scalar>(mesh: &SquareMesh, u: &Field<T>, kind: NormKind) -> Result<T> {
    u.check_finite()?;
    if u.num_nodes() != mesh.num_nodes() {
        return Err(Error::Shape("field does not live on this mesh".into()));
    }
    match kind {
        NormKind::Lp(p) => {
            check_p(p)?;
            if p.is_infinite() {
                let m = u.components();
                return Ok((0..u.num_nodes()).map(|k| magnitude(&u.values()[k * m..(k + 1) * m])).fold(T::zero(), T::max));
            }
            Ok(qp_norm(mesh, &interpolate_qp(mesh, u), p))
        }
        NormKind::GradLp(p) => {
            check_p(p)?;
            Ok(qp_norm(mesh, &gradient_qp(mesh, u), p))
        }
        NormKind::W1p(p) => {
            let a = norm(mesh, u, NormKind::Lp(p))?;
            let b = norm(mesh, u, NormKind::GradLp(p))?;
            if p.is_infinite() {
                return Ok(a.max(b));
            }
            let pt = T::lit(p);
            Ok((a.powf(pt) + b.powf(pt)).powf(pt.recip()))
        }
        NormKind::BoundaryLp { p, corner_margin } => boundary_lp(mesh, &u.trace(mesh), p, corner_margin),
        NormKind::BoundaryH1 => boundary_h1(mesh, &u.trace(mesh)),
        NormKind::WeightedGrad => {
            let g = gradient_qp(mesh, u);
            let n = mesh.n();
            let h = mesh.h::<T>();
            let w = h * h * T::lit(0.25);
            let mut s = T::zero();
            for ej in 0..n {
                for ei in 0..n {
                    let e = ej * n + ei;
                    for q in 0..4 {
                        let o = Reference::<T>::qp_offset(q);
                        let x = [(T::from_usize_lossy(ei) + o[0]) * h, (T::from_usize_lossy(ej) + o[1]) * h];
                        let v = magnitude(g.point(e, q));
                        s += w * v * v * SquareMesh::dist(x);
                    }
                }
            }
            Ok(s.sqrt())
        }
        NormKind::HalfProxy => {
            let l2 = norm(mesh, u, NormKind::Lp(2.0))?;
            let h1 = norm(mesh, u, NormKind::W1p(2.0))?;
            Ok((l2 * h1).sqrt())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_and_affine_norms() {
        let mesh = SquareMesh::new(16).unwrap();
        let one = Field::<f64>::scalar_from_fn(&mesh, |_| 1.0);
        assert!((norm(&mesh, &one, NormKind::Lp(2.0)).unwrap() - 1.0).abs() < 1e-13);
        assert!((norm(&mesh, &one, NormKind::BoundaryLp { p: 1.0, corner_margin: 0 }).unwrap() - 4.0).abs() < 1e-13);
        let x = Field::<f64>::scalar_from_fn(&mesh, |x| x[0]);
        assert!((norm(&mesh, &x, NormKind::GradLp(2.0)).unwrap() - 1.0).abs() < 1e-13);
        assert!((norm(&mesh, &x, NormKind::GradLp(f64::INFINITY)).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_input() {
        let mesh = SquareMesh::new(4).unwrap();
        let mut u = Field::<f64>::scalar_from_fn(&mesh, |_| 1.0);
        assert!(norm(&mesh, &u, NormKind::Lp(0.5)).is_err());
        u.values_mut()[3] = f64::NAN;
        assert!(matches!(norm(&mesh, &u, NormKind::Lp(2.0)), Err(Error::NonFinite { .. })));
    }
}
