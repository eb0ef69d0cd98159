use super::field::{BoundaryField, Field, QpField};
use super::grid::{Reference, SquareMesh, StructuredGrid};
use crate::scalar::Scalar;

/// Values of the bilinear interpolant at quadrature points.
pub fn interpolate_qp<T: Scalar>(grid: &dyn StructuredGrid, u: &Field<T>) -> QpField<T> {
    let n = grid.n();
    let m = u.components();
    let r = Reference::<T>::new();
    let mut q = QpField::zeros(m, n * n);
    let vals = q.values_mut();
    for ej in 0..n {
        for ei in 0..n {
            let e = ej * n + ei;
            let nodes = grid.element_nodes(ei, ej);
            for qp in 0..4 {
                for c in 0..m {
                    vals[(4 * e + qp) * m + c] = (0..4).map(|a| r.phi[qp][a] * u.at(nodes[a], c)).sum();
                }
            }
        }
    }
    q
}

/// Exact gradient of the bilinear interpolant at quadrature points;
/// component `α·2 + i` holds `∂_i u^α`.
pub fn gradient_qp<T: Scalar>(grid: &dyn StructuredGrid, u: &Field<T>) -> QpField<T> {
    let n = grid.n();
    let m = u.components();
    let r = Reference::<T>::new();
    let hinv = T::from_usize_lossy(n);
    let mut q = QpField::zeros(2 * m, n * n);
    let vals = q.values_mut();
    for ej in 0..n {
        for ei in 0..n {
            let e = ej * n + ei;
            let nodes = grid.element_nodes(ei, ej);
            for qp in 0..4 {
                for c in 0..m {
                    for i in 0..2 {
                        let g: T = (0..4).map(|a| r.dphi[qp][a][i] * u.at(nodes[a], c)).sum();
                        vals[(4 * e + qp) * 2 * m + 2 * c + i] = g * hinv;
                    }
                }
            }
        }
    }
    q
}

/// Gradient at element centers, `2m` values per element.
pub fn element_center_gradients<T: Scalar>(grid: &dyn StructuredGrid, u: &Field<T>) -> Vec<T> {
    let n = grid.n();
    let m = u.components();
    let r = Reference::<T>::new();
    let hinv = T::from_usize_lossy(n);
    let mut out = vec![T::zero(); n * n * 2 * m];
    for ej in 0..n {
        for ei in 0..n {
            let e = ej * n + ei;
            let nodes = grid.element_nodes(ei, ej);
            for c in 0..m {
                for i in 0..2 {
                    let g: T = (0..4).map(|a| r.dphi_center[a][i] * u.at(nodes[a], c)).sum();
                    out[e * 2 * m + 2 * c + i] = g * hinv;
                }
            }
        }
    }
    out
}

/// Nodal gradient by averaging the center gradients of the elements that
/// touch each node (equal volumes, so a plain average). On a bounded grid
/// the boundary layer, where that average is only first order, is replaced
/// by linear extrapolation from the two layers inward. Component layout
/// matches [`gradient_qp`].
pub fn recover_gradient<T: Scalar>(grid: &dyn StructuredGrid, u: &Field<T>) -> Field<T> {
    let n = grid.n();
    let k = 2 * u.components();
    let centers = element_center_gradients(grid, u);
    let mut sum = vec![T::zero(); grid.num_nodes() * k];
    let mut count = vec![0usize; grid.num_nodes()];
    for ej in 0..n {
        for ei in 0..n {
            let e = ej * n + ei;
            for node in grid.element_nodes(ei, ej) {
                count[node] += 1;
                for c in 0..k {
                    sum[node * k + c] += centers[e * k + c];
                }
            }
        }
    }
    for (node, &cnt) in count.iter().enumerate() {
        let inv = T::from_usize_lossy(cnt).recip();
        sum[node * k..(node + 1) * k].iter_mut().for_each(|v| *v *= inv);
    }
    let mut out = Field::new(k, sum).expect("consistent layout");
    if !grid.periodic() && n >= 4 {
        extrapolate_strip(grid, &mut out, 1);
    }
    out
}

/// Overwrites the `width` outermost node layers of a bounded grid by linear
/// extrapolation from layers `width` and `width + 1`, along `x` and then
/// along `y`, which also covers the corners.
fn extrapolate_strip<T: Scalar>(grid: &dyn StructuredGrid, f: &mut Field<T>, width: usize) {
    let k = f.components();
    let last = grid.nodes_per_axis() - 1;
    let vals = f.values_mut();
    for axis in 0..2 {
        let node = |along: usize, across: usize| if axis == 0 { grid.node(along, across) } else { grid.node(across, along) };
        for across in 0..=last {
            for (base, inner, outward) in [(width, width + 1, false), (last - width, last - width - 1, true)] {
                let a = node(base, across);
                let b = node(inner, across);
                for layer in 1..=width {
                    let target = node(if outward { base + layer } else { base - layer }, across);
                    let t = T::from_usize_lossy(layer);
                    for c in 0..k {
                        let (va, vb) = (vals[a * k + c], vals[b * k + c]);
                        vals[target * k + c] = va + t * (va - vb);
                    }
                }
            }
        }
    }
}

/// Second derivatives by recovering the recovered gradient again;
/// component `(α·2 + j)·2 + k` holds `∂_k ∂_j u^α`. On a bounded grid the
/// two outermost layers are extrapolated from the interior, where double
/// recovery is second order.
pub fn recover_hessian<T: Scalar>(grid: &dyn StructuredGrid, u: &Field<T>) -> Field<T> {
    let mut hess = recover_gradient(grid, &recover_gradient(grid, u));
    if !grid.periodic() && grid.n() >= 6 {
        extrapolate_strip(grid, &mut hess, 2);
    }
    hess
}

/// `∂f/∂t_ij = n_i ∂_j f − n_j ∂_i f` for a boundary field on the square.
///
/// Along an edge only the arc-length derivative `∂_s f` is available and
/// `∂f/∂t_ij = (n_i t_j − n_j t_i) ∂_s f` with `t` the counter-clockwise
/// tangent. `∂_s f` is a centered difference inside each edge. A corner
/// takes the average of the two one-sided values from its edges.
pub fn tangential_derivative<T: Scalar>(mesh: &SquareMesh, f: &BoundaryField<T>, i: usize, j: usize) -> BoundaryField<T> {
    let nb = mesh.num_boundary();
    let m = f.components();
    let h = mesh.h::<T>();
    let two_h = h + h;
    let factor = |e: usize| -> T {
        let nrm = SquareMesh::edge_normal::<T>(e);
        let t = SquareMesh::edge_tangent::<T>(e);
        nrm[i] * t[j] - nrm[j] * t[i]
    };
    let mut out = vec![T::zero(); nb * m];
    for pos in 0..nb {
        let prev = (pos + nb - 1) % nb;
        let next = (pos + 1) % nb;
        for c in 0..m {
            out[pos * m + c] = if mesh.is_corner(pos) {
                let [e_in, e_out] = mesh.adjacent_edges(pos);
                let d_in = (f.at(pos, c) - f.at(prev, c)) / h;
                let d_out = (f.at(next, c) - f.at(pos, c)) / h;
                (factor(e_in) * d_in + factor(e_out) * d_out) * T::lit(0.5)
            } else {
                factor(mesh.edge(pos)) * (f.at(next, c) - f.at(prev, c)) / two_h
            };
        }
    }
    BoundaryField::new(m, out).expect("consistent layout")
}

/// Arc-length derivative `∂_s f` (counter-clockwise), same stencils as
/// [`tangential_derivative`].
pub fn arc_derivative<T: Scalar>(mesh: &SquareMesh, f: &BoundaryField<T>) -> BoundaryField<T> {
    tangential_derivative(mesh, f, 0, 1)
}

/// Coefficient tensor sampled at the physical quadrature points of a grid.
pub fn tensor_qp<T: Scalar>(coeff: &dyn crate::coeff::TensorField<T>, grid: &dyn StructuredGrid) -> QpField<T> {
    QpField::from_fn(grid, coeff.tensor_len(), |x, out| coeff.eval(&x, out))
}

/// Discrete dual norm of a weak residual: `(Σ r_a²)^{1/2} / h` over the
/// listed dofs. For a residual `r_a = ∫ e φ_a` this approximates `‖e‖_{L²}`.
pub fn lumped_dual_norm<T: Scalar>(r: &[T], dofs: impl IntoIterator<Item = usize>, h: T) -> T {
    dofs.into_iter().map(|d| r[d] * r[d]).sum::<T>().sqrt() / h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_affine_is_exact() {
        let mesh = SquareMesh::new(6).unwrap();
        let u = Field::<f64>::scalar_from_fn(&mesh, |x| 3.0 * x[0] - 2.0 * x[1] + 1.0);
        let g = recover_gradient(&mesh, &u);
        for node in 0..g.num_nodes() {
            assert!((g.at(node, 0) - 3.0).abs() < 1e-12);
            assert!((g.at(node, 1) + 2.0).abs() < 1e-12);
        }
        let q = gradient_qp(&mesh, &u);
        assert!(q.values().chunks(2).all(|p| (p[0] - 3.0).abs() < 1e-12 && (p[1] + 2.0).abs() < 1e-12));
        let hess = recover_hessian(&mesh, &u);
        assert!(hess.max_abs() < 1e-10);
    }

    #[test]
    fn tangential_derivative_signs() {
        let mesh = SquareMesh::new(8).unwrap();
        let f = BoundaryField::<f64>::from_fn(&mesh, 1, |x, o| o[0] = x[1]);
        let t = tangential_derivative(&mesh, &f, 0, 1);
        for pos in 0..mesh.num_boundary() {
            if mesh.is_corner(pos) {
                continue;
            }
            let expected = match mesh.edge(pos) {
                1 => 1.0,
                3 => -1.0,
                _ => 0.0,
            };
            assert!((t.at(pos, 0) - expected).abs() < 1e-12, "pos {pos}");
        }
        let c = BoundaryField::<f64>::from_fn(&mesh, 1, |_, o| o[0] = 4.0);
        assert!(tangential_derivative(&mesh, &c, 0, 1).max_abs() < 1e-12);
        assert!(tangential_derivative(&mesh, &f, 1, 1).max_abs() == 0.0);
    }
}
