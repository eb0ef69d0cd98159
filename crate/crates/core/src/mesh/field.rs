use std::io::Write;

use super::grid::{Reference, SquareMesh, StructuredGrid, TorusGrid};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Nodal values with `m` components per node, node-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    m: usize,
    values: Vec<T>,
}

impl<T: Scalar> Field<T> {
    pub fn new(m: usize, values: Vec<T>) -> Result<Self> {
        if m == 0 || !values.len().is_multiple_of(m) {
            return Err(Error::Shape(format!("{} values do not split into {m} components", values.len())));
        }
        Ok(Self { m, values })
    }

    pub fn zeros(m: usize, nodes: usize) -> Self {
        Self { m, values: vec![T::zero(); m * nodes] }
    }

    /// Samples `f(x)` (which writes `m` values) at every node of the square.
    pub fn from_fn(mesh: &SquareMesh, m: usize, f: impl Fn([T; 2], &mut [T])) -> Self {
        let mut values = vec![T::zero(); m * mesh.num_nodes()];
        for (node, chunk) in values.chunks_mut(m).enumerate() {
            f(mesh.coords(node), chunk);
        }
        Self { m, values }
    }

    pub fn scalar_from_fn(mesh: &SquareMesh, f: impl Fn([T; 2]) -> T) -> Self {
        Self::from_fn(mesh, 1, |x, out| out[0] = f(x))
    }

    pub fn components(&self) -> usize {
        self.m
    }

    pub fn num_nodes(&self) -> usize {
        self.values.len() / self.m
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn at(&self, node: usize, c: usize) -> T {
        self.values[node * self.m + c]
    }

    pub fn node_values(&self, node: usize) -> &[T] {
        &self.values[node * self.m..(node + 1) * self.m]
    }

    /// Single component as a scalar field.
    pub fn component(&self, c: usize) -> Field<T> {
        Field { m: 1, values: self.values.iter().skip(c).step_by(self.m).copied().collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite { point: vec![] })
        }
    }

    pub fn axpy(&mut self, alpha: T, other: &Field<T>) {
        assert_eq!(self.values.len(), other.values.len());
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn sub(&self, other: &Field<T>) -> Field<T> {
        let mut out = self.clone();
        out.axpy(-T::one(), other);
        out
    }

    pub fn scale(&mut self, alpha: T) {
        self.values.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Field<T>) -> T {
        self.values.iter().zip(&other.values).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }

    /// Boundary restriction in counter-clockwise order.
    pub fn trace(&self, mesh: &SquareMesh) -> BoundaryField<T> {
        let mut values = Vec::with_capacity(self.m * mesh.num_boundary());
        for &node in mesh.boundary_nodes() {
            values.extend_from_slice(self.node_values(node));
        }
        BoundaryField { m: self.m, values }
    }

    /// Writes `node_x,node_y,component,value` rows.
    pub fn write_csv<W: Write>(&self, mesh: &SquareMesh, mut w: W) -> std::io::Result<()> {
        writeln!(w, "node_x,node_y,component,value")?;
        for node in 0..self.num_nodes() {
            let x: [T; 2] = mesh.coords(node);
            for c in 0..self.m {
                writeln!(w, "{},{},{},{}", x[0], x[1], c, self.at(node, c))?;
            }
        }
        Ok(())
    }
}

impl<T: Scalar> Field<T> {
    /// Bilinear interpolation of a torus field at `y`, reduced into the cell.
    pub fn interpolate_periodic(&self, grid: &TorusGrid, y: [T; 2], out: &mut [T]) {
        let nf = T::from_usize_lossy(grid.n());
        let mut idx = [0usize; 2];
        let mut frac = [T::zero(); 2];
        for a in 0..2 {
            let t = (y[a] - y[a].floor()) * nf;
            let f = t.floor();
            idx[a] = f.to_usize().unwrap_or(0) % grid.n();
            frac[a] = t - f;
        }
        let nodes = grid.element_nodes(idx[0], idx[1]);
        let one = T::one();
        let w = [
            (one - frac[0]) * (one - frac[1]),
            frac[0] * (one - frac[1]),
            (one - frac[0]) * frac[1],
            frac[0] * frac[1],
        ];
        for (c, o) in out.iter_mut().enumerate().take(self.m) {
            *o = (0..4).map(|a| w[a] * self.at(nodes[a], c)).sum();
        }
    }

    /// Mean of each component over the torus, by exact quadrature of the
    /// bilinear interpolant (which reduces to the nodal average).
    pub fn torus_mean(&self, grid: &TorusGrid) -> Vec<T> {
        let nn = T::from_usize_lossy(grid.num_nodes());
        (0..self.m)
            .map(|c| self.values.iter().skip(c).step_by(self.m).copied().sum::<T>() / nn)
            .collect()
    }
}

/// Values at the boundary positions of a [`SquareMesh`], `m` per position.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryField<T> {
    m: usize,
    values: Vec<T>,
}

impl<T: Scalar> BoundaryField<T> {
    pub fn new(m: usize, values: Vec<T>) -> Result<Self> {
        if m == 0 || !values.len().is_multiple_of(m) {
            return Err(Error::Shape(format!("{} values do not split into {m} components", values.len())));
        }
        Ok(Self { m, values })
    }

    pub fn zeros(mesh: &SquareMesh, m: usize) -> Self {
        Self { m, values: vec![T::zero(); m * mesh.num_boundary()] }
    }

    /// Samples `f(x)` at boundary nodes.
    pub fn from_fn(mesh: &SquareMesh, m: usize, f: impl Fn([T; 2], &mut [T])) -> Self {
        let mut values = vec![T::zero(); m * mesh.num_boundary()];
        for (pos, chunk) in values.chunks_mut(m).enumerate() {
            f(mesh.coords(mesh.boundary_nodes()[pos]), chunk);
        }
        Self { m, values }
    }

    /// Samples a normal-dependent density `f(x, n)`. Corners, which have no
    /// normal, get the average over their two edges, the same convention as
    /// the variational flux.
    pub fn from_normal_fn(mesh: &SquareMesh, m: usize, f: impl Fn([T; 2], [T; 2], &mut [T])) -> Self {
        let mut values = vec![T::zero(); m * mesh.num_boundary()];
        let mut tmp = vec![T::zero(); m];
        let half = T::lit(0.5);
        for (pos, chunk) in values.chunks_mut(m).enumerate() {
            let x = mesh.coords(mesh.boundary_nodes()[pos]);
            let [e0, e1] = mesh.adjacent_edges(pos);
            if e0 == e1 {
                f(x, SquareMesh::edge_normal(e0), chunk);
            } else {
                f(x, SquareMesh::edge_normal(e0), chunk);
                f(x, SquareMesh::edge_normal(e1), &mut tmp);
                for (c, t) in chunk.iter_mut().zip(&tmp) {
                    *c = (*c + *t) * half;
                }
            }
        }
        Self { m, values }
    }

    pub fn components(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.m
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, pos: usize, c: usize) -> T {
        self.values[pos * self.m + c]
    }

    pub fn component(&self, c: usize) -> BoundaryField<T> {
        BoundaryField { m: 1, values: self.values.iter().skip(c).step_by(self.m).copied().collect() }
    }

    /// Nodal product with a scalar boundary field.
    pub fn mul_scalar_field(&self, s: &BoundaryField<T>) -> BoundaryField<T> {
        assert_eq!(s.m, 1);
        let mut out = self.clone();
        for (pos, chunk) in out.values.chunks_mut(self.m).enumerate() {
            chunk.iter_mut().for_each(|v| *v *= s.values[pos]);
        }
        out
    }

    pub fn sub(&self, other: &BoundaryField<T>) -> BoundaryField<T> {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| *a - *b).collect();
        BoundaryField { m: self.m, values }
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `∫_{∂Ω} f dσ` per component with the lumped weights.
    pub fn integral(&self, mesh: &SquareMesh) -> Vec<T> {
        let mut s = vec![T::zero(); self.m];
        for pos in 0..self.len() {
            let w = mesh.boundary_weight::<T>(pos);
            for (c, sc) in s.iter_mut().enumerate() {
                *sc += w * self.at(pos, c);
            }
        }
        s
    }

    /// Writes `x,y,component,value` rows.
    pub fn write_csv<W: Write>(&self, mesh: &SquareMesh, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,y,component,value")?;
        for pos in 0..self.len() {
            let x: [T; 2] = mesh.coords(mesh.boundary_nodes()[pos]);
            for c in 0..self.m {
                writeln!(w, "{},{},{},{}", x[0], x[1], c, self.at(pos, c))?;
            }
        }
        Ok(())
    }
}

/// Values at the 2×2 Gauss points of every element: element-major, then
/// quadrature point, then component.
#[derive(Clone, Debug, PartialEq)]
pub struct QpField<T> {
    ncomp: usize,
    values: Vec<T>,
}

impl<T: Scalar> QpField<T> {
    pub fn new(ncomp: usize, values: Vec<T>) -> Result<Self> {
        if ncomp == 0 || !values.len().is_multiple_of(4 * ncomp) {
            return Err(Error::Shape(format!("{} values do not split into 4 points × {ncomp}", values.len())));
        }
        Ok(Self { ncomp, values })
    }

    pub fn zeros(ncomp: usize, elements: usize) -> Self {
        Self { ncomp, values: vec![T::zero(); 4 * ncomp * elements] }
    }

    /// Samples `f(x)` at the physical quadrature points of a grid.
    pub fn from_fn(grid: &dyn StructuredGrid, ncomp: usize, f: impl Fn([T; 2], &mut [T])) -> Self {
        let n = grid.n();
        let h = T::from_usize_lossy(n).recip();
        let mut values = vec![T::zero(); 4 * ncomp * n * n];
        for ej in 0..n {
            for ei in 0..n {
                let e = ej * n + ei;
                for q in 0..4 {
                    let o = Reference::<T>::qp_offset(q);
                    let x = [(T::from_usize_lossy(ei) + o[0]) * h, (T::from_usize_lossy(ej) + o[1]) * h];
                    let k = (4 * e + q) * ncomp;
                    f(x, &mut values[k..k + ncomp]);
                }
            }
        }
        Self { ncomp, values }
    }

    pub fn components(&self) -> usize {
        self.ncomp
    }

    pub fn num_elements(&self) -> usize {
        self.values.len() / (4 * self.ncomp)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, e: usize, q: usize, c: usize) -> &T {
        &self.values[(4 * e + q) * self.ncomp + c]
    }

    #[inline]
    pub fn point(&self, e: usize, q: usize) -> &[T] {
        let k = (4 * e + q) * self.ncomp;
        &self.values[k..k + self.ncomp]
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Unit-cell integral of each component (each element has area `h²`).
    pub fn integral(&self, grid: &dyn StructuredGrid) -> Vec<T> {
        let h = T::from_usize_lossy(grid.n()).recip();
        let w = h * h * T::lit(0.25);
        let mut s = vec![T::zero(); self.ncomp];
        for chunk in self.values.chunks(self.ncomp) {
            for (sc, &v) in s.iter_mut().zip(chunk) {
                *sc += v;
            }
        }
        s.iter_mut().for_each(|v| *v *= w);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_wraps() {
        let g = TorusGrid::new(4).unwrap();
        let f = Field::new(1, (0..16).map(|k| (k % 4) as f64).collect()).unwrap();
        let mut out = [0.0];
        f.interpolate_periodic(&g, [0.125, 0.3], &mut out);
        assert!((out[0] - 0.5).abs() < 1e-14);
        f.interpolate_periodic(&g, [1.125, -0.7], &mut out);
        assert!((out[0] - 0.5).abs() < 1e-14);
        // Between the last column (value 3) and the wrapped first (value 0).
        f.interpolate_periodic(&g, [0.875, 0.0], &mut out);
        assert!((out[0] - 1.5).abs() < 1e-14);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mesh = SquareMesh::new(2).unwrap();
        let f = Field::<f64>::scalar_from_fn(&mesh, |x| x[0]);
        let mut buf = Vec::new();
        f.write_csv(&mesh, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 10);
        assert!(s.starts_with("node_x,node_y,component,value\n"));
    }

    #[test]
    fn normal_density_averages_at_corners() {
        let mesh = SquareMesh::new(4).unwrap();
        let g = BoundaryField::<f64>::from_normal_fn(&mesh, 1, |_, n, out| out[0] = n[0]);
        assert_eq!(g.at(0, 0), -0.5);
        assert_eq!(g.at(2, 0), 0.0);
        assert_eq!(g.at(5, 0), 1.0);
        assert!(g.integral(&mesh)[0].abs() < 1e-15);
    }
}
