use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Gauss abscissae on `[0, 1]` for the two-point rule.
pub(crate) fn gauss_points<T: Scalar>() -> [T; 2] {
    let d = T::lit(0.5 / 3f64.sqrt());
    [T::lit(0.5) - d, T::lit(0.5) + d]
}

/// Reference coordinates in `[0,1]²` of quadrature point `q = qx + 2·qy`.
pub fn qp_offset<T: Scalar>(q: usize) -> [T; 2] {
    let g = gauss_points::<T>();
    [g[q % 2], g[q / 2]]
}

/// Bilinear reference element on `[0,1]²`. Local node `a = ax + 2·ay` sits at
/// corner `(ax, ay)`; quadrature point `q = qx + 2·qy` at `(g[qx], g[qy])`.
#[derive(Clone, Debug)]
pub(crate) struct Reference<T> {
    /// `phi[q][a]`
    pub phi: [[T; 4]; 4],
    /// Reference gradients `dphi[q][a] = (∂ξ, ∂η)`.
    pub dphi: [[[T; 2]; 4]; 4],
    /// Gradients at the element center.
    pub dphi_center: [[T; 2]; 4],
}

impl<T: Scalar> Reference<T> {
    pub fn new() -> Self {
        let g = gauss_points::<T>();
        let one = T::one();
        let l = |a: usize, t: T| if a == 0 { one - t } else { t };
        let dl = |a: usize| if a == 0 { -one } else { one };
        let mut phi = [[T::zero(); 4]; 4];
        let mut dphi = [[[T::zero(); 2]; 4]; 4];
        let mut dphi_center = [[T::zero(); 2]; 4];
        let half = T::lit(0.5);
        for q in 0..4 {
            let (xi, eta) = (g[q % 2], g[q / 2]);
            for a in 0..4 {
                let (ax, ay) = (a % 2, a / 2);
                phi[q][a] = l(ax, xi) * l(ay, eta);
                dphi[q][a] = [dl(ax) * l(ay, eta), l(ax, xi) * dl(ay)];
            }
        }
        for a in 0..4 {
            let (ax, ay) = (a % 2, a / 2);
            dphi_center[a] = [dl(ax) * half, half * dl(ay)];
        }
        Self { phi, dphi, dphi_center }
    }

    pub fn qp_offset(q: usize) -> [T; 2] {
        let g = gauss_points::<T>();
        [g[q % 2], g[q / 2]]
    }
}

/// Uniform tensor grid with `n` elements per axis on a unit cell.
pub trait StructuredGrid {
    fn n(&self) -> usize;
    fn num_nodes(&self) -> usize;
    fn periodic(&self) -> bool;
    /// Vertices per axis in the node numbering (`n + 1`, or `n` when periodic).
    fn nodes_per_axis(&self) -> usize;
    fn node(&self, i: usize, j: usize) -> usize;
    fn element_nodes(&self, ei: usize, ej: usize) -> [usize; 4] {
        [self.node(ei, ej), self.node(ei + 1, ej), self.node(ei, ej + 1), self.node(ei + 1, ej + 1)]
    }
    fn num_elements(&self) -> usize {
        self.n() * self.n()
    }
    fn node_ij(&self, node: usize) -> (usize, usize) {
        let k = self.nodes_per_axis();
        (node % k, node / k)
    }
}

/// The unit square `[0,1]²` with `n × n` bilinear elements.
///
/// Boundary nodes are numbered counter-clockwise starting at the origin, so
/// boundary position `k` sits at arc length `s = k·h`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SquareMesh {
    n: usize,
    boundary: Vec<usize>,
    boundary_pos: Vec<Option<usize>>,
}

impl SquareMesh {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("square mesh needs n >= 2, got {n}")));
        }
        let k = n + 1;
        let mut boundary = Vec::with_capacity(4 * n);
        boundary.extend(0..n);
        boundary.extend((0..n).map(|j| j * k + n));
        boundary.extend((0..n).map(|i| n * k + (n - i)));
        boundary.extend((0..n).map(|j| (n - j) * k));
        let mut boundary_pos = vec![None; k * k];
        for (p, &node) in boundary.iter().enumerate() {
            boundary_pos[node] = Some(p);
        }
        Ok(Self { n, boundary, boundary_pos })
    }

    pub fn h<T: Scalar>(&self) -> T {
        T::from_usize_lossy(self.n).recip()
    }

    pub fn coords<T: Scalar>(&self, node: usize) -> [T; 2] {
        let (i, j) = self.node_ij(node);
        let nf = T::from_usize_lossy(self.n);
        [T::from_usize_lossy(i) / nf, T::from_usize_lossy(j) / nf]
    }

    /// Boundary nodes in counter-clockwise order from `(0, 0)`.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary
    }

    pub fn num_boundary(&self) -> usize {
        self.boundary.len()
    }

    pub fn boundary_position(&self, node: usize) -> Option<usize> {
        self.boundary_pos[node]
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary_pos[node].is_some()
    }

    pub fn is_corner(&self, pos: usize) -> bool {
        pos.is_multiple_of(self.n)
    }

    /// Edge `0..4` (bottom, right, top, left) of a non-corner boundary position.
    pub fn edge(&self, pos: usize) -> usize {
        pos / self.n
    }

    /// Outward unit normal of edge `e`.
    pub fn edge_normal<T: Scalar>(e: usize) -> [T; 2] {
        let (z, o) = (T::zero(), T::one());
        match e % 4 {
            0 => [z, -o],
            1 => [o, z],
            2 => [z, o],
            _ => [-o, z],
        }
    }

    /// Counter-clockwise unit tangent of edge `e`.
    pub fn edge_tangent<T: Scalar>(e: usize) -> [T; 2] {
        let nrm = Self::edge_normal::<T>(e);
        [-nrm[1], nrm[0]]
    }

    /// Outward normal at a boundary position, `None` at corners.
    pub fn normal<T: Scalar>(&self, pos: usize) -> Option<[T; 2]> {
        (!self.is_corner(pos)).then(|| Self::edge_normal(self.edge(pos)))
    }

    /// The two edges meeting at a boundary position (equal except at corners).
    pub fn adjacent_edges(&self, pos: usize) -> [usize; 2] {
        if self.is_corner(pos) {
            let e = pos / self.n;
            [(e + 3) % 4, e]
        } else {
            let e = self.edge(pos);
            [e, e]
        }
    }

    /// Lumped arc-length weight of a boundary position.
    pub fn boundary_weight<T: Scalar>(&self, _pos: usize) -> T {
        self.h()
    }

    pub fn arc_length<T: Scalar>(&self, pos: usize) -> T {
        T::from_usize_lossy(pos) * self.h::<T>()
    }

    /// `dist(x, ∂Ω)`.
    pub fn dist<T: Scalar>(x: [T; 2]) -> T {
        let one = T::one();
        x[0].min(one - x[0]).min(x[1]).min(one - x[1])
    }

    pub fn nearest_node<T: Scalar>(&self, x: [T; 2]) -> usize {
        let nf = T::from_usize_lossy(self.n);
        let idx = |t: T| -> usize {
            let v = (t * nf).round().max(T::zero()).min(nf);
            v.to_usize().unwrap_or(0)
        };
        self.node(idx(x[0]), idx(x[1]))
    }

    /// Node nearest the center, the default pin for Neumann correctors.
    pub fn center_node(&self) -> usize {
        self.node(self.n / 2, self.n / 2)
    }

    /// Distance from a boundary position to the nearest corner, in units of `h`.
    pub fn corner_distance_steps(&self, pos: usize) -> usize {
        let r = pos % self.n;
        r.min(self.n - r)
    }
}

impl StructuredGrid for SquareMesh {
    fn n(&self) -> usize {
        self.n
    }
    fn num_nodes(&self) -> usize {
        (self.n + 1) * (self.n + 1)
    }
    fn periodic(&self) -> bool {
        false
    }
    fn nodes_per_axis(&self) -> usize {
        self.n + 1
    }
    #[inline]
    fn node(&self, i: usize, j: usize) -> usize {
        j * (self.n + 1) + i
    }
}

/// The periodic unit cell `[0,1)²` with `n × n` bilinear elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusGrid {
    n: usize,
}

impl TorusGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("torus grid needs n >= 2, got {n}")));
        }
        Ok(Self { n })
    }

    pub fn h<T: Scalar>(&self) -> T {
        T::from_usize_lossy(self.n).recip()
    }

    pub fn coords<T: Scalar>(&self, node: usize) -> [T; 2] {
        let (i, j) = self.node_ij(node);
        let nf = T::from_usize_lossy(self.n);
        [T::from_usize_lossy(i) / nf, T::from_usize_lossy(j) / nf]
    }
}

impl StructuredGrid for TorusGrid {
    fn n(&self) -> usize {
        self.n
    }
    fn num_nodes(&self) -> usize {
        self.n * self.n
    }
    fn periodic(&self) -> bool {
        true
    }
    fn nodes_per_axis(&self) -> usize {
        self.n
    }
    #[inline]
    fn node(&self, i: usize, j: usize) -> usize {
        (j % self.n) * self.n + i % self.n
    }
}

/// Either kind of grid, as accepted by assembly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Geometry {
    Square(SquareMesh),
    Torus(TorusGrid),
}

impl Geometry {
    pub fn grid(&self) -> &dyn StructuredGrid {
        match self {
            Geometry::Square(m) => m,
            Geometry::Torus(t) => t,
        }
    }

    pub fn square(&self) -> Option<&SquareMesh> {
        match self {
            Geometry::Square(m) => Some(m),
            Geometry::Torus(_) => None,
        }
    }

    pub fn h<T: Scalar>(&self) -> T {
        T::from_usize_lossy(self.grid().n()).recip()
    }
}

impl From<SquareMesh> for Geometry {
    fn from(m: SquareMesh) -> Self {
        Geometry::Square(m)
    }
}

impl From<TorusGrid> for Geometry {
    fn from(t: TorusGrid) -> Self {
        Geometry::Torus(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_is_counter_clockwise_loop() {
        let m = SquareMesh::new(4).unwrap();
        assert_eq!(m.num_boundary(), 16);
        let mut prev: [f64; 2] = m.coords(*m.boundary_nodes().last().unwrap());
        for &node in m.boundary_nodes() {
            let x: [f64; 2] = m.coords(node);
            assert!(((x[0] - prev[0]).abs() + (x[1] - prev[1]).abs() - 0.25).abs() < 1e-15);
            assert!(SquareMesh::dist(x) == 0.0);
            prev = x;
        }
        let total: f64 = (0..16).map(|p| m.boundary_weight::<f64>(p)).sum();
        assert!((total - 4.0).abs() < 1e-14);
    }

    #[test]
    fn normals_point_outward() {
        let m = SquareMesh::new(8).unwrap();
        for p in 0..m.num_boundary() {
            let x: [f64; 2] = m.coords(m.boundary_nodes()[p]);
            match m.normal::<f64>(p) {
                None => assert!(m.is_corner(p)),
                Some(nrm) => {
                    assert!((nrm[0].hypot(nrm[1]) - 1.0).abs() < 1e-15);
                    let inside = [x[0] - 0.01 * nrm[0], x[1] - 0.01 * nrm[1]];
                    assert!(SquareMesh::dist(inside) > 0.0);
                }
            }
        }
    }

    #[test]
    fn torus_elements_wrap() {
        let t = TorusGrid::new(2).unwrap();
        assert_eq!(t.num_nodes(), 4);
        let e = t.element_nodes(1, 1);
        let mut s = e.to_vec();
        s.sort();
        s.dedup();
        assert_eq!(s.len(), 4);
        assert_eq!(e, [3, 2, 1, 0]);
    }

    #[test]
    fn reference_partition_of_unity() {
        let r = Reference::<f64>::new();
        for q in 0..4 {
            let s: f64 = r.phi[q].iter().sum();
            assert!((s - 1.0).abs() < 1e-15);
            let g: [f64; 2] = [0, 1].map(|c| r.dphi[q].iter().map(|d| d[c]).sum());
            assert!(g[0].abs() < 1e-15 && g[1].abs() < 1e-15);
        }
    }
}
