use std::sync::{Arc, Mutex};

use super::field::{BoundaryField, Field, QpField};
use super::grid::{Geometry, Reference, SquareMesh, StructuredGrid};
use crate::coeff::TensorField;
use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradient, grid_nested_dissection, CsrMatrix, Factorization, Structure};
use crate::scalar::Scalar;

/// How boundary conditions and the constant null space are handled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Boundary values prescribed; interior unknowns solved.
    Dirichlet,
    /// Natural boundary condition, normalized by `∫_{∂Ω} u dσ = 0`.
    Neumann,
    /// Torus; normalized by `∫_Y u = 0`.
    Periodic,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum SolverKind {
    #[default]
    Direct,
    /// Jacobi-preconditioned CG; symmetric operators only.
    ConjugateGradient { tol: f64, max_iter: usize },
}

/// Vertices per leaf of the nested-dissection tree.
const LEAF_VERTICES: usize = 64;

/// Right-hand side of `−div(A∇u) = F + div f` plus optional nodal loads.
#[derive(Clone, Debug)]
pub struct Source<T> {
    volume: Option<Field<T>>,
    volume_qp: Option<QpField<T>>,
    divergence: Option<QpField<T>>,
    points: Vec<(usize, usize, T)>,
    assembled: Option<Vec<T>>,
}

impl<T: Scalar> Default for Source<T> {
    fn default() -> Self {
        Self { volume: None, volume_qp: None, divergence: None, points: Vec::new(), assembled: None }
    }
}

impl<T: Scalar> Source<T> {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Volume density `F`, interpolated bilinearly from nodal values.
    pub fn volume(mut self, f: Field<T>) -> Self {
        self.volume = Some(f);
        self
    }

    /// Volume density `F` given at quadrature points.
    pub fn volume_qp(mut self, f: QpField<T>) -> Self {
        self.volume_qp = Some(f);
        self
    }

    /// Divergence-form data `f_i^α` at quadrature points, component `α·d + i`.
    pub fn divergence(mut self, f: QpField<T>) -> Self {
        self.divergence = Some(f);
        self
    }

    /// Nodal load `value` on component `c` of `node`: the discrete point source.
    pub fn point(mut self, node: usize, c: usize, value: T) -> Self {
        self.points.push((node, c, value));
        self
    }

    /// A load vector assembled elsewhere, added as is.
    pub fn assembled(mut self, b: Vec<T>) -> Self {
        self.assembled = Some(b);
        self
    }
}

/// Stiffness matrix of `∫ a_ij^{αβ} ∂_j u^β ∂_i v^α` on a structured grid,
/// together with its boundary treatment and a lazily built factorization.
pub struct AssembledOperator<T: Scalar> {
    geometry: Geometry,
    m: usize,
    matrix: CsrMatrix<T>,
    symmetric: bool,
    mode: Mode,
    warning: Option<String>,
    solver: SolverKind,
    /// Reduced index of each dof, `usize::MAX` if eliminated.
    reduced_of: Vec<usize>,
    free: Vec<usize>,
    pin_node: Option<usize>,
    factor: Mutex<Option<Arc<Factorization<T>>>>,
    reduced: Mutex<Option<Arc<CsrMatrix<T>>>>,
}

impl<T: Scalar> std::fmt::Debug for AssembledOperator<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AssembledOperator")
            .field("n", &self.geometry.grid().n())
            .field("m", &self.m)
            .field("mode", &self.mode)
            .field("symmetric", &self.symmetric)
            .field("warning", &self.warning)
            .finish()
    }
}

fn pattern<T: Scalar>(grid: &dyn StructuredGrid, m: usize) -> CsrMatrix<T> {
    let k = grid.nodes_per_axis();
    let periodic = grid.periodic();
    let mut rows = Vec::with_capacity(grid.num_nodes() * m);
    for node in 0..grid.num_nodes() {
        let (i, j) = grid.node_ij(node);
        let mut nb = Vec::with_capacity(9);
        for dj in [-1i64, 0, 1] {
            for di in [-1i64, 0, 1] {
                let (ii, jj) = (i as i64 + di, j as i64 + dj);
                if periodic {
                    let w = |t: i64| t.rem_euclid(k as i64) as usize;
                    nb.push(grid.node(w(ii), w(jj)));
                } else if ii >= 0 && jj >= 0 && (ii as usize) < k && (jj as usize) < k {
                    nb.push(grid.node(ii as usize, jj as usize));
                }
            }
        }
        let cols: Vec<usize> = nb.iter().flat_map(|&q| (0..m).map(move |c| q * m + c)).collect();
        for _ in 0..m {
            rows.push(cols.clone());
        }
    }
    CsrMatrix::from_pattern(grid.num_nodes() * m, rows)
}

/// Assembles the operator with elementwise 2×2 Gauss quadrature.
pub fn assemble<T: Scalar>(
    coeff: &dyn TensorField<T>,
    geometry: &Geometry,
    mode: Mode,
) -> Result<AssembledOperator<T>> {
    assemble_with(coeff, geometry, mode, SolverKind::Direct)
}

pub fn assemble_with<T: Scalar>(
    coeff: &dyn TensorField<T>,
    geometry: &Geometry,
    mode: Mode,
    solver: SolverKind,
) -> Result<AssembledOperator<T>> {
    if coeff.dim() != 2 {
        return Err(Error::Unsupported(format!("grids are two-dimensional, coefficient has d = {}", coeff.dim())));
    }
    match (geometry, mode) {
        (Geometry::Torus(_), Mode::Periodic) | (Geometry::Square(_), Mode::Dirichlet | Mode::Neumann) => {}
        _ => return Err(Error::InvalidParameter(format!("mode {mode:?} does not apply to this geometry"))),
    }
    let m = coeff.components();
    let symmetric = coeff.is_symmetric();
    if let SolverKind::ConjugateGradient { .. } = solver {
        if !symmetric {
            return Err(Error::Unsupported("conjugate gradients need a symmetric operator".into()));
        }
    }
    let grid = geometry.grid();
    let n = grid.n();
    let h = T::from_usize_lossy(n).recip();
    let warning = coeff.period().and_then(|p| {
        (h > p / T::lit(8.0)).then(|| format!("h = {h} under-resolves the oscillation period {p} (need h <= period/8)"))
    });

    let mut matrix = pattern::<T>(grid, m);
    let r = Reference::<T>::new();
    let dm = 2 * m;
    let mut a = vec![T::zero(); dm * dm];
    let nl = 4 * m;
    let mut ke = vec![T::zero(); nl * nl];
    let quarter = T::lit(0.25);
    for ej in 0..n {
        for ei in 0..n {
            ke.iter_mut().for_each(|v| *v = T::zero());
            for q in 0..4 {
                let o = Reference::<T>::qp_offset(q);
                let x = [(T::from_usize_lossy(ei) + o[0]) * h, (T::from_usize_lossy(ej) + o[1]) * h];
                coeff.eval(&x, &mut a);
                let g = &r.dphi[q];
                for la in 0..nl {
                    let (pa, alpha) = (la / m, la % m);
                    let lb0 = if symmetric { la } else { 0 };
                    for lb in lb0..nl {
                        let (pb, beta) = (lb / m, lb % m);
                        let mut s = T::zero();
                        for i in 0..2 {
                            for j in 0..2 {
                                s += a[(alpha * 2 + i) * dm + beta * 2 + j] * g[pb][j] * g[pa][i];
                            }
                        }
                        ke[la * nl + lb] += quarter * s;
                    }
                }
            }
            if symmetric {
                for la in 0..nl {
                    for lb in 0..la {
                        ke[la * nl + lb] = ke[lb * nl + la];
                    }
                }
            }
            let nodes = grid.element_nodes(ei, ej);
            for la in 0..nl {
                let ra = nodes[la / m] * m + la % m;
                for lb in 0..nl {
                    let cb = nodes[lb / m] * m + lb % m;
                    matrix.add(ra, cb, ke[la * nl + lb]);
                }
            }
        }
    }

    let ndof = grid.num_nodes() * m;
    let mut reduced_of = vec![usize::MAX; ndof];
    let pin_node = match (geometry, mode) {
        (Geometry::Square(mesh), Mode::Neumann) => Some(mesh.center_node()),
        (Geometry::Torus(_), Mode::Periodic) => Some(0),
        _ => None,
    };
    let mut free = Vec::with_capacity(ndof);
    for node in 0..grid.num_nodes() {
        let keep = match (geometry, mode) {
            (Geometry::Square(mesh), Mode::Dirichlet) => !mesh.is_boundary(node),
            _ => Some(node) != pin_node,
        };
        if keep {
            for c in 0..m {
                reduced_of[node * m + c] = free.len();
                free.push(node * m + c);
            }
        }
    }
    Ok(AssembledOperator {
        geometry: geometry.clone(),
        m,
        matrix,
        symmetric,
        mode,
        warning,
        solver,
        reduced_of,
        free,
        pin_node,
        factor: Mutex::new(None),
        reduced: Mutex::new(None),
    })
}

impl<T: Scalar> AssembledOperator<T> {
    pub fn matrix(&self) -> &CsrMatrix<T> {
        &self.matrix
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn mesh(&self) -> Result<&SquareMesh> {
        self.geometry.square().ok_or_else(|| Error::Precondition("operation needs the square domain".into()))
    }

    pub fn components(&self) -> usize {
        self.m
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }

    pub fn num_dofs(&self) -> usize {
        self.matrix.nrows()
    }

    fn h(&self) -> T {
        self.geometry.h()
    }

    /// Drops the cached factorization; it is rebuilt on the next solve.
    pub fn release_factorization(&self) {
        *self.factor.lock().expect("factor lock") = None;
        *self.reduced.lock().expect("reduced lock") = None;
    }

    fn reduced_matrix(&self) -> Arc<CsrMatrix<T>> {
        let mut slot = self.reduced.lock().expect("reduced lock");
        slot.get_or_insert_with(|| Arc::new(self.matrix.principal_submatrix(&self.free))).clone()
    }

    /// Factorization of the constrained system, built on first use.
    pub fn factorization(&self) -> Result<Arc<Factorization<T>>> {
        let mut slot = self.factor.lock().expect("factor lock");
        if let Some(f) = slot.as_ref() {
            return Ok(f.clone());
        }
        let grid = self.geometry.grid();
        let k = grid.nodes_per_axis();
        let m = self.m;
        let tree = grid_nested_dissection(k, k, [grid.periodic(); 2], m, LEAF_VERTICES, |i, j, c| {
            let r = self.reduced_of[grid.node(i, j) * m + c];
            (r != usize::MAX).then_some(r)
        })?;
        let reduced = self.matrix.principal_submatrix(&self.free);
        let structure = if self.symmetric { Structure::Symmetric } else { Structure::General };
        let f = Arc::new(Factorization::new(&reduced, &tree, structure)?);
        *slot = Some(f.clone());
        Ok(f)
    }

    fn solve_reduced(&self, rhs: Vec<T>) -> Result<Vec<T>> {
        match self.solver {
            SolverKind::Direct => {
                let f = self.factorization()?;
                let mut x = rhs;
                f.solve_in_place(&mut x);
                Ok(x)
            }
            SolverKind::ConjugateGradient { tol, max_iter } => {
                conjugate_gradient(&self.reduced_matrix(), &rhs, T::lit(tol), max_iter)
            }
        }
    }

    /// Assembled load vector `b_a = ∫ F φ_a − ∫ f·∇φ_a` (+ nodal loads).
    pub fn load_vector(&self, source: &Source<T>) -> Result<Vec<T>> {
        let grid = self.geometry.grid();
        let n = grid.n();
        let m = self.m;
        let ndof = self.num_dofs();
        let mut b = vec![T::zero(); ndof];
        let h = self.h();
        let r = Reference::<T>::new();
        let w = h * h * T::lit(0.25);
        if let Some(f) = &source.volume {
            if f.components() != m || f.num_nodes() != grid.num_nodes() {
                return Err(Error::Shape("volume source does not match the operator".into()));
            }
            f.check_finite()?;
            for ej in 0..n {
                for ei in 0..n {
                    let nodes = grid.element_nodes(ei, ej);
                    for q in 0..4 {
                        for c in 0..m {
                            let fq: T = (0..4).map(|a| r.phi[q][a] * f.at(nodes[a], c)).sum();
                            for a in 0..4 {
                                b[nodes[a] * m + c] += w * fq * r.phi[q][a];
                            }
                        }
                    }
                }
            }
        }
        if let Some(f) = &source.volume_qp {
            if f.components() != m || f.num_elements() != grid.num_elements() {
                return Err(Error::Shape("volume source does not match the operator".into()));
            }
            for ej in 0..n {
                for ei in 0..n {
                    let e = ej * n + ei;
                    let nodes = grid.element_nodes(ei, ej);
                    for q in 0..4 {
                        let fq = f.point(e, q);
                        for a in 0..4 {
                            for c in 0..m {
                                b[nodes[a] * m + c] += w * fq[c] * r.phi[q][a];
                            }
                        }
                    }
                }
            }
        }
        if let Some(f) = &source.divergence {
            if f.components() != 2 * m || f.num_elements() != grid.num_elements() {
                return Err(Error::Shape("divergence data does not match the operator".into()));
            }
            let wg = w / h;
            for ej in 0..n {
                for ei in 0..n {
                    let e = ej * n + ei;
                    let nodes = grid.element_nodes(ei, ej);
                    for q in 0..4 {
                        let fq = f.point(e, q);
                        for a in 0..4 {
                            let g = r.dphi[q][a];
                            for c in 0..m {
                                b[nodes[a] * m + c] -= wg * (fq[2 * c] * g[0] + fq[2 * c + 1] * g[1]);
                            }
                        }
                    }
                }
            }
        }
        for &(node, c, v) in &source.points {
            if node >= grid.num_nodes() || c >= m {
                return Err(Error::Shape(format!("point load at node {node}, component {c} out of range")));
            }
            b[node * m + c] += v;
        }
        if let Some(a) = &source.assembled {
            if a.len() != ndof {
                return Err(Error::Shape("assembled load has the wrong length".into()));
            }
            for (bi, &ai) in b.iter_mut().zip(a) {
                *bi += ai;
            }
        }
        Ok(b)
    }

    /// `K u`.
    pub fn apply(&self, u: &Field<T>) -> Vec<T> {
        let mut y = vec![T::zero(); self.num_dofs()];
        self.matrix.mul_vec(u.values(), &mut y);
        y
    }

    /// Weak residual `K u − b` at every dof.
    pub fn residual(&self, u: &Field<T>, source: &Source<T>) -> Result<Vec<T>> {
        let b = self.load_vector(source)?;
        let mut r = self.apply(u);
        r.iter_mut().zip(&b).for_each(|(ri, bi)| *ri -= *bi);
        Ok(r)
    }

    /// Largest weak residual over the unknowns that the mode actually solves for.
    pub fn interior_residual(&self, u: &Field<T>, source: &Source<T>) -> Result<T> {
        let r = self.residual(u, source)?;
        Ok(self.free.iter().fold(T::zero(), |mx, &d| mx.max(r[d].abs())))
    }

    fn check_mode(&self, mode: Mode) -> Result<()> {
        if self.mode != mode {
            return Err(Error::Precondition(format!("operator assembled for {:?}, used for {mode:?}", self.mode)));
        }
        Ok(())
    }

    fn check_boundary(&self, mesh: &SquareMesh, g: &BoundaryField<T>) -> Result<()> {
        if g.components() != self.m || g.len() != mesh.num_boundary() {
            return Err(Error::Shape("boundary data does not match the mesh".into()));
        }
        if g.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { point: vec![] });
        }
        Ok(())
    }

    /// Solves with `u = bdata` on `∂Ω`.
    pub fn solve_dirichlet(&self, source: &Source<T>, bdata: &BoundaryField<T>) -> Result<Field<T>> {
        self.check_mode(Mode::Dirichlet)?;
        let mesh = self.mesh()?;
        self.check_boundary(mesh, bdata)?;
        let m = self.m;
        let mut u = vec![T::zero(); self.num_dofs()];
        for (pos, &node) in mesh.boundary_nodes().iter().enumerate() {
            for c in 0..m {
                u[node * m + c] = bdata.at(pos, c);
            }
        }
        let b = self.load_vector(source)?;
        let rhs: Vec<T> = self.free.iter().map(|&d| b[d] - self.matrix.row_dot(d, &u)).collect();
        let x = self.solve_reduced(rhs)?;
        for (&d, &v) in self.free.iter().zip(&x) {
            u[d] = v;
        }
        Field::new(m, u)
    }

    /// Solves with variational conormal flux `flux` on `∂Ω`, normalized by
    /// `∫_{∂Ω} u dσ = 0`.
    pub fn solve_neumann(&self, source: &Source<T>, flux: &BoundaryField<T>) -> Result<Field<T>> {
        self.check_mode(Mode::Neumann)?;
        let mesh = self.mesh()?;
        self.check_boundary(mesh, flux)?;
        let m = self.m;
        let mut b = self.load_vector(source)?;
        let mut total = vec![T::zero(); m];
        let mut scale = vec![T::zero(); m];
        for (k, &v) in b.iter().enumerate() {
            total[k % m] += v;
            scale[k % m] += v.abs();
        }
        for (pos, &node) in mesh.boundary_nodes().iter().enumerate() {
            let w = mesh.boundary_weight::<T>(pos);
            for c in 0..m {
                let g = w * flux.at(pos, c);
                b[node * m + c] += g;
                total[c] += g;
                scale[c] += g.abs();
            }
        }
        let tol = T::lit(1e-8);
        for c in 0..m {
            if total[c].abs() > tol * scale[c] {
                return Err(Error::Incompatible {
                    defect: total[c].abs().to_f64_lossy(),
                    tolerance: (tol * scale[c]).to_f64_lossy(),
                });
            }
        }
        // Remove the round-off incompatibility along the boundary-weight
        // direction, exactly what a bordered system's multiplier would absorb.
        let perimeter: T = (0..mesh.num_boundary()).map(|p| mesh.boundary_weight::<T>(p)).sum();
        for (pos, &node) in mesh.boundary_nodes().iter().enumerate() {
            let w = mesh.boundary_weight::<T>(pos);
            for c in 0..m {
                b[node * m + c] -= w * total[c] / perimeter;
            }
        }
        let mut u = self.solve_pinned(b)?;
        let mean = self.boundary_mean(mesh, &u, perimeter);
        for (k, v) in u.iter_mut().enumerate() {
            *v -= mean[k % m];
        }
        Field::new(m, u)
    }

    fn boundary_mean(&self, mesh: &SquareMesh, u: &[T], perimeter: T) -> Vec<T> {
        let m = self.m;
        let mut s = vec![T::zero(); m];
        for (pos, &node) in mesh.boundary_nodes().iter().enumerate() {
            let w = mesh.boundary_weight::<T>(pos);
            for c in 0..m {
                s[c] += w * u[node * m + c];
            }
        }
        s.iter_mut().for_each(|v| *v /= perimeter);
        s
    }

    fn solve_pinned(&self, b: Vec<T>) -> Result<Vec<T>> {
        let rhs: Vec<T> = self.free.iter().map(|&d| b[d]).collect();
        let x = self.solve_reduced(rhs)?;
        let mut u = vec![T::zero(); self.num_dofs()];
        for (&d, &v) in self.free.iter().zip(&x) {
            u[d] = v;
        }
        debug_assert!(self.pin_node.is_some());
        Ok(u)
    }

    /// Periodic solve normalized to zero cell mean.
    pub fn solve_periodic(&self, source: &Source<T>) -> Result<Field<T>> {
        self.check_mode(Mode::Periodic)?;
        let m = self.m;
        let mut b = self.load_vector(source)?;
        let nn = T::from_usize_lossy(self.geometry.grid().num_nodes());
        let mut total = vec![T::zero(); m];
        for (k, &v) in b.iter().enumerate() {
            total[k % m] += v;
        }
        for (k, v) in b.iter_mut().enumerate() {
            *v -= total[k % m] / nn;
        }
        let mut u = self.solve_pinned(b)?;
        let mut mean = vec![T::zero(); m];
        for (k, &v) in u.iter().enumerate() {
            mean[k % m] += v;
        }
        for (k, v) in u.iter_mut().enumerate() {
            *v -= mean[k % m] / nn;
        }
        Field::new(m, u)
    }

    /// Variational conormal flux: `⟨flux, φ_a⟩ = a(u, φ_a) − (source, φ_a)`
    /// for each boundary hat `φ_a`, divided by its lumped arc-length weight.
    pub fn conormal(&self, u: &Field<T>, source: &Source<T>) -> Result<BoundaryField<T>> {
        let mesh = self.mesh()?;
        let m = self.m;
        if u.components() != m || u.num_nodes() != self.geometry.grid().num_nodes() {
            return Err(Error::Shape("field does not match the operator".into()));
        }
        let b = self.load_vector(source)?;
        let mut values = Vec::with_capacity(m * mesh.num_boundary());
        for (pos, &node) in mesh.boundary_nodes().iter().enumerate() {
            let w = mesh.boundary_weight::<T>(pos);
            for c in 0..m {
                let d = node * m + c;
                values.push((self.matrix.row_dot(d, u.values()) - b[d]) / w);
            }
        }
        BoundaryField::new(m, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{layered, ConstantTensor};
    use crate::mesh::grid::TorusGrid;

    fn identity() -> ConstantTensor<f64> {
        ConstantTensor::identity(2, 1)
    }

    #[test]
    fn torus_rows_sum_to_zero() {
        let op = assemble(&identity(), &TorusGrid::new(2).unwrap().into(), Mode::Periodic).unwrap();
        for r in 0..op.num_dofs() {
            let s: f64 = op.matrix().row(r).1.iter().sum();
            assert!(s.abs() < 1e-15);
        }
    }

    #[test]
    fn affine_data_reproduced() {
        let mesh = SquareMesh::new(8).unwrap();
        let op = assemble(&identity(), &mesh.clone().into(), Mode::Dirichlet).unwrap();
        let g = BoundaryField::from_fn(&mesh, 1, |x, o| o[0] = x[0]);
        let u = op.solve_dirichlet(&Source::zero(), &g).unwrap();
        for node in 0..u.num_nodes() {
            assert!((u.at(node, 0) - mesh.coords::<f64>(node)[0]).abs() < 1e-13);
        }
        let flux = op.conormal(&u, &Source::zero()).unwrap();
        for pos in 0..mesh.num_boundary() {
            if let Some(nrm) = mesh.normal::<f64>(pos) {
                assert!((flux.at(pos, 0) - nrm[0]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let mesh = SquareMesh::new(4).unwrap();
        assert!(assemble(&identity(), &mesh.clone().into(), Mode::Periodic).is_err());
        let op = assemble(&identity(), &mesh.clone().into(), Mode::Dirichlet).unwrap();
        assert!(op.solve_neumann(&Source::zero(), &BoundaryField::zeros(&mesh, 1)).is_err());
    }

    #[test]
    fn under_resolution_warns() {
        let a = crate::coeff::rescale(&layered::<f64>(2.0, 1.0).unwrap(), 0.25).unwrap();
        let coarse = assemble(&a, &SquareMesh::new(16).unwrap().into(), Mode::Dirichlet).unwrap();
        assert!(coarse.warning().is_some());
        let fine = assemble(&a, &SquareMesh::new(32).unwrap().into(), Mode::Dirichlet).unwrap();
        assert!(fine.warning().is_none());
    }
}
