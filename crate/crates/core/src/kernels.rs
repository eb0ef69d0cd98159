//! Sampled kernels of the Dirichlet and Neumann problems, the boundary weight
//! `ω_ε`, the Dirichlet-to-Neumann map and its commutators.

use crate::coeff::{symmetric_eigenvalues, tensor_index, ConstantTensor, ScaledCoefficient, TensorField};
use crate::correctors::linear_monomial;
use crate::error::{Error, Result};
use crate::mesh::{
    arc_derivative, recover_gradient, AssembledOperator, BoundaryField, Field, Mode, Source, SquareMesh, StructuredGrid,
};
use crate::scalar::Scalar;

fn require_mode<T: Scalar>(op: &AssembledOperator<T>, mode: Mode) -> Result<&SquareMesh> {
    if op.mode() != mode {
        return Err(Error::Precondition(format!("operator assembled for {:?}, need {mode:?}", op.mode())));
    }
    op.mesh()
}

fn interior_source<T: Scalar>(mesh: &SquareMesh, y: usize, beta: usize, m: usize) -> Result<Source<T>> {
    if y >= mesh.num_nodes() || mesh.is_boundary(y) {
        return Err(Error::InvalidParameter(format!("source node {y} is not an interior node")));
    }
    if beta >= m {
        return Err(Error::InvalidParameter(format!("source component {beta} out of range for m = {m}")));
    }
    Ok(Source::zero().point(y, beta, T::one()))
}

/// True when a kernel value at `(x, y)` is off the discrete diagonal:
/// `|x − y| ≥ max(4h, 0.02)`.
pub fn separated(mesh: &SquareMesh, x: usize, y: usize) -> bool {
    let (a, b) = (mesh.coords::<f64>(x), mesh.coords::<f64>(y));
    let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    d >= (4.0 * mesh.h::<f64>()).max(0.02)
}

/// `G(·, y) e^β`: Dirichlet solve with a unit nodal load at `y`.
pub fn green<T: Scalar>(op: &AssembledOperator<T>, y: usize, beta: usize) -> Result<Field<T>> {
    let mesh = require_mode(op, Mode::Dirichlet)?;
    let src = interior_source(mesh, y, beta, op.components())?;
    op.solve_dirichlet(&src, &BoundaryField::zeros(mesh, op.components()))
}

/// `N(·, y) e^β`: unit load at `y`, boundary flux `−e^β/|∂Ω|`, zero
/// boundary mean.
pub fn neumann_fn<T: Scalar>(op: &AssembledOperator<T>, y: usize, beta: usize) -> Result<Field<T>> {
    let mesh = require_mode(op, Mode::Neumann)?;
    if !op.is_symmetric() {
        return Err(Error::Unsupported("Neumann functions need a symmetric coefficient".into()));
    }
    let m = op.components();
    let src = interior_source(mesh, y, beta, m)?;
    let perimeter: T = (0..mesh.num_boundary()).map(|p| mesh.boundary_weight::<T>(p)).sum();
    let flux = BoundaryField::from_fn(mesh, m, |_, out| {
        out.iter_mut().enumerate().for_each(|(c, v)| *v = if c == beta { -perimeter.recip() } else { T::zero() })
    });
    op.solve_neumann(&src, &flux)
}

/// Column `P(·, y) e^β` for a boundary position `y`: the Dirichlet solve
/// with boundary data equal to the hat at `y` divided by its arc-length mass.
pub fn poisson_kernel<T: Scalar>(op: &AssembledOperator<T>, pos: usize, beta: usize) -> Result<Field<T>> {
    let mesh = require_mode(op, Mode::Dirichlet)?;
    if pos >= mesh.num_boundary() || mesh.is_corner(pos) {
        return Err(Error::InvalidParameter(format!("boundary position {pos} is a corner or out of range")));
    }
    let m = op.components();
    let mut g = BoundaryField::zeros(mesh, m);
    g.values_mut()[pos * m + beta] = mesh.boundary_weight::<T>(pos).recip();
    op.solve_dirichlet(&Source::zero(), &g)
}

/// Row `y ↦ P^{α·}(x, y)` over all boundary positions from one adjoint
/// solve: `P^{αβ}(x, y) = −∂G*^{βα}(·, x)/∂ν*(y)`. `adjoint_op` must be
/// assembled from the adjoint coefficient. Agrees with [`poisson_kernel`]
/// to round-off.
pub fn poisson_row<T: Scalar>(adjoint_op: &AssembledOperator<T>, x: usize, alpha: usize) -> Result<BoundaryField<T>> {
    let g = green(adjoint_op, x, alpha)?;
    let mut flux = adjoint_op.conormal(&g, &Source::zero())?;
    flux.values_mut().iter_mut().for_each(|v| *v = -*v);
    Ok(flux)
}

/// `∂G(·, y)/∂y_j e^β` for `y` at the center of element `(ei, ej)`: the
/// load is the `y_j`-derivative of the point-evaluation functional, which is
/// well defined at element centers.
pub fn green_dipole<T: Scalar>(op: &AssembledOperator<T>, element: (usize, usize), j: usize, beta: usize) -> Result<Field<T>> {
    let mesh = require_mode(op, Mode::Dirichlet)?;
    let (ei, ej) = element;
    if ei >= mesh.n() || ej >= mesh.n() || j > 1 || beta >= op.components() {
        return Err(Error::InvalidParameter(format!("dipole at element ({ei}, {ej}), direction {j}, component {beta}")));
    }
    let m = op.components();
    let half_inv_h = T::lit(0.5) / mesh.h::<T>();
    let mut b = vec![T::zero(); op.num_dofs()];
    for (a, node) in mesh.element_nodes(ei, ej).into_iter().enumerate() {
        let sign = |bit: usize| if bit == 0 { -T::one() } else { T::one() };
        let d = if j == 0 { sign(a % 2) } else { sign(a / 2) };
        b[node * m + beta] = d * half_inv_h;
    }
    op.solve_dirichlet(&Source::zero().assembled(b), &BoundaryField::zeros(mesh, m))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    Green,
    NeumannFn,
    Poisson,
}

/// Kernel columns for a list of sources. For Green and Neumann functions the
/// sources are interior nodes, for the Poisson kernel boundary positions.
#[derive(Clone, Debug)]
pub struct KernelTable<T> {
    pub kind: KernelKind,
    /// `0` stands for the homogenized operator.
    pub epsilon: T,
    pub beta: usize,
    pub sources: Vec<usize>,
    pub columns: Vec<Field<T>>,
}

impl<T: Scalar> KernelTable<T> {
    pub fn build(kind: KernelKind, op: &AssembledOperator<T>, epsilon: T, sources: &[usize], beta: usize) -> Result<Self> {
        let columns = sources
            .iter()
            .map(|&y| match kind {
                KernelKind::Green => green(op, y, beta),
                KernelKind::NeumannFn => neumann_fn(op, y, beta),
                KernelKind::Poisson => poisson_kernel(op, y, beta),
            })
            .collect::<Result<_>>()?;
        Ok(Self { kind, epsilon, beta, sources: sources.to_vec(), columns })
    }

    /// Writes `x,y,source_x,source_y,component,value` rows.
    pub fn write_csv<W: std::io::Write>(&self, mesh: &SquareMesh, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,y,source_x,source_y,component,value")?;
        for (&s, col) in self.sources.iter().zip(&self.columns) {
            let sn = if self.kind == KernelKind::Poisson { mesh.boundary_nodes()[s] } else { s };
            let sy: [T; 2] = mesh.coords(sn);
            for node in 0..col.num_nodes() {
                let x: [T; 2] = mesh.coords(node);
                for (c, v) in col.node_values(node).iter().enumerate() {
                    writeln!(w, "{},{},{},{},{},{}", x[0], x[1], sy[0], sy[1], c, v)?;
                }
            }
        }
        Ok(())
    }
}

/// Replaces corner values by the average of the two neighbouring positions.
fn fill_corners<T: Scalar>(mesh: &SquareMesh, f: &mut BoundaryField<T>) {
    let nb = mesh.num_boundary();
    let m = f.components();
    for pos in (0..nb).filter(|&p| mesh.is_corner(p)) {
        let (prev, next) = ((pos + nb - 1) % nb, (pos + 1) % nb);
        for c in 0..m {
            let v = (f.at(prev, c) + f.at(next, c)) * T::lit(0.5);
            f.values_mut()[pos * m + c] = v;
        }
    }
}

/// Inverse of a small dense `m × m` matrix by Gauss–Jordan with partial pivoting.
fn invert_small<T: Scalar>(a: &[T], m: usize) -> Option<Vec<T>> {
    let mut w = a.to_vec();
    let mut inv: Vec<T> = (0..m * m).map(|k| if k / m == k % m { T::one() } else { T::zero() }).collect();
    let scale = a.iter().fold(T::zero(), |s, v| s.max(v.abs()));
    for col in 0..m {
        let p = (col..m).max_by(|&r, &s| w[r * m + col].abs().partial_cmp(&w[s * m + col].abs()).unwrap())?;
        if !(w[p * m + col].abs() > scale * T::epsilon() * T::lit(1e3)) {
            return None;
        }
        for k in 0..m {
            w.swap(col * m + k, p * m + k);
            inv.swap(col * m + k, p * m + k);
        }
        let d = w[col * m + col].recip();
        for k in 0..m {
            w[col * m + k] *= d;
            inv[col * m + k] *= d;
        }
        for r in (0..m).filter(|&r| r != col) {
            let f = w[r * m + col];
            for k in 0..m {
                let (wv, iv) = (w[col * m + k], inv[col * m + k]);
                w[r * m + k] -= f * wv;
                inv[r * m + k] -= f * iv;
            }
        }
    }
    Some(inv)
}

/// `ω_ε^{γβ}` at boundary positions (component `γ·m + β`) together with
/// `h^{αβ} = [n_i n_j â_ij^{αβ}]^{-1}`.
#[derive(Clone, Debug)]
pub struct OmegaTable<T> {
    pub omega: BoundaryField<T>,
    pub h: BoundaryField<T>,
}

impl<T: Scalar> OmegaTable<T> {
    pub fn m(&self) -> usize {
        let m2 = self.omega.components();
        (1..=m2).find(|k| k * k == m2).unwrap_or(1)
    }

    /// `ω` for `m = 1` as a scalar boundary field.
    pub fn scalar(&self) -> Result<BoundaryField<T>> {
        if self.omega.components() != 1 {
            return Err(Error::Unsupported("scalar ω requested for a system".into()));
        }
        Ok(self.omega.clone())
    }
}

fn h_table<T: Scalar>(mesh: &SquareMesh, hat_a: &ConstantTensor<T>, m: usize) -> Result<BoundaryField<T>> {
    let mut h = BoundaryField::zeros(mesh, m * m);
    for pos in (0..mesh.num_boundary()).filter(|&p| !mesh.is_corner(p)) {
        let n = mesh.normal::<T>(pos).expect("edge node");
        let mut nan = vec![T::zero(); m * m];
        for a in 0..m {
            for b in 0..m {
                nan[a * m + b] = (0..2)
                    .flat_map(|i| (0..2).map(move |j| (i, j)))
                    .map(|(i, j)| n[i] * n[j] * hat_a.values()[tensor_index(2, m, i, a, j, b)])
                    .sum();
            }
        }
        let inv = invert_small(&nan, m).ok_or(Error::SingularPivot { step: pos, value: 0.0 })?;
        h.values_mut()[pos * m * m..(pos + 1) * m * m].copy_from_slice(&inv);
    }
    fill_corners(mesh, &mut h);
    Ok(h)
}

/// `ω_ε` through the conormal identity: with `C^{βσ} = n_k ∂Φ*_k^{·σ}/∂ν*`
/// (the `β` component of the adjoint conormal flux of column `(k, σ)`),
/// `ω^{γβ} = h^{γσ} C^{βσ}`. In the scalar case this reads
/// `n·Â n ω = n_k Λ*_ε(x_k)`. Corners take the average of their neighbours.
pub fn omega<T: Scalar>(
    adjoint_op: &AssembledOperator<T>,
    phi_star: &[Field<T>],
    hat_a: &ConstantTensor<T>,
) -> Result<OmegaTable<T>> {
    let mesh = require_mode(adjoint_op, Mode::Dirichlet)?;
    let m = adjoint_op.components();
    if phi_star.len() != 2 * m {
        return Err(Error::Shape(format!("expected {} corrector columns, got {}", 2 * m, phi_star.len())));
    }
    let fluxes: Vec<BoundaryField<T>> =
        phi_star.iter().map(|p| adjoint_op.conormal(p, &Source::zero())).collect::<Result<_>>()?;
    let h = h_table(mesh, hat_a, m)?;
    let mut omega = BoundaryField::zeros(mesh, m * m);
    for pos in (0..mesh.num_boundary()).filter(|&p| !mesh.is_corner(p)) {
        let n = mesh.normal::<T>(pos).expect("edge node");
        let c = |beta: usize, sigma: usize| -> T { (0..2).map(|k| n[k] * fluxes[k * m + sigma].at(pos, beta)).sum() };
        for gamma in 0..m {
            for beta in 0..m {
                let v = (0..m).map(|sigma| h.at(pos, gamma * m + sigma) * c(beta, sigma)).sum();
                omega.values_mut()[pos * m * m + gamma * m + beta] = v;
            }
        }
    }
    fill_corners(mesh, &mut omega);
    Ok(OmegaTable { omega, h })
}

/// `ω_ε` from recovered gradients:
/// `ω^{γβ} = h^{γσ} · n·∇Φ*_k^{ρσ} · n_k · n_i n_j a_ij^{ρβ}(x/ε)`.
/// Less accurate than [`omega`] because the boundary gradient is one-sided;
/// kept as a cross-check.
pub fn omega_from_gradients<T: Scalar>(
    coeff: &ScaledCoefficient<T>,
    mesh: &SquareMesh,
    phi_star: &[Field<T>],
    hat_a: &ConstantTensor<T>,
) -> Result<OmegaTable<T>> {
    let m = coeff.components();
    if phi_star.len() != 2 * m {
        return Err(Error::Shape(format!("expected {} corrector columns, got {}", 2 * m, phi_star.len())));
    }
    let grads: Vec<Field<T>> = phi_star.iter().map(|p| recover_gradient(mesh, p)).collect();
    let h = h_table(mesh, hat_a, m)?;
    let mut omega = BoundaryField::zeros(mesh, m * m);
    let mut a = vec![T::zero(); coeff.tensor_len()];
    for pos in (0..mesh.num_boundary()).filter(|&p| !mesh.is_corner(p)) {
        let node = mesh.boundary_nodes()[pos];
        let n = mesh.normal::<T>(pos).expect("edge node");
        coeff.eval(&mesh.coords::<T>(node), &mut a);
        // D^{ρσ} = n_k ∂_n Φ*_k^{ρσ}
        let d = |rho: usize, sigma: usize| -> T {
            (0..2)
                .map(|k| {
                    let g = grads[k * m + sigma].node_values(node);
                    n[k] * (n[0] * g[rho * 2] + n[1] * g[rho * 2 + 1])
                })
                .sum()
        };
        let na = |rho: usize, beta: usize| -> T {
            (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| n[i] * n[j] * a[tensor_index(2, m, i, rho, j, beta)]).sum()
        };
        for gamma in 0..m {
            for beta in 0..m {
                let mut v = T::zero();
                for sigma in 0..m {
                    let inner: T = (0..m).map(|rho| d(rho, sigma) * na(rho, beta)).sum();
                    v += h.at(pos, gamma * m + sigma) * inner;
                }
                omega.values_mut()[pos * m * m + gamma * m + beta] = v;
            }
        }
    }
    fill_corners(mesh, &mut omega);
    Ok(OmegaTable { omega, h })
}

/// Matrix-free Dirichlet-to-Neumann map: one Dirichlet solve and one
/// variational flux per application.
#[derive(Clone, Copy, Debug)]
pub struct DtN<'a, T: Scalar> {
    op: &'a AssembledOperator<T>,
}

impl<'a, T: Scalar> DtN<'a, T> {
    pub fn new(op: &'a AssembledOperator<T>) -> Result<Self> {
        require_mode(op, Mode::Dirichlet)?;
        Ok(Self { op })
    }

    pub fn mesh(&self) -> &'a SquareMesh {
        self.op.mesh().expect("checked at construction")
    }

    pub fn components(&self) -> usize {
        self.op.components()
    }

    pub fn apply(&self, f: &BoundaryField<T>) -> Result<BoundaryField<T>> {
        let u = self.op.solve_dirichlet(&Source::zero(), f)?;
        self.op.conormal(&u, &Source::zero())
    }

    /// `Λ(x_j e^β)`, the boundary flux of the Dirichlet corrector `Φ_j^β`.
    pub fn apply_coordinate(&self, j: usize, beta: usize) -> Result<BoundaryField<T>> {
        let mesh = self.mesh();
        self.apply(&linear_monomial::<T>(mesh, self.components(), j, beta).trace(mesh))
    }
}

/// Dense Dirichlet-to-Neumann matrix: entry `(a, b)` is the flux at row
/// `a = pos·m + α` of the solve with unit hat data at column `b`. Applying it
/// to nodal boundary values gives the pointwise flux.
#[derive(Clone, Debug)]
pub struct DtNMatrix<T> {
    pub m: usize,
    pub size: usize,
    pub values: Vec<T>,
}

impl<T: Scalar> DtNMatrix<T> {
    /// One Dirichlet solve per boundary dof; meant for moderate meshes.
    pub fn assemble(op: &AssembledOperator<T>) -> Result<Self> {
        let dtn = DtN::new(op)?;
        let mesh = dtn.mesh();
        let m = op.components();
        let size = mesh.num_boundary() * m;
        let mut values = vec![T::zero(); size * size];
        for col in 0..size {
            let mut g = BoundaryField::zeros(mesh, m);
            g.values_mut()[col] = T::one();
            let flux = dtn.apply(&g)?;
            for (row, v) in flux.values().iter().enumerate() {
                values[row * size + col] = *v;
            }
        }
        Ok(Self { m, size, values })
    }

    pub fn apply(&self, f: &BoundaryField<T>) -> Result<BoundaryField<T>> {
        if f.values().len() != self.size || f.components() != self.m {
            return Err(Error::Shape("boundary field does not match the matrix".into()));
        }
        let out = self.values.chunks(self.size).map(|row| crate::scalar::dot(row, f.values())).collect();
        BoundaryField::new(self.m, out)
    }

    pub fn max_asymmetry(&self) -> T {
        let n = self.size;
        let mut w = T::zero();
        for r in 0..n {
            for c in r + 1..n {
                w = w.max((self.values[r * n + c] - self.values[c * n + r]).abs());
            }
        }
        w
    }

    /// Smallest eigenvalue of the symmetric part.
    pub fn min_eigenvalue(&self) -> T {
        let n = self.size;
        let sym: Vec<T> = (0..n * n).map(|k| (self.values[k] + self.values[(k % n) * n + k / n]) * T::lit(0.5)).collect();
        symmetric_eigenvalues(&sym, n)[0]
    }

    /// Largest `|Λ(e^β)|` over constant data.
    pub fn constants_defect(&self) -> T {
        let mut w = T::zero();
        for beta in 0..self.m {
            for row in 0..self.size {
                let s: T = (0..self.size / self.m).map(|p| self.values[row * self.size + p * self.m + beta]).sum();
                w = w.max(s.abs());
            }
        }
        w
    }
}

/// `Λ(fg) − fΛ(g)` for scalar boundary fields `f` and `g`. The product rule
/// bound applies to the Laplacian map.
pub fn product_commutator<T: Scalar>(dtn: &DtN<'_, T>, f: &BoundaryField<T>, g: &BoundaryField<T>) -> Result<BoundaryField<T>> {
    let fg = g.mul_scalar_field(f);
    let lfg = dtn.apply(&fg)?;
    let lg = dtn.apply(g)?;
    Ok(lfg.sub(&lg.mul_scalar_field(f)))
}

/// `Λ(x_i f) − x_i Λ(f)`.
pub fn coordinate_commutator<T: Scalar>(dtn: &DtN<'_, T>, f: &BoundaryField<T>, i: usize) -> Result<BoundaryField<T>> {
    let mesh = dtn.mesh();
    let xi = BoundaryField::from_fn(mesh, 1, |x, o| o[0] = x[i]);
    product_commutator(dtn, &xi, f)
}

/// Boundary operators needed by the Dirichlet-to-Neumann expansion, for
/// `m = 1` and symmetric `A`.
pub struct DtnExpansion<'a, T: Scalar> {
    pub lambda_eps: DtN<'a, T>,
    pub lambda_0: DtN<'a, T>,
    pub omega: BoundaryField<T>,
    /// `t_j Λ_ε(x_j)`.
    t_lambda_eps_x: BoundaryField<T>,
    /// `t_j Λ₀(ω x_j) − t_j x_j Λ₀(ω)`.
    t_commutator: BoundaryField<T>,
    lambda_0_omega: BoundaryField<T>,
}

fn tangent_contract<T: Scalar>(mesh: &SquareMesh, f: impl Fn(usize, usize) -> T) -> BoundaryField<T> {
    let mut out = BoundaryField::zeros(mesh, 1);
    for pos in (0..mesh.num_boundary()).filter(|&p| !mesh.is_corner(p)) {
        let t = SquareMesh::edge_tangent::<T>(mesh.edge(pos));
        out.values_mut()[pos] = t[0] * f(pos, 0) + t[1] * f(pos, 1);
    }
    fill_corners(mesh, &mut out);
    out
}

impl<'a, T: Scalar> DtnExpansion<'a, T> {
    pub fn new(lambda_eps: DtN<'a, T>, lambda_0: DtN<'a, T>, omega: BoundaryField<T>) -> Result<Self> {
        if lambda_eps.components() != 1 || omega.components() != 1 {
            return Err(Error::Unsupported("the Dirichlet-to-Neumann expansion is scalar".into()));
        }
        if !lambda_eps.op.is_symmetric() {
            return Err(Error::Unsupported("the Dirichlet-to-Neumann expansion needs a symmetric coefficient".into()));
        }
        let mesh = lambda_eps.mesh();
        let lx = [lambda_eps.apply_coordinate(0, 0)?, lambda_eps.apply_coordinate(1, 0)?];
        let t_lambda_eps_x = tangent_contract(mesh, |pos, j| lx[j].at(pos, 0));
        let lambda_0_omega = lambda_0.apply(&omega)?;
        let mut lox = Vec::with_capacity(2);
        for j in 0..2 {
            let xj = BoundaryField::from_fn(mesh, 1, |x, o| o[0] = x[j]);
            let l = lambda_0.apply(&omega.mul_scalar_field(&xj))?;
            lox.push(l.sub(&lambda_0_omega.mul_scalar_field(&xj)));
        }
        let t_commutator = tangent_contract(mesh, |pos, j| lox[j].at(pos, 0));
        Ok(Self { lambda_eps, lambda_0, omega, t_lambda_eps_x, t_commutator, lambda_0_omega })
    }

    /// `Λ_ε f − ∂_s f t_jΛ_ε(x_j) + ω[fΛ₀(ω) − Λ₀(ωf)] + ω ∂_s f [t_jΛ₀(ωx_j) − t_j x_jΛ₀(ω)]`,
    /// using `n_i ∂f/∂t_ij = t_j ∂_s f`.
    pub fn defect(&self, f: &BoundaryField<T>) -> Result<BoundaryField<T>> {
        let mesh = self.lambda_eps.mesh();
        let ds = arc_derivative(mesh, f);
        let lf = self.lambda_eps.apply(f)?;
        let l0wf = self.lambda_0.apply(&self.omega.mul_scalar_field(f))?;
        let mut out = BoundaryField::zeros(mesh, 1);
        for pos in 0..mesh.num_boundary() {
            let (fv, dv, w) = (f.at(pos, 0), ds.at(pos, 0), self.omega.at(pos, 0));
            out.values_mut()[pos] = lf.at(pos, 0) - dv * self.t_lambda_eps_x.at(pos, 0)
                + w * (fv * self.lambda_0_omega.at(pos, 0) - l0wf.at(pos, 0))
                + w * dv * self.t_commutator.at(pos, 0);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_inverse() {
        let a = [4.0f64, 1.0, 2.0, 3.0];
        let inv = invert_small(&a, 2).unwrap();
        let prod = [a[0] * inv[0] + a[1] * inv[2], a[0] * inv[1] + a[1] * inv[3], a[2] * inv[0] + a[3] * inv[2], a[2] * inv[1] + a[3] * inv[3]];
        for (p, e) in prod.iter().zip([1.0, 0.0, 0.0, 1.0]) {
            assert!((p - e).abs() < 1e-14);
        }
        assert!(invert_small(&[1.0f64, 2.0, 2.0, 4.0], 2).is_none());
    }

    #[test]
    fn separation_threshold() {
        let mesh = SquareMesh::new(64).unwrap();
        let y = mesh.node(32, 32);
        assert!(!separated(&mesh, mesh.node(34, 32), y));
        assert!(separated(&mesh, mesh.node(36, 32), y));
    }
}
