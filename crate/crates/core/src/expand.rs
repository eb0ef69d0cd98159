//! First-order expansions `w_ε = u_ε − u₀ − (V − P)·∇u₀`, the interior and
//! conormal identities they satisfy, and the approximation results built on
//! correctors: boundary-data and divergence-data approximations and the
//! `S_ε` operator expansion.

use crate::cell::CellSolution;
use crate::coeff::{tensor_index, ScaledCoefficient, TensorField};
use crate::correctors::{linear_monomial, CorrectorSet};
use crate::error::{Error, Result};
use crate::kernels::OmegaTable;
use crate::mesh::{
    gradient_qp, interpolate_qp, lumped_dual_norm, norm, qp_norm, recover_gradient, recover_hessian, tensor_qp,
    AssembledOperator, BoundaryField, Field, NormKind, QpField, Source, SquareMesh, StructuredGrid,
};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrectorFamily {
    /// `V = P + εχ(x/ε)`.
    Chi,
    /// `V = Φ_ε`.
    Dirichlet,
    /// `V = Ψ_ε`.
    Neumann,
}

impl std::str::FromStr for CorrectorFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chi" => Ok(Self::Chi),
            "dirichlet" => Ok(Self::Dirichlet),
            "neumann" => Ok(Self::Neumann),
            _ => Err(Error::InvalidParameter(format!("unknown corrector family `{s}` (chi, dirichlet, neumann)"))),
        }
    }
}

/// `εχ(x/ε)` columns on the square, index `k·m + γ`.
pub fn scaled_cell_correctors<T: Scalar>(mesh: &SquareMesh, cell: &CellSolution<T>, epsilon: T) -> Vec<Field<T>> {
    let m = cell.m();
    let mut cols = Vec::with_capacity(2 * m);
    let mut buf = vec![T::zero(); m];
    for k in 0..2 {
        for gamma in 0..m {
            let mut vals = vec![T::zero(); mesh.num_nodes() * m];
            for node in 0..mesh.num_nodes() {
                let x = mesh.coords::<T>(node);
                cell.chi_at([x[0] / epsilon, x[1] / epsilon], k, gamma, &mut buf);
                for (c, v) in buf.iter().enumerate() {
                    vals[node * m + c] = epsilon * *v;
                }
            }
            cols.push(Field::new(m, vals).expect("consistent layout"));
        }
    }
    cols
}

#[derive(Clone, Debug)]
pub struct Expansion<T> {
    pub mesh: SquareMesh,
    pub epsilon: T,
    pub family: CorrectorFamily,
    pub u_eps: Field<T>,
    pub u0: Field<T>,
    /// `V_k^{·γ} − P_k^{·γ}`, column `k·m + γ`.
    pub correction: Vec<Field<T>>,
    /// `∂_k u₀^γ`, component `γ·2 + k`.
    pub grad_u0: Field<T>,
    /// `∂_j ∂_k u₀^γ`, component `(γ·2 + k)·2 + j`.
    pub hess_u0: Field<T>,
    pub w: Field<T>,
}

/// Where the correctors `V` come from.
#[derive(Clone, Copy)]
pub enum CorrectorSource<'a, T> {
    Cell(&'a CellSolution<T>),
    Set(&'a CorrectorSet<T>),
}

/// Builds `w_ε` for the chosen family. Derivatives of `u₀` come from nodal
/// gradient recovery, applied twice for the Hessian.
pub fn build_expansion<T: Scalar>(
    mesh: &SquareMesh,
    epsilon: T,
    u_eps: Field<T>,
    u0: Field<T>,
    family: CorrectorFamily,
    source: CorrectorSource<'_, T>,
) -> Result<Expansion<T>> {
    let m = u0.components();
    if u_eps.components() != m || u_eps.num_nodes() != mesh.num_nodes() || u0.num_nodes() != mesh.num_nodes() {
        return Err(Error::Shape("u_eps and u0 must live on the same mesh".into()));
    }
    let correction = match (family, source) {
        (CorrectorFamily::Chi, CorrectorSource::Cell(cell)) => {
            if cell.m() != m {
                return Err(Error::Shape("cell solution has a different m".into()));
            }
            scaled_cell_correctors(mesh, cell, epsilon)
        }
        (CorrectorFamily::Dirichlet | CorrectorFamily::Neumann, CorrectorSource::Set(set)) => {
            let cols = if family == CorrectorFamily::Dirichlet {
                &set.phi
            } else {
                set.psi.as_ref().ok_or_else(|| Error::Precondition("corrector set has no Neumann correctors".into()))?
            };
            if set.m != m || set.mesh.n() != mesh.n() {
                return Err(Error::Shape("corrector set does not match the fields".into()));
            }
            let mut out = Vec::with_capacity(2 * m);
            for k in 0..2 {
                for gamma in 0..m {
                    out.push(cols[k * m + gamma].sub(&linear_monomial(mesh, m, k, gamma)));
                }
            }
            out
        }
        (f, _) => return Err(Error::Precondition(format!("family {f:?} needs a different corrector source"))),
    };
    Ok(Expansion::from_parts(mesh, epsilon, family, u_eps, u0, correction))
}

impl<T: Scalar> Expansion<T> {
    pub fn from_parts(
        mesh: &SquareMesh,
        epsilon: T,
        family: CorrectorFamily,
        u_eps: Field<T>,
        u0: Field<T>,
        correction: Vec<Field<T>>,
    ) -> Self {
        let grad_u0 = recover_gradient(mesh, &u0);
        let hess_u0 = recover_hessian(mesh, &u0);
        let w = Self::assemble_w(&u_eps, &u0, &correction, &grad_u0);
        Self { mesh: mesh.clone(), epsilon, family, u_eps, u0, correction, grad_u0, hess_u0, w }
    }

    fn assemble_w(u_eps: &Field<T>, u0: &Field<T>, correction: &[Field<T>], grad_u0: &Field<T>) -> Field<T> {
        let m = u0.components();
        let mut w = u_eps.sub(u0);
        for node in 0..u0.num_nodes() {
            let g = grad_u0.node_values(node);
            for k in 0..2 {
                for gamma in 0..m {
                    let c = correction[k * m + gamma].node_values(node);
                    let d = g[gamma * 2 + k];
                    for alpha in 0..m {
                        w.values_mut()[node * m + alpha] -= c[alpha] * d;
                    }
                }
            }
        }
        w
    }

    pub fn components(&self) -> usize {
        self.u0.components()
    }

    /// Rebuilds `w` from the stored parts.
    pub fn rebuild_w(&self) -> Field<T> {
        Self::assemble_w(&self.u_eps, &self.u0, &self.correction, &self.grad_u0)
    }

    /// `∂_i u_ε^α − ∂_i V_k^{αγ} ∂_k u₀^γ` at every node (component `α·2 + i`),
    /// from recovered gradients.
    pub fn gradient_comparison(&self) -> Field<T> {
        let m = self.components();
        let gu = recover_gradient(&self.mesh, &self.u_eps);
        let gv: Vec<Field<T>> = self.correction.iter().map(|c| recover_gradient(&self.mesh, c)).collect();
        let mut out = gu;
        for node in 0..self.mesh.num_nodes() {
            let g0 = self.grad_u0.node_values(node);
            for alpha in 0..m {
                for i in 0..2 {
                    let mut s = T::zero();
                    for k in 0..2 {
                        for gamma in 0..m {
                            // ∇V = ∇(V − P) + ∇P
                            let dv = gv[k * m + gamma].at(node, alpha * 2 + i)
                                + if alpha == gamma && i == k { T::one() } else { T::zero() };
                            s += dv * g0[gamma * 2 + k];
                        }
                    }
                    out.values_mut()[node * 2 * m + alpha * 2 + i] -= s;
                }
            }
        }
        out
    }

    /// Divergence data `f_i^α` and volume data `g^α` of the right side of
    /// the interior identity, at quadrature points.
    fn identity_terms(&self, coeff: &ScaledCoefficient<T>, cell: &CellSolution<T>) -> Result<(QpField<T>, QpField<T>)> {
        let m = self.components();
        if coeff.components() != m || cell.m() != m {
            return Err(Error::Shape("coefficient, cell and expansion disagree on m".into()));
        }
        let mesh = &self.mesh;
        let eps = self.epsilon;
        let t = 4 * m * m;
        let a = tensor_qp(coeff, mesh);
        let hess = interpolate_qp(mesh, &self.hess_u0);
        let corr: Vec<QpField<T>> = self.correction.iter().map(|c| interpolate_qp(mesh, c)).collect();
        // ∂_j [V − P − εχ(x/ε)]
        let chi = scaled_cell_correctors(mesh, cell, eps);
        let defect: Vec<QpField<T>> = self.correction.iter().zip(&chi).map(|(c, x)| gradient_qp(mesh, &c.sub(x))).collect();
        let ne = mesh.num_elements();
        let mut f = QpField::zeros(2 * m, ne);
        let mut g = QpField::zeros(m, ne);
        let mut flux = vec![T::zero(); 2 * t];
        let n = mesh.n();
        let h = mesh.h::<T>();
        for e in 0..ne {
            let (ei, ej) = (e % n, e / n);
            for q in 0..4 {
                let p = 4 * e + q;
                let off = crate::mesh::qp_offset::<T>(q);
                let x = [(T::from_usize_lossy(ei) + off[0]) * h, (T::from_usize_lossy(ej) + off[1]) * h];
                cell.flux_at([x[0] / eps, x[1] / eps], &mut flux);
                let ap = &a.values()[p * t..(p + 1) * t];
                let hp = &hess.values()[p * 4 * m..(p + 1) * 4 * m];
                let d2 = |gamma: usize, j: usize, k: usize| hp[(gamma * 2 + k) * 2 + j];
                for alpha in 0..m {
                    for i in 0..2 {
                        let mut s = T::zero();
                        for gamma in 0..m {
                            for j in 0..2 {
                                for k in 0..2 {
                                    // ε F_jik^{αγ}
                                    s += eps * flux[j * t + tensor_index(2, m, i, alpha, k, gamma)] * d2(gamma, j, k);
                                    for beta in 0..m {
                                        let c = corr[k * m + gamma].values()[p * m + beta];
                                        s += ap[tensor_index(2, m, i, alpha, j, beta)] * c * d2(gamma, j, k);
                                    }
                                }
                            }
                        }
                        f.values_mut()[p * 2 * m + alpha * 2 + i] = s;
                    }
                    let mut s = T::zero();
                    for i in 0..2 {
                        for j in 0..2 {
                            for beta in 0..m {
                                for k in 0..2 {
                                    for gamma in 0..m {
                                        let dd = defect[k * m + gamma].values()[p * 2 * m + beta * 2 + j];
                                        s += ap[tensor_index(2, m, i, alpha, j, beta)] * dd * d2(gamma, i, k);
                                    }
                                }
                            }
                        }
                    }
                    g.values_mut()[p * m + alpha] = s;
                }
            }
        }
        Ok((f, g))
    }

    /// Weak mismatch of the interior identity
    /// `L_ε w = ε∂_i{F_jik ∂_jk u₀} + ∂_i{a_ij (V_k − P_k) ∂_jk u₀} + a_ij ∂_j[V_k − P_k − εχ_k] ∂_ik u₀`
    /// against interior hats, as a lumped dual norm. `op` must be the `L_ε`
    /// operator on the expansion mesh; only its matrix is used.
    pub fn residual_identity_check(
        &self,
        op: &AssembledOperator<T>,
        coeff: &ScaledCoefficient<T>,
        cell: &CellSolution<T>,
    ) -> Result<IdentityResidual<T>> {
        let (f, g) = self.identity_terms(coeff, cell)?;
        let rhs = op.load_vector(&Source::zero().divergence(f).volume_qp(g))?;
        let lhs = op.apply(&self.w);
        let m = self.components();
        let interior: Vec<usize> = (0..self.mesh.num_nodes())
            .filter(|&node| !self.mesh.is_boundary(node))
            .flat_map(|node| (0..m).map(move |c| node * m + c))
            .collect();
        let h = self.mesh.h::<T>();
        let r: Vec<T> = lhs.iter().zip(&rhs).map(|(a, b)| *a - *b).collect();
        Ok(IdentityResidual {
            mismatch: lumped_dual_norm(&r, interior.iter().copied(), h),
            lhs: lumped_dual_norm(&lhs, interior.iter().copied(), h),
        })
    }

    /// Boundary mismatch of the conormal identity
    /// `∂w/∂ν_ε = ∂u_ε/∂ν_ε − ∂u₀/∂ν₀ − n_i a_ij (V_k − P_k) ∂_kj u₀`
    /// for the Neumann family. `∂w/∂ν_ε` is the variational flux of `w` under
    /// the interior identity's source, minus the normal part of its
    /// divergence data. `op_eps`, `op_0` are `L_ε`, `L₀`; `source` is the
    /// common right side of `L_ε u_ε = L₀ u₀`. Corners are skipped.
    pub fn conormal_identity_check(
        &self,
        op_eps: &AssembledOperator<T>,
        op_0: &AssembledOperator<T>,
        source: &Source<T>,
        coeff: &ScaledCoefficient<T>,
        cell: &CellSolution<T>,
    ) -> Result<BoundaryResidual<T>> {
        if self.family != CorrectorFamily::Neumann {
            return Err(Error::Precondition("the conormal identity needs the Neumann family".into()));
        }
        let mesh = &self.mesh;
        let m = self.components();
        let eps = self.epsilon;
        let t = 4 * m * m;
        let (f, g) = self.identity_terms(coeff, cell)?;
        let lhs_var = op_eps.conormal(&self.w, &Source::zero().divergence(f).volume_qp(g))?;
        let due = op_eps.conormal(&self.u_eps, source)?;
        let du0 = op_0.conormal(&self.u0, source)?;
        let mut out = BoundaryField::zeros(mesh, m);
        let mut a = vec![T::zero(); t];
        let mut flux = vec![T::zero(); 2 * t];
        for pos in (0..mesh.num_boundary()).filter(|&p| !mesh.is_corner(p)) {
            let node = mesh.boundary_nodes()[pos];
            let nrm = mesh.normal::<T>(pos).expect("edge node");
            let x = mesh.coords::<T>(node);
            coeff.eval(&x, &mut a);
            cell.flux_at([x[0] / eps, x[1] / eps], &mut flux);
            let hv = self.hess_u0.node_values(node);
            let d2 = |gamma: usize, j: usize, k: usize| hv[(gamma * 2 + k) * 2 + j];
            for alpha in 0..m {
                // n_i a_ij^{αβ} (V_k − P_k)^{βγ} ∂_jk u₀^γ and ε n_i F_jik^{αγ} ∂_jk u₀^γ
                let (mut corr, mut fterm) = (T::zero(), T::zero());
                for i in 0..2 {
                    for j in 0..2 {
                        for k in 0..2 {
                            for gamma in 0..m {
                                fterm += eps * nrm[i] * flux[j * t + tensor_index(2, m, i, alpha, k, gamma)] * d2(gamma, j, k);
                                for beta in 0..m {
                                    let c = self.correction[k * m + gamma].at(node, beta);
                                    corr += nrm[i] * a[tensor_index(2, m, i, alpha, j, beta)] * c * d2(gamma, j, k);
                                }
                            }
                        }
                    }
                }
                let dw = lhs_var.at(pos, alpha) - fterm - corr;
                let rhs = due.at(pos, alpha) - du0.at(pos, alpha) - corr;
                out.values_mut()[pos * m + alpha] = dw - rhs;
            }
        }
        let l2 = crate::mesh::boundary_lp(mesh, &out, 2.0, 1)?;
        Ok(BoundaryResidual { max: out.max_abs(), l2, field: out })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityResidual<T> {
    /// Dual norm of `L_ε w − (right side)`.
    pub mismatch: T,
    /// Dual norm of `L_ε w` alone, for scale.
    pub lhs: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryResidual<T> {
    pub max: T,
    pub l2: T,
    pub field: BoundaryField<T>,
}

/// `u_ε` and its approximation `v_ε` with the `L¹` and `L²` norms of the gap.
#[derive(Clone, Debug)]
pub struct Approximation<T> {
    pub u_eps: Field<T>,
    pub v_eps: Field<T>,
    pub l1: T,
    pub l2: T,
}

impl<T: Scalar> Approximation<T> {
    fn new(mesh: &SquareMesh, u_eps: Field<T>, v_eps: Field<T>) -> Result<Self> {
        let d = u_eps.sub(&v_eps);
        Ok(Self { l1: norm(mesh, &d, NormKind::Lp(1.0))?, l2: norm(mesh, &d, NormKind::Lp(2.0))?, u_eps, v_eps })
    }

    pub fn lp(&self, mesh: &SquareMesh, p: f64) -> Result<T> {
        norm(mesh, &self.u_eps.sub(&self.v_eps), NormKind::Lp(p))
    }
}

/// `L_ε u_ε = 0, u_ε = f_ε` against `L₀ v_ε = 0, v_ε = ω_ε f_ε` on `∂Ω`.
pub fn poisson_approx<T: Scalar>(
    op_eps: &AssembledOperator<T>,
    op_0: &AssembledOperator<T>,
    omega: &OmegaTable<T>,
    f_eps: &BoundaryField<T>,
) -> Result<Approximation<T>> {
    let mesh = op_eps.mesh()?;
    let m = op_eps.components();
    if omega.m() != m || f_eps.components() != m {
        return Err(Error::Shape("ω and boundary data must match the system size".into()));
    }
    let mut wf = BoundaryField::zeros(mesh, m);
    for pos in 0..mesh.num_boundary() {
        for gamma in 0..m {
            let v = (0..m).map(|beta| omega.omega.at(pos, gamma * m + beta) * f_eps.at(pos, beta)).sum();
            wf.values_mut()[pos * m + gamma] = v;
        }
    }
    let u = op_eps.solve_dirichlet(&Source::zero(), f_eps)?;
    let v = op_0.solve_dirichlet(&Source::zero(), &wf)?;
    Approximation::new(mesh, u, v)
}

/// `L_ε u_ε = div f` against `L₀ v_ε = div F_ε` with
/// `F_{ε,i}^α = f_j^β ∂_j Φ*_{ε,i}^{βα}`, both with zero Dirichlet data.
/// `f` is given at quadrature points, component `α·2 + i`.
pub fn divergence_data_approx<T: Scalar>(
    op_eps: &AssembledOperator<T>,
    op_0: &AssembledOperator<T>,
    phi_star: &[Field<T>],
    f: &QpField<T>,
) -> Result<Approximation<T>> {
    let mesh = op_eps.mesh()?;
    let m = op_eps.components();
    if phi_star.len() != 2 * m || f.components() != 2 * m {
        return Err(Error::Shape("corrector columns or divergence data have the wrong size".into()));
    }
    let grads: Vec<QpField<T>> = phi_star.iter().map(|p| gradient_qp(mesh, p)).collect();
    let mut big = QpField::zeros(2 * m, mesh.num_elements());
    let npts = 4 * mesh.num_elements();
    for p in 0..npts {
        let fp = &f.values()[p * 2 * m..(p + 1) * 2 * m];
        for i in 0..2 {
            for alpha in 0..m {
                let gi = &grads[i * m + alpha].values()[p * 2 * m..(p + 1) * 2 * m];
                let s = (0..m).flat_map(|beta| (0..2).map(move |j| (beta, j))).map(|(beta, j)| fp[beta * 2 + j] * gi[beta * 2 + j]).sum();
                big.values_mut()[p * 2 * m + alpha * 2 + i] = s;
            }
        }
    }
    let zero = BoundaryField::zeros(mesh, m);
    let u = op_eps.solve_dirichlet(&Source::zero().divergence(f.clone()), &zero)?;
    let v = op_0.solve_dirichlet(&Source::zero().divergence(big), &zero)?;
    Approximation::new(mesh, u, v)
}

/// `S_ε(g)` for `m = 1` at quadrature points:
/// `∂_i u − ∂_iΦ_k ∂_k v₁ + (∂_iΦ_k ∂_k v₂)·g` where `L_ε u = ∂_j g`,
/// `L₀ v₁ = div(g ∇_jΦ*)` and `L₀ v₂ = div(∇_jΦ*)`, the vector fields
/// `∇_jΦ*` having components `∂_jΦ*_ℓ`. All solves use zero Dirichlet data.
pub fn s_epsilon<T: Scalar>(
    op_eps: &AssembledOperator<T>,
    op_0: &AssembledOperator<T>,
    phi: &[Field<T>],
    phi_star: &[Field<T>],
    g: &Field<T>,
    i: usize,
    j: usize,
) -> Result<QpField<T>> {
    if op_eps.components() != 1 || phi.len() != 2 || phi_star.len() != 2 || g.components() != 1 {
        return Err(Error::Unsupported("S_ε is implemented for scalar equations".into()));
    }
    if i > 1 || j > 1 {
        return Err(Error::InvalidParameter(format!("derivative indices ({i}, {j}) out of range")));
    }
    let mesh = op_eps.mesh()?;
    let ne = mesh.num_elements();
    let npts = 4 * ne;
    let gq = interpolate_qp(mesh, g);
    let dphi: Vec<QpField<T>> = phi.iter().map(|p| gradient_qp(mesh, p)).collect();
    let dstar: Vec<QpField<T>> = phi_star.iter().map(|p| gradient_qp(mesh, p)).collect();
    let mut fj = QpField::zeros(2, ne);
    let mut d1 = QpField::zeros(2, ne);
    let mut d2 = QpField::zeros(2, ne);
    for p in 0..npts {
        let gv = gq.values()[p];
        fj.values_mut()[p * 2 + j] = gv;
        for l in 0..2 {
            let s = dstar[l].values()[p * 2 + j];
            d1.values_mut()[p * 2 + l] = gv * s;
            d2.values_mut()[p * 2 + l] = s;
        }
    }
    let zero = BoundaryField::zeros(mesh, 1);
    let u = op_eps.solve_dirichlet(&Source::zero().divergence(fj), &zero)?;
    let v1 = op_0.solve_dirichlet(&Source::zero().divergence(d1), &zero)?;
    let v2 = op_0.solve_dirichlet(&Source::zero().divergence(d2), &zero)?;
    let (du, dv1, dv2) = (gradient_qp(mesh, &u), gradient_qp(mesh, &v1), gradient_qp(mesh, &v2));
    let mut out = QpField::zeros(1, ne);
    for p in 0..npts {
        let mut s1 = T::zero();
        let mut s2 = T::zero();
        for k in 0..2 {
            let dik = dphi[k].values()[p * 2 + i];
            s1 += dik * dv1.values()[p * 2 + k];
            s2 += dik * dv2.values()[p * 2 + k];
        }
        out.values_mut()[p] = du.values()[p * 2 + i] - s1 + s2 * gq.values()[p];
    }
    Ok(out)
}

/// `‖S‖_{L^q(Ω)}` by Gauss quadrature.
pub fn s_epsilon_norm<T: Scalar>(mesh: &SquareMesh, s: &QpField<T>, q: f64) -> T {
    qp_norm(mesh, s, q)
}
