//! Dirichlet correctors `Φ_ε`, their adjoints `Φ*_ε` and Neumann correctors
//! `Ψ_ε` on the unit square, plus the sup-norm bound report.

use crate::cell::CellSolution;
use crate::coeff::{tensor_index, ConstantTensor, ScaledCoefficient, TensorField};
use crate::error::{Error, Result};
use crate::mesh::{assemble_with, recover_gradient, AssembledOperator, BoundaryField, Field, Mode, SolverKind, Source, SquareMesh, StructuredGrid};
use crate::scalar::Scalar;

/// The linear monomial `P_j^β(x) = x_j e^β` as an `m`-component field.
pub fn linear_monomial<T: Scalar>(mesh: &SquareMesh, m: usize, j: usize, beta: usize) -> Field<T> {
    Field::from_fn(mesh, m, |x, out| {
        out.iter_mut().for_each(|v| *v = T::zero());
        out[beta] = x[j];
    })
}

/// Columns `Φ_j^β` (index `j·m + β`): zero source, boundary data `P_j^β`.
pub fn dirichlet_correctors<T: Scalar>(op: &AssembledOperator<T>) -> Result<Vec<Field<T>>> {
    let mesh = op.mesh()?;
    let m = op.components();
    let mut cols = Vec::with_capacity(2 * m);
    for j in 0..2 {
        for beta in 0..m {
            let g = linear_monomial::<T>(mesh, m, j, beta).trace(mesh);
            cols.push(op.solve_dirichlet(&Source::zero(), &g)?);
        }
    }
    Ok(cols)
}

/// Columns `Ψ_j^β`: zero source, conormal flux `n_i â_ij^{αβ}` (the `L₀`
/// conormal of `P_j^β`), shifted so that `Ψ(x₀) = P(x₀)` at node `pin`.
pub fn neumann_correctors<T: Scalar>(
    op: &AssembledOperator<T>,
    hat_a: &ConstantTensor<T>,
    pin: usize,
) -> Result<Vec<Field<T>>> {
    if !op.is_symmetric() {
        return Err(Error::Unsupported("Neumann correctors need a symmetric coefficient".into()));
    }
    let mesh = op.mesh()?;
    if pin >= mesh.num_nodes() || mesh.is_boundary(pin) {
        return Err(Error::InvalidParameter(format!("pin node {pin} is not an interior node")));
    }
    let m = op.components();
    let x0 = mesh.coords::<T>(pin);
    let mut cols = Vec::with_capacity(2 * m);
    for j in 0..2 {
        for beta in 0..m {
            let flux = BoundaryField::from_normal_fn(mesh, m, |_, n, out| {
                for (alpha, o) in out.iter_mut().enumerate() {
                    *o = (0..2).map(|i| n[i] * hat_a.values()[tensor_index(2, m, i, alpha, j, beta)]).sum();
                }
            });
            let mut psi = op.solve_neumann(&Source::zero(), &flux)?;
            let shift: Vec<T> = (0..m)
                .map(|c| if c == beta { x0[j] - psi.at(pin, c) } else { -psi.at(pin, c) })
                .collect();
            for (k, v) in psi.values_mut().iter_mut().enumerate() {
                *v += shift[k % m];
            }
            // The shift can leave an ulp at the pin; set it exactly.
            for c in 0..m {
                psi.values_mut()[pin * m + c] = if c == beta { x0[j] } else { T::zero() };
            }
            cols.push(psi);
        }
    }
    Ok(cols)
}

#[derive(Clone, Debug)]
pub struct CorrectorSet<T> {
    pub mesh: SquareMesh,
    pub epsilon: T,
    pub m: usize,
    pub phi: Vec<Field<T>>,
    pub phi_star: Vec<Field<T>>,
    /// Present only for symmetric coefficients.
    pub psi: Option<Vec<Field<T>>>,
    pub pin: usize,
}

impl<T: Scalar> CorrectorSet<T> {
    /// Solves every corrector column for `A(x/ε)` on `mesh`. The pin defaults
    /// to the center node. Adjoint columns reuse `phi` when `A* = A`.
    pub fn compute(
        coeff: &ScaledCoefficient<T>,
        hat_a: &ConstantTensor<T>,
        mesh: &SquareMesh,
        pin: Option<usize>,
        solver: SolverKind,
    ) -> Result<Self> {
        let geometry = mesh.clone().into();
        let op = assemble_with(coeff, &geometry, Mode::Dirichlet, solver)?;
        let phi = dirichlet_correctors(&op)?;
        drop(op);
        let phi_star = if coeff.is_symmetric() {
            phi.clone()
        } else {
            dirichlet_correctors(&assemble_with(&coeff.adjoint(), &geometry, Mode::Dirichlet, solver)?)?
        };
        let pin = pin.unwrap_or_else(|| mesh.center_node());
        let psi = if coeff.is_symmetric() {
            let op = assemble_with(coeff, &geometry, Mode::Neumann, solver)?;
            Some(neumann_correctors(&op, hat_a, pin)?)
        } else {
            None
        };
        Ok(Self { mesh: mesh.clone(), epsilon: coeff.epsilon(), m: coeff.components(), phi, phi_star, psi, pin })
    }

    /// Same as [`CorrectorSet::compute`] from operators the caller keeps:
    /// `dirichlet` for `A(x/ε)`, `adjoint` for its adjoint (ignored when the
    /// Dirichlet operator is symmetric) and optionally `neumann`.
    pub fn from_operators(
        epsilon: T,
        dirichlet: &AssembledOperator<T>,
        adjoint: Option<&AssembledOperator<T>>,
        neumann: Option<&AssembledOperator<T>>,
        hat_a: &ConstantTensor<T>,
        pin: Option<usize>,
    ) -> Result<Self> {
        let mesh = dirichlet.mesh()?;
        let phi = dirichlet_correctors(dirichlet)?;
        let phi_star = match (dirichlet.is_symmetric(), adjoint) {
            (true, _) => phi.clone(),
            (false, Some(adj)) => dirichlet_correctors(adj)?,
            (false, None) => return Err(Error::Precondition("non-symmetric coefficient needs the adjoint operator".into())),
        };
        let pin = pin.unwrap_or_else(|| mesh.center_node());
        let psi = neumann.map(|op| neumann_correctors(op, hat_a, pin)).transpose()?;
        Ok(Self { mesh: mesh.clone(), epsilon, m: dirichlet.components(), phi, phi_star, psi, pin })
    }

    pub fn phi_column(&self, j: usize, beta: usize) -> &Field<T> {
        &self.phi[j * self.m + beta]
    }

    /// Largest `|Φ − P|` over boundary nodes; zero up to round-off.
    pub fn boundary_defect(&self) -> T {
        let mut w = T::zero();
        for j in 0..2 {
            for beta in 0..self.m {
                let p = linear_monomial::<T>(&self.mesh, self.m, j, beta);
                let d = self.phi_column(j, beta).sub(&p).trace(&self.mesh);
                w = w.max(d.max_abs());
            }
        }
        w
    }

    /// Largest `|Ψ(x₀) − P(x₀)|`.
    pub fn pin_defect(&self) -> Option<T> {
        let psi = self.psi.as_ref()?;
        let x0 = self.mesh.coords::<T>(self.pin);
        let mut w = T::zero();
        for j in 0..2 {
            for beta in 0..self.m {
                for c in 0..self.m {
                    let p = if c == beta { x0[j] } else { T::zero() };
                    w = w.max((psi[j * self.m + beta].at(self.pin, c) - p).abs());
                }
            }
        }
        Some(w)
    }
}

/// Sup-norm quantities for one corrector column `(j, β)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnBounds<T> {
    pub j: usize,
    pub beta: usize,
    /// `max |∇Φ|` over trusted interior nodes (`dist ≥ 0.1`).
    pub grad_max: T,
    /// `max |Φ − P|` over nodes away from the corners.
    pub diff_max: T,
    /// `max |∇{Φ − P − εχ(x/ε)}|` over trusted interior nodes.
    pub first_order_grad_max: T,
    /// `max |∇{Φ − P − εχ(x/ε)}| · max(1, δ(x)/ε)` over nodes away from the corners.
    pub layer_weighted_max: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrectorReport<T> {
    pub epsilon: T,
    pub phi: Vec<ColumnBounds<T>>,
    pub psi: Option<Vec<ColumnBounds<T>>>,
}

impl<T: Scalar> CorrectorReport<T> {
    fn worst(cols: &[ColumnBounds<T>], f: impl Fn(&ColumnBounds<T>) -> T) -> T {
        cols.iter().map(f).fold(T::zero(), T::max)
    }

    pub fn phi_diff_max(&self) -> T {
        Self::worst(&self.phi, |c| c.diff_max)
    }

    pub fn psi_diff_max(&self) -> Option<T> {
        self.psi.as_ref().map(|p| Self::worst(p, |c| c.diff_max))
    }
}

/// Interior distance beyond which samples are trusted.
pub const TRUSTED_DIST: f64 = 0.1;
/// Nodes closer than this many steps to a corner are excluded from sup norms.
pub const CORNER_MARGIN: usize = 4;

pub(crate) fn away_from_corners(mesh: &SquareMesh, node: usize, steps: usize) -> bool {
    let (i, j) = mesh.node_ij(node);
    let n = mesh.n();
    let di = i.min(n - i);
    let dj = j.min(n - j);
    di.max(dj) >= steps
}

fn column_bounds<T: Scalar>(
    mesh: &SquareMesh,
    u: &Field<T>,
    cell: &CellSolution<T>,
    epsilon: T,
    j: usize,
    beta: usize,
) -> ColumnBounds<T> {
    let m = u.components();
    let p = linear_monomial::<T>(mesh, m, j, beta);
    let diff = u.sub(&p);
    let mut w = diff.clone();
    let mut chi = vec![T::zero(); m];
    for node in 0..mesh.num_nodes() {
        let x = mesh.coords::<T>(node);
        cell.chi_at([x[0] / epsilon, x[1] / epsilon], j, beta, &mut chi);
        for c in 0..m {
            w.values_mut()[node * m + c] -= epsilon * chi[c];
        }
    }
    let gu = recover_gradient(mesh, u);
    let gw = recover_gradient(mesh, &w);
    let mag = |g: &Field<T>, node: usize| g.node_values(node).iter().map(|v| *v * *v).sum::<T>().sqrt();
    let trusted = T::lit(TRUSTED_DIST);
    let (mut grad_max, mut diff_max, mut first, mut layer) = (T::zero(), T::zero(), T::zero(), T::zero());
    for node in 0..mesh.num_nodes() {
        let x = mesh.coords::<T>(node);
        let delta = SquareMesh::dist(x);
        if away_from_corners(mesh, node, CORNER_MARGIN) {
            diff_max = diff_max.max(diff.node_values(node).iter().fold(T::zero(), |a, v| a.max(v.abs())));
            layer = layer.max(mag(&gw, node) * T::one().max(delta / epsilon));
        }
        if delta >= trusted {
            grad_max = grad_max.max(mag(&gu, node));
            first = first.max(mag(&gw, node));
        }
    }
    ColumnBounds { j, beta, grad_max, diff_max, first_order_grad_max: first, layer_weighted_max: layer }
}

/// Bound quantities for every column of `set`, with `χ(x/ε)` interpolated
/// from the cell table.
pub fn corrector_report<T: Scalar>(set: &CorrectorSet<T>, cell: &CellSolution<T>) -> Result<CorrectorReport<T>> {
    if cell.m() != set.m {
        return Err(Error::Shape("cell solution and correctors disagree on m".into()));
    }
    let report = |cols: &[Field<T>]| -> Vec<ColumnBounds<T>> {
        let mut out = Vec::with_capacity(cols.len());
        for j in 0..2 {
            for beta in 0..set.m {
                out.push(column_bounds(&set.mesh, &cols[j * set.m + beta], cell, set.epsilon, j, beta));
            }
        }
        out
    };
    Ok(CorrectorReport { epsilon: set.epsilon, phi: report(&set.phi), psi: set.psi.as_deref().map(report) })
}
