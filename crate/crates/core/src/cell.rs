//! The periodic cell problem and the objects built from it: correctors `χ`,
//! the homogenized tensor `Â`, the discrepancy `b = Â − A − A∇χ` and the
//! antisymmetric flux corrector `F` with `∂_k F_kij = b_ij`.

use crate::coeff::{tensor_index, CoefficientField, ConstantTensor, TensorField};
use crate::error::{Error, Result};
use crate::mesh::{
    assemble, gradient_qp, interpolate_qp, lumped_dual_norm, recover_gradient, tensor_qp, AssembledOperator, Field,
    Mode, QpField, Source, StructuredGrid, TorusGrid,
};
use crate::scalar::Scalar;

/// Cell correctors: column `j·m + β` holds `χ_j^{·β}` as an `m`-component field.
#[derive(Clone, Debug)]
pub struct CellCorrectors<T> {
    pub grid: TorusGrid,
    pub m: usize,
    pub chi: Vec<Field<T>>,
}

impl<T: Scalar> CellCorrectors<T> {
    pub fn column(&self, j: usize, beta: usize) -> &Field<T> {
        &self.chi[j * self.m + beta]
    }

    /// Largest `|∫_Y χ_j^{γβ}|` over all columns and components.
    pub fn max_mean(&self) -> T {
        self.chi
            .iter()
            .flat_map(|c| c.torus_mean(&self.grid))
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// The discrepancy tensor at quadrature points (exact integrals) and as a
/// nodal table.
#[derive(Clone, Debug)]
pub struct Discrepancy<T> {
    pub qp: QpField<T>,
    pub nodal: Field<T>,
}

#[derive(Clone, Debug)]
pub struct FluxCorrector<T> {
    /// `f_ij^{αβ}`, component `tensor_index(i, α, j, β)`.
    pub f: Field<T>,
    /// `F_kij^{αβ}`, component `k·(dm)² + tensor_index(i, α, j, β)`.
    pub flux: Field<T>,
}

/// Everything the cell problem produces for one coefficient field.
#[derive(Clone, Debug)]
pub struct CellSolution<T> {
    pub correctors: CellCorrectors<T>,
    pub hat_a: ConstantTensor<T>,
    pub b: Discrepancy<T>,
    pub flux: FluxCorrector<T>,
}

fn check_coeff<T: Scalar>(coeff: &CoefficientField<T>) -> Result<()> {
    if coeff.dim() != 2 {
        return Err(Error::Unsupported(format!("cell grids are two-dimensional, got d = {}", coeff.dim())));
    }
    Ok(())
}

/// Mean-zero periodic solutions of `L₁ χ_j^β = −L₁ P_j^β`, i.e.
/// `−div(A∇χ_j^β) = div(A e_j^β)`, on an `n × n` torus grid.
pub fn solve_cell<T: Scalar>(coeff: &CoefficientField<T>, n: usize) -> Result<CellCorrectors<T>> {
    check_coeff(coeff)?;
    if n < 8 {
        return Err(Error::InvalidParameter(format!("cell grid needs n >= 8, got {n}")));
    }
    let grid = TorusGrid::new(n)?;
    let op = assemble(coeff, &grid.clone().into(), Mode::Periodic)?;
    let a = tensor_qp(coeff, &grid);
    let m = coeff.components();
    let dm = 2 * m;
    let mut chi = Vec::with_capacity(dm);
    for j in 0..2 {
        for beta in 0..m {
            let mut data = QpField::zeros(dm, grid.num_elements());
            for (dst, src) in data.values_mut().chunks_mut(dm).zip(a.values().chunks(dm * dm)) {
                for alpha in 0..m {
                    for i in 0..2 {
                        dst[alpha * 2 + i] = src[tensor_index(2, m, i, alpha, j, beta)];
                    }
                }
            }
            chi.push(op.solve_periodic(&Source::zero().divergence(data))?);
        }
    }
    Ok(CellCorrectors { grid, m, chi })
}

/// `Σ_{k,γ} a_ik^{αγ} ∂_k χ_j^{γβ}` at every quadrature point, in tensor layout.
fn a_grad_chi<T: Scalar>(a: &QpField<T>, cc: &CellCorrectors<T>) -> QpField<T> {
    let m = cc.m;
    let dm = 2 * m;
    let t = dm * dm;
    let grads: Vec<QpField<T>> = cc.chi.iter().map(|c| gradient_qp(&cc.grid, c)).collect();
    let mut out = QpField::zeros(t, cc.grid.num_elements());
    let npts = a.values().len() / t;
    let vals = out.values_mut();
    for p in 0..npts {
        let ap = &a.values()[p * t..(p + 1) * t];
        for j in 0..2 {
            for beta in 0..m {
                let g = &grads[j * m + beta].values()[p * dm..(p + 1) * dm];
                for i in 0..2 {
                    for alpha in 0..m {
                        let mut s = T::zero();
                        for k in 0..2 {
                            for gamma in 0..m {
                                s += ap[tensor_index(2, m, i, alpha, k, gamma)] * g[gamma * 2 + k];
                            }
                        }
                        vals[p * t + tensor_index(2, m, i, alpha, j, beta)] = s;
                    }
                }
            }
        }
    }
    out
}

/// `â_ij^{αβ} = ∫_Y [a_ij^{αβ} + a_ik^{αγ} ∂_k χ_j^{γβ}]` by quadrature.
pub fn homogenize<T: Scalar>(coeff: &CoefficientField<T>, cc: &CellCorrectors<T>) -> Result<ConstantTensor<T>> {
    check_coeff(coeff)?;
    if coeff.components() != cc.m {
        return Err(Error::Shape("correctors and coefficient disagree on m".into()));
    }
    let a = tensor_qp(coeff, &cc.grid);
    let agc = a_grad_chi(&a, cc);
    let ia = a.integral(&cc.grid);
    let ig = agc.integral(&cc.grid);
    let hat = ConstantTensor::new(2, cc.m, ia.iter().zip(&ig).map(|(x, y)| *x + *y).collect())?;
    if !coeff.is_symmetric() {
        return Ok(hat);
    }
    // Â is symmetric with A; drop the round-off asymmetry so downstream
    // symmetric solvers accept it.
    let t = hat.transpose();
    ConstantTensor::new(2, cc.m, hat.values().iter().zip(t.values()).map(|(a, b)| (*a + *b) * T::lit(0.5)).collect())
}

/// `b_ij^{αβ} = â_ij^{αβ} − a_ij^{αβ} − a_ik^{αγ} ∂_k χ_j^{γβ}`.
///
/// The quadrature-point values integrate to zero exactly (up to round-off)
/// because `Â` is defined by the same quadrature. The nodal table uses
/// recovered gradients and is shifted to zero nodal mean.
pub fn discrepancy<T: Scalar>(
    coeff: &CoefficientField<T>,
    cc: &CellCorrectors<T>,
    hat_a: &ConstantTensor<T>,
) -> Result<Discrepancy<T>> {
    check_coeff(coeff)?;
    let m = cc.m;
    let t = 4 * m * m;
    let a = tensor_qp(coeff, &cc.grid);
    let agc = a_grad_chi(&a, cc);
    let mut qp = QpField::zeros(t, cc.grid.num_elements());
    for ((dst, av), gv) in qp.values_mut().chunks_mut(t).zip(a.values().chunks(t)).zip(agc.values().chunks(t)) {
        for c in 0..t {
            dst[c] = hat_a.values()[c] - av[c] - gv[c];
        }
    }

    let grid = &cc.grid;
    let rec: Vec<Field<T>> = cc.chi.iter().map(|c| recover_gradient(grid, c)).collect();
    let mut nodal = vec![T::zero(); grid.num_nodes() * t];
    let mut an = vec![T::zero(); t];
    for node in 0..grid.num_nodes() {
        coeff.eval(&grid.coords(node), &mut an);
        let out = &mut nodal[node * t..(node + 1) * t];
        for i in 0..2 {
            for alpha in 0..m {
                for j in 0..2 {
                    for beta in 0..m {
                        let g = rec[j * m + beta].node_values(node);
                        let mut s = an[tensor_index(2, m, i, alpha, j, beta)];
                        for k in 0..2 {
                            for gamma in 0..m {
                                s += an[tensor_index(2, m, i, alpha, k, gamma)] * g[gamma * 2 + k];
                            }
                        }
                        let c = tensor_index(2, m, i, alpha, j, beta);
                        out[c] = hat_a.values()[c] - s;
                    }
                }
            }
        }
    }
    let mut nodal = Field::new(t, nodal)?;
    let mean = nodal.torus_mean(grid);
    for (k, v) in nodal.values_mut().iter_mut().enumerate() {
        *v -= mean[k % t];
    }
    Ok(Discrepancy { qp, nodal })
}

/// Solves `Δ f_ij^{αβ} = b_ij^{αβ}` (periodic, mean zero) and forms
/// `F_kij^{αβ} = ∂_k f_ij^{αβ} − ∂_i f_kj^{αβ}` from recovered gradients,
/// stored exactly antisymmetric in `(k, i)`.
pub fn flux_corrector<T: Scalar>(b: &Discrepancy<T>, grid: &TorusGrid, m: usize) -> Result<FluxCorrector<T>> {
    let t = 4 * m * m;
    if b.qp.components() != t || b.qp.num_elements() != grid.num_elements() {
        return Err(Error::Shape("discrepancy does not match the grid".into()));
    }
    let means = b.qp.integral(grid);
    let worst = means.iter().fold(T::zero(), |mx, v| mx.max(v.abs()));
    // quadrature round-off grows with the data and the working precision
    let scale = T::one().max(b.qp.values().iter().fold(T::zero(), |mx, v| mx.max(v.abs())));
    let tol = T::lit(1e-6).max(T::lit(1e4) * T::epsilon()) * scale;
    if worst > tol {
        return Err(Error::Precondition(format!("discrepancy has mean {worst}, expected zero")));
    }
    let lap = laplacian(grid)?;
    let mut f = vec![T::zero(); grid.num_nodes() * t];
    let mut grad = vec![T::zero(); grid.num_nodes() * t * 2];
    for c in 0..t {
        let data: Vec<T> = b.qp.values().iter().skip(c).step_by(t).map(|&v| -v).collect();
        let fc = lap.solve_periodic(&Source::zero().volume_qp(QpField::new(1, data)?))?;
        let gc = recover_gradient(grid, &fc);
        for node in 0..grid.num_nodes() {
            f[node * t + c] = fc.at(node, 0);
            grad[(node * t + c) * 2] = gc.at(node, 0);
            grad[(node * t + c) * 2 + 1] = gc.at(node, 1);
        }
    }
    let mut flux = vec![T::zero(); grid.num_nodes() * 2 * t];
    for node in 0..grid.num_nodes() {
        let d = |k: usize, i: usize, alpha: usize, j: usize, beta: usize| -> T {
            grad[(node * t + tensor_index(2, m, i, alpha, j, beta)) * 2 + k]
        };
        let out = &mut flux[node * 2 * t..(node + 1) * 2 * t];
        for alpha in 0..m {
            for j in 0..2 {
                for beta in 0..m {
                    // k = 0, i = 1 and its mirror; diagonal (k = i) entries stay zero.
                    let v = d(0, 1, alpha, j, beta) - d(1, 0, alpha, j, beta);
                    out[tensor_index(2, m, 1, alpha, j, beta)] = v;
                    out[t + tensor_index(2, m, 0, alpha, j, beta)] = -v;
                }
            }
        }
    }
    Ok(FluxCorrector { f: Field::new(t, f)?, flux: Field::new(2 * t, flux)? })
}

fn laplacian<T: Scalar>(grid: &TorusGrid) -> Result<AssembledOperator<T>> {
    assemble(&ConstantTensor::identity(2, 1), &grid.clone().into(), Mode::Periodic)
}

impl<T: Scalar> CellSolution<T> {
    /// Runs the whole cell pipeline on an `n × n` torus grid.
    pub fn compute(coeff: &CoefficientField<T>, n: usize) -> Result<Self> {
        let correctors = solve_cell(coeff, n)?;
        let hat_a = homogenize(coeff, &correctors)?;
        let b = discrepancy(coeff, &correctors, &hat_a)?;
        let flux = flux_corrector(&b, &correctors.grid, correctors.m)?;
        Ok(Self { correctors, hat_a, b, flux })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.correctors.grid
    }

    pub fn m(&self) -> usize {
        self.correctors.m
    }

    fn tensor_len(&self) -> usize {
        4 * self.m() * self.m()
    }

    /// `χ_j^{·β}(y)` by bilinear interpolation, `y` reduced into the cell.
    pub fn chi_at(&self, y: [T; 2], j: usize, beta: usize, out: &mut [T]) {
        self.correctors.column(j, beta).interpolate_periodic(self.grid(), y, out);
    }

    /// `F_kij^{αβ}(y)` by bilinear interpolation.
    pub fn flux_at(&self, y: [T; 2], out: &mut [T]) {
        self.flux.flux.interpolate_periodic(self.grid(), y, out);
    }

    /// Largest `|∫_Y b_ij^{αβ}|` from the quadrature-point values.
    pub fn b_mean(&self) -> T {
        self.b.qp.integral(self.grid()).iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Largest `|F_kij^{αβ} + F_ikj^{αβ}|` over the stored table.
    pub fn flux_antisymmetry(&self) -> T {
        let t = self.tensor_len();
        let m = self.m();
        let mut w = T::zero();
        for node in 0..self.grid().num_nodes() {
            let v = self.flux.flux.node_values(node);
            for k in 0..2 {
                for i in 0..2 {
                    for alpha in 0..m {
                        for j in 0..2 {
                            for beta in 0..m {
                                let a = v[k * t + tensor_index(2, m, i, alpha, j, beta)];
                                let b = v[i * t + tensor_index(2, m, k, alpha, j, beta)];
                                w = w.max((a + b).abs());
                            }
                        }
                    }
                }
            }
        }
        w
    }

    /// Largest weak residual of `∂_k F_kij^{αβ} = b_ij^{αβ}`: for each
    /// entry, `r_a = ∫ F_k ∂_k φ_a + ∫ b φ_a` over all torus hats, reported
    /// as the lumped dual norm.
    pub fn flux_divergence_residual(&self) -> Result<T> {
        let grid = self.grid();
        let t = self.tensor_len();
        let lap = laplacian::<T>(grid)?;
        let fq = interpolate_qp(grid, &self.flux.flux);
        let npts = 4 * grid.num_elements();
        let h = grid.h::<T>();
        let mut worst = T::zero();
        for c in 0..t {
            let mut div = Vec::with_capacity(2 * npts);
            for p in 0..npts {
                let v = &fq.values()[p * 2 * t..(p + 1) * 2 * t];
                div.push(-v[c]);
                div.push(-v[t + c]);
            }
            let bq: Vec<T> = self.b.qp.values().iter().skip(c).step_by(t).copied().collect();
            let src = Source::zero().volume_qp(QpField::new(1, bq)?).divergence(QpField::new(2, div)?);
            let r = lap.load_vector(&src)?;
            worst = worst.max(lumped_dual_norm(&r, 0..r.len(), h));
        }
        Ok(worst)
    }

    /// Largest `|∫ b_ij^{αβ} ∂_i φ_a|` over torus hats: the weak form of
    /// `∂_i b_ij = 0`, which the cell equation enforces.
    pub fn b_weak_divergence(&self) -> Result<T> {
        let grid = self.grid();
        let m = self.m();
        let t = self.tensor_len();
        let lap = laplacian::<T>(grid)?;
        let mut worst = T::zero();
        for alpha in 0..m {
            for j in 0..2 {
                for beta in 0..m {
                    let data: Vec<T> = self
                        .b
                        .qp
                        .values()
                        .chunks(t)
                        .flat_map(|v| (0..2).map(move |i| v[tensor_index(2, m, i, alpha, j, beta)]))
                        .collect();
                    let r = lap.load_vector(&Source::zero().divergence(QpField::new(2, data)?))?;
                    worst = worst.max(r.iter().fold(T::zero(), |mx, v| mx.max(v.abs())));
                }
            }
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::constant;

    #[test]
    fn identity_has_trivial_cell_solution() {
        let a = constant::<f64>(2, 1, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let cell = CellSolution::compute(&a, 8).unwrap();
        assert!(cell.correctors.chi.iter().all(|c| c.max_abs() < 1e-13));
        assert!((cell.hat_a.values()[0] - 1.0).abs() < 1e-13);
        assert!(cell.hat_a.values()[1].abs() < 1e-13);
        assert!(cell.b.nodal.max_abs() < 1e-13);
        assert!(cell.flux.flux.max_abs() < 1e-13);
    }

    #[test]
    fn too_coarse_grid_rejected() {
        let a = constant::<f64>(2, 1, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(solve_cell(&a, 4).is_err());
    }

    #[test]
    fn nonzero_mean_discrepancy_rejected() {
        let grid = TorusGrid::new(8).unwrap();
        let qp = QpField::new(4, vec![1.0; 4 * 4 * 64]).unwrap();
        let nodal = Field::new(4, vec![1.0; 4 * 64]).unwrap();
        let err = flux_corrector(&Discrepancy { qp, nodal }, &grid, 1).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }
}
