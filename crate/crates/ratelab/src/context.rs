//! Shared state of a sweep. [`Problem`] holds what is independent of `ε`;
//! [`EpsContext`] builds operators, correctors and common solves for one `ε`
//! on first use, so experiments run together share the factorizations.

use std::cell::OnceCell;
use std::f64::consts::PI;

use homoglab_core::cell::CellSolution;
use homoglab_core::coeff::{rescale, CoefficientField, ConstantTensor, ScaledCoefficient, TensorField};
use homoglab_core::correctors::CorrectorSet;
use homoglab_core::kernels::{green, neumann_fn, omega, OmegaTable};
use homoglab_core::mesh::{assemble_with, AssembledOperator, BoundaryField, Field, Mode, Source, SquareMesh};

use crate::config::Settings;
use crate::{Error, Result};

fn lazy<V>(cell: &OnceCell<V>, f: impl FnOnce() -> Result<V>) -> Result<&V> {
    if let Some(v) = cell.get() {
        return Ok(v);
    }
    let v = f()?;
    Ok(cell.get_or_init(|| v))
}

pub struct Problem {
    pub settings: Settings,
    pub coeff: CoefficientField<f64>,
    /// Cell solution on the same number of cells per period as the sweep
    /// grids, so `χ(x/ε)` is sampled at its own nodes.
    pub cell: CellSolution<f64>,
}

impl Problem {
    pub fn new(settings: Settings) -> Result<Self> {
        let coeff = settings.coefficient.build()?;
        if coeff.components() != 1 {
            return Err(Error::Config("the rate experiments are implemented for scalar equations (m = 1)".into()));
        }
        let cell = CellSolution::compute(&coeff, settings.cells_per_period)?;
        Ok(Self { settings, coeff, cell })
    }

    pub fn symmetric(&self) -> bool {
        self.coeff.is_symmetric()
    }

    pub fn hat(&self) -> &ConstantTensor<f64> {
        &self.cell.hat_a
    }
}

/// A pair `(u_ε, u₀)` solved with the same data.
pub struct Pair {
    pub eps: Field<f64>,
    pub zero: Field<f64>,
}

pub struct EpsContext<'p> {
    pub problem: &'p Problem,
    pub eps: f64,
    pub mesh: SquareMesh,
    pub scaled: ScaledCoefficient<f64>,
    dir: OnceCell<AssembledOperator<f64>>,
    adj: OnceCell<AssembledOperator<f64>>,
    neu: OnceCell<AssembledOperator<f64>>,
    dir0: OnceCell<AssembledOperator<f64>>,
    adj0: OnceCell<AssembledOperator<f64>>,
    neu0: OnceCell<AssembledOperator<f64>>,
    set: OnceCell<CorrectorSet<f64>>,
    omega: OnceCell<OmegaTable<f64>>,
    green: OnceCell<Pair>,
    neumann_fn: OnceCell<Pair>,
    dirichlet_pair: OnceCell<Pair>,
    neumann_pair: OnceCell<(Pair, Source<f64>)>,
}

impl<'p> EpsContext<'p> {
    pub fn new(problem: &'p Problem, eps: f64) -> Result<Self> {
        let mesh = SquareMesh::new(problem.settings.elements(eps))?;
        let scaled = rescale(&problem.coeff, eps)?;
        Ok(Self {
            problem,
            eps,
            mesh,
            scaled,
            dir: OnceCell::new(),
            adj: OnceCell::new(),
            neu: OnceCell::new(),
            dir0: OnceCell::new(),
            adj0: OnceCell::new(),
            neu0: OnceCell::new(),
            set: OnceCell::new(),
            omega: OnceCell::new(),
            green: OnceCell::new(),
            neumann_fn: OnceCell::new(),
            dirichlet_pair: OnceCell::new(),
            neumann_pair: OnceCell::new(),
        })
    }

    pub fn h(&self) -> f64 {
        self.mesh.h::<f64>()
    }

    fn build(&self, coeff: &dyn TensorField<f64>, mode: Mode) -> Result<AssembledOperator<f64>> {
        Ok(assemble_with(coeff, &self.mesh.clone().into(), mode, self.problem.settings.solver)?)
    }

    pub fn op_dir(&self) -> Result<&AssembledOperator<f64>> {
        lazy(&self.dir, || self.build(&self.scaled, Mode::Dirichlet))
    }

    /// Dirichlet operator of the adjoint coefficient; the primal one when
    /// `A` is symmetric.
    pub fn op_adj(&self) -> Result<&AssembledOperator<f64>> {
        if self.problem.symmetric() {
            return self.op_dir();
        }
        lazy(&self.adj, || self.build(&self.scaled.adjoint(), Mode::Dirichlet))
    }

    /// `None` for non-symmetric coefficients, where the Neumann objects are
    /// not defined.
    pub fn op_neu(&self) -> Result<Option<&AssembledOperator<f64>>> {
        if !self.problem.symmetric() {
            return Ok(None);
        }
        lazy(&self.neu, || self.build(&self.scaled, Mode::Neumann)).map(Some)
    }

    pub fn op0_dir(&self) -> Result<&AssembledOperator<f64>> {
        lazy(&self.dir0, || self.build(self.problem.hat(), Mode::Dirichlet))
    }

    pub fn op0_adj(&self) -> Result<&AssembledOperator<f64>> {
        if self.problem.hat().asymmetry() == 0.0 {
            return self.op0_dir();
        }
        lazy(&self.adj0, || self.build(&self.problem.hat().transpose(), Mode::Dirichlet))
    }

    pub fn op0_neu(&self) -> Result<&AssembledOperator<f64>> {
        lazy(&self.neu0, || self.build(self.problem.hat(), Mode::Neumann))
    }

    /// Frees the Neumann factorizations once the Neumann experiments are done.
    pub fn release_neumann(&self) {
        if let Some(op) = self.neu.get() {
            op.release_factorization();
        }
        if let Some(op) = self.neu0.get() {
            op.release_factorization();
        }
    }

    pub fn correctors(&self) -> Result<&CorrectorSet<f64>> {
        lazy(&self.set, || {
            let adj = if self.problem.symmetric() { None } else { Some(self.op_adj()?) };
            let pin = self.problem.settings.pin.map(|p| self.node_at(p));
            Ok(CorrectorSet::from_operators(self.eps, self.op_dir()?, adj, self.op_neu()?, self.problem.hat(), pin)?)
        })
    }

    pub fn omega(&self) -> Result<&OmegaTable<f64>> {
        lazy(&self.omega, || Ok(omega(self.op_adj()?, &self.correctors()?.phi_star, self.problem.hat())?))
    }

    pub fn node_at(&self, x: [f64; 2]) -> usize {
        self.mesh.nearest_node(x)
    }

    /// `G_ε(·, y)` and `G₀(·, y)` for the configured `y`.
    pub fn green_columns(&self) -> Result<&Pair> {
        lazy(&self.green, || {
            let y = self.node_at(self.problem.settings.y);
            Ok(Pair { eps: green(self.op_dir()?, y, 0)?, zero: green(self.op0_dir()?, y, 0)? })
        })
    }

    /// `N_ε(·, y)` and `N₀(·, y)`; `None` for non-symmetric coefficients.
    pub fn neumann_columns(&self) -> Result<Option<&Pair>> {
        let Some(op) = self.op_neu()? else { return Ok(None) };
        lazy(&self.neumann_fn, || {
            let y = self.node_at(self.problem.settings.y);
            Ok(Pair { eps: neumann_fn(op, y, 0)?, zero: neumann_fn(self.op0_neu()?, y, 0)? })
        })
        .map(Some)
    }

    /// Dirichlet problem with `F ≡ 1` and zero boundary data.
    pub fn dirichlet_pair(&self) -> Result<&Pair> {
        lazy(&self.dirichlet_pair, || {
            let src = Source::zero().volume(Field::scalar_from_fn(&self.mesh, |_| 1.0));
            let zero = BoundaryField::zeros(&self.mesh, 1);
            Ok(Pair { eps: self.op_dir()?.solve_dirichlet(&src, &zero)?, zero: self.op0_dir()?.solve_dirichlet(&src, &zero)? })
        })
    }

    /// Neumann problem with load `π² (â₁₁ + â₂₂) cos πx₁ cos πx₂` and zero
    /// flux, projected onto compatible data. Returns the pair and the common
    /// source.
    pub fn neumann_pair(&self) -> Result<Option<&(Pair, Source<f64>)>> {
        let Some(op) = self.op_neu()? else { return Ok(None) };
        lazy(&self.neumann_pair, || {
            let v = self.problem.hat().values();
            let tr = v[0] + v[3];
            let f = Field::scalar_from_fn(&self.mesh, |x: [f64; 2]| PI * PI * tr * (PI * x[0]).cos() * (PI * x[1]).cos());
            let src = Source::zero().volume(f);
            let flux = compatible_flux(op, &src, &self.mesh)?;
            let pair = Pair { eps: op.solve_neumann(&src, &flux)?, zero: self.op0_neu()?.solve_neumann(&src, &flux)? };
            Ok((pair, src))
        })
        .map(Some)
    }
}

/// Constant boundary flux that makes `src` compatible: the discrete load
/// plus the boundary integral of the flux must vanish.
pub fn compatible_flux(op: &AssembledOperator<f64>, src: &Source<f64>, mesh: &SquareMesh) -> Result<BoundaryField<f64>> {
    let total: f64 = op.load_vector(src)?.iter().sum();
    let perimeter: f64 = (0..mesh.num_boundary()).map(|p| mesh.boundary_weight::<f64>(p)).sum();
    let c = -total / perimeter;
    Ok(BoundaryField::from_fn(mesh, 1, |_, o| o[0] = c))
}
