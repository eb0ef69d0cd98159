use std::f64::consts::PI;

use homoglab_core::cell::CellSolution;
use homoglab_core::coeff::{constant, layered, rescale, user_matrix, CoefficientField, ConstantTensor};
use homoglab_core::correctors::CorrectorSet;
use homoglab_core::expand::{
    build_expansion, divergence_data_approx, poisson_approx, s_epsilon, s_epsilon_norm, CorrectorFamily,
    CorrectorSource,
};
use homoglab_core::kernels::omega;
use homoglab_core::mesh::{
    assemble, norm, AssembledOperator, BoundaryField, Field, Mode, NormKind, QpField, SolverKind, Source, SquareMesh, StructuredGrid,
};

struct Setup {
    eps: f64,
    mesh: SquareMesh,
    coeff: homoglab_core::coeff::ScaledCoefficient<f64>,
    cell: CellSolution<f64>,
    set: CorrectorSet<f64>,
}

fn setup(a: &CoefficientField<f64>, eps: f64, cpp: usize, pin: bool) -> Setup {
    let cell = CellSolution::compute(a, cpp).unwrap();
    let mesh = SquareMesh::new((1.0 / eps).round() as usize * cpp).unwrap();
    let coeff = rescale(a, eps).unwrap();
    let pin = pin.then(|| mesh.center_node());
    let set = CorrectorSet::compute(&coeff, &cell.hat_a, &mesh, pin, SolverKind::Direct).unwrap();
    Setup { eps, mesh, coeff, cell, set }
}

fn ops(s: &Setup, mode: Mode) -> (AssembledOperator<f64>, AssembledOperator<f64>) {
    let grid = s.mesh.clone().into();
    (assemble(&s.coeff, &grid, mode).unwrap(), assemble(&s.cell.hat_a, &grid, mode).unwrap())
}

fn hat_parts(hat: &ConstantTensor<f64>) -> (f64, f64) {
    let v = hat.values();
    (v[0] + v[3], v[1] + v[2])
}

/// Load whose homogenized Dirichlet solution is `sin πx sin πy`.
fn dirichlet_load(mesh: &SquareMesh, hat: &ConstantTensor<f64>) -> Source<f64> {
    let (tr, off) = hat_parts(hat);
    let f = Field::scalar_from_fn(mesh, |x: [f64; 2]| {
        let (s1, s2, c1, c2) = ((PI * x[0]).sin(), (PI * x[1]).sin(), (PI * x[0]).cos(), (PI * x[1]).cos());
        PI * PI * (tr * s1 * s2 - off * c1 * c2)
    });
    Source::zero().volume(f)
}

/// Load whose homogenized Neumann solution is `cos πx cos πy` (zero flux).
fn neumann_load(mesh: &SquareMesh, hat: &ConstantTensor<f64>) -> Source<f64> {
    let (tr, off) = hat_parts(hat);
    let f = Field::scalar_from_fn(mesh, |x: [f64; 2]| {
        let (s1, s2, c1, c2) = ((PI * x[0]).sin(), (PI * x[1]).sin(), (PI * x[0]).cos(), (PI * x[1]).cos());
        PI * PI * (tr * c1 * c2 - off * s1 * s2)
    });
    Source::zero().volume(f)
}

fn dirichlet_pair(s: &Setup, src: &Source<f64>) -> (Field<f64>, Field<f64>, AssembledOperator<f64>) {
    let (ope, op0) = ops(s, Mode::Dirichlet);
    let g = BoundaryField::zeros(&s.mesh, 1);
    let ue = ope.solve_dirichlet(src, &g).unwrap();
    let u0 = op0.solve_dirichlet(src, &g).unwrap();
    (ue, u0, ope)
}

fn dirichlet_mismatch(cpp: usize) -> f64 {
    let a = layered(2.0, 1.0).unwrap();
    let s = setup(&a, 0.125, cpp, false);
    let (ue, u0, ope) = dirichlet_pair(&s, &dirichlet_load(&s.mesh, &s.cell.hat_a));
    let e = build_expansion(&s.mesh, s.eps, ue, u0, CorrectorFamily::Dirichlet, CorrectorSource::Set(&s.set)).unwrap();
    e.residual_identity_check(&ope, &s.coeff, &s.cell).unwrap().mismatch
}

fn conormal_max(cpp: usize) -> f64 {
    let a = layered(2.0, 1.0).unwrap();
    let s = setup(&a, 0.125, cpp, true);
    let src = neumann_load(&s.mesh, &s.cell.hat_a);
    let (ope, op0) = ops(&s, Mode::Neumann);
    let g = BoundaryField::zeros(&s.mesh, 1);
    let ue = ope.solve_neumann(&src, &g).unwrap();
    let u0 = op0.solve_neumann(&src, &g).unwrap();
    let e = build_expansion(&s.mesh, s.eps, ue, u0, CorrectorFamily::Neumann, CorrectorSource::Set(&s.set)).unwrap();
    e.conormal_identity_check(&ope, &op0, &src, &s.coeff, &s.cell).unwrap().max
}

#[test]
fn constant_coefficients_make_everything_vanish() {
    let a = constant(2, 1, vec![2.0, 0.3, 0.3, 1.5]).unwrap();
    let s = setup(&a, 0.125, 8, true);
    let src = dirichlet_load(&s.mesh, &s.cell.hat_a);
    let (ue, u0, ope) = dirichlet_pair(&s, &src);
    let (opd, op0d) = ops(&s, Mode::Dirichlet);
    for (fam, source) in [
        (CorrectorFamily::Chi, CorrectorSource::Cell(&s.cell)),
        (CorrectorFamily::Dirichlet, CorrectorSource::Set(&s.set)),
        (CorrectorFamily::Neumann, CorrectorSource::Set(&s.set)),
    ] {
        let e = build_expansion(&s.mesh, s.eps, ue.clone(), u0.clone(), fam, source).unwrap();
        assert!(e.w.max_abs() <= 1e-10, "{fam:?}");
        if fam != CorrectorFamily::Neumann {
            let r = e.residual_identity_check(&ope, &s.coeff, &s.cell).unwrap();
            assert!(r.mismatch <= 1e-8, "{fam:?}: {}", r.mismatch);
        }
    }
    let chi = build_expansion(&s.mesh, s.eps, ue.clone(), u0.clone(), CorrectorFamily::Chi, CorrectorSource::Cell(&s.cell)).unwrap();
    assert!(chi.w.max_abs_diff(&ue.sub(&u0)) <= 1e-12);

    // cos πx cos πy only has zero flux for a diagonal tensor
    let sn = setup(&constant(2, 1, vec![2.0, 0.0, 0.0, 1.5]).unwrap(), 0.125, 8, true);
    let nsrc = neumann_load(&sn.mesh, &sn.cell.hat_a);
    let (opn, op0n) = ops(&sn, Mode::Neumann);
    let g = BoundaryField::zeros(&sn.mesh, 1);
    let un = opn.solve_neumann(&nsrc, &g).unwrap();
    let e = build_expansion(&sn.mesh, sn.eps, un.clone(), un, CorrectorFamily::Neumann, CorrectorSource::Set(&sn.set)).unwrap();
    let r = e.conormal_identity_check(&opn, &op0n, &nsrc, &sn.coeff, &sn.cell).unwrap();
    assert!(r.max <= 1e-8, "{}", r.max);

    let f = QpField::from_fn(&s.mesh, 2, |x: [f64; 2], o: &mut [f64]| {
        o[0] = (PI * x[1]).sin();
        o[1] = x[0] * x[1];
    });
    let d = divergence_data_approx(&opd, &op0d, &s.set.phi_star, &f).unwrap();
    assert!(d.l2 <= 1e-10 && d.l1 <= 1e-10);
    let g = Field::scalar_from_fn(&s.mesh, |x: [f64; 2]| (2.0 * PI * x[0]).sin() + x[1]);
    for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let se = s_epsilon(&opd, &op0d, &s.set.phi, &s.set.phi_star, &g, i, j).unwrap();
        assert!(s_epsilon_norm(&s.mesh, &se, f64::INFINITY) <= 1e-8, "({i},{j})");
    }
}

#[test]
fn identity_coefficient_gives_exact_poisson_approximation() {
    let a = constant(2, 1, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    let s = setup(&a, 0.125, 8, false);
    let (ope, op0) = ops(&s, Mode::Dirichlet);
    let adj = assemble(&s.coeff.adjoint(), &s.mesh.clone().into(), Mode::Dirichlet).unwrap();
    let om = omega(&adj, &s.set.phi_star, &s.cell.hat_a).unwrap();
    let f = BoundaryField::from_fn(&s.mesh, 1, |x: [f64; 2], o: &mut [f64]| o[0] = (2.0 * PI * x[0] / s.eps).cos() * x[1]);
    let r = poisson_approx(&ope, &op0, &om, &f).unwrap();
    assert!(r.lp(&s.mesh, f64::INFINITY).unwrap() <= 1e-10);
}

#[test]
fn dirichlet_family_vanishes_on_boundary_and_is_reproducible() {
    let a = layered(2.0, 1.0).unwrap();
    let s = setup(&a, 0.125, 8, false);
    let g = BoundaryField::from_fn(&s.mesh, 1, |x: [f64; 2], o: &mut [f64]| o[0] = x[0] * x[0] - x[1]);
    let (ope, op0) = ops(&s, Mode::Dirichlet);
    let src = Source::zero().volume(Field::scalar_from_fn(&s.mesh, |_| 1.0));
    let ue = ope.solve_dirichlet(&src, &g).unwrap();
    let u0 = op0.solve_dirichlet(&src, &g).unwrap();
    let e = build_expansion(&s.mesh, s.eps, ue, u0, CorrectorFamily::Dirichlet, CorrectorSource::Set(&s.set)).unwrap();
    for &node in s.mesh.boundary_nodes() {
        assert_eq!(e.w.at(node, 0), 0.0);
    }
    assert_eq!(e.rebuild_w().values(), e.w.values());
}

#[test]
fn wrong_source_for_family_is_rejected() {
    let a = layered(2.0, 1.0).unwrap();
    let s = setup(&a, 0.125, 8, false);
    let u = Field::scalar_from_fn(&s.mesh, |_| 0.0);
    assert!(build_expansion(&s.mesh, s.eps, u.clone(), u.clone(), CorrectorFamily::Chi, CorrectorSource::Set(&s.set)).is_err());
    assert!(build_expansion(&s.mesh, s.eps, u.clone(), u.clone(), CorrectorFamily::Dirichlet, CorrectorSource::Cell(&s.cell)).is_err());
    // Ψ only exists for symmetric coefficients
    let skew = user_matrix(["2", "0.5", "-0.5", "2"]).unwrap();
    let s = setup(&skew, 0.125, 8, false);
    assert!(s.set.psi.is_none());
    assert!(build_expansion(&s.mesh, s.eps, u.clone(), u, CorrectorFamily::Neumann, CorrectorSource::Set(&s.set)).is_err());
}

#[test]
fn boundary_correctors_beat_cell_correctors_in_energy() {
    let a = layered(2.0, 1.0).unwrap();
    let s = setup(&a, 1.0 / 16.0, 16, false);
    let src = Source::zero().volume(Field::scalar_from_fn(&s.mesh, |_| 1.0));
    let (ue, u0, _) = dirichlet_pair(&s, &src);
    let d = build_expansion(&s.mesh, s.eps, ue.clone(), u0.clone(), CorrectorFamily::Dirichlet, CorrectorSource::Set(&s.set)).unwrap();
    let c = build_expansion(&s.mesh, s.eps, ue, u0, CorrectorFamily::Chi, CorrectorSource::Cell(&s.cell)).unwrap();
    let nd = norm(&s.mesh, &d.w, NormKind::W1p(2.0)).unwrap();
    let nc = norm(&s.mesh, &c.w, NormKind::W1p(2.0)).unwrap();
    assert!(nd < nc, "dirichlet {nd} vs chi {nc}");
}

#[test]
fn interior_identity_converges_under_refinement() {
    let coarse = dirichlet_mismatch(16);
    let fine = dirichlet_mismatch(32);
    assert!(fine / coarse <= 0.6, "{coarse} -> {fine}");
}

#[test]
fn cell_family_identity_reduces_to_flux_term() {
    let a = layered(2.0, 1.0).unwrap();
    let run = |cpp| {
        let s = setup(&a, 0.125, cpp, false);
        let (ue, u0, ope) = dirichlet_pair(&s, &dirichlet_load(&s.mesh, &s.cell.hat_a));
        let e = build_expansion(&s.mesh, s.eps, ue, u0, CorrectorFamily::Chi, CorrectorSource::Cell(&s.cell)).unwrap();
        e.residual_identity_check(&ope, &s.coeff, &s.cell).unwrap()
    };
    let (c, f) = (run(16), run(32));
    assert!(f.mismatch / c.mismatch <= 0.6, "{} -> {}", c.mismatch, f.mismatch);
    assert!(f.mismatch <= 0.1 * f.lhs);
}

#[test]
fn conormal_identity_converges_under_refinement() {
    let coarse = conormal_max(16);
    let fine = conormal_max(32);
    assert!(fine / coarse <= 0.6, "{coarse} -> {fine}");
}

#[test]
fn conormal_identity_ignores_constant_shifts() {
    let a = layered(2.0, 1.0).unwrap();
    let s = setup(&a, 0.125, 8, true);
    let src = neumann_load(&s.mesh, &s.cell.hat_a);
    let (ope, op0) = ops(&s, Mode::Neumann);
    let g = BoundaryField::zeros(&s.mesh, 1);
    let ue = ope.solve_neumann(&src, &g).unwrap();
    let u0 = op0.solve_neumann(&src, &g).unwrap();
    let mut shifted = ue.clone();
    shifted.values_mut().iter_mut().for_each(|v| *v += 3.5);
    let r = |u: Field<f64>| {
        let e = build_expansion(&s.mesh, s.eps, u, u0.clone(), CorrectorFamily::Neumann, CorrectorSource::Set(&s.set)).unwrap();
        e.conormal_identity_check(&ope, &op0, &src, &s.coeff, &s.cell).unwrap().field
    };
    assert!(r(ue).sub(&r(shifted)).max_abs() <= 1e-10);
}

#[test]
fn s_epsilon_annihilates_constants() {
    let a = layered(2.0, 1.0).unwrap();
    let s = setup(&a, 0.125, 8, false);
    let (ope, op0) = ops(&s, Mode::Dirichlet);
    let one = Field::scalar_from_fn(&s.mesh, |_| 1.0);
    for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let se = s_epsilon(&ope, &op0, &s.set.phi, &s.set.phi_star, &one, i, j).unwrap();
        assert!(s_epsilon_norm(&s.mesh, &se, f64::INFINITY) <= 1e-8);
    }
    let g = Field::scalar_from_fn(&s.mesh, |x: [f64; 2]| (2.0 * PI * x[0]).sin());
    let se = s_epsilon(&ope, &op0, &s.set.phi, &s.set.phi_star, &g, 0, 0).unwrap();
    assert!(s_epsilon_norm(&s.mesh, &se, 1.5) > 1e-3);
}

#[test]
fn zero_divergence_data_gives_zero() {
    let a = layered(2.0, 1.0).unwrap();
    let s = setup(&a, 0.125, 8, false);
    let (ope, op0) = ops(&s, Mode::Dirichlet);
    let f = QpField::zeros(2, s.mesh.num_elements());
    let d = divergence_data_approx(&ope, &op0, &s.set.phi_star, &f).unwrap();
    assert_eq!(d.u_eps.max_abs(), 0.0);
    assert_eq!(d.v_eps.max_abs(), 0.0);
}
