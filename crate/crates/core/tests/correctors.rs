use homoglab_core::cell::CellSolution;
use homoglab_core::coeff::{constant, layered, rescale, user_matrix, ConstantTensor};
use homoglab_core::correctors::{corrector_report, linear_monomial, CorrectorSet};
use homoglab_core::mesh::{SolverKind, SquareMesh};

const CPP: usize = 8;

fn sweep(ks: &[usize]) -> Vec<(f64, CorrectorSet<f64>, CellSolution<f64>)> {
    let a = layered(2.0, 1.0).unwrap();
    let cell = CellSolution::compute(&a, CPP).unwrap();
    ks.iter()
        .map(|&k| {
            let eps = 1.0 / k as f64;
            let mesh = SquareMesh::new(k * CPP).unwrap();
            let set = CorrectorSet::compute(&rescale(&a, eps).unwrap(), &cell.hat_a, &mesh, None, SolverKind::Direct).unwrap();
            (eps, set, cell.clone())
        })
        .collect()
}

#[test]
fn dirichlet_corrector_distance_halves_with_epsilon() {
    let runs = sweep(&[8, 16, 32]);
    let d: Vec<f64> = runs.iter().map(|(_, s, _)| s.phi[0].max_abs_diff(&linear_monomial(&s.mesh, 1, 0, 0))).collect();
    for w in d.windows(2) {
        let r = w[1] / w[0];
        assert!((r - 0.5).abs() <= 0.15, "ratios from {d:?}");
    }
    for (_, s, _) in &runs {
        assert_eq!(s.boundary_defect(), 0.0);
        assert_eq!(s.pin_defect(), Some(0.0));
        assert!(s.phi.iter().zip(&s.phi_star).all(|(a, b)| a.max_abs_diff(b) <= 1e-10));
    }
}

#[test]
fn report_ratios_stay_bounded() {
    let runs = sweep(&[8, 16, 32]);
    let mut phi = Vec::new();
    let mut psi = Vec::new();
    let mut grad = Vec::new();
    let mut layer = Vec::new();
    for (eps, set, cell) in &runs {
        let r = corrector_report(set, cell).unwrap();
        phi.push(r.phi_diff_max() / eps);
        psi.push(r.psi_diff_max().unwrap() / (eps * (1.0 / eps + 2.0).ln()));
        grad.push(r.phi[0].grad_max);
        layer.push(r.phi[0].layer_weighted_max);
    }
    let spread = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread(&phi) <= 3.0, "{phi:?}");
    assert!(spread(&psi) <= 3.0, "{psi:?}");
    assert!(grad.windows(2).all(|w| (w[1] / w[0] - 1.0).abs() <= 0.2), "{grad:?}");
    assert!(spread(&layer) <= 3.0, "{layer:?}");
}

#[test]
fn constant_coefficient_reports_vanish() {
    let vals = vec![1.5, 0.2, 0.2, 1.0];
    let a = constant::<f64>(2, 1, vals.clone()).unwrap();
    let cell = CellSolution::compute(&a, 8).unwrap();
    let mesh = SquareMesh::new(32).unwrap();
    let set = CorrectorSet::compute(&rescale(&a, 0.125).unwrap(), &cell.hat_a, &mesh, None, SolverKind::Direct).unwrap();
    let r = corrector_report(&set, &cell).unwrap();
    for c in r.phi.iter().chain(r.psi.as_ref().unwrap()) {
        assert!(c.diff_max < 1e-10 && c.first_order_grad_max < 1e-9 && c.layer_weighted_max < 1e-9, "{c:?}");
    }
}

#[test]
fn nonsymmetric_constant_coefficient_has_monomial_adjoint_correctors() {
    let a = user_matrix::<f64>(["2", "0.5", "-0.5", "1"]).unwrap();
    let hat = ConstantTensor::new(2, 1, vec![2.0, 0.5, -0.5, 1.0]).unwrap();
    let mesh = SquareMesh::new(16).unwrap();
    let set = CorrectorSet::compute(&rescale(&a, 0.25).unwrap(), &hat, &mesh, None, SolverKind::Direct).unwrap();
    assert!(set.psi.is_none());
    for j in 0..2 {
        let p = linear_monomial::<f64>(&mesh, 1, j, 0);
        assert!(set.phi_star[j].max_abs_diff(&p) < 1e-12);
    }
}

#[test]
fn system_correctors_for_block_diagonal_tensor() {
    // Two decoupled copies of the same scalar operator.
    let mut vals = vec![0.0; 16];
    for c in 0..2 {
        for i in 0..2 {
            vals[(c * 2 + i) * 4 + c * 2 + i] = 1.0;
        }
    }
    let a = constant::<f64>(2, 2, vals).unwrap();
    let cell = CellSolution::compute(&a, 8).unwrap();
    let mesh = SquareMesh::new(16).unwrap();
    let set = CorrectorSet::compute(&rescale(&a, 0.25).unwrap(), &cell.hat_a, &mesh, None, SolverKind::Direct).unwrap();
    for j in 0..2 {
        for beta in 0..2 {
            let p = linear_monomial::<f64>(&mesh, 2, j, beta);
            assert!(set.phi_column(j, beta).max_abs_diff(&p) < 1e-12);
        }
    }
}
