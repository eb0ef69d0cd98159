use std::f64::consts::PI;

use homoglab_core::cell::{homogenize, solve_cell, CellSolution};
use homoglab_core::coeff::{checkerboard, layered, symmetric_eigenvalues, trigonometric, user_matrix, user_scalar};
use homoglab_core::mesh::{recover_gradient, tensor_qp, StructuredGrid};

fn layered_cell(n: usize) -> CellSolution<f64> {
    CellSolution::compute(&layered(2.0, 1.0).unwrap(), n).unwrap()
}

#[test]
fn layered_homogenized_tensor_matches_closed_form() {
    let cell = layered_cell(256);
    let a = cell.hat_a.values();
    assert!((a[0] - 3f64.sqrt()).abs() < 1e-3, "a11 = {}", a[0]);
    assert!((a[3] - 2.0).abs() < 1e-3, "a22 = {}", a[3]);
    assert!(a[1].abs() < 1e-4 && a[2].abs() < 1e-4);
}

#[test]
fn layered_corrector_gradient_is_second_order() {
    // ∂₁χ₁ = √3/a(y₁) − 1 and χ₂ = 0.
    let mut errs = Vec::new();
    for n in [32, 64] {
        let cell = layered_cell(n);
        let grid = cell.grid();
        assert!(cell.correctors.column(1, 0).max_abs() < 1e-10);
        let g = recover_gradient(grid, cell.correctors.column(0, 0));
        let mut err: f64 = 0.0;
        for node in 0..grid.num_nodes() {
            let y = grid.coords::<f64>(node);
            let exact = 3f64.sqrt() / (2.0 + (2.0 * PI * y[0]).sin()) - 1.0;
            err = err.max((g.at(node, 0) - exact).abs());
            assert!(g.at(node, 1).abs() < 1e-9);
        }
        errs.push(err);
    }
    assert!(errs[0] / errs[1] > 3.5, "errors {errs:?}");
}

#[test]
fn layered_discrepancy_and_flux_corrector() {
    let n = 64;
    let cell = layered_cell(n);
    let grid = cell.grid();
    let h = 1.0 / n as f64;
    let c = 40.0 * h * h;
    let mut f_err: f64 = 0.0;
    for node in 0..grid.num_nodes() {
        let y = grid.coords::<f64>(node);
        let s = (2.0 * PI * y[0]).sin();
        let b = cell.b.nodal.node_values(node);
        assert!(b[0].abs() < c && b[1].abs() < c && b[2].abs() < c, "b = {b:?}");
        assert!((b[3] + s).abs() < c, "b22 = {} vs {}", b[3], -s);
        let f = cell.flux.f.node_values(node);
        f_err = f_err.max((f[3] - s / (4.0 * PI * PI)).abs());
        let flux = cell.flux.flux.node_values(node);
        // F_{122}: k = 1, i = 2, j = 2; F_{222} = 0.
        assert!((flux[3] - (2.0 * PI * y[0]).cos() / (2.0 * PI)).abs() < c);
        assert_eq!(flux[4 + 3], 0.0);
    }
    assert!(f_err < c);
    assert_eq!(cell.flux_antisymmetry(), 0.0);
}

#[test]
fn structural_identities_hold() {
    let cell = CellSolution::compute(&trigonometric(2.0, 0.8).unwrap(), 32).unwrap();
    assert!(cell.correctors.max_mean() < 1e-10);
    assert!(cell.b_mean() < 1e-10);
    assert!(cell.hat_a.asymmetry() < 1e-8);
    assert!(cell.b_weak_divergence().unwrap() < 1e-10);
    assert_eq!(cell.flux_antisymmetry(), 0.0);
}

#[test]
fn flux_divergence_residual_decays_with_h() {
    let field = trigonometric(2.0, 0.8).unwrap();
    let r1 = CellSolution::compute(&field, 32).unwrap().flux_divergence_residual().unwrap();
    let r2 = CellSolution::compute(&field, 64).unwrap().flux_divergence_residual().unwrap();
    assert!(r2 < 0.6 * r1, "{r1} -> {r2}");
}

#[test]
fn adjoint_gives_transpose() {
    let a = user_matrix::<f64>(["2 + sin(2*pi*y1)", "0.4*cos(2*pi*y2)", "-0.3", "1.5 + 0.5*cos(2*pi*y1)"]).unwrap();
    let n = 128;
    let hat = homogenize(&a, &solve_cell(&a, n).unwrap()).unwrap();
    let adj = a.adjoint();
    let hat_star = homogenize(&adj, &solve_cell(&adj, n).unwrap()).unwrap();
    let t = hat.transpose();
    for (x, y) in hat_star.values().iter().zip(t.values()) {
        assert!((x - y).abs() < 1e-6, "{:?} vs {:?}", hat_star.values(), t.values());
    }
    assert!(hat.asymmetry() > 1e-3);
}

#[test]
fn rotating_layers_swaps_diagonal() {
    let a = layered_cell(64).hat_a;
    let rotated = CellSolution::compute(&user_scalar::<f64>("2 + sin(2*pi*y2)").unwrap(), 64).unwrap().hat_a;
    assert!((a.values()[0] - rotated.values()[3]).abs() < 1e-6);
    assert!((a.values()[3] - rotated.values()[0]).abs() < 1e-6);
}

#[test]
fn richardson_slope_is_second_order() {
    let field = trigonometric(2.0, 0.8).unwrap();
    let a: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| homogenize(&field, &solve_cell(&field, n).unwrap()).unwrap().values()[0])
        .collect();
    let slope = ((a[0] - a[1]).abs() / (a[1] - a[2]).abs()).log2();
    assert!(slope >= 1.9, "slope {slope}, values {a:?}");
}

#[test]
fn voigt_reuss_bounds() {
    let field = checkerboard(4.0, 0.05).unwrap();
    let cc = solve_cell(&field, 64).unwrap();
    let hat = homogenize(&field, &cc).unwrap();
    let q = tensor_qp(&field, &cc.grid);
    let w = 1.0 / (4 * cc.grid.num_elements()) as f64;
    let (mut arith, mut harm) = (0.0, 0.0);
    for v in q.values().chunks(4) {
        arith += w * v[0];
        harm += w / v[0];
    }
    let harm = 1.0 / harm;
    let ev = symmetric_eigenvalues(hat.values(), 2);
    assert!(ev[0] >= harm - 1e-10 && ev[1] <= arith + 1e-10, "{harm} <= {ev:?} <= {arith}");
}
