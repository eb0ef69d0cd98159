use std::f64::consts::PI;

use homoglab_core::coeff::{constant, layered, rescale, ConstantTensor};
use homoglab_core::correctors::dirichlet_correctors;
use homoglab_core::kernels::{
    coordinate_commutator, green, neumann_fn, omega, omega_from_gradients, poisson_kernel, poisson_row,
    product_commutator, DtN, DtNMatrix, DtnExpansion,
};
use homoglab_core::mesh::{assemble, BoundaryField, Mode, SquareMesh};

fn identity() -> ConstantTensor<f64> {
    ConstantTensor::identity(2, 1)
}

fn series_green(x: [f64; 2], y: [f64; 2], modes: usize) -> f64 {
    let mut s = 0.0;
    for m in 1..=modes {
        let (mf, sx, sy) = (m as f64, (m as f64 * PI * x[0]).sin(), (m as f64 * PI * y[0]).sin());
        for n in 1..=modes {
            let nf = n as f64;
            s += 4.0 * sx * (nf * PI * x[1]).sin() * sy * (nf * PI * y[1]).sin() / (PI * PI * (mf * mf + nf * nf));
        }
    }
    s
}

#[test]
fn laplacian_green_matches_sine_series() {
    let mesh = SquareMesh::new(128).unwrap();
    let op = assemble(&identity(), &mesh.clone().into(), Mode::Dirichlet).unwrap();
    let (x, y) = (mesh.nearest_node([0.25, 0.25]), mesh.nearest_node([0.75, 0.5]));
    let g = green(&op, y, 0).unwrap();
    let exact = series_green([0.25, 0.25], [0.75, 0.5], 200);
    assert!((g.at(x, 0) - exact).abs() < 1e-3, "{} vs {exact}", g.at(x, 0));
}

#[test]
fn green_and_neumann_functions_are_symmetric() {
    let a = rescale(&layered::<f64>(2.0, 1.0).unwrap(), 1.0 / 8.0).unwrap();
    let mesh = SquareMesh::new(64).unwrap();
    let (x, y) = (mesh.nearest_node([0.25, 0.25]), mesh.nearest_node([0.75, 0.5]));
    let op = assemble(&a, &mesh.clone().into(), Mode::Dirichlet).unwrap();
    let (gx, gy) = (green(&op, x, 0).unwrap(), green(&op, y, 0).unwrap());
    assert!((gy.at(x, 0) - gx.at(y, 0)).abs() <= 1e-6 * gx.at(y, 0).abs());
    for pos in 0..mesh.num_boundary() {
        assert_eq!(gx.at(mesh.boundary_nodes()[pos], 0), 0.0);
    }

    let op = assemble(&a, &mesh.clone().into(), Mode::Neumann).unwrap();
    let (nx, ny) = (neumann_fn(&op, x, 0).unwrap(), neumann_fn(&op, y, 0).unwrap());
    assert!((ny.at(x, 0) - nx.at(y, 0)).abs() <= 1e-6 * nx.at(y, 0).abs());
    for n in [&nx, &ny] {
        assert!(n.trace(&mesh).integral(&mesh)[0].abs() < 1e-8);
    }
}

#[test]
fn boundary_sources_rejected() {
    let mesh = SquareMesh::new(16).unwrap();
    let op = assemble(&identity(), &mesh.clone().into(), Mode::Dirichlet).unwrap();
    assert!(green(&op, 0, 0).is_err());
    assert!(poisson_kernel(&op, 0, 0).is_err());
}

#[test]
fn poisson_kernel_is_a_harmonic_measure() {
    let mesh = SquareMesh::new(32).unwrap();
    let op = assemble(&identity(), &mesh.clone().into(), Mode::Dirichlet).unwrap();
    let x = mesh.nearest_node([0.25, 0.5]);
    let row = poisson_row(&op, x, 0).unwrap();
    assert!((row.integral(&mesh)[0] - 1.0).abs() < 1e-6);
    for pos in [5, 40, 77, 100] {
        let col = poisson_kernel(&op, pos, 0).unwrap();
        assert!((col.at(x, 0) - row.at(pos, 0)).abs() < 1e-10);
    }

    let a = rescale(&layered::<f64>(2.0, 1.0).unwrap(), 0.125).unwrap();
    let op = assemble(&a, &mesh.clone().into(), Mode::Dirichlet).unwrap();
    let row = poisson_row(&op, x, 0).unwrap();
    assert!(row.values().iter().all(|&v| v >= -1e-6));
    assert!((row.integral(&mesh)[0] - 1.0).abs() < 1e-6);
}

#[test]
fn omega_is_one_for_the_identity() {
    let mesh = SquareMesh::new(16).unwrap();
    let op = assemble(&identity(), &mesh.clone().into(), Mode::Dirichlet).unwrap();
    let phi = dirichlet_correctors(&op).unwrap();
    let w = omega(&op, &phi, &identity()).unwrap();
    assert!(w.omega.values().iter().all(|v| (v - 1.0).abs() < 1e-10));
    let c = rescale(&constant(2, 1, vec![1.0, 0.0, 0.0, 1.0]).unwrap(), 0.25).unwrap();
    let g = omega_from_gradients(&c, &mesh, &phi, &identity()).unwrap();
    assert!(g.omega.values().iter().all(|v| (v - 1.0).abs() < 1e-10));
}

fn layered_omega(eps: f64, n: usize) -> (SquareMesh, BoundaryField<f64>, BoundaryField<f64>) {
    let hat = ConstantTensor::new(2, 1, vec![3f64.sqrt(), 0.0, 0.0, 2.0]).unwrap();
    let a = rescale(&layered::<f64>(2.0, 1.0).unwrap(), eps).unwrap();
    let mesh = SquareMesh::new(n).unwrap();
    let op = assemble(&a, &mesh.clone().into(), Mode::Dirichlet).unwrap();
    let phi = dirichlet_correctors(&op).unwrap();
    let w = omega(&op, &phi, &hat).unwrap().omega;
    let g = omega_from_gradients(&a, &mesh, &phi, &hat).unwrap().omega;
    (mesh, w, g)
}

#[test]
fn layered_omega_is_bounded() {
    let (mesh, w, _) = layered_omega(1.0 / 32.0, 512);
    let mean = w.integral(&mesh)[0] / 4.0;
    assert!(w.max_abs() <= 10.0 && (0.5..=2.0).contains(&mean), "max {} mean {mean}", w.max_abs());
}

#[test]
fn omega_routes_converge_together() {
    let gap = |n: usize| {
        let (mesh, w, g) = layered_omega(0.125, n);
        homoglab_core::mesh::boundary_lp(&mesh, &w.sub(&g), 2.0, 4).unwrap()
    };
    let (coarse, fine) = (gap(128), gap(256));
    assert!(fine < 0.6 * coarse, "{coarse} -> {fine}");
}

#[test]
fn dense_dtn_properties() {
    let mesh = SquareMesh::new(12).unwrap();
    let a = rescale(&layered::<f64>(2.0, 1.0).unwrap(), 0.25).unwrap();
    let op = assemble(&a, &mesh.clone().into(), Mode::Dirichlet).unwrap();
    let dense = DtNMatrix::assemble(&op).unwrap();
    assert!(dense.constants_defect() < 1e-8);
    assert!(dense.max_asymmetry() < 1e-8);
    assert!(dense.min_eigenvalue() > -1e-8);

    let dtn = DtN::new(&op).unwrap();
    let f = BoundaryField::<f64>::from_fn(&mesh, 1, |x, o| o[0] = (3.0 * x[0]).sin() + x[1] * x[1]);
    let free = dtn.apply(&f).unwrap();
    let d = dense.apply(&f).unwrap();
    assert!(free.sub(&d).max_abs() < 1e-10);
    assert!(free.integral(&mesh)[0].abs() < 1e-8);
}

#[test]
fn commutator_trivial_cases() {
    let mesh = SquareMesh::new(16).unwrap();
    let op = assemble(&identity(), &mesh.clone().into(), Mode::Dirichlet).unwrap();
    let dtn = DtN::new(&op).unwrap();
    let g = BoundaryField::<f64>::from_fn(&mesh, 1, |x, o| o[0] = (2.0 * x[0] + x[1]).cos());
    let three = BoundaryField::<f64>::from_fn(&mesh, 1, |_, o| o[0] = 3.0);
    assert!(product_commutator(&dtn, &three, &g).unwrap().max_abs() < 1e-10);
    let one = BoundaryField::<f64>::from_fn(&mesh, 1, |_, o| o[0] = 1.0);
    let c = coordinate_commutator(&dtn, &one, 0).unwrap();
    let lx = dtn.apply_coordinate(0, 0).unwrap();
    assert!(c.sub(&lx).max_abs() < 1e-10);
}

#[test]
fn dtn_defect_vanishes_for_constant_coefficients() {
    let mesh = SquareMesh::new(16).unwrap();
    let a = ConstantTensor::new(2, 1, vec![2.0, 0.0, 0.0, 1.0]).unwrap();
    let op = assemble(&a, &mesh.clone().into(), Mode::Dirichlet).unwrap();
    let phi = dirichlet_correctors(&op).unwrap();
    let w = omega(&op, &phi, &a).unwrap().omega;
    let exp = DtnExpansion::new(DtN::new(&op).unwrap(), DtN::new(&op).unwrap(), w).unwrap();
    let f = BoundaryField::<f64>::from_fn(&mesh, 1, |x, o| o[0] = (2.0 * PI * x[0]).sin() * x[1]);
    let d = exp.defect(&f).unwrap();
    let norm = homoglab_core::mesh::boundary_lp(&mesh, &d, 1.5, 1).unwrap();
    assert!(norm < 1e-8, "{norm}");
}
