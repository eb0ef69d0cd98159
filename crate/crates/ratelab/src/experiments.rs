//! The measurement behind every experiment id. Sweep experiments turn one
//! [`EpsContext`] into named values; refinement and standalone experiments
//! produce their rows directly.

use std::f64::consts::PI;

use homoglab_core::cell::CellSolution;
use homoglab_core::coeff::constant;
use homoglab_core::correctors::{corrector_report, ColumnBounds, CORNER_MARGIN, TRUSTED_DIST};
use homoglab_core::expand::{
    build_expansion, divergence_data_approx, poisson_approx, s_epsilon, s_epsilon_norm, CorrectorFamily, CorrectorSource,
    Expansion,
};
use homoglab_core::kernels::{coordinate_commutator, green_dipole, poisson_row, product_commutator, DtN, DtnExpansion};
use homoglab_core::mesh::{
    assemble, boundary_h1, boundary_lp, element_center_gradients, norm, BoundaryField, Field, Mode, NormKind,
    QpField, Source, SquareMesh, StructuredGrid,
};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Settings;
use crate::context::{compatible_flux, EpsContext, Pair, Problem};
use crate::report::Row;
use crate::{Error, Result};

/// Named values measured at one `ε`.
pub type Values = Vec<(&'static str, f64)>;

/// Smallest `|x − y|` for the gradient-comparison samples.
pub const MIN_SEPARATION: f64 = 0.25;

/// Interior points at which the Poisson kernel rows are sampled.
pub const POISSON_SAMPLES: [[f64; 2]; 5] = [[0.25, 0.25], [0.5, 0.5], [0.75, 0.5], [0.25, 0.75], [0.5, 0.25]];

/// Wavenumbers of the coordinate-commutator experiment.
pub const LEIBNIZ_WAVENUMBERS: [usize; 4] = [2, 4, 8, 16];

/// Random cases in the product-commutator experiment.
pub const PRODUCT_CASES: usize = 20;

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Largest nodal magnitude of `f` over nodes at distance `≥ TRUSTED_DIST`
/// from the boundary and `≥ MIN_SEPARATION` from `y`.
fn trusted_sup(mesh: &SquareMesh, f: &Field<f64>, y: [f64; 2]) -> f64 {
    (0..mesh.num_nodes())
        .filter(|&node| {
            let x = mesh.coords::<f64>(node);
            SquareMesh::dist(x) >= TRUSTED_DIST && dist(x, y) >= MIN_SEPARATION
        })
        .map(|node| f.node_values(node).iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

fn expansion(ctx: &EpsContext, pair: &Pair, family: CorrectorFamily) -> Result<Expansion<f64>> {
    let source = match family {
        CorrectorFamily::Chi => CorrectorSource::Cell(&ctx.problem.cell),
        _ => CorrectorSource::Set(ctx.correctors()?),
    };
    Ok(build_expansion(&ctx.mesh, ctx.eps, pair.eps.clone(), pair.zero.clone(), family, source)?)
}

fn log_eps(eps: f64) -> f64 {
    eps * (1.0 / eps + 2.0).ln()
}

/// Runs one sweep experiment at the context's `ε`. An empty result means
/// the experiment does not apply to the coefficient (the Neumann objects
/// need a symmetric one).
pub fn measure(id: &str, ctx: &EpsContext) -> Result<Values> {
    let eps = ctx.eps;
    let y = ctx.problem.settings.y;
    let x = ctx.problem.settings.x;
    let mesh = &ctx.mesh;
    let values = match id {
        "corrector-bounds" => {
            let r = corrector_report(ctx.correctors()?, &ctx.problem.cell)?;
            let worst = |cols: &[ColumnBounds<f64>], f: fn(&ColumnBounds<f64>) -> f64| cols.iter().map(f).fold(0.0, f64::max);
            let mut v = vec![
                ("phi_diff", r.phi_diff_max()),
                ("phi_over_eps", r.phi_diff_max() / eps),
                ("phi_grad_max", worst(&r.phi, |c| c.grad_max)),
                ("phi_first_order_grad", worst(&r.phi, |c| c.first_order_grad_max)),
                ("phi_layer_weighted", worst(&r.phi, |c| c.layer_weighted_max)),
            ];
            if let (Some(p), Some(cols)) = (r.psi_diff_max(), r.psi.as_deref()) {
                v.extend([
                    ("psi_diff", p),
                    ("psi_over_eps_log", p / log_eps(eps)),
                    ("psi_grad_max", worst(cols, |c| c.grad_max)),
                    ("psi_first_order_grad", worst(cols, |c| c.first_order_grad_max)),
                    ("psi_layer_weighted", worst(cols, |c| c.layer_weighted_max)),
                ]);
            }
            v
        }
        "thmA-green-size" => {
            let g = ctx.green_columns()?;
            let node = ctx.node_at(x);
            vec![("green_diff", (g.eps.at(node, 0) - g.zero.at(node, 0)).abs())]
        }
        "thmA-green-grad" => {
            let e = expansion(ctx, ctx.green_columns()?, CorrectorFamily::Dirichlet)?;
            vec![("grad_expansion_sup", trusted_sup(mesh, &e.gradient_comparison(), y))]
        }
        "thmB-neumann-size" => match ctx.neumann_columns()? {
            Some(n) => {
                let node = ctx.node_at(x);
                vec![("neumann_diff", (n.eps.at(node, 0) - n.zero.at(node, 0)).abs())]
            }
            None => vec![],
        },
        "thmB-neumann-grad" => match ctx.neumann_columns()? {
            Some(n) => {
                let e = expansion(ctx, n, CorrectorFamily::Neumann)?;
                vec![("grad_expansion_sup", trusted_sup(mesh, &e.gradient_comparison(), y))]
            }
            None => vec![],
        },
        "w1p-dirichlet" => {
            let pair = ctx.dirichlet_pair()?;
            let wd = expansion(ctx, pair, CorrectorFamily::Dirichlet)?;
            let wc = expansion(ctx, pair, CorrectorFamily::Chi)?;
            vec![("w_dirichlet_h1", norm(mesh, &wd.w, NormKind::W1p(2.0))?), ("w_chi_h1", norm(mesh, &wc.w, NormKind::W1p(2.0))?)]
        }
        "w1p-neumann" => match ctx.neumann_pair()? {
            Some((pair, _)) => {
                let e = expansion(ctx, pair, CorrectorFamily::Neumann)?;
                vec![("w_neumann_h1", norm(mesh, &e.w, NormKind::W1p(2.0))?)]
            }
            None => vec![],
        },
        "weighted-h1" => {
            let e = expansion(ctx, ctx.dirichlet_pair()?, CorrectorFamily::Chi)?;
            vec![("w_chi_weighted", norm(mesh, &e.w, NormKind::WeightedGrad)?)]
        }
        "lp-dirichlet" | "linf-dirichlet" => {
            let pair = ctx.dirichlet_pair()?;
            let d = pair.eps.sub(&pair.zero);
            if id == "lp-dirichlet" {
                vec![("u_diff_l2", norm(mesh, &d, NormKind::Lp(2.0))?)]
            } else {
                vec![("u_diff_linf", norm(mesh, &d, NormKind::Lp(f64::INFINITY))?)]
            }
        }
        "lp-neumann" => match ctx.neumann_pair()? {
            Some((pair, _)) => vec![("u_diff_l2", norm(mesh, &pair.eps.sub(&pair.zero), NormKind::Lp(2.0))?)],
            None => vec![],
        },
        "poisson-remainder" => poisson_remainder(ctx)?,
        "poisson-approx" => {
            let (op, op0, om) = (ctx.op_dir()?, ctx.op0_dir()?, ctx.omega()?);
            let osc = BoundaryField::from_fn(mesh, 1, |x: [f64; 2], o| o[0] = (2.0 * PI * x[0] / eps).cos() * x[1]);
            let unit = BoundaryField::from_fn(mesh, 1, |_, o| o[0] = 1.0);
            vec![("oscillating_l2", poisson_approx(op, op0, om, &osc)?.l2), ("unit_l1", poisson_approx(op, op0, om, &unit)?.l1)]
        }
        "div-approx" => {
            let f = QpField::from_fn(mesh, 2, |x: [f64; 2], o| {
                o[0] = (PI * x[0]).sin() * x[1];
                o[1] = (PI * x[1]).cos() * x[0];
            });
            let a = divergence_data_approx(ctx.op_dir()?, ctx.op0_dir()?, &ctx.correctors()?.phi_star, &f)?;
            vec![("l2", a.l2)]
        }
        "second-deriv-kernel" => vec![("mixed_expansion_sup", mixed_expansion(ctx)?)],
        "s-epsilon" => {
            let set = ctx.correctors()?;
            let (op, op0) = (ctx.op_dir()?, ctx.op0_dir()?);
            let g = Field::scalar_from_fn(mesh, |x: [f64; 2]| x[0] * x[0] + x[1]);
            let one = Field::scalar_from_fn(mesh, |_| 1.0);
            let (mut s_norm, mut s_one) = (0.0f64, 0.0f64);
            for i in 0..2 {
                for j in 0..2 {
                    let s = s_epsilon(op, op0, &set.phi, &set.phi_star, &g, i, j)?;
                    s_norm = s_norm.max(s_epsilon_norm(mesh, &s, 1.5));
                    let s = s_epsilon(op, op0, &set.phi, &set.phi_star, &one, i, j)?;
                    s_one = s_one.max(s_epsilon_norm(mesh, &s, 1.5));
                }
            }
            vec![("s_norm", s_norm), ("s_of_one", s_one)]
        }
        "dtn-expansion" => {
            if !ctx.problem.symmetric() {
                return Ok(vec![]);
            }
            let dtn = DtnExpansion::new(DtN::new(ctx.op_dir()?)?, DtN::new(ctx.op0_dir()?)?, ctx.omega()?.scalar()?)?;
            let f = BoundaryField::from_fn(mesh, 1, |x: [f64; 2], o| o[0] = (PI * x[0]).sin() + x[0] * x[1]);
            vec![("defect_l15", boundary_lp(mesh, &dtn.defect(&f)?, 1.5, CORNER_MARGIN)?)]
        }
        other => return Err(Error::Config(format!("`{other}` is not a sweep experiment"))),
    };
    Ok(values)
}

/// `max |P_ε(x, y) − P₀(x, y) ω_ε(y)|` over the interior samples `x` and
/// boundary positions `y` at least `CORNER_MARGIN` steps from a corner,
/// plus `max |ω_ε − 1|` for reference.
fn poisson_remainder(ctx: &EpsContext) -> Result<Values> {
    let mesh = &ctx.mesh;
    let om = ctx.omega()?;
    let w = &om.omega;
    let keep: Vec<usize> = (0..mesh.num_boundary()).filter(|&p| mesh.corner_distance_steps(p) >= CORNER_MARGIN).collect();
    let mut worst = 0.0f64;
    for x in POISSON_SAMPLES {
        let node = ctx.node_at(x);
        let pe = poisson_row(ctx.op_adj()?, node, 0)?;
        let p0 = poisson_row(ctx.op0_adj()?, node, 0)?;
        for &pos in &keep {
            worst = worst.max((pe.at(pos, 0) - p0.at(pos, 0) * w.at(pos, 0)).abs());
        }
    }
    let dev = keep.iter().map(|&p| (w.at(p, 0) - 1.0).abs()).fold(0.0, f64::max);
    Ok(vec![("remainder_max", worst), ("omega_deviation", dev)])
}

/// Sup over trusted `x` of
/// `|∂_{x_i}∂_{y_j}G_ε − ∂_iΦ_k(x) ∂_{x_k}∂_{y_l}G₀ ∂_jΦ*_l(y)|`, with `y` at
/// the center of the element whose lower-left node is nearest the
/// configured point.
fn mixed_expansion(ctx: &EpsContext) -> Result<f64> {
    let mesh = &ctx.mesh;
    let n = mesh.n();
    let y = ctx.problem.settings.y;
    let h = ctx.h();
    let el = |c: f64| ((c / h).floor() as usize).min(n - 1);
    let (ei, ej) = (el(y[0]), el(y[1]));
    let yc = [(ei as f64 + 0.5) * h, (ej as f64 + 0.5) * h];
    let set = ctx.correctors()?;
    let e = ej * n + ei;
    // dstar[l][j] = ∂_j Φ*_l(y)
    let dstar: Vec<Vec<f64>> = set.phi_star.iter().map(|p| element_center_gradients(mesh, p)[e * 2..e * 2 + 2].to_vec()).collect();
    let op0 = ctx.op0_dir()?;
    let g0 = [green_dipole(op0, (ei, ej), 0, 0)?, green_dipole(op0, (ei, ej), 1, 0)?];
    let mut worst = 0.0f64;
    for j in 0..2 {
        let ue = green_dipole(ctx.op_dir()?, (ei, ej), j, 0)?;
        let mut u0 = g0[0].clone();
        u0.scale(dstar[0][j]);
        u0.axpy(dstar[1][j], &g0[1]);
        let exp = build_expansion(mesh, ctx.eps, ue, u0, CorrectorFamily::Dirichlet, CorrectorSource::Set(set))?;
        worst = worst.max(trusted_sup(mesh, &exp.gradient_comparison(), yc));
    }
    Ok(worst)
}

fn row(experiment: &str, epsilon: f64, h: f64, quantity: impl Into<String>, value: f64) -> Row {
    Row { experiment: experiment.into(), epsilon, h, quantity: quantity.into(), value }
}

/// Load whose homogenized Dirichlet solution is `sin πx₁ sin πx₂`.
fn dirichlet_load(mesh: &SquareMesh, hat: &[f64]) -> Source<f64> {
    let (tr, off) = (hat[0] + hat[3], hat[1] + hat[2]);
    Source::zero().volume(Field::scalar_from_fn(mesh, |x: [f64; 2]| {
        let (s1, s2, c1, c2) = ((PI * x[0]).sin(), (PI * x[1]).sin(), (PI * x[0]).cos(), (PI * x[1]).cos());
        PI * PI * (tr * s1 * s2 - off * c1 * c2)
    }))
}

/// Identity checks at the coarsest `ε` on `cells_per_period · 2^r` cells
/// per period, `r = 0..=refinements`. Rows are ordered by decreasing `h`.
pub fn refinement(id: &str, settings: &Settings) -> Result<Vec<Row>> {
    let eps = settings.eps[0];
    let mut rows = Vec::new();
    for r in 0..=settings.refinements {
        let mut s = settings.clone();
        s.cells_per_period = settings.cells_per_period << r;
        let problem = Problem::new(s)?;
        let ctx = EpsContext::new(&problem, eps)?;
        let mesh = &ctx.mesh;
        let hat = problem.hat().values().to_vec();
        let value = match id {
            "prop21-residual" => {
                let src = dirichlet_load(mesh, &hat);
                let zero = BoundaryField::zeros(mesh, 1);
                let (op, op0) = (ctx.op_dir()?, ctx.op0_dir()?);
                let pair = Pair { eps: op.solve_dirichlet(&src, &zero)?, zero: op0.solve_dirichlet(&src, &zero)? };
                let family = settings.family;
                if family == CorrectorFamily::Neumann && !problem.symmetric() {
                    return Ok(vec![]);
                }
                let e = expansion(&ctx, &pair, family)?;
                e.residual_identity_check(op, &ctx.scaled, &problem.cell)?.mismatch
            }
            "prop24-conormal" => {
                let Some(op) = ctx.op_neu()? else { return Ok(vec![]) };
                let op0 = ctx.op0_neu()?;
                let f = Field::scalar_from_fn(mesh, |x: [f64; 2]| PI * PI * (hat[0] + hat[3]) * (PI * x[0]).cos() * (PI * x[1]).cos());
                let src = Source::zero().volume(f);
                let flux = compatible_flux(op, &src, mesh)?;
                let pair = Pair { eps: op.solve_neumann(&src, &flux)?, zero: op0.solve_neumann(&src, &flux)? };
                let e = expansion(&ctx, &pair, CorrectorFamily::Neumann)?;
                e.conormal_identity_check(op, op0, &src, &ctx.scaled, &problem.cell)?.max
            }
            other => return Err(Error::Config(format!("`{other}` is not a refinement experiment"))),
        };
        let quantity = if id == "prop21-residual" { "mismatch" } else { "conormal_max" };
        rows.push(row(id, eps, ctx.h(), quantity, value));
    }
    Ok(rows)
}

/// Cell grids of the flux-corrector residual check.
pub const FLUX_RESIDUAL_GRIDS: [usize; 3] = [32, 64, 128];

/// Experiments independent of the `ε` sweep. Their rows carry `ε = 1`.
pub fn standalone(id: &str, settings: &Settings) -> Result<(Vec<Row>, Vec<String>)> {
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    match id {
        "cell-oracle" => {
            let coeff = settings.coefficient.build()?;
            let n = settings.oracle_n;
            let h = 1.0 / n as f64;
            let cell = CellSolution::compute(&coeff, n)?;
            let hat = cell.hat_a.values();
            match settings.coefficient.closed_form_hat() {
                Some(c) if c.len() == 4 => {
                    rows.push(row(id, 1.0, h, "hat11_error", (hat[0] - c[0]).abs()));
                    rows.push(row(id, 1.0, h, "hat22_error", (hat[3] - c[3]).abs()));
                    rows.push(row(id, 1.0, h, "hat12_error", (hat[1] - c[1]).abs()));
                }
                _ => notes.push("no closed-form homogenized tensor for this coefficient; tensor check skipped".into()),
            }
            let chi_max = cell.correctors.chi.iter().map(|c| c.max_abs()).fold(0.0, f64::max);
            rows.push(row(id, 1.0, h, "chi_mean", cell.correctors.max_mean()));
            rows.push(row(id, 1.0, h, "chi_max", chi_max));
            rows.push(row(id, 1.0, h, "b_integral", cell.b_mean()));
            rows.push(row(id, 1.0, h, "flux_antisymmetry", cell.flux_antisymmetry()));
            for n in FLUX_RESIDUAL_GRIDS {
                let c = CellSolution::compute(&coeff, n)?;
                rows.push(row(id, 1.0, 1.0 / n as f64, "flux_residual", c.flux_divergence_residual()?));
            }
        }
        "leibniz-1" => {
            let (mesh, op) = laplacian(settings.leibniz_n)?;
            let dtn = DtN::new(&op)?;
            let h = mesh.h::<f64>();
            for k in LEIBNIZ_WAVENUMBERS {
                let f = arc_field(&mesh, |s| (2.0 * PI * k as f64 * s).sin());
                let fl2 = boundary_lp(&mesh, &f, 2.0, 0)?;
                let comm = coordinate_commutator(&dtn, &f, 0)?;
                let lf = dtn.apply(&f)?;
                rows.push(row(id, 1.0, h, format!("commutator_ratio_k{k}"), boundary_lp(&mesh, &comm, 2.0, 0)? / fl2));
                rows.push(row(id, 1.0, h, format!("dtn_ratio_k{k}"), boundary_lp(&mesh, &lf, 2.0, 0)? / fl2));
            }
        }
        "leibniz-2" => {
            let (mesh, op) = laplacian(settings.leibniz_n)?;
            let dtn = DtN::new(&op)?;
            let h = mesh.h::<f64>();
            let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
            let mut worst = 0.0f64;
            for case in 0..PRODUCT_CASES {
                let f = random_trig(&mesh, &mut rng);
                let g = random_trig(&mesh, &mut rng);
                let c = product_commutator(&dtn, &f, &g)?;
                let ratio = boundary_lp(&mesh, &c, 2.0, 0)? / (boundary_h1(&mesh, &f)? * g.max_abs());
                rows.push(row(id, 1.0, h, format!("product_ratio_case{case}"), ratio));
                worst = worst.max(ratio);
            }
            rows.push(row(id, 1.0, h, "product_ratio_max", worst));
        }
        other => return Err(Error::Config(format!("`{other}` is not a standalone experiment"))),
    }
    Ok((rows, notes))
}

fn laplacian(n: usize) -> Result<(SquareMesh, homoglab_core::mesh::AssembledOperator<f64>)> {
    let mesh = SquareMesh::new(n)?;
    let id = constant(2, 1, vec![1.0, 0.0, 0.0, 1.0])?;
    let op = assemble(&id, &mesh.clone().into(), Mode::Dirichlet)?;
    Ok((mesh, op))
}

/// Boundary field `f(s)` of the arc-length coordinate `s ∈ [0, 4)`.
fn arc_field(mesh: &SquareMesh, f: impl Fn(f64) -> f64) -> BoundaryField<f64> {
    let mut out = BoundaryField::zeros(mesh, 1);
    for pos in 0..mesh.num_boundary() {
        out.values_mut()[pos] = f(mesh.arc_length::<f64>(pos));
    }
    out
}

/// Trigonometric polynomial of degree 4 in `s` with period 4, coefficients
/// uniform in `[−1, 1]`.
fn random_trig(mesh: &SquareMesh, rng: &mut ChaCha8Rng) -> BoundaryField<f64> {
    let c0: f64 = rng.random_range(-1.0..1.0);
    let coef: Vec<(f64, f64)> = (0..4).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    arc_field(mesh, |s| {
        c0 + coef
            .iter()
            .enumerate()
            .map(|(k, (a, b))| {
                let t = PI * (k + 1) as f64 * s / 2.0;
                a * t.cos() + b * t.sin()
            })
            .sum::<f64>()
    })
}
