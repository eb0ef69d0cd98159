//! Acceptance run: one pass/fail line per criterion, exit status 1 if any
//! fails. Runs the full default sweep (layered field, 16 cells per period,
//! epsilon 1/8..1/64) plus a few targeted runs, so expect a few minutes.

use std::process::ExitCode;

use ratelab::{run, CoefficientSpec, RateReport, Settings, REGISTRY};

struct Reports(Vec<RateReport>);

impl Reports {
    fn get(&self, id: &str) -> &RateReport {
        self.0.iter().find(|r| r.experiment == id).unwrap_or_else(|| panic!("no report for {id}"))
    }

    /// Named checks of one report, or all of them when `names` is empty.
    fn checks(&self, id: &str, names: &[&str]) -> (bool, String) {
        let r = self.get(id);
        let picked: Vec<_> = r.checks.iter().filter(|c| names.is_empty() || names.contains(&c.name.as_str())).collect();
        let mut ok = r.passed() && !picked.is_empty();
        if !names.is_empty() {
            ok = picked.len() == names.len() && picked.iter().all(|c| c.passed);
        }
        let mut detail: Vec<String> = picked.iter().map(|c| format!("{}: {}", c.name, c.detail)).collect();
        if picked.is_empty() {
            detail.extend(r.notes.iter().cloned());
        }
        (ok, format!("{id} [{}]", detail.join("; ")))
    }
}

fn all(parts: &[(bool, String)]) -> (bool, String) {
    (parts.iter().all(|p| p.0), parts.iter().map(|p| p.1.as_str()).collect::<Vec<_>>().join(" | "))
}

/// Every value of the listed quantities at most `tol` in magnitude.
fn zeros(reports: &Reports, quantities: &[(&str, &str)], tol: f64) -> (bool, String) {
    let mut ok = true;
    let mut detail = Vec::new();
    for (id, q) in quantities {
        let r = reports.get(id);
        let vals = r.values(q);
        let worst = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let pass = !vals.is_empty() && worst <= tol && r.passed();
        ok &= pass;
        detail.push(format!("{q} {worst:.1e}"));
    }
    (ok, format!("max values <= {tol:e}: {}", detail.join(", ")))
}

/// Largest change of a fitted slope between two resolutions.
fn slope_shift(coarse: &Reports, fine: &Reports) -> (bool, String) {
    let mut worst = (0.0_f64, String::new());
    for f in &fine.0 {
        for qf in &f.fits {
            if let Some(c) = coarse.get(&f.experiment).fit(&qf.quantity) {
                let d = (c.slope - qf.fit.slope).abs();
                if d >= worst.0 {
                    worst = (d, format!("{}:{}", f.experiment, qf.quantity));
                }
            }
        }
    }
    (worst.0 <= 0.1, format!("largest slope change {:.3} ({}) between 8 and 16 cells per period", worst.0, worst.1))
}

fn main() -> ExitCode {
    let ids: Vec<&str> = REGISTRY.iter().map(|e| e.id).collect();
    let layered = Settings::default();
    let main = Reports(run(&layered, &ids).expect("layered sweep"));

    let constant = Settings {
        coefficient: CoefficientSpec::Constant { values: vec![2.0, 0.3, 0.3, 1.5], m: 1 },
        eps: vec![0.125, 0.0625, 0.03125],
        ..Settings::default()
    };
    let flat = Reports(
        run(
            &constant,
            &["cell-oracle", "corrector-bounds", "thmA-green-size", "thmB-neumann-size", "poisson-remainder", "prop21-residual", "prop24-conormal"],
        )
        .expect("constant run"),
    );

    // A lamination across the diagonal: its correctors oscillate along every
    // side of the square, which the layered field's do not.
    let diagonal = Settings { coefficient: CoefficientSpec::UserScalar { expr: "2 + sin(2*pi*(y1 + y2))".into() }, ..Settings::default() };
    let diag = Reports(run(&diagonal, &["w1p-dirichlet"]).expect("diagonal sweep"));

    let coarse = Settings { cells_per_period: 8, ..Settings::default() };
    let sweep_ids: Vec<&str> = REGISTRY.iter().filter(|e| e.plan == ratelab::registry::Plan::Sweep).map(|e| e.id).collect();
    let half = Reports(run(&coarse, &sweep_ids).expect("coarse sweep"));

    let criteria: Vec<(&str, (bool, String))> = vec![
        ("cell oracle", main.checks("cell-oracle", &["hat11_error <= 1e-3", "hat22_error <= 1e-3", "hat12_error <= 1e-4"])),
        (
            "cell identities",
            main.checks(
                "cell-oracle",
                &["chi_mean <= 1e-10", "b_integral <= 1e-8", "flux_antisymmetry <= 0e0", "ratio(flux_residual) <= 0.6 per step"],
            ),
        ),
        (
            "constant coefficients",
            zeros(
                &flat,
                &[
                    ("cell-oracle", "chi_max"),
                    ("corrector-bounds", "phi_diff"),
                    ("corrector-bounds", "psi_diff"),
                    ("thmA-green-size", "green_diff"),
                    ("thmB-neumann-size", "neumann_diff"),
                    ("poisson-remainder", "omega_deviation"),
                ],
                1e-8,
            ),
        ),
        ("Green difference", main.checks("thmA-green-size", &[])),
        ("Green gradient", main.checks("thmA-green-grad", &[])),
        ("Neumann difference", main.checks("thmB-neumann-size", &[])),
        ("Neumann gradient", main.checks("thmB-neumann-grad", &[])),
        ("W1p separation", diag.checks("w1p-dirichlet", &[])),
        ("weighted energy", main.checks("weighted-h1", &[])),
        ("Lp rates", all(&[main.checks("lp-dirichlet", &[]), main.checks("lp-neumann", &[])])),
        (
            "Poisson kernel",
            all(&[main.checks("poisson-remainder", &[]), main.checks("poisson-approx", &["slope(oscillating_l2) >= 0.3"])]),
        ),
        (
            "identity checks",
            all(&[
                main.checks("prop21-residual", &[]),
                main.checks("prop24-conormal", &[]),
                zeros(&flat, &[("prop21-residual", "mismatch"), ("prop24-conormal", "conormal_max")], 1e-8),
            ]),
        ),
        ("DtN commutators", all(&[main.checks("leibniz-1", &[]), main.checks("leibniz-2", &[])])),
        ("S and DtN expansions", all(&[main.checks("s-epsilon", &[]), main.checks("dtn-expansion", &[])])),
        ("corrector bounds", main.checks("corrector-bounds", &[])),
    ];

    let mut failed = 0;
    for (k, (name, (ok, detail))) in criteria.iter().enumerate() {
        failed += usize::from(!ok);
        println!("criterion {:>2} {:<22} {}  {detail}", k + 1, name, if *ok { "PASS" } else { "FAIL" });
    }
    let (ok, detail) = slope_shift(&half, &main);
    failed += usize::from(!ok);
    println!("resolution sanity         {}  {detail}", if ok { "PASS" } else { "FAIL" });

    let layered_w1p = main.checks("w1p-dirichlet", &[]);
    println!("info: layered field w1p-dirichlet {} (no boundary layer for this field)  {}", if layered_w1p.0 { "passes" } else { "fails" }, layered_w1p.1);

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance line(s) failed");
        ExitCode::FAILURE
    }
}
