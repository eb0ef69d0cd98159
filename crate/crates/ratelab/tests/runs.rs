use std::path::PathBuf;
use std::process::Command;

use ratelab::config::Config;
use ratelab::report::{emit, Format};
use ratelab::{run, CoefficientSpec, Error, RateReport, Settings, Status};

fn small(coefficient: CoefficientSpec) -> Settings {
    Settings { coefficient, eps: vec![0.25, 0.125, 0.0625], cells_per_period: 8, ..Settings::default() }
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn single(settings: &Settings, id: &str) -> RateReport {
    run(settings, &[id]).unwrap().pop().unwrap()
}

#[test]
fn unknown_ids_are_rejected_with_the_registry() {
    let err = run(&small(CoefficientSpec::default()), &["thmZ-nothing"]).err().unwrap();
    assert!(matches!(err, Error::UnknownExperiment { .. }));
    let msg = err.to_string();
    assert!(msg.contains("thmZ-nothing") && msg.contains("thmA-green-size") && msg.contains("corrector-bounds"), "{msg}");
}

#[test]
fn constant_coefficients_give_a_degenerate_pass() {
    let s = small(CoefficientSpec::Constant { values: vec![2.0, 0.3, 0.3, 1.5], m: 1 });
    let r = single(&s, "thmA-green-size");
    assert_eq!(r.status, Status::DegeneratePass, "{r:?}");
    assert_eq!(r.rows.len(), 3);
    assert!(r.values("green_diff").iter().all(|v| v.abs() <= 1e-10));
}

#[test]
fn under_resolved_grids_fail() {
    let mut s = small(CoefficientSpec::default());
    s.cells_per_period = 4;
    let reports = run(&s, &["thmA-green-size", "lp-dirichlet"]).unwrap();
    assert_eq!(reports.len(), 2);
    for r in &reports {
        assert_eq!(r.status, Status::Fail);
        assert!(r.rows.is_empty());
        assert!(r.notes[0].contains("below the minimum"), "{:?}", r.notes);
    }
}

#[test]
fn empty_reports_write_header_only_csv() {
    let mut s = small(CoefficientSpec::default());
    s.cells_per_period = 4;
    let r = single(&s, "lp-dirichlet");
    let dir = scratch("empty_csv");
    let path = emit(&r, Format::Csv, &dir).unwrap();
    assert_eq!(std::fs::read_to_string(path).unwrap(), "experiment,epsilon,h,quantity,value\n");
}

#[test]
fn rows_follow_the_sweep() {
    let s = small(CoefficientSpec::default());
    let r = single(&s, "lp-dirichlet");
    let eps: Vec<f64> = r.rows.iter().map(|row| row.epsilon).collect();
    assert_eq!(eps, s.eps);
    for row in &r.rows {
        assert_eq!(row.h, row.epsilon / 8.0);
        assert!(row.value > 0.0);
    }
    let dir = scratch("four_rows");
    let text = std::fs::read_to_string(emit(&r, Format::Csv, &dir).unwrap()).unwrap();
    assert_eq!(text.lines().count(), 1 + r.rows.len());
}

#[test]
fn identical_settings_write_identical_files() {
    let s = small(CoefficientSpec::default());
    let ids = ["thmA-green-size", "poisson-remainder", "leibniz-2"];
    let mut outputs = Vec::new();
    for k in 0..2 {
        let dir = scratch(&format!("determinism_{k}"));
        let mut files = Vec::new();
        for r in run(&s, &ids).unwrap() {
            for f in [Format::Csv, Format::Json] {
                files.push(std::fs::read(emit(&r, f, &dir).unwrap()).unwrap());
            }
        }
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn config_files_round_trip() {
    let text = r#"{
        "coefficient": {"family": "user-scalar", "expr": "2 + sin(2*pi*(y1 + y2))"},
        "mesh": {"eps": ["1/8", 0.0625], "cells_per_period": 8},
        "solver": "direct",
        "experiments": ["w1p-dirichlet"]
    }"#;
    let c: Config = serde_json::from_str(text).unwrap();
    let s = c.settings().unwrap();
    assert_eq!(s.eps, vec![0.125, 0.0625]);
    assert_eq!(c.experiments, vec!["w1p-dirichlet".to_string()]);
    assert!(serde_json::from_str::<Config>(r#"{"colour": 1}"#).is_err());
    let bad: Config = serde_json::from_str(r#"{"mesh": {"eps": [0.0625, 0.125]}}"#).unwrap();
    assert!(bad.settings().is_err());
}

fn homoglab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_homoglab")).args(args).output().unwrap()
}

#[test]
fn cli_exit_codes_and_outputs() {
    let dir = scratch("cli_green");
    let out = dir.to_str().unwrap();
    let ok = homoglab(&["green", "--out", out, "--eps", "1/4,1/8,1/16", "--cells-per-period", "8", "--experiment", "thmA-green-size", "--format", "json"]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("thmA-green-size.json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 3);

    let unknown = homoglab(&["green", "--out", out, "--experiment", "thmZ-nothing"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("thmA-green-size"));

    let coarse = homoglab(&["rates", "--out", out, "--eps", "1/4,1/8,1/16", "--cells-per-period", "4", "--experiment", "lp-dirichlet"]);
    assert_eq!(coarse.status.code(), Some(1));
}
