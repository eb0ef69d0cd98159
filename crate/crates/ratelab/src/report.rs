//! Rate reports, their pass/fail assessment and CSV/JSON emission.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::fit::{fit_rate, RateFit};
use crate::{Error, Result};

/// Values at or below this are treated as exact zeros.
pub const DEGENERATE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub experiment: String,
    pub epsilon: f64,
    pub h: f64,
    pub quantity: String,
    pub value: f64,
}

/// A pass condition on the rows of one quantity, in row order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Assertion {
    /// Power-fit slope against `ε` at least `min`, optionally with `R² ≥ r2`.
    MinSlope { quantity: &'static str, min: f64, r2: Option<f64> },
    MaxSlope { quantity: &'static str, max: f64 },
    /// Each value at most `(1 + slack)` times the previous one.
    Monotone { quantity: &'static str, slack: f64 },
    /// `max / min` over the rows.
    MaxOverMin { quantity: &'static str, max: f64 },
    /// Each value at most `max` times the previous one (refinement pairs).
    Ratio { quantity: &'static str, max: f64 },
    AtMost { quantity: &'static str, max: f64 },
    /// `last / first` between two named quantities at least / at most a bound.
    GrowthAtMost { from: &'static str, to: &'static str, max: f64 },
    GrowthAtLeast { from: &'static str, to: &'static str, min: f64 },
}

impl Assertion {
    fn quantities(&self) -> Vec<&'static str> {
        match *self {
            Self::MinSlope { quantity, .. }
            | Self::MaxSlope { quantity, .. }
            | Self::Monotone { quantity, .. }
            | Self::MaxOverMin { quantity, .. }
            | Self::Ratio { quantity, .. }
            | Self::AtMost { quantity, .. } => vec![quantity],
            Self::GrowthAtMost { from, to, .. } | Self::GrowthAtLeast { from, to, .. } => vec![from, to],
        }
    }

    /// Rate-type assertions are skipped when every value is an exact zero.
    fn is_rate(&self) -> bool {
        !matches!(self, Self::AtMost { .. })
    }

    pub fn describe(&self) -> String {
        match *self {
            Self::MinSlope { quantity, min, r2: Some(r2) } => format!("slope({quantity}) >= {min}, R2 >= {r2}"),
            Self::MinSlope { quantity, min, r2: None } => format!("slope({quantity}) >= {min}"),
            Self::MaxSlope { quantity, max } => format!("slope({quantity}) <= {max}"),
            Self::Monotone { quantity, slack } => format!("{quantity} decreasing within {}%", slack * 100.0),
            Self::MaxOverMin { quantity, max } => format!("max/min({quantity}) <= {max}"),
            Self::Ratio { quantity, max } => format!("ratio({quantity}) <= {max} per step"),
            Self::AtMost { quantity, max } => format!("{quantity} <= {max:e}"),
            Self::GrowthAtMost { from, to, max } => format!("{to}/{from} <= {max}"),
            Self::GrowthAtLeast { from, to, min } => format!("{to}/{from} >= {min}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantityFit {
    pub quantity: String,
    pub fit: RateFit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    DegeneratePass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub experiment: String,
    pub rows: Vec<Row>,
    pub fits: Vec<QuantityFit>,
    pub checks: Vec<Check>,
    pub status: Status,
    pub notes: Vec<String>,
}

impl RateReport {
    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }

    /// Report for an experiment that could not produce its rows.
    pub fn failed(experiment: &str, rows: Vec<Row>, note: String) -> Self {
        Self { experiment: experiment.into(), rows, fits: Vec::new(), checks: Vec::new(), status: Status::Fail, notes: vec![note] }
    }

    pub fn values(&self, quantity: &str) -> Vec<f64> {
        self.rows.iter().filter(|r| r.quantity == quantity).map(|r| r.value).collect()
    }

    pub fn fit(&self, quantity: &str) -> Option<&RateFit> {
        self.fits.iter().find(|f| f.quantity == quantity).map(|f| &f.fit)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Fits every quantity that has a rate assertion and evaluates all
    /// assertions.
    pub fn assess(experiment: &str, rows: Vec<Row>, assertions: &[Assertion], notes: Vec<String>) -> Self {
        let series = |q: &str| -> (Vec<f64>, Vec<f64>) {
            rows.iter().filter(|r| r.quantity == q).map(|r| (r.epsilon, r.value)).unzip()
        };
        let mut fits: Vec<QuantityFit> = Vec::new();
        let mut checks = Vec::new();
        let mut all_degenerate = true;
        let mut any_rate = false;
        for a in assertions {
            let qs = a.quantities();
            let data: Vec<(Vec<f64>, Vec<f64>)> = qs.iter().map(|q| series(q)).collect();
            let name = a.describe();
            if data.iter().any(|(_, v)| v.is_empty()) {
                checks.push(Check { name, passed: true, detail: "not measured for this configuration".into() });
                continue;
            }
            if data.iter().flat_map(|(_, v)| v).any(|v| !v.is_finite()) {
                checks.push(Check { name, passed: false, detail: "non-finite value".into() });
                all_degenerate = false;
                continue;
            }
            let degenerate = data.iter().flat_map(|(_, v)| v).all(|v| v.abs() <= DEGENERATE);
            if a.is_rate() {
                any_rate = true;
                if degenerate {
                    checks.push(Check { name, passed: true, detail: "all values <= 1e-9, fit skipped".into() });
                    continue;
                }
            }
            all_degenerate &= degenerate;
            let (eps, vals) = &data[0];
            let (passed, detail) = match *a {
                Assertion::MinSlope { quantity, .. } | Assertion::MaxSlope { quantity, .. } => match fit_rate(eps, vals) {
                    Ok(f) => {
                        let ok = match *a {
                            Assertion::MinSlope { min, r2, .. } => f.slope >= min && r2.is_none_or(|t| f.r2 >= t),
                            Assertion::MaxSlope { max, .. } => f.slope <= max,
                            _ => unreachable!(),
                        };
                        let d = format!("slope {:.3}, R2 {:.4}, alt slope {:.3}", f.slope, f.r2, f.alt_slope);
                        if !fits.iter().any(|q| q.quantity == quantity) {
                            fits.push(QuantityFit { quantity: quantity.into(), fit: f });
                        }
                        (ok, d)
                    }
                    Err(e) => (false, e.to_string()),
                },
                Assertion::Monotone { slack, .. } => {
                    let worst = vals.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
                    (worst <= 1.0 + slack, format!("largest step ratio {worst:.3}"))
                }
                Assertion::MaxOverMin { max, .. } => {
                    let hi = vals.iter().cloned().fold(f64::MIN, f64::max);
                    let lo = vals.iter().cloned().fold(f64::MAX, f64::min);
                    let r = hi / lo;
                    (lo > 0.0 && r <= max, format!("max/min {r:.3}"))
                }
                Assertion::Ratio { max, .. } => {
                    let worst = vals.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
                    (vals.len() >= 2 && worst <= max, format!("largest step ratio {worst:.3}"))
                }
                Assertion::AtMost { max, .. } => {
                    let worst = vals.iter().cloned().fold(0.0, |m: f64, v| m.max(v.abs()));
                    (worst <= max, format!("max {worst:.3e}"))
                }
                Assertion::GrowthAtMost { max, .. } => {
                    let g = data[1].1[0] / vals[0];
                    (g <= max, format!("growth {g:.3}"))
                }
                Assertion::GrowthAtLeast { min, .. } => {
                    let g = data[1].1[0] / vals[0];
                    (g >= min, format!("growth {g:.3}"))
                }
            };
            checks.push(Check { name, passed, detail });
        }
        let status = if checks.iter().any(|c| !c.passed) {
            Status::Fail
        } else if any_rate && all_degenerate {
            Status::DegeneratePass
        } else {
            Status::Pass
        };
        Self { experiment: experiment.into(), rows, fits, checks, status, notes }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(Error::Config(format!("unknown format `{s}` (csv, json)"))),
        }
    }
}

pub const CSV_HEADER: &str = "experiment,epsilon,h,quantity,value";

pub fn write_csv<W: Write>(rows: &[Row], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.experiment, r.epsilon, r.h, r.quantity, r.value)?;
    }
    Ok(())
}

pub fn to_json(report: &RateReport) -> String {
    serde_json::to_string_pretty(report).expect("reports serialize")
}

/// Writes `report` to `dir/<experiment>.<csv|json>` and returns the path.
pub fn emit(report: &RateReport, format: Format, dir: &Path) -> Result<PathBuf> {
    let io = |p: &Path, e| Error::Io(p.display().to_string(), e);
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let path = dir.join(format!("{}.{ext}", report.experiment));
    let mut bytes = Vec::new();
    match format {
        Format::Csv => write_csv(&report.rows, &mut bytes).expect("writing to memory"),
        Format::Json => {
            bytes.extend_from_slice(to_json(report).as_bytes());
            bytes.push(b'\n');
        }
    }
    std::fs::write(&path, bytes).map_err(|e| io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(q: &str, vals: &[(f64, f64)]) -> Vec<Row> {
        vals.iter()
            .map(|&(epsilon, value)| Row { experiment: "t".into(), epsilon, h: epsilon / 16.0, quantity: q.into(), value })
            .collect()
    }

    #[test]
    fn csv_shapes() {
        let mut out = Vec::new();
        write_csv(&[], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), format!("{CSV_HEADER}\n"));
        let r = rows("q", &[(0.125, 1.0), (0.0625, 0.5), (0.03125, 0.25), (0.015625, 0.125)]);
        let mut out = Vec::new();
        write_csv(&r, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert_eq!(text.lines().nth(1).unwrap(), "t,0.125,0.0078125,q,1");
    }

    #[test]
    fn assessment_outcomes() {
        let r = rows("q", &[(0.125, 1.0), (0.0625, 0.5), (0.03125, 0.25), (0.015625, 0.125)]);
        let rep = RateReport::assess("t", r.clone(), &[Assertion::MinSlope { quantity: "q", min: 0.9, r2: Some(0.98) }], vec![]);
        assert_eq!(rep.status, Status::Pass);
        assert!((rep.fit("q").unwrap().slope - 1.0).abs() < 1e-12);
        let rep = RateReport::assess("t", r.clone(), &[Assertion::MaxSlope { quantity: "q", max: 0.7 }], vec![]);
        assert_eq!(rep.status, Status::Fail);
        let rep = RateReport::assess("t", r, &[Assertion::Ratio { quantity: "q", max: 0.6 }], vec![]);
        assert_eq!(rep.status, Status::Pass);
        let zeros = rows("q", &[(0.125, 0.0), (0.0625, 1e-12), (0.03125, 0.0)]);
        let rep = RateReport::assess("t", zeros, &[Assertion::MinSlope { quantity: "q", min: 0.8, r2: None }], vec![]);
        assert_eq!(rep.status, Status::DegeneratePass);
        let bumpy = rows("q", &[(0.125, 1.0), (0.0625, 1.08), (0.03125, 1.2)]);
        let rep = RateReport::assess("t", bumpy, &[Assertion::Monotone { quantity: "q", slack: 0.1 }], vec![]);
        assert_eq!(rep.status, Status::Fail);
    }
}
