//! JSON configuration and the resolved settings an experiment run uses.

use std::path::Path;

use homoglab_core::coeff::{checkerboard, constant, layered, trigonometric, user_matrix, user_scalar, CoefficientField};
use homoglab_core::expand::CorrectorFamily;
use homoglab_core::mesh::SolverKind;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest grid the sweeps are allowed to build, in elements per axis.
pub const MAX_ELEMENTS: usize = 2048;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoefficientSpec {
    /// Row-major `(d·m)²` entries with `d = 2`.
    Constant {
        values: Vec<f64>,
        #[serde(default = "one")]
        m: usize,
    },
    Layered { mean: f64, amplitude: f64 },
    Trigonometric { mean: f64, amplitude: f64 },
    Checkerboard { contrast: f64, width: f64 },
    /// Scalar `a(y₁, y₂)` in the variables `y1`, `y2`.
    UserScalar { expr: String },
    /// `[a11, a12, a21, a22]` expressions.
    UserMatrix { entries: [String; 4] },
}

fn one() -> usize {
    1
}

impl Default for CoefficientSpec {
    fn default() -> Self {
        Self::Layered { mean: 2.0, amplitude: 1.0 }
    }
}

impl CoefficientSpec {
    pub fn build(&self) -> Result<CoefficientField<f64>> {
        let field = match self {
            Self::Constant { values, m } => constant(2, *m, values.clone()),
            Self::Layered { mean, amplitude } => layered(*mean, *amplitude),
            Self::Trigonometric { mean, amplitude } => trigonometric(*mean, *amplitude),
            Self::Checkerboard { contrast, width } => checkerboard(*contrast, *width),
            Self::UserScalar { expr } => user_scalar(expr),
            Self::UserMatrix { entries } => user_matrix([&entries[0], &entries[1], &entries[2], &entries[3]]),
        };
        Ok(field?)
    }

    /// Homogenized tensor in closed form, when one is known.
    pub fn closed_form_hat(&self) -> Option<Vec<f64>> {
        match self {
            Self::Constant { values, .. } => Some(values.clone()),
            // harmonic mean across the layers, arithmetic mean along them
            Self::Layered { mean, amplitude } => Some(vec![(mean * mean - amplitude * amplitude).sqrt(), 0.0, 0.0, *mean]),
            _ => None,
        }
    }
}

/// An `ε` given as a number or as a fraction such as `"1/16"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsValue {
    Number(f64),
    Text(String),
}

impl EpsValue {
    pub fn value(&self) -> Result<f64> {
        match self {
            Self::Number(v) => Ok(*v),
            Self::Text(s) => parse_eps(s),
        }
    }
}

pub fn parse_eps(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::Config(format!("cannot read epsilon `{s}`"));
    match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            Ok(a / b)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

/// Comma-separated list of epsilons, e.g. `1/8,1/16,0.03125`.
pub fn parse_eps_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(parse_eps).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub eps: Vec<EpsValue>,
    pub cells_per_period: usize,
    /// Elements per axis for the Laplacian commutator runs.
    pub leibniz_n: usize,
    /// Cell grid for the closed-form oracle.
    pub oracle_n: usize,
    /// Number of mesh halvings in the identity checks.
    pub refinements: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            eps: ["1/8", "1/16", "1/32", "1/64"].iter().map(|s| EpsValue::Text(s.to_string())).collect(),
            cells_per_period: 16,
            leibniz_n: 256,
            oracle_n: 256,
            refinements: 2,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverChoice {
    #[default]
    Direct,
    Cg,
}

impl SolverChoice {
    pub fn kind(self) -> SolverKind {
        match self {
            Self::Direct => SolverKind::Direct,
            Self::Cg => SolverKind::ConjugateGradient { tol: 1e-12, max_iter: 200_000 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub coefficient: CoefficientSpec,
    pub mesh: MeshConfig,
    pub solver: SolverChoice,
    /// Experiment ids; empty means every id the subcommand covers.
    pub experiments: Vec<String>,
    /// Interior points for the pointwise kernel experiments.
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub seed: u64,
    /// Corrector family for the interior identity check.
    pub family: String,
    /// Pin point of the Neumann correctors; the center node when absent.
    pub pin: Option<[f64; 2]>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            coefficient: CoefficientSpec::default(),
            mesh: MeshConfig::default(),
            solver: SolverChoice::Direct,
            experiments: Vec::new(),
            x: [0.25, 0.25],
            y: [0.75, 0.5],
            seed: 7,
            family: "dirichlet".into(),
            pin: None,
        }
    }
}

impl Config {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(path.display().to_string(), e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn settings(&self) -> Result<Settings> {
        let eps = self.mesh.eps.iter().map(EpsValue::value).collect::<Result<Vec<_>>>()?;
        let s = Settings {
            coefficient: self.coefficient.clone(),
            eps,
            cells_per_period: self.mesh.cells_per_period,
            leibniz_n: self.mesh.leibniz_n,
            oracle_n: self.mesh.oracle_n,
            refinements: self.mesh.refinements,
            solver: self.solver.kind(),
            x: self.x,
            y: self.y,
            seed: self.seed,
            family: self.family.parse()?,
            pin: self.pin,
        };
        s.validate()?;
        Ok(s)
    }
}

/// Fully resolved run parameters.
#[derive(Clone, Debug)]
pub struct Settings {
    pub coefficient: CoefficientSpec,
    pub eps: Vec<f64>,
    pub cells_per_period: usize,
    pub leibniz_n: usize,
    pub oracle_n: usize,
    pub refinements: usize,
    pub solver: SolverKind,
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub seed: u64,
    pub family: CorrectorFamily,
    pub pin: Option<[f64; 2]>,
}

impl Default for Settings {
    fn default() -> Self {
        Config::default().settings().expect("default configuration is valid")
    }
}

impl Settings {
    /// Elements per axis at `eps`.
    pub fn elements(&self, eps: f64) -> usize {
        (self.cells_per_period as f64 / eps).round() as usize
    }

    /// Structural checks. Under-resolution (fewer than 8 cells per period)
    /// is not an error here; the runner turns it into failed reports.
    pub fn validate(&self) -> Result<()> {
        if self.eps.is_empty() {
            return Err(Error::Config("the epsilon list is empty".into()));
        }
        if self.eps.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
            return Err(Error::Config(format!("epsilons must lie in (0, 1], got {:?}", self.eps)));
        }
        if self.eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config(format!("epsilons must be strictly decreasing, got {:?}", self.eps)));
        }
        if self.cells_per_period == 0 {
            return Err(Error::Config("cells-per-period must be positive".into()));
        }
        let finest = self.elements(*self.eps.last().expect("nonempty"));
        if finest > MAX_ELEMENTS {
            return Err(Error::Config(format!("epsilon {} needs {finest} elements per axis, above the {MAX_ELEMENTS} budget", self.eps.last().unwrap())));
        }
        let top = self.cells_per_period << self.refinements;
        if self.elements(self.eps[0]) << self.refinements > MAX_ELEMENTS {
            return Err(Error::Config(format!("{} refinements of {top} cells per period exceed the grid budget", self.refinements)));
        }
        for p in [self.x, self.y].into_iter().chain(self.pin) {
            if p.iter().any(|c| !(*c > 0.0 && *c < 1.0)) {
                return Err(Error::Config(format!("sample point {p:?} is not inside the unit square")));
            }
        }
        if self.leibniz_n < 16 || self.oracle_n < 8 {
            return Err(Error::Config("leibniz_n must be at least 16 and oracle_n at least 8".into()));
        }
        Ok(())
    }

    pub fn under_resolved(&self) -> bool {
        self.cells_per_period < 8
    }
}
