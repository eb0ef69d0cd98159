//! The experiment registry: every id, the estimate it measures, the CLI
//! group it belongs to and its pass conditions.

use crate::report::Assertion;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Group {
    Cell,
    Correctors,
    Green,
    NeumannFn,
    Poisson,
    Dtn,
    Expand,
    Rates,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Plan {
    /// One row set per `ε` of the sweep, sharing the per-`ε` context.
    Sweep,
    /// Mesh refinement at the coarsest `ε`.
    Refinement,
    /// Independent of the sweep.
    Standalone,
}

#[derive(Debug)]
pub struct ExperimentInfo {
    pub id: &'static str,
    /// The estimate or identity being measured.
    pub statement: &'static str,
    pub group: Group,
    pub plan: Plan,
    pub assertions: &'static [Assertion],
}

use Assertion::*;

/// Every estimate the laboratory measures, one experiment each.
pub const STATEMENTS: &[&str] = &[
    "closed-form homogenized tensors",
    "Dirichlet and Neumann corrector bounds",
    "interior identity for w",
    "conormal identity for w",
    "Green function difference",
    "Green function gradient expansion",
    "Neumann function difference",
    "Neumann function gradient expansion",
    "Dirichlet W1p expansion",
    "Neumann W1p expansion",
    "weighted energy estimate",
    "Dirichlet Lq rate",
    "Dirichlet sup rate",
    "Neumann Lq rate",
    "Poisson kernel expansion",
    "oscillating boundary data approximation",
    "divergence data approximation",
    "mixed second derivative kernel expansion",
    "operator expansion S",
    "Dirichlet-to-Neumann expansion",
    "coordinate commutator of the Laplacian DtN map",
    "product commutator of the Laplacian DtN map",
];

pub const REGISTRY: &[ExperimentInfo] = &[
    ExperimentInfo {
        id: "cell-oracle",
        statement: "closed-form homogenized tensors",
        group: Group::Cell,
        plan: Plan::Standalone,
        assertions: &[
            AtMost { quantity: "hat11_error", max: 1e-3 },
            AtMost { quantity: "hat22_error", max: 1e-3 },
            AtMost { quantity: "hat12_error", max: 1e-4 },
            AtMost { quantity: "chi_mean", max: 1e-10 },
            AtMost { quantity: "b_integral", max: 1e-8 },
            AtMost { quantity: "flux_antisymmetry", max: 0.0 },
            Ratio { quantity: "flux_residual", max: 0.6 },
        ],
    },
    ExperimentInfo {
        id: "corrector-bounds",
        statement: "Dirichlet and Neumann corrector bounds",
        group: Group::Correctors,
        plan: Plan::Sweep,
        assertions: &[
            MaxOverMin { quantity: "phi_over_eps", max: 3.0 },
            MaxOverMin { quantity: "psi_over_eps_log", max: 3.0 },
        ],
    },
    ExperimentInfo {
        id: "prop21-residual",
        statement: "interior identity for w",
        group: Group::Expand,
        plan: Plan::Refinement,
        assertions: &[Ratio { quantity: "mismatch", max: 0.6 }],
    },
    ExperimentInfo {
        id: "prop24-conormal",
        statement: "conormal identity for w",
        group: Group::Expand,
        plan: Plan::Refinement,
        assertions: &[Ratio { quantity: "conormal_max", max: 0.6 }],
    },
    ExperimentInfo {
        id: "thmA-green-size",
        statement: "Green function difference",
        group: Group::Green,
        plan: Plan::Sweep,
        assertions: &[MinSlope { quantity: "green_diff", min: 0.8, r2: Some(0.98) }],
    },
    ExperimentInfo {
        id: "thmA-green-grad",
        statement: "Green function gradient expansion",
        group: Group::Green,
        plan: Plan::Sweep,
        assertions: &[MinSlope { quantity: "grad_expansion_sup", min: 0.7, r2: None }],
    },
    ExperimentInfo {
        id: "thmB-neumann-size",
        statement: "Neumann function difference",
        group: Group::NeumannFn,
        plan: Plan::Sweep,
        assertions: &[MinSlope { quantity: "neumann_diff", min: 0.8, r2: None }],
    },
    ExperimentInfo {
        id: "thmB-neumann-grad",
        statement: "Neumann function gradient expansion",
        group: Group::NeumannFn,
        plan: Plan::Sweep,
        assertions: &[MinSlope { quantity: "grad_expansion_sup", min: 0.6, r2: None }],
    },
    ExperimentInfo {
        id: "w1p-dirichlet",
        statement: "Dirichlet W1p expansion",
        group: Group::Expand,
        plan: Plan::Sweep,
        assertions: &[
            MinSlope { quantity: "w_dirichlet_h1", min: 0.85, r2: None },
            MaxSlope { quantity: "w_chi_h1", max: 0.7 },
        ],
    },
    ExperimentInfo {
        id: "w1p-neumann",
        statement: "Neumann W1p expansion",
        group: Group::Expand,
        plan: Plan::Sweep,
        assertions: &[MinSlope { quantity: "w_neumann_h1", min: 0.7, r2: None }],
    },
    ExperimentInfo {
        id: "weighted-h1",
        statement: "weighted energy estimate",
        group: Group::Expand,
        plan: Plan::Sweep,
        assertions: &[MinSlope { quantity: "w_chi_weighted", min: 0.85, r2: None }],
    },
    ExperimentInfo {
        id: "lp-dirichlet",
        statement: "Dirichlet Lq rate",
        group: Group::Rates,
        plan: Plan::Sweep,
        assertions: &[MinSlope { quantity: "u_diff_l2", min: 0.9, r2: None }],
    },
    ExperimentInfo {
        id: "linf-dirichlet",
        statement: "Dirichlet sup rate",
        group: Group::Rates,
        plan: Plan::Sweep,
        assertions: &[MinSlope { quantity: "u_diff_linf", min: 0.8, r2: None }],
    },
    ExperimentInfo {
        id: "lp-neumann",
        statement: "Neumann Lq rate",
        group: Group::Rates,
        plan: Plan::Sweep,
        assertions: &[MinSlope { quantity: "u_diff_l2", min: 0.8, r2: None }],
    },
    ExperimentInfo {
        id: "poisson-remainder",
        statement: "Poisson kernel expansion",
        group: Group::Poisson,
        plan: Plan::Sweep,
        assertions: &[MinSlope { quantity: "remainder_max", min: 0.7, r2: None }],
    },
    ExperimentInfo {
        id: "poisson-approx",
        statement: "oscillating boundary data approximation",
        group: Group::Poisson,
        plan: Plan::Sweep,
        assertions: &[
            MinSlope { quantity: "oscillating_l2", min: 0.3, r2: None },
            MinSlope { quantity: "unit_l1", min: 0.5, r2: None },
        ],
    },
    ExperimentInfo {
        id: "div-approx",
        statement: "divergence data approximation",
        group: Group::Expand,
        plan: Plan::Sweep,
        assertions: &[MinSlope { quantity: "l2", min: 0.8, r2: None }],
    },
    ExperimentInfo {
        id: "second-deriv-kernel",
        statement: "mixed second derivative kernel expansion",
        group: Group::Green,
        plan: Plan::Sweep,
        assertions: &[MinSlope { quantity: "mixed_expansion_sup", min: 0.6, r2: None }],
    },
    ExperimentInfo {
        id: "s-epsilon",
        statement: "operator expansion S",
        group: Group::Expand,
        plan: Plan::Sweep,
        assertions: &[
            Monotone { quantity: "s_norm", slack: 0.1 },
            AtMost { quantity: "s_of_one", max: 1e-8 },
        ],
    },
    ExperimentInfo {
        id: "dtn-expansion",
        statement: "Dirichlet-to-Neumann expansion",
        group: Group::Dtn,
        plan: Plan::Sweep,
        assertions: &[Monotone { quantity: "defect_l15", slack: 0.1 }],
    },
    ExperimentInfo {
        id: "leibniz-1",
        statement: "coordinate commutator of the Laplacian DtN map",
        group: Group::Dtn,
        plan: Plan::Standalone,
        assertions: &[
            GrowthAtMost { from: "commutator_ratio_k2", to: "commutator_ratio_k16", max: 2.0 },
            GrowthAtLeast { from: "dtn_ratio_k2", to: "dtn_ratio_k16", min: 4.0 },
        ],
    },
    ExperimentInfo {
        id: "leibniz-2",
        statement: "product commutator of the Laplacian DtN map",
        group: Group::Dtn,
        plan: Plan::Standalone,
        assertions: &[AtMost { quantity: "product_ratio_max", max: 5.0 }],
    },
];

pub fn lookup(id: &str) -> Result<&'static ExperimentInfo> {
    REGISTRY.iter().find(|e| e.id == id).ok_or_else(|| Error::UnknownExperiment {
        id: id.into(),
        available: REGISTRY.iter().map(|e| e.id).collect::<Vec<_>>().join(", "),
    })
}

pub fn group(g: Group) -> Vec<&'static str> {
    REGISTRY.iter().filter(|e| e.group == g).map(|e| e.id).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_statement_has_exactly_one_experiment() {
        assert_eq!(REGISTRY.len(), 22);
        for s in STATEMENTS {
            assert_eq!(REGISTRY.iter().filter(|e| e.statement == *s).count(), 1, "{s}");
        }
        for e in REGISTRY {
            assert!(STATEMENTS.contains(&e.statement), "{}", e.id);
            assert!(!e.assertions.is_empty(), "{}", e.id);
        }
        let mut ids: Vec<_> = REGISTRY.iter().map(|e| e.id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), REGISTRY.len());
    }

    #[test]
    fn unknown_ids_list_the_alternatives() {
        let err = lookup("nope").unwrap_err().to_string();
        assert!(err.contains("nope") && err.contains("thmA-green-size") && err.contains("leibniz-2"));
        assert_eq!(lookup("s-epsilon").unwrap().group, Group::Expand);
    }
}
