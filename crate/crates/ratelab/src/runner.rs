//! Runs a selection of experiments. Sweep experiments share one
//! [`EpsContext`] per `ε`; each context is dropped before the next `ε` so at
//! most one grid's factorizations are alive.

use crate::config::Settings;
use crate::context::{EpsContext, Problem};
use crate::experiments::{measure, refinement, standalone};
use crate::registry::{lookup, ExperimentInfo, Plan};
use crate::report::{RateReport, Row};
use crate::Result;

/// Experiments that need the Neumann operators run first at each `ε`, so
/// their factorizations can be released before the Dirichlet ones.
fn uses_neumann(id: &str) -> bool {
    matches!(id, "corrector-bounds" | "thmB-neumann-size" | "thmB-neumann-grad" | "w1p-neumann" | "lp-neumann")
}

#[derive(Default)]
struct Collected {
    rows: Vec<Row>,
    notes: Vec<String>,
    error: Option<String>,
}

/// Runs `ids` under `settings` and returns one report per id, in order.
/// Unknown ids are an error; failures inside an experiment become failed
/// reports.
pub fn run(settings: &Settings, ids: &[&str]) -> Result<Vec<RateReport>> {
    let infos: Vec<&ExperimentInfo> = ids.iter().map(|id| lookup(id)).collect::<Result<_>>()?;
    if settings.under_resolved() {
        let note = format!("{} cells per period is below the minimum of 8", settings.cells_per_period);
        return Ok(infos.iter().map(|i| RateReport::failed(i.id, Vec::new(), note.clone())).collect());
    }
    let mut collected: Vec<Collected> = infos.iter().map(|_| Collected::default()).collect();

    let sweep: Vec<usize> = (0..infos.len()).filter(|&k| infos[k].plan == Plan::Sweep).collect();
    if !sweep.is_empty() {
        let mut order = sweep.clone();
        order.sort_by_key(|&k| !uses_neumann(infos[k].id));
        match Problem::new(settings.clone()) {
            Ok(problem) => {
                for &eps in &settings.eps {
                    let ctx = match EpsContext::new(&problem, eps) {
                        Ok(c) => c,
                        Err(e) => {
                            order.iter().for_each(|&k| collected[k].error = Some(e.to_string()));
                            break;
                        }
                    };
                    let mut released = false;
                    for &k in &order {
                        let id = infos[k].id;
                        if !released && !uses_neumann(id) {
                            ctx.release_neumann();
                            released = true;
                        }
                        let c = &mut collected[k];
                        if c.error.is_some() {
                            continue;
                        }
                        match measure(id, &ctx) {
                            Ok(values) if values.is_empty() => {
                                let note = "not measured: needs a symmetric coefficient".to_string();
                                if !c.notes.contains(&note) {
                                    c.notes.push(note);
                                }
                            }
                            Ok(values) => c.rows.extend(values.into_iter().map(|(q, v)| Row {
                                experiment: id.into(),
                                epsilon: eps,
                                h: ctx.h(),
                                quantity: q.into(),
                                value: v,
                            })),
                            Err(e) => c.error = Some(format!("epsilon {eps}: {e}")),
                        }
                    }
                }
            }
            Err(e) => sweep.iter().for_each(|&k| collected[k].error = Some(e.to_string())),
        }
    }

    for (k, info) in infos.iter().enumerate() {
        let c = &mut collected[k];
        match info.plan {
            Plan::Sweep => {}
            Plan::Refinement => match refinement(info.id, settings) {
                Ok(rows) if rows.is_empty() => c.notes.push("not measured: needs a symmetric coefficient".into()),
                Ok(rows) => c.rows = rows,
                Err(e) => c.error = Some(e.to_string()),
            },
            Plan::Standalone => match standalone(info.id, settings) {
                Ok((rows, notes)) => {
                    c.rows = rows;
                    c.notes.extend(notes);
                }
                Err(e) => c.error = Some(e.to_string()),
            },
        }
    }

    Ok(infos
        .iter()
        .zip(collected)
        .map(|(info, c)| match c.error {
            Some(e) => RateReport::failed(info.id, c.rows, e),
            None => RateReport::assess(info.id, c.rows, info.assertions, c.notes),
        })
        .collect())
}
