//! Plot-ready artifacts beside the rate reports: the cell record and
//! kernel / Dirichlet-to-Neumann tables at the coarsest `ε`.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use homoglab_core::cell::CellSolution;
use homoglab_core::kernels::{DtNMatrix, KernelKind, KernelTable};
use homoglab_core::mesh::{SquareMesh, StructuredGrid};
use serde::Serialize;

use crate::config::Settings;
use crate::context::{EpsContext, Problem};
use crate::registry::Group;
use crate::{Error, Result};

#[derive(Serialize)]
struct ChiStats {
    max_mean: f64,
    max_abs: f64,
}

#[derive(Serialize)]
struct BStats {
    integral_max: f64,
    weak_divergence: f64,
}

#[derive(Serialize)]
struct FluxStats {
    antisymmetry: f64,
    divergence_residual: f64,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct CellRecord {
    n: usize,
    hatA: Vec<f64>,
    chi_stats: ChiStats,
    b_stats: BStats,
    F_residual: FluxStats,
}

fn create(path: &Path) -> Result<BufWriter<std::fs::File>> {
    std::fs::File::create(path).map(BufWriter::new).map_err(|e| Error::Io(path.display().to_string(), e))
}

fn finish<W: Write>(path: &Path, r: std::io::Result<W>) -> Result<PathBuf> {
    r.and_then(|mut w| w.flush()).map_err(|e| Error::Io(path.display().to_string(), e))?;
    Ok(path.to_path_buf())
}

/// `cell.json` at the oracle resolution and, with `tables`, the nodal
/// corrector table `chi.csv` (`y1,y2,j,value`).
pub fn write_cell(settings: &Settings, dir: &Path, tables: bool) -> Result<Vec<PathBuf>> {
    let coeff = settings.coefficient.build()?;
    let n = settings.oracle_n;
    let cell = CellSolution::compute(&coeff, n)?;
    let record = CellRecord {
        n,
        hatA: cell.hat_a.values().to_vec(),
        chi_stats: ChiStats {
            max_mean: cell.correctors.max_mean(),
            max_abs: cell.correctors.chi.iter().map(|c| c.max_abs()).fold(0.0, f64::max),
        },
        b_stats: BStats { integral_max: cell.b_mean(), weak_divergence: cell.b_weak_divergence()? },
        F_residual: FluxStats { antisymmetry: cell.flux_antisymmetry(), divergence_residual: cell.flux_divergence_residual()? },
    };
    let path = dir.join("cell.json");
    let json = serde_json::to_string_pretty(&record).expect("record serializes") + "\n";
    std::fs::write(&path, json).map_err(|e| Error::Io(path.display().to_string(), e))?;
    let mut out = vec![path];
    if tables {
        let path = dir.join("chi.csv");
        let mut w = create(&path)?;
        let grid = cell.grid();
        let r = (|| {
            writeln!(w, "y1,y2,j,value")?;
            for (j, col) in cell.correctors.chi.iter().enumerate() {
                for node in 0..grid.num_nodes() {
                    let y = grid.coords::<f64>(node);
                    writeln!(w, "{},{},{},{}", y[0], y[1], j, col.at(node, 0))?;
                }
            }
            Ok(w)
        })();
        out.push(finish(&path, r)?);
    }
    Ok(out)
}

fn kernel_csv(table: &KernelTable<f64>, mesh: &SquareMesh, path: PathBuf) -> Result<PathBuf> {
    let w = create(&path)?;
    let r = (|| {
        let mut w = w;
        table.write_csv(mesh, &mut w)?;
        Ok(w)
    })();
    finish(&path, r)
}

/// Kernel tables for `group` at the coarsest `ε`, oscillating and
/// homogenized: Green and Neumann columns at the configured `y`, the Poisson
/// kernel at the boundary point nearest `(0.5, 0)`, and the dense
/// Dirichlet-to-Neumann matrix.
pub fn write_kernel_tables(settings: &Settings, group: Group, dir: &Path) -> Result<Vec<PathBuf>> {
    let problem = Problem::new(settings.clone())?;
    let eps = settings.eps[0];
    let ctx = EpsContext::new(&problem, eps)?;
    let mesh = &ctx.mesh;
    let y = ctx.node_at(settings.y);
    let mut out = Vec::new();
    match group {
        Group::Green => {
            out.push(kernel_csv(&KernelTable::build(KernelKind::Green, ctx.op_dir()?, eps, &[y], 0)?, mesh, dir.join("green_eps.csv"))?);
            out.push(kernel_csv(&KernelTable::build(KernelKind::Green, ctx.op0_dir()?, 0.0, &[y], 0)?, mesh, dir.join("green_hom.csv"))?);
        }
        Group::NeumannFn => {
            let Some(op) = ctx.op_neu()? else {
                return Err(Error::Config("Neumann functions need a symmetric coefficient".into()));
            };
            out.push(kernel_csv(&KernelTable::build(KernelKind::NeumannFn, op, eps, &[y], 0)?, mesh, dir.join("neumann_eps.csv"))?);
            out.push(kernel_csv(&KernelTable::build(KernelKind::NeumannFn, ctx.op0_neu()?, 0.0, &[y], 0)?, mesh, dir.join("neumann_hom.csv"))?);
        }
        Group::Poisson => {
            let pos = mesh.boundary_position(mesh.nearest_node([0.5, 0.0])).expect("boundary node");
            out.push(kernel_csv(&KernelTable::build(KernelKind::Poisson, ctx.op_dir()?, eps, &[pos], 0)?, mesh, dir.join("poisson_eps.csv"))?);
            out.push(kernel_csv(&KernelTable::build(KernelKind::Poisson, ctx.op0_dir()?, 0.0, &[pos], 0)?, mesh, dir.join("poisson_hom.csv"))?);
        }
        Group::Dtn => {
            for (name, op) in [("dtn_eps.csv", ctx.op_dir()?), ("dtn_hom.csv", ctx.op0_dir()?)] {
                let matrix = DtNMatrix::assemble(op)?;
                let path = dir.join(name);
                let w = create(&path)?;
                let r = write_dtn(&matrix, mesh, w);
                out.push(finish(&path, r)?);
            }
        }
        _ => {}
    }
    Ok(out)
}

/// Header row of boundary node indices, then one row per boundary node.
fn write_dtn<W: Write>(matrix: &DtNMatrix<f64>, mesh: &SquareMesh, mut w: W) -> std::io::Result<W> {
    let nodes = mesh.boundary_nodes();
    let header: Vec<String> = nodes.iter().map(|n| n.to_string()).collect();
    writeln!(w, "node,{}", header.join(","))?;
    for (r, node) in nodes.iter().enumerate() {
        let row = &matrix.values[r * matrix.size..(r + 1) * matrix.size];
        let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{node},{}", vals.join(","))?;
    }
    Ok(w)
}
