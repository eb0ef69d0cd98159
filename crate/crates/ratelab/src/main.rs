use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ratelab::config::{parse_eps_list, Config};
use ratelab::registry::{group, Group, REGISTRY};
use ratelab::report::{emit, Format};
use ratelab::{run, tables, Error, Result};

#[derive(Parser)]
#[command(name = "homoglab", version, about = "Convergence-rate experiments for periodic homogenization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cell problem: homogenized tensor, corrector and flux-corrector checks.
    Cell(Common),
    /// Dirichlet and Neumann corrector bounds across the sweep.
    Correctors(Common),
    /// Green function expansions.
    Green(Common),
    /// Neumann function expansions.
    NeumannFn(Common),
    /// Poisson kernel remainder and boundary-data approximation.
    Poisson(Common),
    /// Dirichlet-to-Neumann expansion and commutators.
    Dtn(Common),
    /// First-order expansions, identity checks and approximation results.
    Expand {
        #[command(flatten)]
        common: Common,
        /// Run only the interior (`residual`) or conormal identity check.
        #[arg(long, value_enum)]
        check: Option<Check>,
    },
    /// Energy and Lebesgue-norm rates.
    Rates(Common),
    /// Every registered experiment.
    All(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Residual,
    Conormal,
}

#[derive(Args)]
struct Common {
    /// JSON configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Comma-separated epsilons, e.g. `1/8,1/16,1/32`.
    #[arg(long, visible_alias = "eps-list")]
    eps: Option<String>,
    #[arg(long)]
    cells_per_period: Option<usize>,
    #[arg(long, default_value = "csv")]
    format: String,
    /// Restrict to these experiment ids (repeatable).
    #[arg(long)]
    experiment: Vec<String>,
    /// Corrector family of the interior identity check: chi, dirichlet or neumann.
    #[arg(long)]
    family: Option<String>,
    /// Pin point `x0,y0` of the Neumann correctors.
    #[arg(long)]
    pin: Option<String>,
    /// Also write nodal and kernel tables.
    #[arg(long)]
    tables: bool,
}

fn parse_pin(s: &str) -> Result<[f64; 2]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("cannot read pin `{s}`")))?;
    match v[..] {
        [a, b] => Ok([a, b]),
        _ => Err(Error::Config(format!("pin needs two coordinates, got `{s}`"))),
    }
}

fn execute(cli: Cli) -> Result<bool> {
    let (common, groups, check) = match cli.command {
        Command::Cell(c) => (c, vec![Group::Cell], None),
        Command::Correctors(c) => (c, vec![Group::Correctors], None),
        Command::Green(c) => (c, vec![Group::Green], None),
        Command::NeumannFn(c) => (c, vec![Group::NeumannFn], None),
        Command::Poisson(c) => (c, vec![Group::Poisson], None),
        Command::Dtn(c) => (c, vec![Group::Dtn], None),
        Command::Expand { common, check } => (common, vec![Group::Expand], check),
        Command::Rates(c) => (c, vec![Group::Rates], None),
        Command::All(c) => (c, Vec::new(), None),
    };
    let mut config = match &common.config {
        Some(p) => Config::from_path(p)?,
        None => Config::default(),
    };
    if let Some(eps) = &common.eps {
        config.mesh.eps = parse_eps_list(eps)?.into_iter().map(ratelab::config::EpsValue::Number).collect();
    }
    if let Some(c) = common.cells_per_period {
        config.mesh.cells_per_period = c;
    }
    if let Some(f) = &common.family {
        config.family = f.clone();
    }
    if let Some(p) = &common.pin {
        config.pin = Some(parse_pin(p)?);
    }
    let settings = config.settings()?;
    let format: Format = common.format.parse()?;

    let available: Vec<&str> = if groups.is_empty() {
        REGISTRY.iter().map(|e| e.id).collect()
    } else {
        groups.iter().flat_map(|g| group(*g)).collect()
    };
    let mut wanted: Vec<String> = if !common.experiment.is_empty() { common.experiment.clone() } else { config.experiments.clone() };
    if let Some(check) = check {
        wanted = vec![match check {
            Check::Residual => "prop21-residual".into(),
            Check::Conormal => "prop24-conormal".into(),
        }];
    }
    let ids: Vec<&str> = if wanted.is_empty() {
        available.clone()
    } else {
        for w in &wanted {
            ratelab::registry::lookup(w)?;
        }
        let ids: Vec<&str> = available.iter().copied().filter(|id| wanted.iter().any(|w| w == id)).collect();
        if ids.is_empty() {
            return Err(Error::Config(format!("none of {wanted:?} belongs to this subcommand ({})", available.join(", "))));
        }
        ids
    };

    std::fs::create_dir_all(&common.out).map_err(|e| Error::Io(common.out.display().to_string(), e))?;
    let reports = run(&settings, &ids)?;
    let mut ok = true;
    for r in &reports {
        let path = emit(r, format, &common.out)?;
        ok &= r.passed();
        let status = serde_json::to_string(&r.status).expect("status serializes");
        println!("{:<20} {:<16} {}", r.experiment, status.trim_matches('"'), path.display());
        for c in &r.checks {
            println!("    [{}] {}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
        }
        for n in &r.notes {
            println!("    note: {n}");
        }
    }
    if groups.contains(&Group::Cell) {
        for p in tables::write_cell(&settings, &common.out, common.tables)? {
            println!("wrote {}", p.display());
        }
    }
    if common.tables {
        for g in groups.iter().filter(|g| matches!(g, Group::Green | Group::NeumannFn | Group::Poisson | Group::Dtn)) {
            for p in tables::write_kernel_tables(&settings, *g, &common.out)? {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(ok)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
