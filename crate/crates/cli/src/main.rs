use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use spaceform::mesh::validate_mesh;
use spaceform::oracle::{radial_j, radial_lambda1, radial_torsion};
use spaceform::shape::{sweep, SweepRow};
use spaceform::{AnnulusSpec, Discretization};
use spaceform_cli::canonical;
use spaceform_cli::config::{ConfigError, RunArgs, RunConfig};
use spaceform_cli::convergence::convergence;
use spaceform_cli::verify::{self, Injection, VerifyOptions};

#[derive(Parser)]
#[command(name = "spaceform", version, about = "Torsion and first Dirichlet eigenvalue on eccentric annuli in space forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve on one annulus and print a JSON report.
    Solve(RunArgs),
    /// Solve over a grid of offsets and write CSV.
    Sweep(RunArgs),
    /// Refinement study against the radial oracles (levels 2..=L, t = 0).
    Convergence(RunArgs),
    /// Run the verification suite on the canonical parameters.
    Verify {
        #[command(flatten)]
        args: RunArgs,
        #[arg(long, hide = true, value_enum)]
        inject: Option<Injection>,
    },
    /// Print the radial closed-form torsion function and λ1 as JSON.
    Oracle(RunArgs),
}

enum Failure {
    Config(ConfigError),
    Solver(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<spaceform::Error> for Failure {
    fn from(e: spaceform::Error) -> Self {
        Failure::Solver(e.to_string())
    }
}

fn emit(out: &Option<std::path::PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Solver(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Solver(format!("cannot write output: {e}")))
        }
    }
}

fn single_offset(cfg: &RunConfig) -> f64 {
    cfg.ts[0]
}

fn cmd_solve(args: RunArgs) -> Result<(), Failure> {
    let cfg = args.merged()?.single(canonical::LEVEL)?;
    let spec = AnnulusSpec::new(cfg.geom, cfg.r0, cfg.r1, single_offset(&cfg))?;
    let disc = Discretization::new(&spec, cfg.level)?;
    let torsion = disc.torsion()?;
    let eigen = disc.eigen()?;
    let report = validate_mesh(&disc.mesh);
    let value = json!({
        "geometry": cfg.geom.tag(),
        "r0": cfg.r0,
        "r1": cfg.r1,
        "t": spec.t,
        "L": cfg.level,
        "J": torsion.j,
        "lambda1": eigen.lambda1,
        "energy_identity_residual": torsion.energy_identity_residual(),
        "mesh_stats": {
            "nodes": report.num_nodes,
            "triangles": report.num_triangles,
            "edges": report.num_edges,
            "min_quality": report.min_quality,
            "max_edge": report.max_edge,
            "valid": report.is_valid(),
        },
    });
    emit(&cfg.out, &format!("{value:#}\n"))
}

fn cmd_sweep(args: RunArgs) -> Result<(), Failure> {
    let cfg = args.merged()?.sweep(canonical::LEVEL, canonical::DELTA)?;
    let rows = sweep(cfg.geom, cfg.r0, cfg.r1, &cfg.ts, cfg.level, cfg.delta)?;
    let mut csv = String::from(SweepRow::CSV_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.csv_record());
        csv.push('\n');
    }
    emit(&cfg.out, &csv)
}

fn cmd_convergence(args: RunArgs) -> Result<(), Failure> {
    let cfg = args.merged()?.single(*canonical::CONVERGENCE_LEVELS.end())?;
    if single_offset(&cfg) != 0.0 {
        return Err(ConfigError("convergence compares with the concentric oracle; use --t 0".into()).into());
    }
    let first = *canonical::CONVERGENCE_LEVELS.start();
    if cfg.level <= first {
        return Err(ConfigError(format!("convergence needs --L above {first}")).into());
    }
    let study = convergence(cfg.geom, cfg.r0, cfg.r1, first..=cfg.level)?;
    emit(&cfg.out, &study.to_csv())
}

fn cmd_oracle(args: RunArgs) -> Result<(), Failure> {
    let cfg = args.merged()?.single(canonical::LEVEL)?;
    let (geom, r0, r1) = (cfg.geom, cfg.r0, cfg.r1);
    let u = radial_torsion(geom, r0, r1)?;
    let samples: Vec<_> = (0..=10)
        .map(|k| {
            let r = r0 + (r1 - r0) * k as f64 / 10.0;
            json!({ "r": r, "u": u.u(r), "du": u.du(r) })
        })
        .collect();
    let value = json!({
        "geometry": geom.tag(),
        "r0": r0,
        "r1": r1,
        "C": u.c,
        "D": u.d,
        "J": radial_j(geom, r0, r1)?,
        "lambda1": radial_lambda1(geom, r0, r1)?,
        "samples": samples,
    });
    emit(&cfg.out, &format!("{value:#}\n"))
}

fn cmd_verify(args: RunArgs, inject: Option<Injection>) -> Result<bool, Failure> {
    let args = args.merged()?;
    let level = args.level.unwrap_or(canonical::LEVEL);
    if !(1..=spaceform::mesh::MAX_LEVEL).contains(&level) {
        return Err(ConfigError(format!("--L {level} is out of range")).into());
    }
    let delta = args.delta.unwrap_or(canonical::DELTA);
    if !(delta > 0.0 && delta < 0.05) {
        return Err(ConfigError(format!("--delta {delta} must lie in (0, 0.05)")).into());
    }
    let report = verify::run(&VerifyOptions { level, delta, injection: inject });
    let mut table = String::new();
    for check in &report.checks {
        table.push_str(&check.to_string());
        table.push('\n');
    }
    let failed = report.failures().count();
    table.push_str(&format!("{} checks, {} failed\n", report.checks.len(), failed));
    emit(&args.out, &table)?;
    for check in report.failures() {
        eprintln!("failed: {} (measured {}, required {})", check.name, check.measured, check.threshold);
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a).map(|_| true),
        Command::Sweep(a) => cmd_sweep(a).map(|_| true),
        Command::Convergence(a) => cmd_convergence(a).map(|_| true),
        Command::Oracle(a) => cmd_oracle(a).map(|_| true),
        Command::Verify { args, inject } => cmd_verify(args, inject),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
