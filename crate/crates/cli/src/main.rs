//! Command-line entry point: config in, CSV/JSON artifacts and a run manifest
//! out. Exit codes: 0 success, 2 invalid config, 3 solver failure,
//! 4 acceptance failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::Serialize;

use steepwell::acceptance;
use steepwell::energy::EnergyModel;
use steepwell::error::Error;
use steepwell::limit::solve_limit;
use steepwell::model::{params_from_json, validate, ProblemParams};
use steepwell::report;
use steepwell::solver::{
    find_linking_geometry, linking_solve, mountain_pass_solve, SolverOptions,
};
use steepwell::spectrum::{eigen_convergence_sweep, solve_pencil_crossing};
use steepwell::sweep::sweep;

#[derive(Parser)]
#[command(name = "steepwell", version, about = "Spectral toolkit for fourth-order steep-well problems")]
struct Cli {
    /// Seed for every randomized certificate.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Directory for CSV/JSON artifacts and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Thread cap for parallel sections (default: rayon's choice).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form constants, thresholds and spectral data for a config.
    Constants {
        #[arg(long)]
        config: PathBuf,
        /// Number of well eigenvalues to tabulate.
        #[arg(long, default_value_t = 8)]
        count: usize,
    },
    /// Pencil spectrum along a lambda grid with limit diagnostics.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        count: usize,
        /// Comma-separated increasing grid; defaults to the config lambda.
        #[arg(long)]
        lambda_grid: Option<String>,
        /// Also export the assembled matrices as (row, col, value) CSV.
        #[arg(long)]
        dump_forms: bool,
    },
    /// Nontrivial critical point of the full problem.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Convergence tolerance (default 1e-8 definite, 1e-6 indefinite).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        path_nodes: Option<usize>,
        #[arg(long)]
        dump_forms: bool,
    },
    /// Nontrivial critical point of the limit problem on the well box.
    Limit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        path_nodes: Option<usize>,
    },
    /// Concentration sweep along a lambda grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated increasing grid (default "1e2,1e3,1e4").
        #[arg(long, default_value = "1e2,1e3,1e4")]
        lambda_grid: String,
        /// Solve grid points independently instead of warm-starting.
        #[arg(long)]
        cold: bool,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run the full acceptance suite; nonzero exit on any failure.
    Check,
}

#[derive(Serialize)]
struct CheckLine {
    name: String,
    passed: bool,
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    version: String,
    seed: u64,
    started_unix: u64,
    finished_unix: u64,
    config: Option<serde_json::Value>,
    outputs: Vec<String>,
    checks: Vec<CheckLine>,
}

struct Run {
    out_dir: PathBuf,
    manifest: RunManifest,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl Run {
    fn new(command: &str, seed: u64, out_dir: &Path) -> Self {
        Self {
            out_dir: out_dir.to_path_buf(),
            manifest: RunManifest {
                command: command.to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed,
                started_unix: unix_now(),
                finished_unix: 0,
                config: None,
                outputs: Vec::new(),
                checks: Vec::new(),
            },
        }
    }

    fn write_artifact(&mut self, name: &str, bytes: &str) -> Result<(), String> {
        std::fs::create_dir_all(&self.out_dir)
            .map_err(|e| format!("cannot create {}: {e}", self.out_dir.display()))?;
        let path = self.out_dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        self.manifest.outputs.push(path.display().to_string());
        Ok(())
    }

    fn finalize(mut self) {
        self.manifest.finished_unix = unix_now();
        if std::fs::create_dir_all(&self.out_dir).is_ok() {
            let path = self.out_dir.join("manifest.json");
            let _ = std::fs::write(&path, report::to_json_pretty(&self.manifest));
        }
    }
}

fn classify(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_)
        | Error::InvalidGeometry(_)
        | Error::InvalidExponent(_)
        | Error::InvalidLambda(_)
        | Error::DimensionTooLow(_)
        | Error::ResourceLimit(_) => 2,
        _ => 3,
    }
}

fn load_params(path: &Path, run: &mut Run) -> Result<ProblemParams, (u8, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| (2u8, format!("cannot read {}: {e}", path.display())))?;
    run.manifest.config = serde_json::from_str(&text).ok();
    let params = params_from_json(&text).map_err(|e| (classify(&e), e.to_string()))?;
    let validation = validate(&params).map_err(|e| (classify(&e), e.to_string()))?;
    for c in &validation.conditions {
        run.manifest.checks.push(CheckLine {
            name: format!("{} ({:?}: {})", c.name, c.status, c.detail),
            passed: true,
        });
    }
    if params.dim <= 2 {
        println!("note: N = {} run, constants requiring the critical exponent are in the formal regime", params.dim);
    }
    Ok(params)
}

fn parse_grid(text: &str) -> Result<Vec<f64>, (u8, String)> {
    let grid: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let grid = grid.map_err(|e| (2u8, format!("bad lambda grid: {e}")))?;
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err((2, "lambda grid must be nonempty and increasing".into()));
    }
    Ok(grid)
}

fn solver_options(
    params: &ProblemParams,
    tol: Option<f64>,
    max_iter: Option<usize>,
    path_nodes: Option<usize>,
    seed: u64,
) -> SolverOptions {
    let mut opts = SolverOptions::default().with_seed(seed);
    opts.tol = tol.unwrap_or(if params.a0.min(params.b0) >= 0.0 { 1e-8 } else { 1e-6 });
    if let Some(m) = max_iter {
        opts.max_iter = m;
    }
    if let Some(n) = path_nodes {
        opts.path_nodes = n;
    }
    opts
}

fn dump_forms(run: &mut Run, forms: &steepwell::forms::QuadraticForms) -> Result<(), (u8, String)> {
    for which in ["A", "Gm", "P_plus", "P_minus"] {
        run.write_artifact(&format!("forms_{which}.csv"), &report::forms_csv(forms, which))
            .map_err(|e| (3u8, e))?;
    }
    Ok(())
}

#[allow(clippy::result_large_err)]
fn execute(cli: Cli) -> Result<(Run, u8), (Run, u8, String)> {
    let seed = cli.seed;
    match &cli.command {
        Command::Constants { config, count } => {
            let mut run = Run::new("constants", seed, &cli.out_dir);
            match (|| -> Result<(), (u8, String)> {
                let params = load_params(config, &mut run)?;
                let rows = report::constants_table(&params, *count)
                    .map_err(|e| (classify(&e), e.to_string()))?;
                println!("{:<24} {:<24} formula_branch", "name", "value");
                for r in &rows {
                    println!("{:<24} {:<24} {}", r[0], r[1], r[2]);
                }
                run.write_artifact(
                    "constants.csv",
                    &report::csv_table("name,value,formula_branch", &rows),
                )
                .map_err(|e| (3, e))?;
                Ok(())
            })() {
                Ok(()) => Ok((run, 0)),
                Err((code, msg)) => Err((run, code, msg)),
            }
        }
        Command::Spectrum {
            config,
            count,
            lambda_grid,
            dump_forms: dump,
        } => {
            let mut run = Run::new("spectrum", seed, &cli.out_dir);
            match (|| -> Result<(), (u8, String)> {
                let params = load_params(config, &mut run)?;
                let grid = match lambda_grid {
                    Some(g) => parse_grid(g)?,
                    None => vec![params.lambda],
                };
                let table = eigen_convergence_sweep(&params, &grid, *count)
                    .map_err(|e| (classify(&e), e.to_string()))?;
                for row in &table.rows {
                    println!(
                        "lambda={:<12} k={} beta={:<22} rel_err={:.3e} outside={:.3e}",
                        row.lambda, row.k, row.beta, row.rel_err, row.outside_mass
                    );
                }
                run.write_artifact("spectrum.csv", &report::spectrum_csv(&table))
                    .map_err(|e| (3, e))?;
                if *dump {
                    let basis =
                        steepwell::basis::build_basis(&params.well.truncation_box, params.modes_per_dim)
                            .map_err(|e| (classify(&e), e.to_string()))?;
                    let forms = steepwell::forms::assemble_forms(&basis, &params)
                        .map_err(|e| (classify(&e), e.to_string()))?;
                    dump_forms(&mut run, &forms)?;
                }
                Ok(())
            })() {
                Ok(()) => Ok((run, 0)),
                Err((code, msg)) => Err((run, code, msg)),
            }
        }
        Command::Solve {
            config,
            tol,
            max_iter,
            path_nodes,
            dump_forms: dump,
        } => {
            let mut run = Run::new("solve", seed, &cli.out_dir);
            match (|| -> Result<(), (u8, String)> {
                let params = load_params(config, &mut run)?;
                let opts = solver_options(&params, *tol, *max_iter, *path_nodes, seed);
                let model =
                    EnergyModel::from_params(&params).map_err(|e| (classify(&e), e.to_string()))?;
                let (point, geometry) = if params.a0.min(params.b0) >= 0.0 {
                    let geometry = find_linking_geometry(&model, None, &opts)
                        .map_err(|e| (classify(&e), e.to_string()))?;
                    let point = mountain_pass_solve(&model, &geometry, &opts)
                        .map_err(|e| (classify(&e), e.to_string()))?;
                    (point, geometry)
                } else {
                    let decomp = solve_pencil_crossing(&model.forms, 2)
                        .map_err(|e| (classify(&e), e.to_string()))?;
                    let geometry = find_linking_geometry(&model, Some(&decomp), &opts)
                        .map_err(|e| (classify(&e), e.to_string()))?;
                    let point = linking_solve(&model, &decomp, &geometry, &opts)
                        .map_err(|e| (classify(&e), e.to_string()))?;
                    (point, geometry)
                };
                println!(
                    "critical point: energy={} grad_norm={:.3e} rel_residual={:.3e} iterations={}",
                    point.energy,
                    point.grad_norm,
                    point.relative_residual(),
                    point.iterations
                );
                run.manifest.checks.push(CheckLine {
                    name: format!("nontrivial critical point at energy {}", point.energy),
                    passed: point.energy > 0.0,
                });
                run.write_artifact("solution.csv", &report::solution_csv(&point.coeffs))
                    .map_err(|e| (3, e))?;
                run.write_artifact(
                    "solve_report.json",
                    &report::to_json_pretty(&report::SolveReport::from_point(&point, Some(&geometry))),
                )
                .map_err(|e| (3, e))?;
                if *dump {
                    dump_forms(&mut run, &model.forms)?;
                }
                Ok(())
            })() {
                Ok(()) => Ok((run, 0)),
                Err((code, msg)) => Err((run, code, msg)),
            }
        }
        Command::Limit {
            config,
            tol,
            max_iter,
            path_nodes,
        } => {
            let mut run = Run::new("limit", seed, &cli.out_dir);
            match (|| -> Result<(), (u8, String)> {
                let params = load_params(config, &mut run)?;
                let opts = solver_options(&params, *tol, *max_iter, *path_nodes, seed);
                let sol = solve_limit(
                    &params.well.well_box,
                    params.a0,
                    params.b0,
                    params.nonlinearity.clone(),
                    params.modes_per_dim,
                    params.quadrature_panels,
                    &opts,
                )
                .map_err(|e| (classify(&e), e.to_string()))?;
                println!(
                    "limit solution: energy={} grad_norm={:.3e} iterations={}",
                    sol.energy, sol.grad_norm, sol.iterations
                );
                run.write_artifact("limit_solution.csv", &report::solution_csv(&sol.coeffs))
                    .map_err(|e| (3, e))?;
                #[derive(Serialize)]
                struct LimitReport {
                    energy: f64,
                    grad_norm: f64,
                    norm: f64,
                    iterations: usize,
                }
                run.write_artifact(
                    "limit_report.json",
                    &report::to_json_pretty(&LimitReport {
                        energy: sol.energy,
                        grad_norm: sol.grad_norm,
                        norm: sol.norm_a,
                        iterations: sol.iterations,
                    }),
                )
                .map_err(|e| (3, e))?;
                Ok(())
            })() {
                Ok(()) => Ok((run, 0)),
                Err((code, msg)) => Err((run, code, msg)),
            }
        }
        Command::Sweep {
            config,
            lambda_grid,
            cold,
            tol,
        } => {
            let mut run = Run::new("sweep", seed, &cli.out_dir);
            match (|| -> Result<(), (u8, String)> {
                let params = load_params(config, &mut run)?;
                let grid = parse_grid(lambda_grid)?;
                let opts = solver_options(&params, *tol, None, None, seed);
                let rep = sweep(&params, &grid, !*cold, &opts)
                    .map_err(|e| (classify(&e), e.to_string()))?;
                for row in &rep.rows {
                    println!(
                        "lambda={:<12} energy={:<22} outside={:.3e} status={}",
                        row.lambda, row.energy, row.outside_mass, row.status
                    );
                    run.manifest.checks.push(CheckLine {
                        name: format!("lambda = {}", row.lambda),
                        passed: row.status == "ok",
                    });
                }
                run.write_artifact("sweep.csv", &report::sweep_csv(&rep))
                    .map_err(|e| (3, e))?;
                Ok(())
            })() {
                Ok(()) => Ok((run, 0)),
                Err((code, msg)) => Err((run, code, msg)),
            }
        }
        Command::Check => {
            let mut run = Run::new("check", seed, &cli.out_dir);
            let outcomes = acceptance::run_all(seed);
            let mut all_passed = true;
            #[derive(Serialize)]
            struct CriterionReport {
                id: usize,
                name: String,
                passed: bool,
                details: Vec<String>,
            }
            let mut reports = Vec::new();
            for o in &outcomes {
                println!("{}", o.summary_line());
                for d in &o.details {
                    println!("    {d}");
                }
                all_passed &= o.passed;
                run.manifest.checks.push(CheckLine {
                    name: format!("criterion {} ({})", o.id, o.name),
                    passed: o.passed,
                });
                for (name, bytes) in &o.artifacts {
                    if let Err(e) = run.write_artifact(name, bytes) {
                        return Err((run, 3, e));
                    }
                }
                reports.push(CriterionReport {
                    id: o.id,
                    name: o.name.to_string(),
                    passed: o.passed,
                    details: o.details.clone(),
                });
            }
            if let Err(e) = run.write_artifact("acceptance_report.json", &report::to_json_pretty(&reports)) {
                return Err((run, 3, e));
            }
            Ok((run, if all_passed { 0 } else { 4 }))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match execute(cli) {
        Ok((run, code)) => {
            run.finalize();
            ExitCode::from(code)
        }
        Err((run, code, msg)) => {
            eprintln!("error: {msg}");
            // an invalid config produces no artifacts at all
            if code != 2 {
                run.finalize();
            }
            ExitCode::from(code)
        }
    }
}
