//! Batch front-end: reads a TOML scenario, runs one of the subcommands, and
//! writes CSV/JSON artifacts for plotting and regression testing. Outputs
//! are deterministic for a fixed config and seed; the only varying meta
//! field is the wall time.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use slab_transport::analysis::{
    convergence_report, counterexample_report, f1_continuity_scan, measure_jump, mc_oracle,
    McOptions,
};
use slab_transport::boundary::BoundaryProfile;
use slab_transport::config::{ConfigError, RunConfig, Scenario};
use slab_transport::output;
use slab_transport::quadrature::AngularGrid;
use slab_transport::solver::{eval_g, neumann_solve, SolutionField, SolveError};
use slab_transport::{CollocationGrid, PhasePoint};

#[derive(Parser)]
#[command(name = "slab-transport", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for stochastic subcommands.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = automatic).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Override the solve tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the scenario and dump the solution grid plus convergence data.
    Solve(Common),
    /// Measure jump transport along the declared discontinuity rays.
    Disc(Common),
    /// Diagnostics for the focused piecewise-constant boundary data.
    Counterexample(Common),
    /// Check the standing assumptions on the medium.
    Validate(Common),
    /// Cross-check the deterministic solution with the random-walk estimator.
    McCheck(Common),
    /// Solve and print the per-iterate convergence table.
    Convergence(Common),
}

enum CliError {
    /// Scenario or medium rejected (exit 2).
    Validation(String),
    /// Convergence certificate not reached (exit 3).
    Certificate(String),
    /// Filesystem failure (exit 4).
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Certificate(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Certificate(m) | CliError::Io(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::NotCertified { .. } => CliError::Certificate(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

#[derive(serde::Serialize)]
struct Meta {
    command: String,
    config_sha256: String,
    version: String,
    dimension: usize,
    seed: u64,
    threads: usize,
    wall_time_ms: u128,
    solve: Option<slab_transport::solver::SolveMeta>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::Solve(c) => ("solve", c),
        Command::Disc(c) => ("disc", c),
        Command::Counterexample(c) => ("counterexample", c),
        Command::Validate(c) => ("validate", c),
        Command::McCheck(c) => ("mc-check", c),
        Command::Convergence(c) => ("convergence", c),
    };
    match run(name, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: &str, common: &Common) -> Result<(), CliError> {
    slab_transport::set_thread_count(common.threads);
    let started = Instant::now();
    let raw = std::fs::read(&common.config)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", common.config.display())))?;
    let config_sha256 = hex_digest(&raw);
    let text = String::from_utf8_lossy(&raw);
    let cfg = RunConfig::from_str(&text)?;
    std::fs::create_dir_all(&common.out)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", common.out.display())))?;

    let base_dir = common
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));

    match cfg.dimension() {
        2 => run_typed::<2>(command, common, &cfg, &base_dir, config_sha256, started),
        3 => run_typed::<3>(command, common, &cfg, &base_dir, config_sha256, started),
        d => Err(CliError::Validation(format!("unsupported dimension {d}"))),
    }
}

fn run_typed<const D: usize>(
    command: &str,
    common: &Common,
    cfg: &RunConfig,
    base_dir: &Path,
    config_sha256: String,
    started: Instant,
) -> Result<(), CliError> {
    let mut scenario: Scenario<D> = cfg.build_scenario(base_dir)?;
    if let Some(tol) = common.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Validation(format!("bad tolerance {tol}")));
        }
        scenario.solve.tol = tol;
    }

    let mut meta = Meta {
        command: command.to_string(),
        config_sha256,
        version: env!("CARGO_PKG_VERSION").to_string(),
        dimension: D,
        seed: common.seed,
        threads: common.threads,
        wall_time_ms: 0,
        solve: None,
    };

    match command {
        "validate" => {
            let report = scenario
                .medium
                .validate(&scenario.domain, &scenario.quad)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            println!("{report}");
            write_json(&common.out.join("validation.json"), &report)?;
            finish_meta(&common.out, &mut meta, started)?;
            if !report.pass {
                return Err(CliError::Validation(
                    report
                        .violation
                        .map(|v| v.to_string())
                        .unwrap_or_else(|| "validation failed".into()),
                ));
            }
            Ok(())
        }
        "solve" => {
            let sol = solve(&scenario)?;
            meta.solve = Some(sol.meta().clone());
            write_text(&common.out.join("solution.csv"), &output::solution_csv(&sol))?;
            let table = convergence_report(&sol);
            write_text(
                &common.out.join("convergence.csv"),
                &output::convergence_csv(&table),
            )?;
            if cfg.output.dump_iterates {
                for it in sol.iterates() {
                    if let Some(csv) = output::iterate_csv(&sol, it.n) {
                        write_text(
                            &common.out.join(format!("iterate_{:03}.csv", it.n)),
                            &csv,
                        )?;
                    }
                }
            }
            println!(
                "solved: {} iterates, final increment {:.3e}, certified remainder {:.3e}",
                sol.meta().iterations,
                sol.meta().final_increment,
                sol.meta().certified_remainder
            );
            finish_meta(&common.out, &mut meta, started)
        }
        "disc" => {
            if scenario.boundary.seeds().is_empty() {
                return Err(CliError::Validation(
                    "disc requires declared discontinuity seeds".into(),
                ));
            }
            let sol = solve(&scenario)?;
            meta.solve = Some(sol.meta().clone());
            let rays = sol.boundary().seed_rays();
            write_text(&common.out.join("rays.csv"), &output::rays_csv(&rays))?;
            let mut rows = Vec::new();
            for (k, ray) in rays.iter().enumerate() {
                for &t in &cfg.disc.t_values {
                    if t < 0.0 || t >= ray.length() {
                        continue;
                    }
                    let est = measure_jump(&sol, ray, t, &cfg.disc.offsets)
                        .map_err(|e| CliError::Validation(e.to_string()))?;
                    let scan = f1_continuity_scan(&sol, ray, t, &cfg.disc.offsets)
                        .map_err(|e| CliError::Validation(e.to_string()))?;
                    println!(
                        "ray {k} t={t:.3}: measured {:.6e} predicted {:.6e}",
                        est.measured, est.predicted
                    );
                    rows.push((k, est, scan.final_oscillation));
                }
            }
            write_text(&common.out.join("jumps.csv"), &output::jump_scan_csv(&rows))?;
            finish_meta(&common.out, &mut meta, started)
        }
        "counterexample" => {
            if D != 2 {
                return Err(CliError::Validation(
                    "counterexample diagnostics need dimension 2".into(),
                ));
            }
            let cfg2 = cfg
                .build_scenario::<2>(base_dir)
                .map_err(CliError::from)?;
            let x_bar = match cfg2.boundary.profile() {
                BoundaryProfile::Counterexample(data) => data.focus(),
                _ => {
                    return Err(CliError::Validation(
                        "counterexample needs the counterexample boundary preset".into(),
                    ))
                }
            };
            let report =
                counterexample_report(&cfg2.medium, x_bar, &cfg2.quad, &cfg.counterexample.fd_steps)
                    .map_err(|e| CliError::Validation(e.to_string()))?;
            println!("{report}");
            write_json(&common.out.join("counterexample.json"), &report)?;
            write_text(
                &common.out.join("fd_mismatch.csv"),
                &output::fd_mismatch_csv(&report),
            )?;
            // Lateral scan of the collision kernel through the focus.
            let angular = AngularGrid::<2>::build(&cfg2.quad)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let xi = slab_transport::Direction::new([1.0, 0.0]).expect("unit");
            let mut scan_rows = Vec::new();
            for k in 0..=200 {
                let x1 = x_bar[0] - 1.0 + k as f64 * 0.01;
                let g = eval_g(
                    &cfg2.medium,
                    &cfg2.boundary,
                    &[x1, x_bar[1]],
                    &xi,
                    &angular,
                    &cfg2.quad,
                )
                .map_err(|e| CliError::Validation(e.to_string()))?;
                scan_rows.push((x1, g.total(), g.plus, g.minus));
            }
            write_text(&common.out.join("g_scan.csv"), &output::g_scan_csv(&scan_rows))?;
            finish_meta(&common.out, &mut meta, started)
        }
        "mc-check" => {
            let sol = solve(&scenario)?;
            meta.solve = Some(sol.meta().clone());
            let n_angles = sol.grid().n_angular();
            let window = scenario.domain.lateral_window()[0];
            let mut rows = Vec::new();
            for k in 0..cfg.mc.probes {
                // Deterministic low-discrepancy probe placement.
                let u = ((k as f64 + 0.5) * 0.618_033_988_749_894_9).fract();
                let v = ((k as f64 + 0.5) * 0.414_213_562_373_095_1).fract();
                let x1 = window.0 + (0.2 + 0.6 * u) * (window.1 - window.0);
                let depth = 0.1 + 0.8 * v;
                let angle = (7 * k + 3) % n_angles;
                let xi = *sol.grid().angular().node(angle);
                let mut coords = vec![0.0; D];
                coords[0] = x1;
                coords[D - 1] = depth;
                let mut arr = [0.0; D];
                arr.copy_from_slice(&coords);
                let p = PhasePoint::new(
                    slab_transport::Position::new(arr)
                        .map_err(|e| CliError::Validation(e.to_string()))?,
                    xi,
                )
                .map_err(|e| CliError::Validation(e.to_string()))?;
                let det = sol
                    .eval_refined(&p)
                    .map_err(|e| CliError::Validation(e.to_string()))?;
                let est = mc_oracle(
                    &scenario.medium,
                    &scenario.boundary,
                    &p,
                    cfg.mc.samples,
                    common.seed.wrapping_add(k as u64),
                    &scenario.quad,
                    &McOptions::default(),
                )
                .map_err(|e| CliError::Validation(e.to_string()))?;
                let z = (det - est.mean) / est.std_error.max(1e-12);
                println!(
                    "probe {k}: det {det:.6e} mc {:.6e} +- {:.2e} z {z:+.2}",
                    est.mean, est.std_error
                );
                let mut all = coords.clone();
                all.extend_from_slice(xi.components());
                rows.push((all, det, est.mean, est.std_error, z));
            }
            write_text(&common.out.join("mc.csv"), &output::mc_csv::<D>(&rows))?;
            finish_meta(&common.out, &mut meta, started)
        }
        "convergence" => {
            let sol = solve(&scenario)?;
            meta.solve = Some(sol.meta().clone());
            let table = convergence_report(&sol);
            println!("{table}");
            write_text(
                &common.out.join("convergence.csv"),
                &output::convergence_csv(&table),
            )?;
            finish_meta(&common.out, &mut meta, started)
        }
        other => Err(CliError::Validation(format!("unknown command {other}"))),
    }
}

fn solve<const D: usize>(scenario: &Scenario<D>) -> Result<SolutionField<D>, CliError> {
    let grid = CollocationGrid::build(
        scenario.domain.clone(),
        &scenario.lateral_dims,
        scenario.depth_nodes,
        &scenario.quad,
    )
    .map_err(|e| CliError::Validation(e.to_string()))?;
    if !scenario.boundary.has_constant_lateral_tails() {
        eprintln!(
            "note: boundary data has no constant lateral tails; grid values near the \
             window edge are approximations"
        );
    }
    Ok(neumann_solve(
        &scenario.medium,
        &scenario.boundary,
        grid,
        &scenario.quad,
        &scenario.solve,
    )?)
}

fn finish_meta(out: &Path, meta: &mut Meta, started: Instant) -> Result<(), CliError> {
    meta.wall_time_ms = started.elapsed().as_millis();
    write_json(&out.join("meta.json"), meta)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("serializing {}: {e}", path.display())))?;
    write_text(path, &(text + "\n"))
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
