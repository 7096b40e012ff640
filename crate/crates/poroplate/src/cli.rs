//! Command-line driver: homogenize, simulate, verify and export runs from a
//! JSON configuration.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0    | success |
//! | 1    | verification checks failed |
//! | 2    | geometry or mask error |
//! | 3    | configuration error |
//! | 4    | i/o error |
//! | 5    | solver or assembly failure |

use crate::cellsolve::{solve_all, CellSolveError, SolveOptions};
use crate::config::{
    parse_config, ConfigError, LoadsConfig, PrimitiveConfig, RunConfig, SimulationConfig,
};
use crate::effective::{
    build_effective_model, verify_tensor_properties, EffectiveError, EffectiveModel, TensorReport,
};
use crate::io::{read_model, write_ledger_csv, write_model, write_snapshot, IoError};
use crate::microcell::{
    build_cell, build_phase_map, read_mask, ColumnLayer, Densities, MicrocellError, PhaseSpec,
    PlaneRegion, Primitive,
};
use crate::plate::{
    assemble, assemble_inertial, build_spaces, solve_trajectory, solve_trajectory_inertial,
    DiscreteOperators, EnergyLedger, LoadSpec, PlateError, PlateGrid, PlateState, SimMode,
};
use crate::suite::{eigenmode_datum, lcg_vector, run_suite};
use crate::Parallelism;
use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Parsed command line.
#[derive(Debug, Parser)]
#[command(
    name = "poroplate",
    version,
    about = "Homogenized poroelastic plate toolkit: cell problems, effective \
             tensors and time integration of the limit plate system"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the cell problems, build the effective model and gate on its
    /// structural properties
    Homogenize(RunArgs),
    /// Time-integrate the plate system and write the energy ledger
    Simulate(RunArgs),
    /// Run the built-in verification suite
    Verify(VerifyArgs),
    /// Write the effective model files without the verification gate
    Export(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON run configuration
    #[arg(long)]
    pub config: PathBuf,
    /// output directory (overrides `outputs.directory`)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// force sequential execution for byte-identical outputs across runs
    #[arg(long)]
    pub reproducible: bool,
    /// reduce cell resolution and time horizon for a quick smoke run
    #[arg(long)]
    pub fast: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// optional configuration; only its output directory is used for the
    /// machine-readable report
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// directory for the JSON report (printed only when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// accepted for interface uniformity; the suite is always deterministic
    #[arg(long)]
    pub reproducible: bool,
    /// run the suite at reduced resolutions
    #[arg(long)]
    pub fast: bool,
}

/// Internal error with its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("geometry error: {0}")]
    Geometry(#[from] MicrocellError),
    #[error("i/o error: {0}")]
    Io(#[from] IoError),
    #[error("solver error: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::Geometry(_) => 2,
            CliError::Io(_) => 4,
            CliError::Solver(_) => 5,
        }
    }
}

impl From<CellSolveError> for CliError {
    fn from(e: CellSolveError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<EffectiveError> for CliError {
    fn from(e: EffectiveError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<PlateError> for CliError {
    fn from(e: PlateError) -> Self {
        match e {
            // a region boundary off the plate grid is a layout problem
            PlateError::Alignment(x) => {
                CliError::Geometry(MicrocellError::BadRegions(format!(
                    "region boundary at {x} does not lie on the plate grid"
                )))
            }
            other => CliError::Solver(other.to_string()),
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Homogenize(args) => cmd_homogenize(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Export(args) => cmd_export(&args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("poroplate: {e}");
            e.exit_code()
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(IoError::from(e)))?;
    Ok(parse_config(&text)?)
}

fn out_dir(args_out: &Option<PathBuf>, config: &RunConfig) -> PathBuf {
    args_out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.outputs.directory))
}

fn schema(path: &str, reason: impl Into<String>) -> CliError {
    CliError::Config(ConfigError::Schema {
        path: path.into(),
        reason: reason.into(),
    })
}

/// Builds the effective model from the configuration: one cell solve per
/// phase referenced by the plate layout, then tensor assembly.
fn build_model(config: &RunConfig, fast: bool, reproducible: bool) -> Result<EffectiveModel, CliError> {
    let resolution = if fast {
        config.geometry.resolution.min(8)
    } else {
        config.geometry.resolution
    };
    let options = SolveOptions {
        parallelism: if reproducible {
            Parallelism::Sequential
        } else {
            Parallelism::default()
        },
        ..SolveOptions::default()
    };

    let geometries: BTreeMap<usize, &PrimitiveConfig> = config
        .geometry
        .phases
        .iter()
        .map(|p| (p.id, &p.primitive))
        .collect();
    let materials: BTreeMap<usize, _> =
        config.material.phases.iter().map(|p| (p.id, p)).collect();
    let used: BTreeSet<usize> = config
        .geometry
        .plate
        .regions
        .iter()
        .flat_map(|r| r.column.iter().map(|l| l.phase))
        .collect();

    let mut correctors = BTreeMap::new();
    for &id in &used {
        let primitive = to_primitive(geometries[&id], resolution)?;
        let mat = materials[&id];
        let cell = build_cell(resolution, &primitive, &PhaseSpec::isotropic(id, mat.lambda, mat.mu))?;
        correctors.insert(id, solve_all(&cell, &options)?);
    }

    let regions = config
        .geometry
        .plate
        .regions
        .iter()
        .map(|r| PlaneRegion {
            rect: r.rect,
            column: r
                .column
                .iter()
                .map(|l| ColumnLayer {
                    interval: l.interval,
                    phase: l.phase,
                })
                .collect(),
        })
        .collect();
    let densities = used
        .iter()
        .map(|&id| {
            let mat = materials[&id];
            (
                id,
                Densities {
                    fluid: mat.fluid_density,
                    solid: mat.solid_density,
                },
            )
        })
        .collect();
    let map = build_phase_map(regions, densities)?;
    Ok(build_effective_model(&correctors, &map)?)
}

fn to_primitive(config: &PrimitiveConfig, resolution: usize) -> Result<Primitive, CliError> {
    Ok(match config {
        PrimitiveConfig::FullSolid => Primitive::FullSolid,
        PrimitiveConfig::Layer { axis, thickness } => Primitive::Layer {
            axis: *axis,
            thickness: *thickness,
        },
        PrimitiveConfig::CenteredInclusion { radius } => Primitive::CenteredInclusion {
            radius: *radius,
        },
        PrimitiveConfig::MaskFile { path } => {
            let (n, mask) = read_mask(Path::new(path))?;
            if n != resolution {
                return Err(CliError::Geometry(MicrocellError::BadMask(format!(
                    "mask {path} has resolution {n}, configuration expects {resolution}"
                ))));
            }
            Primitive::Mask(mask)
        }
    })
}

fn print_report(report: &TensorReport) {
    for check in &report.checks {
        println!(
            "{}: {}{} (defect {:.3e}){}",
            check.name,
            if check.passed { "pass" } else { "FAIL" },
            if check.vacuous { " (vacuous)" } else { "" },
            check.defect,
            if check.note.is_empty() {
                String::new()
            } else {
                format!(" — {}", check.note)
            }
        );
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(IoError::from(std::io::Error::other(e))))?;
    std::fs::write(path, text).map_err(|e| CliError::Io(IoError::from(e)))?;
    Ok(())
}

fn cmd_homogenize(args: &RunArgs) -> Result<i32, CliError> {
    let config = load_config(&args.config)?;
    let model = build_model(&config, args.fast, args.reproducible)?;
    let report = verify_tensor_properties(&model);
    let dir = out_dir(&args.out, &config);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(IoError::from(e)))?;
    write_model(&dir, &model)?;
    write_json(&dir.join("tensor_report.json"), &report)?;
    print_report(&report);
    println!(
        "effective model with {} region(s) written to {}",
        model.regions.len(),
        dir.display()
    );
    Ok(if report.all_passed() { 0 } else { 1 })
}

fn cmd_export(args: &RunArgs) -> Result<i32, CliError> {
    let config = load_config(&args.config)?;
    let model = build_model(&config, args.fast, args.reproducible)?;
    let dir = out_dir(&args.out, &config);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(IoError::from(e)))?;
    write_model(&dir, &model)?;
    println!(
        "effective model with {} region(s) written to {}",
        model.regions.len(),
        dir.display()
    );
    Ok(0)
}

fn cmd_simulate(args: &RunArgs) -> Result<i32, CliError> {
    let config = load_config(&args.config)?;
    let dir = out_dir(&args.out, &config);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(IoError::from(e)))?;

    // reuse a previously exported model in the output directory if present
    let model = if dir.join("model.json").is_file() {
        read_model(&dir)?
    } else {
        let model = build_model(&config, args.fast, args.reproducible)?;
        write_model(&dir, &model)?;
        model
    };

    let sim = &config.simulation;
    let [nx, ny, nz] = sim.grid;
    let grid = PlateGrid::new(nx, ny, nz)?;
    let spaces = build_spaces(grid, sim.mode);
    let ops = match sim.mode {
        SimMode::QuasiStatic => assemble(&model, &spaces)?,
        SimMode::Inertial => assemble_inertial(&model, &spaces)?,
    };
    let loads = build_loads(&config.loads, sim, &ops)?;

    let t_end = if args.fast {
        sim.t_end.min(50.0 * sim.dt)
    } else {
        sim.t_end
    };
    let (states, ledger) = match sim.mode {
        SimMode::QuasiStatic => {
            let (states, ledger) = solve_trajectory(&ops, &loads, sim.dt, t_end)?;
            (states, ledger)
        }
        SimMode::Inertial => {
            let (states, ledger) =
                solve_trajectory_inertial(&ops, &loads, sim.dt, t_end, sim.scheme)?;
            (states.iter().map(|s| s.as_plate_state()).collect(), ledger)
        }
    };

    write_ledger_csv(&dir.join(&config.outputs.ledger), &ledger)?;
    if config.outputs.snapshots {
        for (step, state) in states.iter().enumerate() {
            if step % sim.stride == 0 || step == states.len() - 1 {
                write_snapshot(&dir, state, step, sim.grid, spaces.n_a(), &ops.p_live)?;
            }
        }
    }
    print_summary(&ops, &states, &ledger);
    println!("outputs written to {}", dir.display());
    Ok(0)
}

fn print_summary(ops: &DiscreteOperators, states: &[PlateState], ledger: &EnergyLedger) {
    let last = states.last().expect("trajectory contains the initial state");
    println!(
        "{} steps, {} plate dofs, {} live pressure dofs ({} removed); \
         terminal E_el {:.6e}, E_p {:.6e}, max ledger residual {:.3e}",
        states.len() - 1,
        ops.n_u(),
        ops.n_p(),
        ops.removed_pressure_dofs,
        ops.e_elastic(&last.u),
        ops.e_pressure(&last.p),
        ledger.max_residual()
    );
}

/// Resolves the loads section against the assembled operators: either a
/// named preset or explicitly sampled series whose lengths are checked here,
/// where the discrete dimensions are known.
fn build_loads(
    cfg: &LoadsConfig,
    sim: &SimulationConfig,
    ops: &DiscreteOperators,
) -> Result<LoadSpec, CliError> {
    let mut loads = LoadSpec::zero(ops);
    match cfg.preset.as_deref() {
        None | Some("zero") => {}
        Some("ramp") => {
            // deterministic fixed spatial profile ramped linearly to t_end
            let profile = lcg_vector(0x706f726f, ops.n_u());
            loads.dt_sample = sim.t_end.max(sim.dt);
            loads.f = vec![DVector::zeros(ops.n_u()), profile.clone(), profile];
        }
        Some("eigenmode") => {
            let (_, t0) = eigenmode_datum(ops);
            loads.t0 = t0;
        }
        Some(other) => {
            return Err(schema("loads.preset", format!("unknown preset '{other}'")));
        }
    }
    if let Some(dt_sample) = cfg.dt_sample {
        loads.dt_sample = dt_sample;
    }
    if let Some(f) = &cfg.f {
        loads.f = sampled_series(f, ops.n_u(), "loads.f")?;
    }
    if let Some(g) = &cfg.g {
        loads.g = sampled_series(g, ops.n_p(), "loads.g")?;
    }
    if let Some(t0) = &cfg.t0 {
        loads.t0 = sized_vector(t0, ops.n_p(), "loads.t0")?;
    }
    if let Some(b0) = &cfg.b0 {
        loads.b0 = sized_vector(b0, ops.spaces.n_b(), "loads.b0")?;
    }
    if let Some(b1) = &cfg.b1 {
        loads.b1 = sized_vector(b1, ops.spaces.n_b(), "loads.b1")?;
    }
    Ok(loads)
}

fn sized_vector(values: &[f64], n: usize, path: &str) -> Result<DVector<f64>, CliError> {
    if values.len() != n {
        return Err(schema(
            path,
            format!("expected {n} values, got {}", values.len()),
        ));
    }
    Ok(DVector::from_column_slice(values))
}

fn sampled_series(
    samples: &[Vec<f64>],
    n: usize,
    path: &str,
) -> Result<Vec<DVector<f64>>, CliError> {
    samples
        .iter()
        .enumerate()
        .map(|(k, s)| sized_vector(s, n, &format!("{path}[{k}]")))
        .collect()
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32, CliError> {
    let report = run_suite(args.fast);
    for line in report.summary_lines() {
        println!("{line}");
    }
    let dir = match (&args.out, &args.config) {
        (Some(dir), _) => Some(dir.clone()),
        (None, Some(config)) => Some(PathBuf::from(&load_config(config)?.outputs.directory)),
        (None, None) => None,
    };
    if let Some(dir) = dir {
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(IoError::from(e)))?;
        write_json(&dir.join("verify_report.json"), &report)?;
        println!("report written to {}", dir.join("verify_report.json").display());
    }
    Ok(if report.all_passed() { 0 } else { 1 })
}
