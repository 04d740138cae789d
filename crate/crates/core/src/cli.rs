//! Command-line entry points.
//!
//! Exit codes: 0 success, 1 file system trouble, 2 configuration error,
//! 3 verification precondition error, 4 solver failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value as Json};

use crate::config::{ConfigError, FlatConfig, Problem, RunConfig, VerifyKind, VerifySpec};
use crate::csf::{csf_initial, csf_profile, evolve_csf, CsfSolution, GraphCurve};
use crate::error::{SolverError, VerifyError};
use crate::grid::Grid1D;
use crate::io::{IoError, RunManifest, SnapshotCsv, SnapshotEntry};
use crate::metric::{gauss_curvature, BreatherParams, ConformalMetric};
use crate::ricci::{evolve_initial, FlowSolution};
use crate::timestep::StepStats;
use crate::verify;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("verification precondition failed: {0}")]
    Verify(#[from] VerifyError),
    #[error("solver failed: {0}")]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Io(#[from] IoError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Verify(_) => 3,
            CliError::Solver(_) => 4,
        }
    }
}

fn mkdir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| IoError::Fs { path: dir.to_path_buf(), source }.into())
}

/// Read a TOML config (or the config echo of a JSON manifest) and apply
/// overrides.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError::Parse(format!("cannot read {}: {e}", path.display())))?;
    let mut flat = if path.extension().is_some_and(|e| e == "json") {
        let json: Json = serde_json::from_str(&text)
            .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
        FlatConfig::from_manifest(&json)?
    } else {
        FlatConfig::parse(&text).map_err(|e| match e {
            ConfigError::Parse(m) => ConfigError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })?
    };
    for o in overrides {
        flat.apply_override(o)?;
    }
    Ok(RunConfig::from_flat(&flat)?)
}

fn stats_json(steps: usize, stats: &StepStats) -> Json {
    json!({
        "accepted": stats.accepted,
        "rejected": stats.rejected,
        "newton_failures": stats.newton_failures,
        "min_dt": stats.min_dt,
        "max_dt": stats.max_dt,
        "steps_recorded": steps,
    })
}

fn ricci_report(sol: &FlowSolution, spec: &VerifySpec, lambda: f64) -> Result<Json, CliError> {
    Ok(match spec.kind {
        VerifyKind::Breather => {
            let p = BreatherParams::new(lambda, spec.shift).map_err(VerifyError::from)?;
            json!(verify::ricci_breather_residual(sol, &p, spec.t, spec.window)?)
        }
        VerifyKind::SolitonDefect => {
            let p = BreatherParams::new(lambda, 1.0).map_err(VerifyError::from)?;
            json!(verify::soliton_defect(sol, &p, spec.shift, spec.t, spec.window)?)
        }
        VerifyKind::Cusp => json!(verify::cusp_check(sol, spec.t, spec.window)?),
        VerifyKind::Csf => unreachable!("rejected when the config is parsed"),
    })
}

/// Evolve the Ricci problem of `cfg`, writing snapshots, curvature and the
/// manifest into `out`.
pub fn run_ricci(cfg: &RunConfig, out: &Path) -> Result<RunManifest, CliError> {
    let Problem::Ricci { ic, solver } = &cfg.problem else {
        return Err(ConfigError::Invalid { key: "ic.kind".into(), reason: "ricci-run needs a Ricci initial condition".into() }.into());
    };
    let start = Instant::now();
    let times = cfg.snapshot_times();
    let sol = evolve_initial(ic, cfg.grid, &times, solver)?;
    mkdir(out)?;
    let mut m = RunManifest::new("ricci-run", cfg.echo_json(), json!(ic));
    m.sensitivity_refs = cfg.sensitivity_refs.clone();
    for (k, (t, snap)) in sol.snapshot_times.iter().zip(&sol.snapshots).enumerate() {
        let file = format!("u_{k:03}.csv");
        SnapshotCsv::from_grid(*t, "u", &cfg.grid, snap.values()).write(&out.join(&file))?;
        let kf = gauss_curvature(snap);
        let range = kf.valid_range();
        let curv = SnapshotCsv {
            t: *t,
            column: "K".into(),
            x: range.clone().map(|i| cfg.grid.x(i)).collect(),
            values: kf.interior().to_vec(),
        };
        let curvature_file = format!("K_{k:03}.csv");
        curv.write(&out.join(&curvature_file))?;
        m.snapshots.push(SnapshotEntry { index: k, t: *t, file, curvature_file: Some(curvature_file) });
    }
    m.stats = stats_json(sol.steps.len(), &sol.stats);
    // boundary data as used, with cusp offsets resolved
    m.stats["resolved_boundary"] = json!(sol.config.boundary);
    if let Some(spec) = &cfg.verify {
        m.reports.insert(spec.kind.name().into(), ricci_report(&sol, spec, cfg.lambda())?);
    }
    m.wall_clock_seconds = start.elapsed().as_secs_f64();
    m.write(out)?;
    Ok(m)
}

pub fn run_csf(cfg: &RunConfig, out: &Path) -> Result<RunManifest, CliError> {
    let Problem::Csf { solver } = &cfg.problem else {
        return Err(ConfigError::Invalid { key: "ic.kind".into(), reason: "csf-run needs ic.kind = \"csf\"".into() }.into());
    };
    let start = Instant::now();
    let times = cfg.snapshot_times();
    let c0 = csf_initial(cfg.grid).map_err(SolverError::from)?;
    let sol = evolve_csf(&c0, &times, solver)?;
    mkdir(out)?;
    let mut m = RunManifest::new("csf-run", cfg.echo_json(), json!({"kind": "csf", "profile": "|x| sin(2 pi log|x|)"}));
    m.sensitivity_refs = cfg.sensitivity_refs.clone();
    let mut slopes = Vec::new();
    for (k, (t, snap)) in sol.snapshot_times.iter().zip(&sol.snapshots).enumerate() {
        let file = format!("F_{k:03}.csv");
        SnapshotCsv::from_grid(*t, "F", &cfg.grid, snap.values()).write(&out.join(&file))?;
        m.snapshots.push(SnapshotEntry { index: k, t: *t, file, curvature_file: None });
        slopes.push(snap.max_slope());
    }
    m.stats = stats_json(sol.steps.len(), &sol.stats);
    m.stats["max_slope"] = json!(slopes);
    if let Some(spec) = &cfg.verify {
        m.reports.insert("csf".into(), json!(verify::csf_breather_residual(&sol, spec.t, spec.window)?));
    }
    m.wall_clock_seconds = start.elapsed().as_secs_f64();
    m.write(out)?;
    Ok(m)
}

/// Run whichever problem `cfg` describes.
pub fn run_any(cfg: &RunConfig, out: &Path) -> Result<RunManifest, CliError> {
    match cfg.problem {
        Problem::Ricci { .. } => run_ricci(cfg, out),
        Problem::Csf { .. } => run_csf(cfg, out),
    }
}

fn load_snapshots(m: &RunManifest, dir: &Path, grid: &Grid1D) -> Result<(Vec<f64>, Vec<Vec<f64>>), CliError> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    for s in &m.snapshots {
        let path = dir.join(&s.file);
        let csv = SnapshotCsv::read(&path)?;
        if csv.values.len() != grid.len() {
            return Err(IoError::Format {
                path,
                line: 0,
                reason: format!("{} rows, grid has {} nodes", csv.values.len(), grid.len()),
            }
            .into());
        }
        times.push(csv.t);
        values.push(csv.values);
    }
    Ok((times, values))
}

/// Recompute the verification block of a finished run from its files. The
/// block comes from the manifest's config echo, then `overrides`.
pub fn verify_manifest(path: &Path, overrides: &[String]) -> Result<Json, CliError> {
    let (m, dir) = RunManifest::read(path)?;
    let mut flat = FlatConfig::from_manifest(&m.raw_json())?;
    for o in overrides {
        flat.apply_override(o)?;
    }
    let cfg = RunConfig::from_flat(&flat)?;
    let spec = cfg
        .verify
        .clone()
        .ok_or_else(|| ConfigError::Missing("verify.kind".into()))?;
    let (times, values) = load_snapshots(&m, &dir, &cfg.grid)?;
    let report = match &cfg.problem {
        Problem::Ricci { ic, solver } => {
            let snapshots = values
                .into_iter()
                .map(|v| ConformalMetric::from_values(cfg.grid, v))
                .collect::<Result<Vec<_>, _>>()
                .map_err(VerifyError::from)?;
            let sol = FlowSolution {
                grid: cfg.grid,
                snapshot_times: times,
                snapshots,
                config: solver.clone(),
                provenance: ic.clone(),
                steps: vec![],
                stats: StepStats::default(),
            };
            ricci_report(&sol, &spec, cfg.lambda())?
        }
        Problem::Csf { solver } => {
            let snapshots = values
                .into_iter()
                .map(|v| GraphCurve::from_values(cfg.grid, v))
                .collect::<Result<Vec<_>, _>>()
                .map_err(VerifyError::from)?;
            let sol = CsfSolution {
                grid: cfg.grid,
                snapshot_times: times,
                snapshots,
                config: solver.clone(),
                steps: vec![],
                stats: StepStats::default(),
            };
            json!(verify::csf_breather_residual(&sol, spec.t, spec.window)?)
        }
    };
    Ok(json!({ spec.kind.name(): report }))
}

/// Samples of the initial curve on `[-5, 5]`, origin included.
pub fn export_figure1(out: &Path, dx: f64) -> Result<PathBuf, CliError> {
    let n = (10.0 / dx).round();
    if !(dx > 0.0) || (n * dx - 10.0).abs() > 1e-9 || !(n as usize).is_multiple_of(2) {
        return Err(ConfigError::Invalid {
            key: "dx".into(),
            reason: format!("dx must divide [-5, 5] into an even number of cells, got {dx}"),
        }
        .into());
    }
    let grid = Grid1D::new(-5.0, 5.0, n as usize).map_err(|e| ConfigError::Invalid { key: "dx".into(), reason: e.to_string() })?;
    mkdir(out)?;
    let path = out.join("figure1.csv");
    let values: Vec<f64> = grid.nodes().map(csf_profile).collect();
    SnapshotCsv::from_grid(0.0, "f", &grid, &values).write(&path)?;
    Ok(path)
}

fn default_out(config: &Path) -> PathBuf {
    let root = std::env::var_os("BREATHERLAB_OUT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"));
    root.join(config.file_stem().unwrap_or_default())
}

#[derive(Debug, Parser)]
#[command(name = "breatherlab", version, about = "Ricci flow and curve shortening flow breathers: runs and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Run directory; defaults to $BREATHERLAB_OUT/<config stem> or runs/<config stem>.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `key=value`, may repeat.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve a Ricci flow configuration.
    RicciRun(RunArgs),
    /// Evolve the curve shortening flow configuration.
    CsfRun(RunArgs),
    /// Check a finished run against its verification block.
    Verify {
        /// Manifest file or run directory.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// max |2tK + 1| over a window of a finished Ricci run.
    CuspCheck {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        t: f64,
        /// `x_a,x_b`
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        window: Vec<f64>,
    },
    /// Shift-identity defect at shift `a` of a finished Ricci run.
    SolitonDefect {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        shift: f64,
        #[arg(long)]
        t: f64,
        /// `x_a,x_b`
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        window: Vec<f64>,
    },
    /// Write the sampled initial curve to figure1.csv.
    ExportFigure1 {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0.001)]
        dx: f64,
    },
    /// Run several configurations in parallel, one directory each.
    Sweep {
        #[arg(long = "config", required = true)]
        configs: Vec<PathBuf>,
        /// Root directory; defaults to $BREATHERLAB_OUT or runs.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn window_override(window: &[f64]) -> Result<String, CliError> {
    match window {
        [a, b] => Ok(format!("verify.window=[{a:?}, {b:?}]")),
        _ => Err(ConfigError::Invalid { key: "--window".into(), reason: format!("expected x_a,x_b, got {window:?}") }.into()),
    }
}

fn print_json(v: &Json) {
    println!("{}", serde_json::to_string_pretty(v).expect("report serializes"));
}

fn summary(m: &RunManifest, out: &Path) -> Json {
    json!({ "manifest": out.join(RunManifest::FILE_NAME), "snapshots": m.snapshots.len(), "reports": m.reports })
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::RicciRun(a) => {
            let cfg = load_config(&a.config, &a.overrides)?;
            let out = a.out.unwrap_or_else(|| default_out(&a.config));
            let m = run_ricci(&cfg, &out)?;
            print_json(&summary(&m, &out));
        }
        Command::CsfRun(a) => {
            let cfg = load_config(&a.config, &a.overrides)?;
            let out = a.out.unwrap_or_else(|| default_out(&a.config));
            let m = run_csf(&cfg, &out)?;
            print_json(&summary(&m, &out));
        }
        Command::Verify { manifest, overrides } => print_json(&verify_manifest(&manifest, &overrides)?),
        Command::CuspCheck { manifest, t, window } => {
            let o = vec!["verify.kind=cusp".to_string(), format!("verify.t={t:?}"), window_override(&window)?];
            print_json(&verify_manifest(&manifest, &o)?);
        }
        Command::SolitonDefect { manifest, shift, t, window } => {
            let o = vec![
                "verify.kind=soliton-defect".to_string(),
                format!("verify.shift={shift:?}"),
                format!("verify.t={t:?}"),
                window_override(&window)?,
            ];
            print_json(&verify_manifest(&manifest, &o)?);
        }
        Command::ExportFigure1 { out, dx } => {
            let root = out.unwrap_or_else(|| {
                std::env::var_os("BREATHERLAB_OUT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
            });
            let path = export_figure1(&root, dx)?;
            println!("{}", path.display());
        }
        Command::Sweep { configs, out, overrides } => {
            let root = out.unwrap_or_else(|| {
                std::env::var_os("BREATHERLAB_OUT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
            });
            let results: Vec<(PathBuf, Result<RunManifest, CliError>)> = configs
                .par_iter()
                .map(|c| {
                    let dir = root.join(c.file_stem().unwrap_or_default());
                    let r = load_config(c, &overrides).and_then(|cfg| run_any(&cfg, &dir));
                    (dir, r)
                })
                .collect();
            let mut first_err = None;
            for (dir, r) in results {
                match r {
                    Ok(m) => print_json(&summary(&m, &dir)),
                    Err(e) => {
                        eprintln!("{}: {e}", dir.display());
                        first_err.get_or_insert(e);
                    }
                }
            }
            if let Some(e) = first_err {
                return Err(e);
            }
        }
    }
    Ok(())
}

/// Parse arguments, run, and return the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
