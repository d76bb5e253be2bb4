use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use wpt_core::coil::{ElectricalParams, WptSystem};
use wpt_core::magnetics::{mutual_approx, mutual_exact, CoilPose, CouplingModel, MutualMode};
use wpt_core::metrics::{self, PowerProfile, Region, RegionMetrics};
use wpt_core::placement_1d::{optimize_with_model, PlacementResult, SymmetricPlacement1D};
use wpt_core::placement_2d::{enumerate_structures, optimize_placement_2d_with_model, Placement2DReport, StructureCatalog};

use crate::config::{line_half_length, PlacementSection, ScenarioConfig};
use crate::error::CliError;

pub const PROFILE_FILE: &str = "profile.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Serialize)]
pub struct ParamsReport {
    pub tx: ElectricalParams,
    pub rx: ElectricalParams,
    /// Receiver parasitic plus load resistance (Ω).
    pub r_rx: f64,
    pub beta: f64,
    /// Load-power ceiling `(r_load / r_rx) p_max` (W).
    pub power_ceiling: f64,
}

pub fn params(cfg: &ScenarioConfig) -> Result<ParamsReport, CliError> {
    let s = cfg.system()?;
    Ok(ParamsReport {
        tx: s.tx,
        rx: s.rx,
        r_rx: s.r_rx,
        beta: s.beta,
        power_ceiling: s.power_ceiling(),
    })
}

#[derive(Debug, Serialize)]
pub struct MutualRow {
    /// Lateral transmitter-receiver distance (m).
    pub distance: f64,
    pub height: f64,
    pub mode: MutualMode,
    /// Mutual inductance (H).
    pub h: f64,
}

pub fn mutual(cfg: &ScenarioConfig, distances: &[f64]) -> Result<Vec<MutualRow>, CliError> {
    let s = cfg.system()?;
    let (tx, rx, z) = (s.config.tx_coil, s.config.rx_coil, s.z0());
    distances
        .iter()
        .map(|&d| {
            if !d.is_finite() || d < 0.0 {
                return Err(CliError::Validation(format!("distance: must be finite and >= 0, got {d}")));
            }
            let h = match cfg.mode {
                MutualMode::Exact => mutual_exact(&tx, &CoilPose::new(0.0, 0.0, 0.0), &rx, &CoilPose::new(d, 0.0, z))?,
                MutualMode::Approx => mutual_approx(s.beta, d, z),
            };
            Ok(MutualRow {
                distance: d,
                height: z,
                mode: cfg.mode,
                h,
            })
        })
        .collect()
}

pub fn structures(n: usize) -> Result<StructureCatalog, CliError> {
    Ok(enumerate_structures(n)?)
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PlacementOutcome {
    Line(PlacementResult),
    Disk(Placement2DReport),
}

#[derive(Debug, Serialize)]
pub struct RunResults {
    pub profile: String,
    pub metrics: RegionMetrics,
    /// Transmitter positions the profile was computed for (m).
    pub transmitters: Vec<[f64; 2]>,
    pub placement: Option<PlacementOutcome>,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub wpt_core: &'static str,
    pub wpt_cli: &'static str,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub config: ScenarioConfig,
    pub results: RunResults,
    pub versions: Versions,
    pub wall_clock_seconds: f64,
}

fn model_for(cfg: &ScenarioConfig, system: &WptSystem, txs: &[[f64; 2]], region: &Region) -> Result<CouplingModel, CliError> {
    let reach = txs.iter().map(|t| t[0].hypot(t[1])).fold(0.0, f64::max) + region.extent();
    Ok(CouplingModel::for_mode(system, cfg.mode, reach + 0.01)?)
}

fn fixed_positions(cfg: &ScenarioConfig, region: &Region) -> Result<Vec<[f64; 2]>, CliError> {
    match cfg.placement()? {
        PlacementSection::Explicit { positions } => Ok(positions.planar()),
        PlacementSection::Uniform { transmitters } => {
            let d = line_half_length(region)
                .ok_or_else(|| CliError::Validation("placement.kind: uniform needs a line region".into()))?;
            Ok(SymmetricPlacement1D::uniform(*transmitters, d)?.planar())
        }
        PlacementSection::Optimize { .. } => Err(CliError::Validation(
            "placement.kind: optimized placements are produced by the place command".into(),
        )),
    }
}

/// Profile for fixed transmitter positions.
pub fn profile(cfg: &ScenarioConfig, out: &Path) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let system = cfg.system()?;
    let region = cfg.region()?;
    let txs = fixed_positions(cfg, &region)?;
    let model = model_for(cfg, &system, &txs, &region)?;
    let prof = metrics::profile(&txs, &region, &system, cfg.strategy, &model)?;
    let results = write_outputs(out, &prof, txs, None)?;
    finish("profile", cfg, results, start, out)
}

/// Optimized placement on the configured line or disk, then its profile under
/// the configured strategy.
pub fn place(cfg: &ScenarioConfig, out: &Path) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let system = cfg.system()?;
    let region = cfg.region()?;
    let n = match cfg.placement()? {
        PlacementSection::Optimize { transmitters } => *transmitters,
        _ => {
            return Err(CliError::Validation(
                "placement.kind: place needs kind = \"optimize\"".into(),
            ))
        }
    };
    let params = cfg.solver.params();
    let seed = cfg.solver.seed;
    let extent = region.extent();
    // every transmitter sits inside the region
    let model = model_for(cfg, &system, &[[extent, 0.0]], &region)?;
    let (txs, outcome) = match line_half_length(&region) {
        Some(d) => {
            let r = optimize_with_model(n, &system, d, &params, seed, &model, &region)?;
            (r.placement.planar(), PlacementOutcome::Line(r))
        }
        None => {
            let r = optimize_placement_2d_with_model(n, &system, extent, &params, seed, &model, &region)?;
            (r.best().structure.positions(), PlacementOutcome::Disk(r))
        }
    };
    let prof = metrics::profile(&txs, &region, &system, cfg.strategy, &model)?;
    let results = write_outputs(out, &prof, txs, Some(outcome))?;
    finish("place", cfg, results, start, out)
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_err(path, e))?;
    std::io::Write::write_all(&mut w, b"\n").map_err(|e| io_err(path, e))
}

fn write_outputs(
    out: &Path,
    prof: &PowerProfile,
    transmitters: Vec<[f64; 2]>,
    placement: Option<PlacementOutcome>,
) -> Result<RunResults, CliError> {
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let csv_path: PathBuf = out.join(PROFILE_FILE);
    let file = File::create(&csv_path).map_err(|e| io_err(&csv_path, e))?;
    metrics::write_csv(&prof.samples, BufWriter::new(file)).map_err(|e| io_err(&csv_path, e))?;
    let m = prof.metrics()?;
    write_json(&out.join(METRICS_FILE), &m)?;
    Ok(RunResults {
        profile: PROFILE_FILE.to_string(),
        metrics: m,
        transmitters,
        placement,
    })
}

fn finish(
    command: &'static str,
    cfg: &ScenarioConfig,
    results: RunResults,
    start: Instant,
    out: &Path,
) -> Result<RunReport, CliError> {
    let report = RunReport {
        command,
        config: cfg.clone(),
        results,
        versions: Versions {
            wpt_core: wpt_core::VERSION,
            wpt_cli: env!("CARGO_PKG_VERSION"),
        },
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    write_json(&out.join(REPORT_FILE), &report)?;
    Ok(report)
}

