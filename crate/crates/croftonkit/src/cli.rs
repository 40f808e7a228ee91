//! Command-line definitions, configuration resolution and dispatch.
//!
//! Every value can come from a flag or from a JSON file given with
//! `--config`; flags win, and documented defaults fill the rest. Each
//! subcommand hands the resolved configuration to one core entry point
//! and packages its result; no mathematics happens here.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use croftonkit_core::curvature::{
    default_eps_grid, finite_difference_form, kernel_local_asymptotic, principal_curvatures, second_fundamental_form,
    sphere_certificate, tangent_frame, umbilic_defect, CertificateThresholds,
};
use croftonkit_core::estimators::{
    archimedes_check, chord_cdf, chord_moments, chord_scaling, contingency_table, crofton_area, estimate_hit_distribution,
    pair_hit_probability_with, quad_crofton_check, CellPartition,
};
use croftonkit_core::geom::{basis, sigma_exact, sphere_area, surface_area_exact, Vector};
use croftonkit_core::intersect::intersect;
use croftonkit_core::{ConvexBody, DirectedLine};

use crate::descriptor::{build_body, build_patch, BodySpec, BuiltBody, RegionSpec};
use crate::error::{CliError, CliResult};
use crate::report::{stamp_wall_time, write_output, ReportEnvelope, Table, Timing, TOOL_VERSION};
use crate::threads::{default_workers, Threads};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SAMPLES: usize = 1_000_000;
pub const DEFAULT_PAIRS: usize = 1_000_000;
pub const DEFAULT_POINTS: usize = 10_000;
pub const DEFAULT_CELLS: usize = 48;
pub const DEFAULT_PILOT: usize = 200_000;

#[derive(Debug, Parser)]
#[command(name = "croftonkit", version, about = "Monte Carlo integral geometry of random lines through convex bodies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON configuration file; flags override its values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Random seed [default: 42].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads [default: $CROFTONKIT_WORKERS or available parallelism].
    #[arg(long)]
    pub workers: Option<usize>,
    /// JSON report destination, `-` for stdout [default: -].
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BodyArgs {
    /// Body descriptor, e.g. `sphere`, `ellipsoid:1,1,1.5`, `mesh:cube.off` [default: sphere].
    #[arg(long)]
    pub body: Option<String>,
    /// Ambient dimension [default: 3, or implied by the body].
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Samples {
    /// Number of random lines or points [default: 1000000].
    #[arg(long, short = 'n')]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Pairs {
    /// Number of random point pairs [default: 1000000].
    #[arg(long)]
    pub pairs: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Csv {
    /// Also write the tabular payload as CSV.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Grid {
    /// Comma-separated evaluation grid.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PointArgs {
    /// Boundary point [default: where the last axis leaves the body].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub point: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Empirical chord-length distribution function.
    ChordCdf {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        body: BodyArgs,
        #[command(flatten)]
        samples: Samples,
        /// Chord lengths [default: 21 points from 0 to the bounding diameter].
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        csv: Csv,
    },
    /// Frequencies of 0, 1 and 2 crossings of a patch.
    HitDist {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        body: BodyArgs,
        #[command(flatten)]
        samples: Samples,
        /// Patch descriptor, e.g. `cap:0.5` [default: whole].
        #[arg(long)]
        patch: Option<String>,
    },
    /// Patch area from the mean number of crossings.
    CroftonArea {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        body: BodyArgs,
        #[command(flatten)]
        samples: Samples,
        /// Patch descriptor [default: whole].
        #[arg(long)]
        patch: Option<String>,
    },
    /// Both sides of the quadratic Crofton identity.
    QuadCrofton {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        body: BodyArgs,
        #[command(flatten)]
        samples: Samples,
        #[command(flatten)]
        pairs: Pairs,
        /// Patch descriptor [default: whole].
        #[arg(long)]
        patch: Option<String>,
    },
    /// Chi-square test of independence of chord entry and exit cells.
    Independence {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        body: BodyArgs,
        #[command(flatten)]
        samples: Samples,
        /// Number of cells; split into latitude bands by longitude sectors [default: 48 = 6 x 8].
        #[arg(long)]
        cells: Option<usize>,
        /// Pilot boundary points for equalizing cells on non-spheres [default: 200000].
        #[arg(long)]
        pilot: Option<usize>,
        #[command(flatten)]
        csv: Csv,
    },
    /// `E<X, Y>` for random chords of the unit sphere.
    DotMoment {
        #[command(flatten)]
        common: Common,
        /// Ambient dimension [default: 3].
        #[arg(long)]
        dim: Option<usize>,
        #[command(flatten)]
        samples: Samples,
    },
    /// Mean chord length of unit spheres across dimensions.
    ChordScaling {
        #[command(flatten)]
        common: Common,
        /// Dimensions [default: 8,16,32,64].
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[command(flatten)]
        samples: Samples,
        #[command(flatten)]
        csv: Csv,
    },
    /// Joint hit probability of two disjoint unit-sphere patches.
    PairProb {
        #[command(flatten)]
        common: Common,
        /// Ambient dimension [default: 3].
        #[arg(long)]
        dim: Option<usize>,
        #[command(flatten)]
        samples: Samples,
        #[command(flatten)]
        pairs: Pairs,
        /// Patch descriptor; give exactly two.
        #[arg(long)]
        patch: Vec<String>,
    },
    /// Monte Carlo areas of spherical caps against `2 pi (1 - t)`.
    Archimedes {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        samples: Samples,
        /// Cap heights [default: -1, -0.75, ..., 1].
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        csv: Csv,
    },
    /// The kernel F near a boundary point along a tangent direction.
    KernelScan {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        body: BodyArgs,
        #[command(flatten)]
        point: PointArgs,
        /// Direction, projected onto the tangent plane [default: first tangent frame vector].
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        direction: Option<Vec<f64>>,
        /// Decreasing offsets [default: 9 points from 1e-1 to 1e-3].
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        csv: Csv,
    },
    /// Second fundamental form and principal curvatures at a point.
    Curvature {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        body: BodyArgs,
        #[command(flatten)]
        point: PointArgs,
    },
    /// Kernel-constancy and umbilicity test for roundness.
    Certify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        body: BodyArgs,
        #[command(flatten)]
        pairs: Pairs,
        /// Boundary points for the umbilic defect [default: 10000].
        #[arg(long)]
        points: Option<usize>,
        /// Largest kernel coefficient of variation accepted [default: 0.01].
        #[arg(long)]
        cv_threshold: Option<f64>,
        /// Largest umbilic defect accepted [default: 0.01].
        #[arg(long)]
        defect_threshold: Option<f64>,
    },
    /// Exact and Crofton-estimated area of a triangle mesh.
    MeshArea {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        body: BodyArgs,
        #[command(flatten)]
        samples: Samples,
    },
}

/// Keys accepted in a `--config` file. Bodies and patches may be
/// descriptor strings or JSON objects.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<String>,
    pub body: Option<Value>,
    pub dim: Option<usize>,
    pub patch: Option<Value>,
    pub samples: Option<usize>,
    pub pairs: Option<usize>,
    pub points: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub grid: Option<Vec<f64>>,
    pub dims: Option<Vec<usize>>,
    pub cells: Option<usize>,
    pub pilot: Option<usize>,
    pub point: Option<Vec<f64>>,
    pub direction: Option<Vec<f64>>,
    pub cv_threshold: Option<f64>,
    pub defect_threshold: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: invalid configuration: {e}", path.display())))
    }
}

/// A fully resolved run. Worker count and output paths do not affect
/// results and are kept out of the serialized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<BodySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub patches: Vec<RegionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bands: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sectors: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pilot: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<CertificateThresholds>,
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub output: PathBuf,
    #[serde(skip)]
    pub csv: Option<PathBuf>,
}

impl RunConfig {
    fn new(command: &str, common: &Common, file: &FileConfig) -> CliResult<Self> {
        if let Some(c) = &file.command {
            if c != command {
                return Err(CliError::usage(format!("configuration is for `{c}`, not `{command}`")));
            }
        }
        Ok(Self {
            command: command.into(),
            seed: common.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            body: None,
            dim: None,
            patches: Vec::new(),
            samples: None,
            pairs: None,
            points: None,
            grid: None,
            dims: None,
            bands: None,
            sectors: None,
            pilot: None,
            point: None,
            direction: None,
            thresholds: None,
            workers: common.workers.or(file.workers).unwrap_or_else(default_workers).max(1),
            output: common.output.clone().or_else(|| file.output.clone()).unwrap_or_else(|| "-".into()),
            csv: None,
        })
    }

    fn body_spec(&self) -> &BodySpec {
        self.body.as_ref().expect("body resolved")
    }
}

fn body_from_value(value: &Value) -> CliResult<BodySpec> {
    match value {
        Value::String(s) => BodySpec::parse(s),
        other => serde_json::from_value(other.clone()).map_err(|e| CliError::usage(format!("malformed body JSON: {e}"))),
    }
}

fn patches_from_value(value: &Value) -> CliResult<Vec<RegionSpec>> {
    let one = |v: &Value| match v {
        Value::String(s) => RegionSpec::parse(s),
        other => serde_json::from_value(other.clone()).map_err(|e| CliError::usage(format!("malformed patch JSON: {e}"))),
    };
    match value {
        Value::Array(items) => items.iter().map(one).collect(),
        v => Ok(vec![one(v)?]),
    }
}

fn resolve_body(cfg: &mut RunConfig, args: &BodyArgs, file: &FileConfig) -> CliResult<()> {
    let spec = match (&args.body, &file.body) {
        (Some(s), _) => BodySpec::parse(s)?,
        (None, Some(v)) => body_from_value(v)?,
        (None, None) => BodySpec::Sphere { center: None, radius: None },
    };
    let dim = args.dim.or(file.dim).or(spec.implied_dim()).unwrap_or(3);
    cfg.body = Some(spec);
    cfg.dim = Some(dim);
    Ok(())
}

fn resolve_patches(flags: &[String], file: &FileConfig) -> CliResult<Vec<RegionSpec>> {
    if !flags.is_empty() {
        return flags.iter().map(|s| RegionSpec::parse(s)).collect();
    }
    file.patch.as_ref().map(patches_from_value).transpose().map(Option::unwrap_or_default)
}

fn split_cells(cells: usize) -> CliResult<(usize, usize)> {
    if cells < 2 {
        return Err(CliError::usage("--cells must be at least 2"));
    }
    let bands = (1..=cells).take_while(|b| b * b <= cells).filter(|b| cells.is_multiple_of(*b)).last().unwrap_or(1);
    Ok((bands, cells / bands))
}

/// Parses `args` (including the program name) and resolves the configuration.
pub fn parse_config<I, T>(args: I) -> Result<RunConfig, ParseFailure>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(ParseFailure::Clap)?;
    resolve(cli.command).map_err(ParseFailure::Config)
}

/// Either a clap error (usage, help or version) or an invalid configuration.
#[derive(Debug)]
pub enum ParseFailure {
    Clap(clap::Error),
    Config(CliError),
}

fn load_file(common: &Common) -> CliResult<FileConfig> {
    common.config.as_deref().map(FileConfig::load).transpose().map(Option::unwrap_or_default)
}

/// Merges flags, configuration file and defaults.
pub fn resolve(command: Command) -> CliResult<RunConfig> {
    let name = command_name(&command);
    let cfg = match command {
        Command::ChordCdf { common, body, samples, grid, csv } => {
            let file = load_file(&common)?;
            let mut cfg = RunConfig::new(name, &common, &file)?;
            resolve_body(&mut cfg, &body, &file)?;
            cfg.samples = Some(samples.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES));
            cfg.grid = grid.grid.or(file.grid);
            cfg.csv = csv.csv.or(file.csv);
            cfg
        }
        Command::HitDist { common, body, samples, patch } | Command::CroftonArea { common, body, samples, patch } => {
            let file = load_file(&common)?;
            let mut cfg = RunConfig::new(name, &common, &file)?;
            resolve_body(&mut cfg, &body, &file)?;
            cfg.samples = Some(samples.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES));
            cfg.patches = one_patch(resolve_patches(patch.as_slice(), &file)?)?;
            cfg
        }
        Command::QuadCrofton { common, body, samples, pairs, patch } => {
            let file = load_file(&common)?;
            let mut cfg = RunConfig::new(name, &common, &file)?;
            resolve_body(&mut cfg, &body, &file)?;
            cfg.samples = Some(samples.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES));
            cfg.pairs = Some(pairs.pairs.or(file.pairs).unwrap_or(DEFAULT_PAIRS));
            cfg.patches = one_patch(resolve_patches(patch.as_slice(), &file)?)?;
            cfg
        }
        Command::Independence { common, body, samples, cells, pilot, csv } => {
            let file = load_file(&common)?;
            let mut cfg = RunConfig::new(name, &common, &file)?;
            resolve_body(&mut cfg, &body, &file)?;
            cfg.samples = Some(samples.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES));
            let (bands, sectors) = split_cells(cells.or(file.cells).unwrap_or(DEFAULT_CELLS))?;
            cfg.bands = Some(bands);
            cfg.sectors = Some(sectors);
            cfg.pilot = Some(pilot.or(file.pilot).unwrap_or(DEFAULT_PILOT));
            cfg.csv = csv.csv.or(file.csv);
            cfg
        }
        Command::DotMoment { common, dim, samples } => {
            let file = load_file(&common)?;
            let mut cfg = RunConfig::new(name, &common, &file)?;
            cfg.dim = Some(dim.or(file.dim).unwrap_or(3));
            cfg.samples = Some(samples.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES));
            cfg
        }
        Command::ChordScaling { common, dims, samples, csv } => {
            let file = load_file(&common)?;
            let mut cfg = RunConfig::new(name, &common, &file)?;
            cfg.dims = Some(dims.or(file.dims).unwrap_or_else(|| vec![8, 16, 32, 64]));
            cfg.samples = Some(samples.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES));
            cfg.csv = csv.csv.or(file.csv);
            cfg
        }
        Command::PairProb { common, dim, samples, pairs, patch } => {
            let file = load_file(&common)?;
            let mut cfg = RunConfig::new(name, &common, &file)?;
            cfg.dim = Some(dim.or(file.dim).unwrap_or(3));
            cfg.samples = Some(samples.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES));
            cfg.pairs = Some(pairs.pairs.or(file.pairs).unwrap_or(DEFAULT_PAIRS));
            cfg.patches = resolve_patches(&patch, &file)?;
            if cfg.patches.len() != 2 {
                return Err(CliError::usage("pair-prob needs exactly two --patch descriptors"));
            }
            cfg
        }
        Command::Archimedes { common, samples, grid, csv } => {
            let file = load_file(&common)?;
            let mut cfg = RunConfig::new(name, &common, &file)?;
            cfg.samples = Some(samples.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES));
            cfg.grid = Some(grid.grid.or(file.grid).unwrap_or_else(|| (0..=8).map(|i| -1.0 + 0.25 * i as f64).collect()));
            cfg.csv = csv.csv.or(file.csv);
            cfg
        }
        Command::KernelScan { common, body, point, direction, grid, csv } => {
            let file = load_file(&common)?;
            let mut cfg = RunConfig::new(name, &common, &file)?;
            resolve_body(&mut cfg, &body, &file)?;
            cfg.point = point.point.or(file.point);
            cfg.direction = direction.or(file.direction);
            cfg.grid = Some(grid.grid.or(file.grid).unwrap_or_else(|| default_eps_grid(9)));
            cfg.csv = csv.csv.or(file.csv);
            cfg
        }
        Command::Curvature { common, body, point } => {
            let file = load_file(&common)?;
            let mut cfg = RunConfig::new(name, &common, &file)?;
            resolve_body(&mut cfg, &body, &file)?;
            cfg.point = point.point.or(file.point);
            cfg
        }
        Command::Certify { common, body, pairs, points, cv_threshold, defect_threshold } => {
            let file = load_file(&common)?;
            let mut cfg = RunConfig::new(name, &common, &file)?;
            resolve_body(&mut cfg, &body, &file)?;
            cfg.pairs = Some(pairs.pairs.or(file.pairs).unwrap_or(DEFAULT_PAIRS));
            cfg.points = Some(points.or(file.points).unwrap_or(DEFAULT_POINTS));
            let defaults = CertificateThresholds::default();
            cfg.thresholds = Some(CertificateThresholds {
                kernel_cv: cv_threshold.or(file.cv_threshold).unwrap_or(defaults.kernel_cv),
                umbilic_defect: defect_threshold.or(file.defect_threshold).unwrap_or(defaults.umbilic_defect),
            });
            cfg
        }
        Command::MeshArea { common, body, samples } => {
            let file = load_file(&common)?;
            let mut cfg = RunConfig::new(name, &common, &file)?;
            resolve_body(&mut cfg, &body, &file)?;
            if !cfg.body_spec().is_mesh() {
                return Err(CliError::usage("mesh-area needs a mesh body (`cube`, `icosphere:L` or `mesh:path`)"));
            }
            cfg.samples = Some(samples.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES));
            cfg
        }
    };
    if cfg.samples == Some(0) || cfg.pairs == Some(0) || cfg.points == Some(0) {
        return Err(CliError::usage("sample counts must be positive"));
    }
    Ok(cfg)
}

fn one_patch(patches: Vec<RegionSpec>) -> CliResult<Vec<RegionSpec>> {
    match patches.len() {
        0 => Ok(vec![RegionSpec::Whole]),
        1 => Ok(patches),
        _ => Err(CliError::usage("this command takes a single --patch")),
    }
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::ChordCdf { .. } => "chord-cdf",
        Command::HitDist { .. } => "hit-dist",
        Command::CroftonArea { .. } => "crofton-area",
        Command::QuadCrofton { .. } => "quad-crofton",
        Command::Independence { .. } => "independence",
        Command::DotMoment { .. } => "dot-moment",
        Command::ChordScaling { .. } => "chord-scaling",
        Command::PairProb { .. } => "pair-prob",
        Command::Archimedes { .. } => "archimedes",
        Command::KernelScan { .. } => "kernel-scan",
        Command::Curvature { .. } => "curvature",
        Command::Certify { .. } => "certify",
        Command::MeshArea { .. } => "mesh-area",
    }
}

/// The outcome of a run: the JSON envelope and an optional CSV table.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub envelope: ReportEnvelope,
    pub table: Option<Table>,
}

struct Payload {
    results: Value,
    table: Option<Table>,
    body: Option<BuiltBody>,
}

fn to_value<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("results serialize")
}

fn built(cfg: &RunConfig) -> CliResult<BuiltBody> {
    build_body(cfg.body_spec(), cfg.dim.expect("dimension resolved"))
}

/// Runs a resolved configuration.
pub fn execute(cfg: &RunConfig) -> CliResult<Outcome> {
    let exec = Threads::new(cfg.workers);
    let start = Instant::now();
    let payload = dispatch(cfg, &exec)?;
    let seconds = start.elapsed().as_secs_f64();
    let mut results = payload.results;
    stamp_wall_time(&mut results, seconds);
    let envelope = ReportEnvelope {
        tool_version: TOOL_VERSION.into(),
        config: to_value(cfg),
        body_hash: payload.body.as_ref().map(|b| b.hash.clone()),
        warnings: payload.body.as_ref().map(|b| b.warnings().to_vec()).unwrap_or_default(),
        results,
        timing: Timing { wall_time: seconds, workers: exec.workers() },
    };
    Ok(Outcome { envelope, table: payload.table })
}

/// Runs and writes the JSON report and any CSV table.
pub fn run(cfg: &RunConfig) -> CliResult<Outcome> {
    let outcome = execute(cfg)?;
    for w in &outcome.envelope.warnings {
        eprintln!("warning: {w}");
    }
    write_output(&cfg.output, &outcome.envelope.to_json())?;
    if let (Some(path), Some(table)) = (&cfg.csv, &outcome.table) {
        write_output(path, &table.to_csv())?;
    }
    Ok(outcome)
}

fn samples(cfg: &RunConfig) -> usize {
    cfg.samples.expect("samples resolved")
}

fn pairs(cfg: &RunConfig) -> usize {
    cfg.pairs.expect("pairs resolved")
}

fn dispatch(cfg: &RunConfig, exec: &Threads) -> CliResult<Payload> {
    let seed = cfg.seed;
    match cfg.command.as_str() {
        "chord-cdf" => {
            let body = built(cfg)?;
            body.require_closed()?;
            let grid = cfg.grid.clone().unwrap_or_else(|| {
                let diameter = 2.0 * body.body.bounding_ball().1;
                (0..=20).map(|i| diameter * i as f64 / 20.0).collect()
            });
            let cdf = chord_cdf(exec, &body.body, &grid, samples(cfg), seed)?;
            let mut table = Table::new(["d", "cdf", "stderr"]);
            cdf.points.iter().for_each(|p| table.push([p.d, p.cdf, p.stderr]));
            Ok(Payload { results: json!({ "chord_cdf": cdf }), table: Some(table), body: Some(body) })
        }
        "hit-dist" => {
            let body = built(cfg)?;
            body.require_closed()?;
            let patch = build_patch(&body.body, &cfg.patches[0])?;
            let dist = estimate_hit_distribution(exec, &patch, samples(cfg), seed)?;
            let (mean, mean_se) = dist.mean_hits();
            let mut results = json!({ "hit_distribution": dist, "mean_hits": { "estimate": mean, "stderr": mean_se } });
            if body.body.unit_sphere_dim() == Some(3) {
                if let Some(s) = sigma_exact(&patch)? {
                    results["sphere_prediction"] = json!({ "sigma": s, "p0": (1.0 - s).powi(2), "p1": 2.0 * s * (1.0 - s), "p2": s * s });
                }
            }
            Ok(Payload { results, table: None, body: Some(body) })
        }
        "crofton-area" => {
            let body = built(cfg)?;
            let patch = build_patch(&body.body, &cfg.patches[0])?;
            let report = crofton_area(exec, &patch, samples(cfg), seed)?;
            let exact = exact_area(&body.body, &patch)?;
            let mut results = json!({ "area": report });
            if let Some(a) = exact {
                results["exact_area"] = json!(a);
                results["z_score"] = json!(report.z_score(a));
            }
            Ok(Payload { results, table: None, body: Some(body) })
        }
        "quad-crofton" => {
            let body = built(cfg)?;
            let patch = build_patch(&body.body, &cfg.patches[0])?;
            let dim = body.body.dim();
            let calibration = crate::calibration::quad_crofton(exec, dim, samples(cfg), pairs(cfg), seed)?;
            let r = quad_crofton_check(exec, &patch, &calibration, samples(cfg), pairs(cfg), seed)?;
            let diff = r.lhs.estimate - r.rhs.estimate;
            let se = r.lhs.stderr.hypot(r.rhs.stderr);
            Ok(Payload {
                results: json!({ "quad_crofton": r, "difference": diff, "difference_stderr": se, "z_score": diff.abs() / se }),
                table: None,
                body: Some(body),
            })
        }
        "independence" => {
            let body = built(cfg)?;
            body.require_closed()?;
            let (bands, sectors) = (cfg.bands.expect("bands"), cfg.sectors.expect("sectors"));
            let partition = CellPartition::for_body(exec, &body.body, bands, sectors, cfg.pilot.expect("pilot"), seed)?;
            let table = contingency_table(exec, &body.body, &partition, samples(cfg), seed)?;
            let chi = table.pearson()?;
            let p = crate::chi_square_p_value(chi.statistic, chi.dof);
            let n = table.n_samples as f64;
            let freq = |v: Vec<u64>| v.into_iter().map(|c| c as f64 / n).collect::<Vec<_>>();
            let mut csv = Table::new(std::iter::once("entry_cell".to_string()).chain((0..table.cells).map(|j| format!("exit_{j}"))));
            for i in 0..table.cells {
                csv.push(std::iter::once(i as u64).chain((0..table.cells).map(|j| table.count(i, j))));
            }
            Ok(Payload {
                results: json!({
                    "chi2": chi.statistic,
                    "dof": chi.dof,
                    "p_value": p,
                    "min_expected": chi.min_expected,
                    "cells": table.cells,
                    "bands": bands,
                    "sectors": sectors,
                    "cell_measures": partition.measures(),
                    "entry_frequencies": freq(table.row_totals()),
                    "exit_frequencies": freq(table.column_totals()),
                    "n_samples": table.n_samples,
                    "seed": seed,
                }),
                table: Some(csv),
                body: Some(body),
            })
        }
        "dot-moment" => {
            let n = cfg.dim.expect("dim");
            let m = chord_moments(exec, n, samples(cfg), seed)?;
            let exact = (n as f64 - 3.0) / (n as f64 + 1.0);
            Ok(Payload {
                results: json!({ "moments": m, "exact_dot": exact, "z_score": m.dot.z_score(exact) }),
                table: None,
                body: None,
            })
        }
        "chord-scaling" => {
            let s = chord_scaling(exec, cfg.dims.as_deref().expect("dims"), samples(cfg), seed)?;
            let mut table = Table::new(["n", "mean_length", "stderr"]);
            for (n, r) in s.dims.iter().zip(&s.mean_length) {
                table.push([*n as f64, r.estimate, r.stderr]);
            }
            Ok(Payload { results: json!({ "chord_scaling": s }), table: Some(table), body: None })
        }
        "pair-prob" => {
            let n = cfg.dim.expect("dim");
            let sphere = std::sync::Arc::new(ConvexBody::unit_sphere(n).map_err(|e| CliError::usage(e.to_string()))?);
            let a = build_patch(&sphere, &cfg.patches[0])?;
            let b = build_patch(&sphere, &cfg.patches[1])?;
            let calibration = crate::calibration::pair_constant(exec, n, samples(cfg), pairs(cfg), seed)?;
            let r = pair_hit_probability_with(exec, &a, &b, &calibration, samples(cfg), pairs(cfg), seed)?;
            let mut results = json!({ "pair_hit": r });
            if n == 3 {
                if let (Some(sa), Some(sb)) = (sigma_exact(&a)?, sigma_exact(&b)?) {
                    results["one_one_prediction"] = json!(2.0 * sa * sb);
                }
            }
            Ok(Payload { results, table: None, body: None })
        }
        "archimedes" => {
            let t = archimedes_check(exec, cfg.grid.as_deref().expect("grid"), samples(cfg), seed)?;
            let mut table = Table::new(["t", "area", "stderr", "exact"]);
            t.rows.iter().for_each(|r| table.push([r.t, r.area.estimate, r.area.stderr, r.exact]));
            Ok(Payload { results: json!({ "archimedes": t }), table: Some(table), body: None })
        }
        "kernel-scan" => {
            let body = built(cfg)?;
            let x = base_point(cfg, &body.body)?;
            let form = second_fundamental_form(&body.body, &x)?;
            let v = match &cfg.direction {
                Some(d) => tangent_direction(d, form.normal())?,
                None => tangent_frame(form.normal()).column(0).into_owned(),
            };
            let scan = kernel_local_asymptotic(&body.body, &x, &v, cfg.grid.as_deref().expect("grid"))?;
            let mut table = Table::new(["eps", "kernel", "predicted", "distance"]);
            scan.rows.iter().for_each(|r| table.push([r.eps, r.kernel, r.predicted, r.distance]));
            Ok(Payload {
                results: json!({ "point": x.as_slice(), "direction": v.as_slice(), "scan": scan }),
                table: Some(table),
                body: Some(body),
            })
        }
        "curvature" => {
            let body = built(cfg)?;
            let x = base_point(cfg, &body.body)?;
            let form = second_fundamental_form(&body.body, &x)?;
            let fd = finite_difference_form(&body.body, &x)?;
            let k = principal_curvatures(&form);
            let rows = |m: &croftonkit_core::Matrix| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>();
            let rel = (form.matrix() - fd.matrix()).amax() / form.matrix().amax().max(f64::MIN_POSITIVE);
            Ok(Payload {
                results: json!({
                    "point": x.as_slice(),
                    "normal": form.normal().as_slice(),
                    "tangent_frame": rows(&form.tangent_frame().transpose()),
                    "form": rows(form.matrix()),
                    "principal_curvatures": k,
                    "curvature_magnitudes": k.iter().map(|l| l.abs()).collect::<Vec<_>>(),
                    "umbilic_defect": umbilic_defect(&k),
                    "finite_difference_form": rows(fd.matrix()),
                    "finite_difference_relative_error": rel,
                }),
                table: None,
                body: Some(body),
            })
        }
        "certify" => {
            let body = built(cfg)?;
            let c = sphere_certificate(exec, &body.body, pairs(cfg), cfg.points.expect("points"), seed, cfg.thresholds.expect("thresholds"))?;
            Ok(Payload { results: json!({ "certificate": c }), table: None, body: Some(body) })
        }
        "mesh-area" => {
            let body = built(cfg)?;
            let mesh = body.mesh.as_ref().expect("mesh body");
            let exact = mesh.mesh.surface_area()?;
            let patch = croftonkit_core::SurfacePatch::whole(body.body.clone());
            let report = crofton_area(exec, &patch, samples(cfg), seed)?;
            Ok(Payload {
                results: json!({
                    "exact_area": exact,
                    "crofton_area": report,
                    "relative_error": (report.estimate - exact) / exact,
                    "z_score": report.z_score(exact),
                    "vertices": mesh.mesh.vertex_count(),
                    "faces": mesh.mesh.face_count(),
                    "boundary_edges": mesh.topology.boundary_edges.len(),
                    "nonmanifold_edges": mesh.topology.nonmanifold_edges.len(),
                    "closed": mesh.is_closed(),
                }),
                table: None,
                body: Some(body),
            })
        }
        other => Err(CliError::usage(format!("unknown command `{other}`"))),
    }
}

fn exact_area(body: &ConvexBody, patch: &croftonkit_core::SurfacePatch) -> CliResult<Option<f64>> {
    if let Some(n) = body.unit_sphere_dim() {
        return Ok(sigma_exact(patch)?.map(|s| s * sphere_area(n)));
    }
    if matches!(patch.region(), croftonkit_core::Region::Whole) {
        return Ok(surface_area_exact(body)?);
    }
    Ok(None)
}

/// The configured point, or where the ray from the center along the last
/// axis leaves the body.
fn base_point(cfg: &RunConfig, body: &ConvexBody) -> CliResult<Vector> {
    if let Some(p) = &cfg.point {
        if p.len() != body.dim() {
            return Err(CliError::usage(format!("--point has {} coordinates, expected {}", p.len(), body.dim())));
        }
        return Ok(Vector::from_column_slice(p));
    }
    let n = body.dim();
    let center = body.bounding_ball().0;
    let line = DirectedLine::new(center.clone(), basis(n, n - 1))?;
    let record = intersect(body, &line)?;
    record
        .hits
        .iter()
        .max_by(|a, b| a.param.total_cmp(&b.param))
        .map(|h| h.point.clone())
        .ok_or_else(|| CliError::Runtime("no boundary point above the body center".into()))
}

fn tangent_direction(d: &[f64], normal: &Vector) -> CliResult<Vector> {
    if d.len() != normal.len() {
        return Err(CliError::usage(format!("--direction has {} components, expected {}", d.len(), normal.len())));
    }
    let v = Vector::from_column_slice(d);
    let t = &v - normal * v.dot(normal);
    let norm = t.norm();
    if norm.is_nan() || norm <= 1e-12 * v.norm() {
        return Err(CliError::usage("--direction is normal to the surface"));
    }
    Ok(t / norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(args: &[&str]) -> RunConfig {
        match parse_config(std::iter::once("croftonkit").chain(args.iter().copied())) {
            Ok(c) => c,
            Err(e) => panic!("{e:?}"),
        }
    }

    #[test]
    fn documented_examples_parse() {
        let c = cfg(&["chord-cdf", "--body", "sphere", "--dim", "3", "--samples", "1000000", "--seed", "7"]);
        assert_eq!((c.seed, c.samples, c.dim), (7, Some(1_000_000), Some(3)));
        let c = cfg(&["independence", "--body", "ellipsoid:1,1,1.5", "--cells", "48"]);
        assert_eq!((c.bands, c.sectors, c.seed), (Some(6), Some(8), 42));
        assert!(matches!(parse_config(["croftonkit", "frobulate"]), Err(ParseFailure::Clap(_))));
        assert!(matches!(parse_config(["croftonkit", "chord-cdf", "--cells", "4"]), Err(ParseFailure::Clap(_))));
    }

    #[test]
    fn negative_grid_values() {
        let c = cfg(&["archimedes", "--grid", "-0.5,0,0.5"]);
        assert_eq!(c.grid, Some(vec![-0.5, 0.0, 0.5]));
    }

    #[test]
    fn cell_splits() {
        assert_eq!(split_cells(48).unwrap(), (6, 8));
        assert_eq!(split_cells(4).unwrap(), (2, 2));
        assert_eq!(split_cells(7).unwrap(), (1, 7));
    }

    #[test]
    fn file_values_are_overridden_by_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"body": {"kind": "ellipsoid", "semi_axes": [1, 1, 1.5]}, "seed": 5, "samples": 10}"#).unwrap();
        let c = cfg(&["chord-cdf", "--config", path.to_str().unwrap(), "--seed", "9"]);
        assert_eq!(c.seed, 9);
        assert_eq!(c.samples, Some(10));
        assert_eq!(c.body, Some(BodySpec::Ellipsoid { semi_axes: vec![1.0, 1.0, 1.5] }));
        std::fs::write(&path, r#"{"sedd": 5}"#).unwrap();
        let e = parse_config(["croftonkit", "chord-cdf", "--config", path.to_str().unwrap()]).unwrap_err();
        assert!(matches!(e, ParseFailure::Config(CliError::Usage(_))));
    }
}
