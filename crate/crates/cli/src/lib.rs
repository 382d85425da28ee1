//! The `morevis` command line: ingest a dataset, compute and score a ribbon
//! layout, render it to SVG, generate synthetic inputs, or serve a layout to
//! the explorer over HTTP.
//!
//! Exit codes: 0 on success, 1 for invalid input or arguments, 2 when the
//! solver fails.

pub mod serve;

use clap::{Args, Parser, Subcommand, ValueEnum};
use morevis_core::dataset::{self, load_dataset_with, save_dataset, DatasetError, DatasetFormat, IngestOptions};
use morevis_core::export::{layout_from_json, layout_to_json, render_svg, ColorMode, ExportError, RenderError, RenderSpec, Rgb};
use morevis_core::layout::{compute_layout_with, ExecutionOptions, LayoutConfig, LayoutError};
use morevis_core::metrics::{compute_metrics_with, MetricsOptions, DEFAULT_SAMPLE_BUDGET};
use morevis_core::projection::{DistanceMode, ProjectionMethod};
use morevis_core::{ExploreError, MovingRegionDataset};
use std::ffi::OsString;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("{path}: {source}")]
    Export {
        path: PathBuf,
        #[source]
        source: ExportError,
    },
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Server(#[source] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Layout(LayoutError::InvalidConfig(_) | LayoutError::Projection(_)) => 1,
            CliError::Layout(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "morevis", version, about = "Ribbon layouts for moving regions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a layout and write it as a JSON document.
    Layout(LayoutArgs),
    /// Recompute the quality metrics of a layout and print them as JSON.
    Metrics(MetricsArgs),
    /// Draw a layout as SVG.
    Render(RenderArgs),
    /// Write a synthetic dataset.
    Synth(SynthArgs),
    /// Serve a layout and its dataset to the explorer.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    /// Input format; guessed from the file when omitted.
    #[arg(long, value_parser = parse_format)]
    pub format: Option<DatasetFormat>,
    /// Replace non-convex or mis-wound polygons by their convex hull.
    #[arg(long)]
    pub hull: bool,
    /// Timestep length for hurdat-csv input, in days.
    #[arg(long, default_value_t = 2.0)]
    pub window_days: f64,
    /// Align hurdat-csv storms of different years on one season.
    #[arg(long)]
    pub ignore_year: bool,
}

impl DatasetArgs {
    fn load(&self, path: &Path) -> Result<MovingRegionDataset, CliError> {
        let format = match self.format {
            Some(f) => f,
            None => detect_format(path)?,
        };
        let options = IngestOptions {
            hull: self.hull,
            window_days: self.window_days,
            ignore_year: self.ignore_year,
        };
        Ok(load_dataset_with(path, format, &options)?)
    }
}

fn parse_format(s: &str) -> Result<DatasetFormat, String> {
    s.parse()
}

/// `.json` is regions-json; a `.csv` whose header has a `lon` column is
/// hurdat-csv, any other `.csv` tracking-csv.
pub fn detect_format(path: &Path) -> Result<DatasetFormat, CliError> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("json") => Ok(DatasetFormat::RegionsJson),
        Some("csv") => {
            let file = std::fs::File::open(path).map_err(|source| CliError::Read {
                path: path.to_path_buf(),
                source,
            })?;
            let mut header = String::new();
            std::io::BufReader::new(file)
                .read_line(&mut header)
                .map_err(|source| CliError::Read {
                    path: path.to_path_buf(),
                    source,
                })?;
            let is_storm = header.split(',').any(|c| c.trim().eq_ignore_ascii_case("lon"));
            Ok(if is_storm {
                DatasetFormat::HurdatCsv
            } else {
                DatasetFormat::TrackingCsv
            })
        }
        _ => Err(CliError::Usage(format!(
            "cannot guess the format of {}; pass --format",
            path.display()
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProjectionArg {
    Pca,
    Force,
    Hilbert,
    Morton,
}

impl From<ProjectionArg> for ProjectionMethod {
    fn from(p: ProjectionArg) -> Self {
        match p {
            ProjectionArg::Pca => ProjectionMethod::PcaCentroids,
            ProjectionArg::Force => ProjectionMethod::ForceDirected,
            ProjectionArg::Hilbert => ProjectionMethod::Hilbert,
            ProjectionArg::Morton => ProjectionMethod::Morton,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistanceArg {
    Centroid,
    Region,
}

#[derive(Debug, Args)]
pub struct LayoutArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[arg(long, value_enum, default_value = "pca")]
    pub projection: ProjectionArg,
    /// Pairwise distance for `--projection force`.
    #[arg(long, value_enum)]
    pub distance_mode: Option<DistanceArg>,
    /// Gradient steps for `--projection force`.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Extra random starts for `--projection force`.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Grid order for `--projection hilbert|morton`.
    #[arg(long)]
    pub curve_order: Option<u32>,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub lambda1: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub lambda2: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Branch-and-bound node budget per group.
    #[arg(long)]
    pub max_nodes: Option<usize>,
    /// Largest group solved exactly, counted in binaries.
    #[arg(long)]
    pub max_group_binaries: Option<usize>,
    #[arg(long)]
    pub output: PathBuf,
    /// Worker threads for the per-timestep solves.
    #[arg(long, env = "MOREVIS_JOBS")]
    pub jobs: Option<usize>,
    /// Store per-timestep solve times in the document (makes it run-dependent).
    #[arg(long)]
    pub record_timings: bool,
    /// Leave the metrics out of the document.
    #[arg(long)]
    pub no_metrics: bool,
}

impl LayoutArgs {
    pub fn config(&self) -> Result<LayoutConfig, CliError> {
        let force = self.projection == ProjectionArg::Force;
        let curve = matches!(self.projection, ProjectionArg::Hilbert | ProjectionArg::Morton);
        let only = |flag: &str, set: bool, allowed: bool, which: &str| {
            if set && !allowed {
                Err(CliError::Usage(format!("--{flag} only applies to --projection {which}")))
            } else {
                Ok(())
            }
        };
        only("distance-mode", self.distance_mode.is_some(), force, "force")?;
        only("iterations", self.iterations.is_some(), force, "force")?;
        only("restarts", self.restarts.is_some(), force, "force")?;
        only("curve-order", self.curve_order.is_some(), curve, "hilbert or morton")?;

        let mut config = LayoutConfig {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            ..LayoutConfig::default()
        };
        if let Some(n) = self.max_nodes {
            config.max_nodes = n;
        }
        if let Some(n) = self.max_group_binaries {
            config.max_group_binaries = n;
        }
        let p = &mut config.projection;
        p.method = self.projection.into();
        p.seed = self.seed;
        if let Some(d) = self.distance_mode {
            p.distance_mode = match d {
                DistanceArg::Centroid => DistanceMode::Centroid,
                DistanceArg::Region => DistanceMode::Region,
            };
        }
        if let Some(n) = self.iterations {
            p.iterations = n;
        }
        if let Some(n) = self.restarts {
            p.restarts = n;
        }
        if let Some(n) = self.curve_order {
            p.curve_order = n;
        }
        config.check()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub layout: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub dataset_args: DatasetArgs,
    /// Largest number of observation pairs used for stress.
    #[arg(long, default_value_t = DEFAULT_SAMPLE_BUDGET)]
    pub sample_budget: usize,
    /// Seed of the stress pair sample.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ColorArg {
    Identity,
    Attribute,
    Spatial,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub layout: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub dataset_args: DatasetArgs,
    #[arg(long)]
    pub svg: PathBuf,
    #[arg(long, default_value_t = 1200)]
    pub width: u32,
    #[arg(long, default_value_t = 600)]
    pub height: u32,
    #[arg(long, value_enum, default_value = "spatial")]
    pub color: ColorArg,
    /// Attribute for `--color attribute`.
    #[arg(long)]
    pub attribute: Option<String>,
    /// Colormap corners as four `#rrggbb` values: bottom-left, bottom-right,
    /// top-left, top-right.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    pub corners: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    /// Four orbiting regions with scripted intersections.
    Orbits,
    /// Random convex regions drifting in a box.
    Random,
    /// Pedestrian bounding boxes from a fixed camera (tracking-csv).
    Pedestrians,
    /// Tropical storm fixes (hurdat-csv).
    Storms,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "orbits")]
    pub scenario: Scenario,
    #[arg(long)]
    pub objects: Option<usize>,
    #[arg(long)]
    pub timesteps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub layout: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub dataset_args: DatasetArgs,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Origin allowed by CORS; any origin when omitted.
    #[arg(long)]
    pub cors_origin: Option<String>,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Layout(args) => layout(&args),
        Command::Metrics(args) => metrics(&args),
        Command::Render(args) => render(&args),
        Command::Synth(args) => synth(&args),
        Command::Serve(args) => serve::run(&args),
    }
}

fn write(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn read_layout(path: &Path) -> Result<(Vec<u8>, morevis_core::LayoutDocument), CliError> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let text = String::from_utf8_lossy(&bytes);
    let doc = layout_from_json(&text).map_err(|source| CliError::Export {
        path: path.to_path_buf(),
        source,
    })?;
    Ok((bytes, doc))
}

fn layout(args: &LayoutArgs) -> Result<(), CliError> {
    let config = args.config()?;
    if args.jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let ds = args.dataset.load(&args.input)?;
    let options = ExecutionOptions {
        jobs: args.jobs,
        record_timings: args.record_timings,
    };
    let layout = compute_layout_with(&ds, &config, &options)?;
    let metrics = (!args.no_metrics).then(|| compute_metrics_with(&ds, &layout, &MetricsOptions::default()));
    write(&args.output, layout_to_json(&layout, metrics.as_ref()).as_bytes())?;
    let statuses = layout.slices.iter().filter(|s| s.status != morevis_core::SliceStatus::Optimal).count();
    eprintln!(
        "wrote {} ({} objects, {} timesteps, {} rects; {} timesteps not proven optimal)",
        args.output.display(),
        ds.objects.len(),
        layout.timesteps.len(),
        layout.rects.len(),
        statuses
    );
    Ok(())
}

fn metrics(args: &MetricsArgs) -> Result<(), CliError> {
    let (_, doc) = read_layout(&args.layout)?;
    let ds = args.dataset_args.load(&args.dataset)?;
    let options = MetricsOptions {
        sample_budget: args.sample_budget,
        seed: args.seed,
    };
    let report = compute_metrics_with(&ds, &doc.layout, &options);
    println!("{}", serde_json::to_string_pretty(&report).expect("metrics always serialize"));
    Ok(())
}

fn render(args: &RenderArgs) -> Result<(), CliError> {
    let (_, doc) = read_layout(&args.layout)?;
    let ds = args.dataset_args.load(&args.dataset)?;
    let mut spec = RenderSpec {
        width: args.width,
        height: args.height,
        color_mode: match args.color {
            ColorArg::Identity => ColorMode::IdentityPalette,
            ColorArg::Attribute => ColorMode::Attribute,
            ColorArg::Spatial => ColorMode::SpatialColormap,
        },
        attribute_name: args.attribute.clone(),
        ..RenderSpec::default()
    };
    if let Some(corners) = &args.corners {
        for (slot, text) in spec.colormap_corners.iter_mut().zip(corners) {
            *slot = text.parse::<Rgb>().map_err(CliError::Usage)?;
        }
    }
    let svg = render_svg(&doc.layout, &ds, &spec)?;
    write(&args.svg, svg.as_bytes())?;
    eprintln!("wrote {}", args.svg.display());
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let fixed = |name: &str| {
        if args.objects.is_some() || args.timesteps.is_some() {
            Err(CliError::Usage(format!(
                "the {name} scenario has a fixed size; drop --objects/--timesteps"
            )))
        } else {
            Ok(())
        }
    };
    match args.scenario {
        Scenario::Orbits => {
            let ds = dataset::generate_synthetic_orbits(args.objects.unwrap_or(4), args.timesteps.unwrap_or(50), args.seed)?;
            save_dataset(&ds, &args.output)?;
        }
        Scenario::Random => {
            let ds = dataset::generate_random_regions(args.objects.unwrap_or(8), args.timesteps.unwrap_or(20), args.seed)?;
            save_dataset(&ds, &args.output)?;
        }
        Scenario::Pedestrians => {
            fixed("pedestrians")?;
            write(&args.output, dataset::pedestrian_tracking_csv(args.seed).as_bytes())?;
        }
        Scenario::Storms => {
            fixed("storms")?;
            write(&args.output, dataset::storm_track_csv(args.seed).as_bytes())?;
        }
    }
    eprintln!("wrote {}", args.output.display());
    Ok(())
}
