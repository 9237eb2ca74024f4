//! `svbrdf` command line: each subcommand loads JSON configs and map files,
//! runs one library operation, writes its outputs and prints a single-line
//! JSON summary on stdout.
//!
//! Exit status is 0 on success, 1 on usage errors and 2 when inputs cannot
//! be read or are rejected by the library.

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use svbrdf_core::io::MapEncoding;
use svbrdf_core::Vec3;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "svbrdf", version, about = "SVBRDF rendering, fitting and refinement tools")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    /// Seed for every random choice a subcommand makes.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render linear radiance of a material.
    Render(RenderArgs),
    /// Render a material under seeded novel point lights.
    Relight(RelightArgs),
    /// Fit maps to an observation by projected gradient descent.
    Fit(FitArgs),
    /// Per-pixel roughness grid search with known albedo and normals.
    #[command(name = "gridsearch-rough")]
    GridsearchRough(GridSearchArgs),
    /// Refine one map with a dense CRF preset.
    #[command(name = "dcrf-refine")]
    DcrfRefine(DcrfArgs),
    /// Lambertian photometric stereo with trimming.
    Ps(PsArgs),
    /// Cut, transform and rescale training patches.
    Augment(AugmentArgs),
    /// Compare analytic gradients with central differences.
    Gradcheck(GradcheckArgs),
    /// Evaluate the supervision losses between two materials.
    #[command(name = "loss-eval")]
    LossEval(LossEvalArgs),
}

#[derive(Debug, Args)]
pub struct SceneArg {
    /// Scene JSON. Defaults to the collocated scene at the input resolution.
    #[arg(long)]
    pub scene: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub scene: SceneArg,
    #[arg(long)]
    pub maps: PathBuf,
    /// Linear radiance PFM.
    #[arg(long)]
    pub out: PathBuf,
    /// Tonemapped 8-bit PNG preview.
    #[arg(long)]
    pub preview: Option<PathBuf>,
    /// Override the light position, `x,y,z`.
    #[arg(long, value_parser = parse_vec3)]
    pub light: Option<Vec3>,
    /// Place the viewer at infinity along +z instead of at the camera.
    #[arg(long)]
    pub orthographic: bool,
}

#[derive(Debug, Args)]
pub struct RelightArgs {
    #[command(flatten)]
    pub scene: SceneArg,
    #[arg(long)]
    pub maps: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub count: usize,
    /// Light distance from the surface origin. Defaults to the scene light's.
    #[arg(long)]
    pub radius: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub scene: SceneArg,
    /// Observed linear radiance PFM.
    #[arg(long)]
    pub image: PathBuf,
    /// Initial maps. Without it the fit starts from flat normals, albedo
    /// read off the image and grid-searched roughness.
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// F0 used when no initial maps are given.
    #[arg(long, default_value_t = svbrdf_core::brdf::F0_DIELECTRIC_DEFAULT)]
    pub f0: f64,
    /// Output manifest; the maps are written next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_parser = parse_encoding, default_value = "linear-float")]
    pub encoding: MapEncoding,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
    #[arg(long)]
    pub step_albedo: Option<f64>,
    #[arg(long)]
    pub step_normal: Option<f64>,
    #[arg(long)]
    pub step_roughness: Option<f64>,
    /// Extra observation as `x,y,z=image.pfm`. Repeatable.
    #[arg(long = "novel", value_parser = parse_novel)]
    pub novel: Vec<(Vec3, PathBuf)>,
    /// Write the per-iteration loss trace as JSON.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridSearchArgs {
    #[command(flatten)]
    pub scene: SceneArg,
    #[arg(long)]
    pub image: PathBuf,
    /// Maps supplying albedo, normals and F0.
    #[arg(long)]
    pub maps: PathBuf,
    /// Roughness PFM.
    #[arg(long)]
    pub out: PathBuf,
    /// Grid search JSON config; the flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub shrink: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DcrfArgs {
    /// `diffuse`, `normal`, `roughness` or a preset JSON file.
    #[arg(long)]
    pub preset: String,
    /// Predicted maps.
    #[arg(long)]
    pub maps: PathBuf,
    /// Input radiance. Required by the diffuse and roughness presets.
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Refined diffuse albedo PFM guiding the normal and roughness presets.
    /// Defaults to the predicted albedo.
    #[arg(long)]
    pub diffuse: Option<PathBuf>,
    /// Grid-search roughness PFM for the roughness preset.
    #[arg(long)]
    pub grid_roughness: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Report the energy before and after solving.
    #[arg(long)]
    pub energy: bool,
}

#[derive(Debug, Args)]
pub struct PsArgs {
    /// JSON array of `[x, y, z]` directions toward each light.
    #[arg(long)]
    pub lights: PathBuf,
    /// One PFM per light, in the same order.
    #[arg(long, num_args = 1.., required = true)]
    pub images: Vec<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub trim_high: usize,
    #[arg(long, default_value_t = 5)]
    pub trim_low: usize,
    /// Normal map PFM.
    #[arg(long)]
    pub out_normal: PathBuf,
    #[arg(long)]
    pub out_albedo: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub maps: PathBuf,
    /// Plan JSON. Its seed is replaced by `--seed`.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Materialize only the first N descriptors.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long, value_parser = parse_encoding, default_value = "linear-float")]
    pub encoding: MapEncoding,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub scene: SceneArg,
    #[arg(long)]
    pub maps: PathBuf,
    /// Number of pixels drawn with replacement.
    #[arg(long, default_value_t = 1000)]
    pub pixels: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct LossEvalArgs {
    #[command(flatten)]
    pub scene: SceneArg,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// Loss weight JSON.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Normal bin table JSON (`boundaries_deg`, `probabilities`).
    #[arg(long)]
    pub bins: Option<PathBuf>,
    /// Number of seeded novel lights added to the reconstruction term.
    #[arg(long, default_value_t = 0)]
    pub novel_lights: usize,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Classifier probabilities, comma separated. Needs `--label`.
    #[arg(long, value_delimiter = ',', requires = "label")]
    pub class_probs: Option<Vec<f64>>,
    #[arg(long, requires = "class_probs")]
    pub label: Option<usize>,
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [x, y, z] if parts.iter().all(|v| v.is_finite()) => Ok(Vec3::new(x, y, z)),
        _ => Err("expected three finite numbers x,y,z".into()),
    }
}

fn parse_novel(s: &str) -> Result<(Vec3, PathBuf), String> {
    let (light, path) = s.split_once('=').ok_or("expected x,y,z=path")?;
    Ok((parse_vec3(light)?, PathBuf::from(path)))
}

fn parse_encoding(s: &str) -> Result<MapEncoding, String> {
    match s {
        "linear-float" => Ok(MapEncoding::LinearFloat),
        "8-bit-encoded" => Ok(MapEncoding::EightBit),
        _ => Err("expected linear-float or 8-bit-encoded".into()),
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(svbrdf_core::Error),
}

impl From<svbrdf_core::Error> for CliError {
    fn from(e: svbrdf_core::Error) -> Self {
        CliError::Data(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.into())
    }
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match commands::dispatch(&cli) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}
