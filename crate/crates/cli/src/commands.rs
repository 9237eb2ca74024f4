use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use svbrdf_core::augment::{augment_patch, patch_plan, AugmentPlan};
use svbrdf_core::dcrf::{dcrf_energy, dcrf_solve_traced, DcrfPreset, RefineTarget};
use svbrdf_core::diff::finite_diff_check;
use svbrdf_core::estimators::{
    fit_svbrdf_gd, initial_maps_from_observation, roughness_grid_search_detailed, FitConfig, GridSearchConfig,
    LitObservation,
};
use svbrdf_core::io::png8::encode_preview_png;
use svbrdf_core::io::{
    load_maps, read_radiance, save_maps, write_pfm_file, write_png_file, write_radiance, MapFileSet, PfmImage,
};
use svbrdf_core::losses::{total_loss, total_loss_cls, LossWeights, NormalBinTable};
use svbrdf_core::photometric::{lambertian_ps, PsObservationSet};
use svbrdf_core::scene::{novel_light_from, render_image};
use svbrdf_core::{Grid, RadianceImage, SceneConfig, Vec3};

use crate::*;

type Outcome = Result<Value, CliError>;

pub fn dispatch(cli: &Cli) -> Outcome {
    let seed = cli.seed;
    match &cli.command {
        Command::Render(a) => render(a),
        Command::Relight(a) => relight(a, seed),
        Command::Fit(a) => fit(a),
        Command::GridsearchRough(a) => gridsearch(a),
        Command::DcrfRefine(a) => dcrf(a),
        Command::Ps(a) => ps(a),
        Command::Augment(a) => augment(a, seed),
        Command::Gradcheck(a) => gradcheck(a, seed),
        Command::LossEval(a) => loss_eval(a, seed),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// The scene file if given, else the collocated default at `dims`.
fn scene_for(arg: &SceneArg, dims: (usize, usize)) -> Result<SceneConfig, CliError> {
    let config = match &arg.scene {
        Some(p) => SceneConfig::from_json(&std::fs::read_to_string(p)?)?,
        None => SceneConfig::collocated(dims.0, dims.1),
    };
    config.validate()?;
    if config.dims() != dims {
        return Err(svbrdf_core::Error::DimensionMismatch {
            expected: config.dims(),
            actual: dims,
        }
        .into());
    }
    Ok(config)
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn mean_rgb(image: &RadianceImage) -> [f64; 3] {
    let n = image.len().max(1) as f64;
    let s = image.iter().fold(Vec3::zeros(), |acc, p| acc + p) / n;
    [s.x, s.y, s.z]
}

fn render(a: &RenderArgs) -> Outcome {
    let maps = load_maps(&a.maps)?;
    let mut config = scene_for(&a.scene, maps.dims())?;
    if let Some(l) = a.light {
        config = config.with_light(l);
        config.validate()?;
    }
    let image = render_image(&maps, &config, !a.orthographic)?;
    write_radiance(&a.out, &image)?;
    if let Some(p) = &a.preview {
        write_png_file(p, &encode_preview_png(&image))?;
    }
    let max = image.iter().flat_map(|p| p.iter().copied()).fold(0.0f64, f64::max);
    Ok(json!({
        "command": "render",
        "out": path_str(&a.out),
        "width": image.width(),
        "height": image.height(),
        "mean_radiance": mean_rgb(&image),
        "max_radiance": max,
    }))
}

fn relight(a: &RelightArgs, seed: u64) -> Outcome {
    let maps = load_maps(&a.maps)?;
    let config = scene_for(&a.scene, maps.dims())?;
    let radius = a.radius.unwrap_or_else(|| config.light().norm());
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(CliError::Usage("radius must be positive".into()));
    }
    std::fs::create_dir_all(&a.out_dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outputs = Vec::with_capacity(a.count);
    for k in 0..a.count {
        let light = novel_light_from(&mut rng, radius);
        let image = render_image(&maps, &config.clone().with_light(light), true)?;
        let path = a.out_dir.join(format!("relight_{k:03}.pfm"));
        write_radiance(&path, &image)?;
        outputs.push(json!({ "path": path_str(&path), "light": [light.x, light.y, light.z] }));
    }
    Ok(json!({ "command": "relight", "seed": seed, "radius": radius, "images": outputs }))
}

fn fit(a: &FitArgs) -> Outcome {
    let observed = read_radiance(&a.image)?;
    let config = scene_for(&a.scene, observed.dims())?;
    let init = match &a.init {
        Some(p) => load_maps(p)?,
        None => initial_maps_from_observation(&observed, &config, a.f0, &GridSearchConfig::default())?,
    };
    let mut fit = FitConfig {
        max_iters: a.max_iters,
        loss_tolerance: a.tolerance,
        ..FitConfig::default()
    };
    if let Some(s) = a.step_albedo {
        fit.steps.albedo = s;
    }
    if let Some(s) = a.step_normal {
        fit.steps.normal = s;
    }
    if let Some(s) = a.step_roughness {
        fit.steps.roughness = s;
    }
    for (light, path) in &a.novel {
        fit.novel_lights.push(LitObservation {
            light: *light,
            image: read_radiance(path)?,
        });
    }
    let out = fit_svbrdf_gd(&observed, &init, &config, &fit)?;
    save_maps(&a.out, &out.maps, a.encoding)?;
    if let Some(p) = &a.trace {
        std::fs::write(p, serde_json::to_string(&out.trace)? + "\n")?;
    }
    Ok(json!({
        "command": "fit",
        "out": path_str(&a.out),
        "iterations": out.trace.len() - 1,
        "initial_loss": out.trace[0],
        "final_loss": out.trace.last(),
    }))
}

fn gridsearch(a: &GridSearchArgs) -> Outcome {
    let observed = read_radiance(&a.image)?;
    let maps = load_maps(&a.maps)?;
    let config = scene_for(&a.scene, observed.dims())?;
    let mut gs: GridSearchConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => GridSearchConfig::default(),
    };
    if let Some(v) = a.levels {
        gs.levels = v;
    }
    if let Some(v) = a.samples {
        gs.coarse_samples = v;
    }
    if let Some(v) = a.shrink {
        gs.shrink = v;
    }
    gs.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let out = roughness_grid_search_detailed(&observed, &maps.albedo, &maps.normal, maps.f0, &config, &gs)?;
    write_pfm_file(&a.out, &PfmImage::from_scalar(&out.roughness))?;
    let mean = |g: &Grid<f64>| g.iter().sum::<f64>() / g.len().max(1) as f64;
    Ok(json!({
        "command": "gridsearch-rough",
        "out": path_str(&a.out),
        "finest_spacing": gs.finest_spacing(),
        "mean_roughness": mean(&out.roughness),
        "mean_objective_per_level": out.level_objectives.iter().map(mean).collect::<Vec<_>>(),
    }))
}

fn load_preset(spec: &str) -> Result<DcrfPreset, CliError> {
    if let Some(p) = DcrfPreset::named(spec) {
        return Ok(p);
    }
    let path = PathBuf::from(spec);
    if !path.exists() {
        return Err(CliError::Usage(format!(
            "preset {spec:?} is neither diffuse, normal, roughness nor an existing file"
        )));
    }
    Ok(DcrfPreset::from_json(&std::fs::read_to_string(path)?)?)
}

fn require<'a>(p: &'a Option<PathBuf>, flag: &str, target: &str) -> Result<&'a PathBuf, CliError> {
    p.as_ref()
        .ok_or_else(|| CliError::Usage(format!("--{flag} is required for the {target} preset")))
}

fn dcrf(a: &DcrfArgs) -> Outcome {
    let mut preset = load_preset(&a.preset)?;
    if let Some(n) = a.iterations {
        preset.iterations = n;
    }
    preset.validate()?;
    let maps = load_maps(&a.maps)?;
    let diffuse = match &a.diffuse {
        Some(p) => read_radiance(p)?,
        None => maps.albedo.clone(),
    };
    let problem = match preset.target {
        RefineTarget::Diffuse => {
            let image = read_radiance(require(&a.image, "image", "diffuse")?)?;
            preset.diffuse_problem(&maps.albedo, &image)?
        }
        RefineTarget::Normal => preset.normal_problem(&maps.normal, &diffuse)?,
        RefineTarget::Roughness => {
            let image = read_radiance(require(&a.image, "image", "roughness")?)?;
            let grid = svbrdf_core::io::read_pfm_file(require(&a.grid_roughness, "grid-roughness", "roughness")?)?
                .to_scalar()?;
            preset.roughness_problem(&maps.roughness, &grid, &diffuse, &image)?
        }
    };
    let traced = dcrf_solve_traced(&problem, false)?;
    let image = match traced.field.channels {
        1 => PfmImage::from_scalar(&traced.field.to_scalar()?),
        _ if problem.renormalize => PfmImage::from_color(&traced.field.to_normals()?),
        _ => PfmImage::from_color(&traced.field.to_color()?),
    };
    write_pfm_file(&a.out, &image)?;
    let mut summary = json!({
        "command": "dcrf-refine",
        "preset": preset.name,
        "out": path_str(&a.out),
        "sweeps": traced.sweeps,
        "converged": traced.converged,
        "max_update": traced.max_update,
    });
    if a.energy {
        let start = dcrf_energy(&problem.unary_solution(), &problem)?;
        let end = dcrf_energy(&traced.field, &problem)?;
        summary["energy"] = json!({ "unary_solution": start, "solution": end });
    }
    Ok(summary)
}

fn ps(a: &PsArgs) -> Outcome {
    let dirs: Vec<[f64; 3]> = read_json(&a.lights)?;
    if dirs.len() != a.images.len() {
        return Err(CliError::Usage(format!(
            "{} light directions but {} images",
            dirs.len(),
            a.images.len()
        )));
    }
    let images = a.images.iter().map(read_radiance).collect::<Result<Vec<_>, _>>()?;
    let set = PsObservationSet {
        images,
        light_dirs: dirs.iter().map(|d| Vec3::new(d[0], d[1], d[2]).normalize()).collect(),
        trim_high: a.trim_high,
        trim_low: a.trim_low,
    };
    let out = lambertian_ps(&set)?;
    write_pfm_file(&a.out_normal, &PfmImage::from_color(&out.normal))?;
    if let Some(p) = &a.out_albedo {
        write_pfm_file(p, &PfmImage::from_color(&out.albedo))?;
    }
    Ok(json!({
        "command": "ps",
        "lights": set.light_dirs.len(),
        "kept_per_pixel": set.light_dirs.len() - a.trim_high - a.trim_low,
        "out_normal": path_str(&a.out_normal),
        "degenerate_pixels": out.degenerate.len(),
        "mean_albedo": mean_rgb(&out.albedo),
    }))
}

fn augment(a: &AugmentArgs, seed: u64) -> Outcome {
    let maps = load_maps(&a.maps)?;
    let mut plan: AugmentPlan = match &a.plan {
        Some(p) => read_json(p)?,
        None => AugmentPlan::default(),
    };
    plan.seed = seed;
    let (h, w) = maps.dims();
    let descriptors = patch_plan(&plan, w, h)?;
    std::fs::create_dir_all(&a.out_dir)?;
    std::fs::write(
        a.out_dir.join("descriptors.json"),
        serde_json::to_string_pretty(&descriptors)? + "\n",
    )?;
    let count = a.limit.unwrap_or(descriptors.len()).min(descriptors.len());
    let mut scales = Vec::with_capacity(count);
    for (index, desc) in descriptors.iter().enumerate().take(count) {
        let (patch, s) = augment_patch(&maps, &plan, desc, index)?;
        MapFileSet::save(&a.out_dir, &format!("patch_{index:04}"), &patch, a.encoding)?
            .write(a.out_dir.join(format!("patch_{index:04}.json")))?;
        scales.push(s);
    }
    std::fs::write(a.out_dir.join("scales.json"), serde_json::to_string_pretty(&scales)? + "\n")?;
    Ok(json!({
        "command": "augment",
        "seed": seed,
        "descriptors": descriptors.len(),
        "materialized": count,
        "output_size": plan.output_size,
    }))
}

fn gradcheck(a: &GradcheckArgs, seed: u64) -> Outcome {
    let maps = load_maps(&a.maps)?;
    let config = scene_for(&a.scene, maps.dims())?;
    let (h, w) = maps.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels: Vec<(usize, usize)> = (0..a.pixels)
        .map(|_| (rng.random_range(0..h), rng.random_range(0..w)))
        .collect();
    let report = finite_diff_check(&maps, &config, a.step, &pixels)?;
    Ok(json!({
        "command": "gradcheck",
        "seed": seed,
        "passed": report.passed(),
        "step": report.step,
        "checked_pixels": report.checked_pixels,
        "skipped_pixels": report.skipped.len(),
        "tolerance": report.tolerance,
        "albedo": report.albedo,
        "normal": report.normal,
        "roughness": report.roughness,
    }))
}

fn loss_eval(a: &LossEvalArgs, seed: u64) -> Outcome {
    let pred = load_maps(&a.pred)?;
    let gt = load_maps(&a.gt)?;
    let config = scene_for(&a.scene, gt.dims())?;
    let weights: LossWeights = match &a.weights {
        Some(p) => read_json(p)?,
        None => LossWeights::default(),
    };
    let table = match &a.bins {
        Some(p) => {
            let v: Value = read_json(p)?;
            let field = |k: &str| -> Result<Vec<f64>, CliError> {
                Ok(serde_json::from_value(v.get(k).cloned().unwrap_or(Value::Null))?)
            };
            NormalBinTable::from_probabilities(field("boundaries_deg")?, field("probabilities")?)?
        }
        None => NormalBinTable::default(),
    };
    let radius = a.radius.unwrap_or_else(|| config.light().norm());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lights: Vec<Vec3> = (0..a.novel_lights).map(|_| novel_light_from(&mut rng, radius)).collect();
    let breakdown = match (&a.class_probs, a.label) {
        (Some(p), Some(label)) => total_loss_cls(&pred, &gt, &weights, &table, &config, &lights, p, label, None)?,
        _ => total_loss(&pred, &gt, &weights, &table, &config, &lights)?,
    };
    Ok(json!({ "command": "loss-eval", "seed": seed, "novel_lights": lights.len(), "losses": breakdown }))
}
