use serde::{Deserialize, Serialize};

use super::gridsearch::{roughness_grid_search, GridSearchConfig};
use crate::brdf::R_MIN;
use crate::diff::shade_with_gradient;
use crate::error::{Error, Result};
use crate::grid::{ColorMap, Grid, RadianceImage, SvbrdfMaps};
use crate::par;
use crate::scene::{shade, tonemap, tonemap_derivative, PixelGeometry, SceneConfig};
use crate::{Rgb, Vec3};

/// Initial step per parameter class. Steps scale the gradient of each
/// pixel's own share of the loss (the loss gradient times the pixel count),
/// so they do not depend on resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepSizes {
    pub albedo: f64,
    pub normal: f64,
    pub roughness: f64,
}

impl Default for StepSizes {
    fn default() -> Self {
        Self {
            albedo: 2.0,
            normal: 0.5,
            roughness: 0.5,
        }
    }
}

/// An additional observation of the same material under another point light.
#[derive(Debug, Clone)]
pub struct LitObservation {
    pub light: Vec3,
    pub image: RadianceImage,
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub steps: StepSizes,
    pub max_iters: usize,
    /// Stop once the loss is at or below this value.
    pub loss_tolerance: f64,
    pub novel_lights: Vec<LitObservation>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            steps: StepSizes::default(),
            max_iters: 500,
            loss_tolerance: 1e-10,
            novel_lights: Vec::new(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let s = self.steps;
        if ![s.albedo, s.normal, s.roughness].iter().all(|v| *v > 0.0 && v.is_finite()) {
            return Err(Error::invalid("step sizes must be positive and finite"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be positive"));
        }
        if !(self.loss_tolerance >= 0.0) {
            return Err(Error::invalid("loss_tolerance must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub maps: SvbrdfMaps,
    /// Loss of the initial maps followed by the loss after every iteration.
    pub trace: Vec<f64>,
}

const MAX_STEP_SCALE: f64 = 64.0;
const MIN_STEP_SCALE: f64 = 1e-12;

struct Observation {
    geometry: Vec<PixelGeometry>,
    target: Vec<Rgb>,
}

fn pixel_loss(obs: &[Observation], i: usize, params: &crate::brdf::BrdfParams) -> f64 {
    obs.iter()
        .map(|o| {
            let r = shade(params, &o.geometry[i]);
            (0..3).map(|c| (tonemap(r[c]) - tonemap(o.target[i][c])).powi(2)).sum::<f64>()
        })
        .sum()
}

fn project_normal(candidate: Vec3, fallback: Vec3) -> Vec3 {
    let len = candidate.norm();
    if !(len > 0.0) || !len.is_finite() {
        return fallback;
    }
    let mut n = candidate / len;
    if n.z < 1e-3 {
        n.z = 1e-3;
        n = n.normalize();
    }
    n
}

/// Projected gradient descent on the tonemapped reconstruction loss.
///
/// The loss is separable over pixels, so every pixel carries its own step
/// scale: a proposal is kept only if it lowers that pixel's loss, and the
/// pixel's scale halves on rejection and grows on acceptance. The total loss
/// therefore never increases.
pub fn fit_svbrdf_gd(
    observed: &RadianceImage,
    init: &SvbrdfMaps,
    config: &SceneConfig,
    fit: &FitConfig,
) -> Result<FitOutcome> {
    fit.validate()?;
    init.validate()?;
    let dims = config.dims();
    observed.ensure_dims(dims)?;
    init.albedo.ensure_dims(dims)?;
    let (h, w) = dims;
    let n = h * w;

    let mut obs = vec![Observation {
        geometry: (0..n).map(|i| PixelGeometry::new(config, i, true)).collect(),
        target: observed.as_slice().to_vec(),
    }];
    for extra in &fit.novel_lights {
        extra.image.ensure_dims(dims)?;
        let cfg = config.clone().with_light(extra.light);
        cfg.validate()?;
        obs.push(Observation {
            geometry: (0..n).map(|i| PixelGeometry::new(&cfg, i, true)).collect(),
            target: extra.image.as_slice().to_vec(),
        });
    }
    let norm = 1.0 / (3.0 * n as f64 * obs.len() as f64);

    let mut maps = init.clone();
    let mut losses: Vec<f64> = (0..n).map(|i| pixel_loss(&obs, i, &maps.params_at(i))).collect();
    let mut total = losses.iter().sum::<f64>() * norm;
    if !total.is_finite() {
        return Err(Error::NonFiniteLoss(0));
    }
    let mut scales = vec![1.0f64; n];
    let mut trace = vec![total];
    let steps = fit.steps;
    let grad_scale = 2.0 / (3.0 * obs.len() as f64);

    for _ in 0..fit.max_iters {
        if total <= fit.loss_tolerance || scales.iter().all(|s| *s < MIN_STEP_SCALE) {
            break;
        }
        let updates = par::map_indices(n, |i| {
            let params = maps.params_at(i);
            let mut g_albedo = Rgb::zeros();
            let mut g_normal = Vec3::zeros();
            let mut g_rough = 0.0;
            for o in &obs {
                let pg = shade_with_gradient(&params, &o.geometry[i]);
                let mut v = Rgb::zeros();
                for c in 0..3 {
                    let x = pg.radiance[c];
                    v[c] = (tonemap(x) - tonemap(o.target[i][c])) * tonemap_derivative(x);
                }
                g_albedo += pg.d_albedo.transpose() * v;
                g_normal += pg.d_normal.transpose() * v;
                g_rough += pg.d_roughness.dot(&v);
            }
            let s = scales[i];
            let mut next = params;
            next.diffuse = (params.diffuse - g_albedo * (grad_scale * s * steps.albedo)).map(|a| a.max(0.0));
            next.normal = project_normal(params.normal - g_normal * (grad_scale * s * steps.normal), params.normal);
            next.roughness = (params.roughness - g_rough * grad_scale * s * steps.roughness).clamp(R_MIN, 1.0);
            let loss = pixel_loss(&obs, i, &next);
            if loss < losses[i] {
                Some((next, loss))
            } else {
                None
            }
        });
        for (i, u) in updates.into_iter().enumerate() {
            match u {
                Some((p, loss)) => {
                    maps.albedo.as_mut_slice()[i] = p.diffuse;
                    maps.normal.as_mut_slice()[i] = p.normal;
                    maps.roughness.as_mut_slice()[i] = p.roughness;
                    losses[i] = loss;
                    scales[i] = (scales[i] * 1.5).min(MAX_STEP_SCALE);
                }
                None => scales[i] *= 0.5,
            }
        }
        total = losses.iter().sum::<f64>() * norm;
        if !total.is_finite() {
            return Err(Error::NonFiniteLoss(trace.len()));
        }
        trace.push(total);
    }
    Ok(FitOutcome { maps, trace })
}

/// Albedo explaining `observed` with flat normals and no specular term:
/// observation divided by `intensity * max(n.l, 0) / dist^2 + ambient`.
pub fn albedo_from_observation(observed: &RadianceImage, config: &SceneConfig) -> Result<ColorMap> {
    observed.ensure_dims(config.dims())?;
    let (h, w) = config.dims();
    let data = (0..h * w)
        .map(|i| {
            let geom = PixelGeometry::new(config, i, true);
            let nl = geom.vectors.light.z.max(0.0);
            let shading = geom.irradiance * nl + geom.ambient;
            let o = observed.as_slice()[i];
            Rgb::from_fn(|c, _| if shading[c] > 0.0 { o[c].max(0.0) / shading[c] } else { 0.0 })
        })
        .collect();
    Grid::from_vec(h, w, data)
}

/// Flat normals, observation-derived albedo and grid-searched roughness.
pub fn initial_maps_from_observation(
    observed: &RadianceImage,
    config: &SceneConfig,
    f0: f64,
    gs: &GridSearchConfig,
) -> Result<SvbrdfMaps> {
    let (h, w) = config.dims();
    let albedo = albedo_from_observation(observed, config)?;
    let normal = Grid::filled(h, w, Vec3::z());
    let roughness = roughness_grid_search(observed, &albedo, &normal, f0, config, gs)?;
    Ok(SvbrdfMaps {
        albedo,
        normal,
        roughness,
        f0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::render_image;
    use crate::synthetic::smooth_random_maps;

    #[test]
    fn ground_truth_is_returned_unchanged() {
        let cfg = SceneConfig::collocated(8, 8);
        let gt = smooth_random_maps(1, 8, 8, 0.05);
        let img = render_image(&gt, &cfg, true).unwrap();
        let out = fit_svbrdf_gd(&img, &gt, &cfg, &FitConfig::default()).unwrap();
        assert_eq!(out.trace, vec![0.0]);
        assert_eq!(out.maps, gt);
    }

    #[test]
    fn trace_non_increasing_and_maps_valid() {
        let cfg = SceneConfig::collocated(8, 8);
        let gt = smooth_random_maps(2, 8, 8, 0.05);
        let img = render_image(&gt, &cfg, true).unwrap();
        let init = SvbrdfMaps::uniform(8, 8, Rgb::repeat(0.3), 0.6, 0.05);
        let fit = FitConfig {
            max_iters: 60,
            ..FitConfig::default()
        };
        let out = fit_svbrdf_gd(&img, &init, &cfg, &fit).unwrap();
        assert!(out.trace.windows(2).all(|p| p[1] <= p[0]));
        assert!(out.trace.last().unwrap() < &out.trace[0]);
        out.maps.validate().unwrap();
    }

    #[test]
    fn novel_lights_enter_the_objective() {
        let cfg = SceneConfig::collocated(6, 6);
        let gt = smooth_random_maps(4, 6, 6, 0.05);
        let img = render_image(&gt, &cfg, true).unwrap();
        let light = Vec3::new(1.0, 0.5, 2.0);
        let side = render_image(&gt, &cfg.clone().with_light(light), true).unwrap();
        let init = SvbrdfMaps::uniform(6, 6, Rgb::repeat(0.3), 0.6, 0.05);
        let fit = FitConfig {
            max_iters: 1,
            novel_lights: vec![LitObservation { light, image: side.clone() }],
            ..FitConfig::default()
        };
        let out = fit_svbrdf_gd(&img, &init, &cfg, &fit).unwrap();
        let expected = crate::losses::recon_loss(&init, &gt, &cfg, &[light]).unwrap();
        assert!((out.trace[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn albedo_from_flat_rough_surface() {
        let cfg = SceneConfig::collocated(5, 5);
        let maps = SvbrdfMaps::uniform(5, 5, Rgb::new(0.2, 0.5, 0.7), 1.0, 0.0);
        let img = render_image(&maps, &cfg, true).unwrap();
        let a = albedo_from_observation(&img, &cfg).unwrap();
        for v in a.iter() {
            // Only the residual specular of a fully rough f0 = 0 surface remains.
            assert!((v - Rgb::new(0.2, 0.5, 0.7)).amax() < 1e-4);
        }
    }

    #[test]
    fn bad_steps_rejected() {
        let cfg = SceneConfig::collocated(2, 2);
        let gt = SvbrdfMaps::uniform(2, 2, Rgb::repeat(0.5), 0.5, 0.05);
        let img = render_image(&gt, &cfg, true).unwrap();
        let mut fit = FitConfig::default();
        fit.steps.albedo = 0.0;
        assert!(fit_svbrdf_gd(&img, &gt, &cfg, &fit).is_err());
    }
}
