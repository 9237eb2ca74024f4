use serde::{Deserialize, Serialize};

use crate::brdf::{BrdfParams, R_MIN};
use crate::error::{Error, Result};
use crate::grid::{ColorMap, Grid, NormalMap, RadianceImage, ScalarMap};
use crate::par;
use crate::scene::{shade, PixelGeometry, SceneConfig};

/// Coarse-to-fine schedule. Level 0 samples `range` uniformly with
/// `coarse_samples` points (ends included); each later level samples a
/// bracket `shrink` times as wide as the previous one, centered on the best
/// value so far and shifted to stay inside `range`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSearchConfig {
    pub levels: usize,
    pub coarse_samples: usize,
    pub range: [f64; 2],
    pub shrink: f64,
}

impl Default for GridSearchConfig {
    fn default() -> Self {
        Self {
            levels: 3,
            coarse_samples: 16,
            range: [R_MIN, 1.0],
            shrink: 0.25,
        }
    }
}

impl GridSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(Error::invalid("grid search needs at least one level"));
        }
        if self.coarse_samples < 3 {
            return Err(Error::invalid("grid search needs at least 3 samples per level"));
        }
        let [lo, hi] = self.range;
        if !(lo >= R_MIN - 1e-12 && hi <= 1.0 + 1e-12 && lo < hi) {
            return Err(Error::invalid(format!("grid search range [{lo}, {hi}] outside [r_min, 1]")));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::invalid("shrink must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Bracket width at `level`.
    pub fn width_at(&self, level: usize) -> f64 {
        (self.range[1] - self.range[0]) * self.shrink.powi(level as i32)
    }

    /// Sample spacing of the last level.
    pub fn finest_spacing(&self) -> f64 {
        self.width_at(self.levels - 1) / (self.coarse_samples - 1) as f64
    }
}

/// Grid-search result with the best objective reached after every level.
#[derive(Debug, Clone)]
pub struct GridSearchOutcome {
    pub roughness: ScalarMap,
    pub level_objectives: Vec<ScalarMap>,
}

/// Per-pixel roughness minimizing the squared RGB residual between the
/// rendered and the observed linear radiance.
pub fn roughness_grid_search(
    observed: &RadianceImage,
    albedo: &ColorMap,
    normal: &NormalMap,
    f0: f64,
    config: &SceneConfig,
    gs: &GridSearchConfig,
) -> Result<ScalarMap> {
    Ok(roughness_grid_search_detailed(observed, albedo, normal, f0, config, gs)?.roughness)
}

pub fn roughness_grid_search_detailed(
    observed: &RadianceImage,
    albedo: &ColorMap,
    normal: &NormalMap,
    f0: f64,
    config: &SceneConfig,
    gs: &GridSearchConfig,
) -> Result<GridSearchOutcome> {
    gs.validate()?;
    let dims = config.dims();
    observed.ensure_dims(dims)?;
    albedo.ensure_dims(dims)?;
    normal.ensure_dims(dims)?;
    let (h, w) = dims;
    let per_pixel = par::map_indices(h * w, |i| {
        let geom = PixelGeometry::new(config, i, true);
        let target = observed.as_slice()[i];
        let mut params = BrdfParams {
            diffuse: albedo.as_slice()[i],
            normal: normal.as_slice()[i],
            roughness: gs.range[1],
            f0,
        };
        let mut objective = |r: f64| {
            params.roughness = r;
            (shade(&params, &geom) - target).norm_squared()
        };
        search_pixel(&mut objective, gs)
    });
    let roughness = Grid::from_vec(h, w, per_pixel.iter().map(|p| p.0).collect())?;
    let level_objectives = (0..gs.levels)
        .map(|l| Grid::from_vec(h, w, per_pixel.iter().map(|p| p.1[l]).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok(GridSearchOutcome {
        roughness,
        level_objectives,
    })
}

fn search_pixel(objective: &mut impl FnMut(f64) -> f64, gs: &GridSearchConfig) -> (f64, Vec<f64>) {
    let [lo, hi] = gs.range;
    let n = gs.coarse_samples;
    let mut best_r = hi;
    let mut best = f64::INFINITY;
    let mut trace = Vec::with_capacity(gs.levels);
    for level in 0..gs.levels {
        let width = gs.width_at(level);
        let start = if level == 0 {
            lo
        } else {
            (best_r - 0.5 * width).clamp(lo, hi - width)
        };
        for s in 0..n {
            let r = if s + 1 == n {
                start + width
            } else {
                start + width * s as f64 / (n - 1) as f64
            };
            let r = r.clamp(lo, hi);
            let e = objective(r);
            if e < best || (e == best && r > best_r) {
                best = e;
                best_r = r;
            }
        }
        trace.push(best);
    }
    (best_r, trace)
}
