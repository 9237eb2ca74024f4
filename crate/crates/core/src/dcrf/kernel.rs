//! Per-pixel feature groups and Gaussian pairwise kernels.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ColorMap, RadianceImage};

/// Features a kernel can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// Pixel position, each axis normalized to `[0, 1]`.
    Position,
    /// Input image color divided by its channel sum.
    NormalizedColor,
    /// Predicted diffuse albedo.
    PredictedDiffuse,
    /// Forward differences of the refined diffuse albedo along x then y, per
    /// channel, measured per image width.
    DiffuseGradient,
    /// Refined diffuse albedo.
    RefinedDiffuse,
}

/// Flat storage of one feature group: `dim` values per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGroup {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl FeatureGroup {
    #[inline]
    pub fn at(&self, index: usize) -> &[f64] {
        &self.data[index * self.dim..(index + 1) * self.dim]
    }
}

/// Feature groups for every pixel of an image. Position is always present.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMaps {
    height: usize,
    width: usize,
    groups: BTreeMap<FeatureKind, FeatureGroup>,
}

fn color_group(map: &ColorMap) -> FeatureGroup {
    FeatureGroup {
        dim: 3,
        data: map.iter().flat_map(|c| [c.x, c.y, c.z]).collect(),
    }
}

impl FeatureMaps {
    pub fn new(height: usize, width: usize) -> Self {
        let sx = if width > 1 { 1.0 / (width - 1) as f64 } else { 0.0 };
        let sy = if height > 1 { 1.0 / (height - 1) as f64 } else { 0.0 };
        let mut data = Vec::with_capacity(2 * width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(c as f64 * sx);
                data.push(r as f64 * sy);
            }
        }
        let mut groups = BTreeMap::new();
        groups.insert(FeatureKind::Position, FeatureGroup { dim: 2, data });
        Self {
            height,
            width,
            groups,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn group(&self, kind: FeatureKind) -> Option<&FeatureGroup> {
        self.groups.get(&kind)
    }

    /// Inserts a raw group. `data.len()` must be `dim` times the pixel count.
    pub fn insert(&mut self, kind: FeatureKind, group: FeatureGroup) -> Result<()> {
        if group.data.len() != group.dim * self.height * self.width {
            return Err(Error::invalid(format!("feature group {kind:?} has the wrong length")));
        }
        self.groups.insert(kind, group);
        Ok(())
    }

    pub fn with_normalized_color(mut self, image: &RadianceImage) -> Result<Self> {
        image.ensure_dims(self.dims())?;
        let normalized = image.map(|p| {
            let s = p.x + p.y + p.z;
            if s > 0.0 {
                p / s
            } else {
                crate::Rgb::repeat(1.0 / 3.0)
            }
        });
        self.groups.insert(FeatureKind::NormalizedColor, color_group(&normalized));
        Ok(self)
    }

    pub fn with_predicted_diffuse(mut self, albedo: &ColorMap) -> Result<Self> {
        albedo.ensure_dims(self.dims())?;
        self.groups.insert(FeatureKind::PredictedDiffuse, color_group(albedo));
        Ok(self)
    }

    pub fn with_refined_diffuse(mut self, albedo: &ColorMap) -> Result<Self> {
        albedo.ensure_dims(self.dims())?;
        self.groups.insert(FeatureKind::RefinedDiffuse, color_group(albedo));
        Ok(self)
    }

    pub fn with_diffuse_gradient(mut self, albedo: &ColorMap) -> Result<Self> {
        albedo.ensure_dims(self.dims())?;
        let (h, w) = self.dims();
        let scale = w as f64;
        let mut data = Vec::with_capacity(6 * h * w);
        for r in 0..h {
            for c in 0..w {
                let here = albedo[(r, c)];
                let dx = if c + 1 < w { albedo[(r, c + 1)] - here } else { crate::Rgb::zeros() };
                let dy = if r + 1 < h { albedo[(r + 1, c)] - here } else { crate::Rgb::zeros() };
                data.extend(dx.iter().map(|v| v * scale));
                data.extend(dy.iter().map(|v| v * scale));
            }
        }
        self.groups
            .insert(FeatureKind::DiffuseGradient, FeatureGroup { dim: 6, data });
        Ok(self)
    }
}

/// One feature group entering a kernel and its standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelFeature {
    pub feature: FeatureKind,
    pub std: f64,
}

/// `beta * exp(-sum_g |f_i,g - f_j,g|^2 / (2 std_g^2))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub features: Vec<KernelFeature>,
    pub beta: f64,
}

impl KernelSpec {
    pub fn new(features: &[(FeatureKind, f64)], beta: f64) -> Self {
        Self {
            features: features
                .iter()
                .map(|&(feature, std)| KernelFeature { feature, std })
                .collect(),
            beta,
        }
    }

    pub fn stds(&self) -> Vec<f64> {
        self.features.iter().map(|f| f.std).collect()
    }

    pub fn validate(&self, maps: &FeatureMaps) -> Result<()> {
        if !(self.beta >= 0.0) {
            return Err(Error::invalid("kernel beta must be non-negative"));
        }
        for f in &self.features {
            if !(f.std > 0.0) {
                return Err(Error::invalid(format!("kernel std for {:?} must be positive", f.feature)));
            }
            if maps.group(f.feature).is_none() {
                return Err(Error::invalid(format!("feature {:?} was not provided", f.feature)));
            }
        }
        Ok(())
    }

    /// Unscaled kernel value between pixels `i` and `j`.
    pub fn kernel(&self, maps: &FeatureMaps, i: usize, j: usize) -> f64 {
        let mut exponent = 0.0;
        for f in &self.features {
            let g = maps.group(f.feature).expect("validated feature");
            let d2: f64 = g.at(i).iter().zip(g.at(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            exponent += d2 / (2.0 * f.std * f.std);
        }
        (-exponent).exp()
    }
}

/// Gaussian weight between two pixels' grouped features: `f_i[g]` is group
/// `g` of pixel `i`, scaled by `stds[g]`.
pub fn gaussian_kernel_weight(f_i: &[&[f64]], f_j: &[&[f64]], stds: &[f64]) -> f64 {
    debug_assert_eq!(f_i.len(), f_j.len());
    debug_assert_eq!(f_i.len(), stds.len());
    let exponent: f64 = f_i
        .iter()
        .zip(f_j)
        .zip(stds)
        .map(|((a, b), s)| {
            let d2: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
            d2 / (2.0 * s * s)
        })
        .sum();
    (-exponent).exp()
}
