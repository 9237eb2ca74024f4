//! Patch cropping plans, geometric variants and material scaling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::brdf::R_MIN;
use crate::error::{Error, Result};
use crate::grid::{ColorMap, Grid, NormalMap, ScalarMap, SvbrdfMaps};
use crate::par;
use crate::Vec3;

pub const ALBEDO_SCALE_RANGE: (f64, f64) = (0.8, 1.4);
pub const NORMAL_SCALE_RANGE: (f64, f64) = (0.8, 1.4);
pub const ROUGHNESS_SCALE_STD: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentPlan {
    pub crop_sizes: Vec<usize>,
    pub crop_counts: Vec<usize>,
    pub output_size: usize,
    pub seed: u64,
}

impl Default for AugmentPlan {
    fn default() -> Self {
        Self {
            crop_sizes: vec![512, 1024, 2048, 3072, 4096],
            crop_counts: vec![12, 8, 4, 2, 1],
            output_size: 256,
            seed: 0,
        }
    }
}

impl AugmentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.crop_sizes.len() != self.crop_counts.len() {
            return Err(Error::invalid("crop_sizes and crop_counts differ in length"));
        }
        if self.crop_sizes.contains(&0) || self.output_size == 0 {
            return Err(Error::invalid("crop and output sizes must be positive"));
        }
        Ok(())
    }

    /// `(sum of crop counts) * 10`.
    pub fn patch_count(&self) -> usize {
        self.crop_counts.iter().sum::<usize>() * GeometricVariant::ALL.len()
    }
}

/// Identity, two mirror flips, or a counter-clockwise rotation by
/// `45 * k` degrees for `k` in `1..=7`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GeometricVariant {
    Identity,
    FlipX,
    FlipY,
    Rotate { eighths: u8 },
}

impl GeometricVariant {
    pub const ALL: [GeometricVariant; 10] = [
        GeometricVariant::Identity,
        GeometricVariant::FlipX,
        GeometricVariant::FlipY,
        GeometricVariant::Rotate { eighths: 1 },
        GeometricVariant::Rotate { eighths: 2 },
        GeometricVariant::Rotate { eighths: 3 },
        GeometricVariant::Rotate { eighths: 4 },
        GeometricVariant::Rotate { eighths: 5 },
        GeometricVariant::Rotate { eighths: 6 },
        GeometricVariant::Rotate { eighths: 7 },
    ];

    fn angle(self) -> f64 {
        match self {
            GeometricVariant::Rotate { eighths } => eighths as f64 * std::f64::consts::FRAC_PI_4,
            _ => 0.0,
        }
    }

    /// Side of the largest axis-aligned square inside a rotated square of
    /// side `size`.
    pub fn inscribed_side(self, size: f64) -> f64 {
        let a = self.angle();
        size / (a.cos().abs() + a.sin().abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropRect {
    pub x: usize,
    pub y: usize,
    pub size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchDescriptor {
    pub crop: CropRect,
    pub variant: GeometricVariant,
}

/// Crop positions drawn uniformly inside the source, each crop expanded into
/// the ten geometric variants.
pub fn patch_plan(plan: &AugmentPlan, source_width: usize, source_height: usize) -> Result<Vec<PatchDescriptor>> {
    plan.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut out = Vec::with_capacity(plan.patch_count());
    for (&size, &count) in plan.crop_sizes.iter().zip(&plan.crop_counts) {
        if count == 0 {
            continue;
        }
        if size > source_width || size > source_height {
            return Err(Error::invalid(format!(
                "crop of {size} does not fit a {source_width}x{source_height} source"
            )));
        }
        for _ in 0..count {
            let crop = CropRect {
                x: rng.random_range(0..=source_width - size),
                y: rng.random_range(0..=source_height - size),
                size,
            };
            out.extend(GeometricVariant::ALL.iter().map(|&variant| PatchDescriptor { crop, variant }));
        }
    }
    Ok(out)
}

fn bilinear<T>(grid: &Grid<T>, row: f64, col: f64) -> T
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let (h, w) = grid.dims();
    let r = row.clamp(0.0, (h - 1) as f64);
    let c = col.clamp(0.0, (w - 1) as f64);
    let (r0, c0) = (r.floor() as usize, c.floor() as usize);
    let (r1, c1) = ((r0 + 1).min(h - 1), (c0 + 1).min(w - 1));
    let (fr, fc) = (r - r0 as f64, c - c0 as f64);
    let top = grid[(r0, c0)] * (1.0 - fc) + grid[(r0, c1)] * fc;
    let bottom = grid[(r1, c0)] * (1.0 - fc) + grid[(r1, c1)] * fc;
    top * (1.0 - fr) + bottom * fr
}

/// Resamples one patch at `output_size`. Output pixel centers are mapped
/// through the variant's flip or rotation into the crop, and sampled
/// bilinearly. Normal tangent components follow the same transform.
pub fn materialize_patch(maps: &SvbrdfMaps, desc: &PatchDescriptor, output_size: usize) -> Result<SvbrdfMaps> {
    let (h, w) = maps.dims();
    let crop = desc.crop;
    if crop.x + crop.size > w || crop.y + crop.size > h {
        return Err(Error::invalid("crop lies outside the source maps"));
    }
    if output_size == 0 {
        return Err(Error::invalid("output size must be positive"));
    }
    let side = desc.variant.inscribed_side(crop.size as f64);
    let (sin, cos) = desc.variant.angle().sin_cos();
    let cx = crop.x as f64 + crop.size as f64 / 2.0;
    let cy = crop.y as f64 + crop.size as f64 / 2.0;
    let n = output_size;
    let samples = par::map_indices(n * n, |i| {
        let (r, c) = (i / n, i % n);
        // Output offset from the patch center, x right and y up.
        let x = ((c as f64 + 0.5) / n as f64 - 0.5) * side;
        let y = -((r as f64 + 0.5) / n as f64 - 0.5) * side;
        let (sx, sy) = match desc.variant {
            GeometricVariant::Identity => (x, y),
            GeometricVariant::FlipX => (-x, y),
            GeometricVariant::FlipY => (x, -y),
            GeometricVariant::Rotate { .. } => (cos * x + sin * y, -sin * x + cos * y),
        };
        let col = cx + sx - 0.5;
        let row = cy - sy - 0.5;
        let albedo = bilinear(&maps.albedo, row, col);
        let rough = bilinear(&maps.roughness, row, col);
        let src_n = bilinear(&maps.normal, row, col);
        let tn = match desc.variant {
            GeometricVariant::Identity => src_n,
            GeometricVariant::FlipX => Vec3::new(-src_n.x, src_n.y, src_n.z),
            GeometricVariant::FlipY => Vec3::new(src_n.x, -src_n.y, src_n.z),
            GeometricVariant::Rotate { .. } => Vec3::new(
                cos * src_n.x - sin * src_n.y,
                sin * src_n.x + cos * src_n.y,
                src_n.z,
            ),
        };
        let normal = if tn.norm() > 0.0 { tn.normalize() } else { Vec3::z() };
        (albedo, normal, rough.clamp(R_MIN, 1.0))
    });
    Ok(SvbrdfMaps {
        albedo: Grid::from_vec(n, n, samples.iter().map(|s| s.0).collect())?,
        normal: Grid::from_vec(n, n, samples.iter().map(|s| s.1).collect())?,
        roughness: Grid::from_vec(n, n, samples.iter().map(|s| s.2).collect())?,
        f0: maps.f0,
    })
}

pub fn draw_albedo_scale<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Uniform::new_inclusive(ALBEDO_SCALE_RANGE.0, ALBEDO_SCALE_RANGE.1)
        .expect("valid range")
        .sample(rng)
}

pub fn draw_normal_scale<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Uniform::new_inclusive(NORMAL_SCALE_RANGE.0, NORMAL_SCALE_RANGE.1)
        .expect("valid range")
        .sample(rng)
}

pub fn draw_roughness_multiplier<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Normal::new(1.0, ROUGHNESS_SCALE_STD).expect("valid std").sample(rng)
}

/// All channels times `s`, clamped at zero.
pub fn apply_albedo_scale(albedo: &ColorMap, s: f64) -> ColorMap {
    albedo.map(|a| (a * s).map(|v| v.max(0.0)))
}

/// Tangent components times `s`, then renormalized.
pub fn apply_normal_scale(normal: &NormalMap, s: f64) -> NormalMap {
    normal.map(|n| Vec3::new(n.x * s, n.y * s, n.z).normalize())
}

/// Values times `s`, clamped to `[R_MIN, 1]`.
pub fn apply_roughness_scale(roughness: &ScalarMap, s: f64) -> ScalarMap {
    roughness.map(|r| (r * s).clamp(R_MIN, 1.0))
}

pub fn scale_albedo<R: Rng + ?Sized>(albedo: &ColorMap, rng: &mut R) -> ColorMap {
    apply_albedo_scale(albedo, draw_albedo_scale(rng))
}

pub fn scale_normal<R: Rng + ?Sized>(normal: &NormalMap, rng: &mut R) -> NormalMap {
    apply_normal_scale(normal, draw_normal_scale(rng))
}

pub fn scale_roughness<R: Rng + ?Sized>(roughness: &ScalarMap, rng: &mut R) -> ScalarMap {
    apply_roughness_scale(roughness, draw_roughness_multiplier(rng))
}

/// Scale draws applied to one patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchScales {
    pub albedo: f64,
    pub normal: f64,
    pub roughness: f64,
}

/// Materializes descriptor `index` of a plan and applies independent scale
/// draws to its three maps. The generator for each index is seeded from the
/// plan seed and the index alone.
pub fn augment_patch(
    maps: &SvbrdfMaps,
    plan: &AugmentPlan,
    desc: &PatchDescriptor,
    index: usize,
) -> Result<(SvbrdfMaps, PatchScales)> {
    let patch = materialize_patch(maps, desc, plan.output_size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    rng.set_stream(index as u64 + 1);
    let scales = PatchScales {
        albedo: draw_albedo_scale(&mut rng),
        normal: draw_normal_scale(&mut rng),
        roughness: draw_roughness_multiplier(&mut rng),
    };
    Ok((
        SvbrdfMaps {
            albedo: apply_albedo_scale(&patch.albedo, scales.albedo),
            normal: apply_normal_scale(&patch.normal, scales.normal),
            roughness: apply_roughness_scale(&patch.roughness, scales.roughness),
            f0: patch.f0,
        },
        scales,
    ))
}
