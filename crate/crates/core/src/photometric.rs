//! Lambertian photometric stereo with per-pixel brightest/darkest trimming.

use nalgebra::{Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{ColorMap, Grid, NormalMap, RadianceImage};
use crate::par;
use crate::{Rgb, Vec3};

/// Magnitude below which a pixel's solution is treated as degenerate.
pub const DEGENERATE_G: f64 = 1e-9;
/// Smallest-to-largest eigenvalue ratio of `A^T A` below which the kept
/// lights are considered coplanar.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Images under directional lights. `light_dirs[k]` points from the surface
/// toward light `k`.
#[derive(Debug, Clone)]
pub struct PsObservationSet {
    pub images: Vec<RadianceImage>,
    pub light_dirs: Vec<Vec3>,
    pub trim_high: usize,
    pub trim_low: usize,
}

impl PsObservationSet {
    pub fn validate(&self) -> Result<()> {
        let l = self.images.len();
        if l != self.light_dirs.len() {
            return Err(Error::invalid(format!(
                "{} images but {} light directions",
                l,
                self.light_dirs.len()
            )));
        }
        if l < self.trim_high + self.trim_low + 3 {
            return Err(Error::invalid(format!(
                "{l} observations leave fewer than 3 after trimming {} + {}",
                self.trim_high, self.trim_low
            )));
        }
        let dims = self.images[0].dims();
        for img in &self.images {
            img.ensure_dims(dims)?;
        }
        for (k, d) in self.light_dirs.iter().enumerate() {
            if (d.norm() - 1.0).abs() > 1e-6 {
                return Err(Error::invalid(format!("light direction {k} is not unit length")));
            }
        }
        Ok(())
    }
}

/// Indices kept after dropping the `trim_high` largest and `trim_low`
/// smallest values. Among equal values the lower index is dropped first;
/// the brightest are dropped before the darkest. Returned ascending.
pub fn trim_observations(intensities: &[f64], trim_high: usize, trim_low: usize) -> Result<Vec<usize>> {
    let l = intensities.len();
    if l <= trim_high + trim_low {
        return Err(Error::invalid(format!(
            "cannot trim {trim_high} + {trim_low} of {l} observations"
        )));
    }
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| intensities[b].total_cmp(&intensities[a]).then(a.cmp(&b)));
    let mut dropped = vec![false; l];
    for &i in &order[..trim_high] {
        dropped[i] = true;
    }
    order.sort_by(|&a, &b| intensities[a].total_cmp(&intensities[b]).then(a.cmp(&b)));
    let mut removed = 0;
    for &i in &order {
        if removed == trim_low {
            break;
        }
        if !dropped[i] {
            dropped[i] = true;
            removed += 1;
        }
    }
    Ok((0..l).filter(|&i| !dropped[i]).collect())
}

#[derive(Debug, Clone)]
pub struct PsResult {
    pub normal: NormalMap,
    pub albedo: ColorMap,
    /// Pixels whose luma solution vanished; their normal is `+z`.
    pub degenerate: Vec<(usize, usize)>,
}

fn luma(c: &Rgb) -> f64 {
    (c.x + c.y + c.z) / 3.0
}

enum PixelSolve {
    Ok { normal: Vec3, albedo: Rgb, degenerate: bool },
    RankDeficient,
}

/// Per-pixel least squares `I_k ~ l_k . g` over the untrimmed observations.
/// The normal is `g / |g|` from the luma channel with z made non-negative;
/// the albedo of each channel is `|g_c|` solved on the same kept set.
pub fn lambertian_ps(obs: &PsObservationSet) -> Result<PsResult> {
    obs.validate()?;
    let (h, w) = obs.images[0].dims();
    let solved = par::map_indices(h * w, |i| {
        let values: Vec<Rgb> = obs.images.iter().map(|img| img.as_slice()[i]).collect();
        let lumas: Vec<f64> = values.iter().map(luma).collect();
        let keep = trim_observations(&lumas, obs.trim_high, obs.trim_low).expect("validated counts");
        let mut ata = Matrix3::zeros();
        for &k in &keep {
            let l = obs.light_dirs[k];
            ata += l * l.transpose();
        }
        let eig = SymmetricEigen::new(ata).eigenvalues;
        let (lo, hi) = (eig.min(), eig.max());
        if !(hi > 0.0) || lo / hi < RANK_TOLERANCE {
            return PixelSolve::RankDeficient;
        }
        let chol = ata.cholesky().expect("positive definite after rank check");
        let solve = |f: &dyn Fn(usize) -> f64| -> Vec3 {
            let mut atb = Vec3::zeros();
            for &k in &keep {
                atb += obs.light_dirs[k] * f(k);
            }
            chol.solve(&atb)
        };
        let g = solve(&|k| lumas[k]);
        let albedo = Rgb::from_fn(|c, _| solve(&|k| values[k][c]).norm());
        let len = g.norm();
        if len < DEGENERATE_G {
            return PixelSolve::Ok {
                normal: Vec3::z(),
                albedo,
                degenerate: true,
            };
        }
        let mut normal = g / len;
        if normal.z < 0.0 {
            normal.z = -normal.z;
        }
        PixelSolve::Ok {
            normal,
            albedo,
            degenerate: false,
        }
    });
    let mut normals = Vec::with_capacity(h * w);
    let mut albedos = Vec::with_capacity(h * w);
    let mut degenerate = Vec::new();
    for (i, s) in solved.into_iter().enumerate() {
        match s {
            PixelSolve::RankDeficient => {
                return Err(Error::RankDeficient {
                    row: i / w,
                    col: i % w,
                })
            }
            PixelSolve::Ok {
                normal,
                albedo,
                degenerate: d,
            } => {
                if d {
                    degenerate.push((i / w, i % w));
                }
                normals.push(normal);
                albedos.push(albedo);
            }
        }
    }
    Ok(PsResult {
        normal: Grid::from_vec(h, w, normals)?,
        albedo: Grid::from_vec(h, w, albedos)?,
        degenerate,
    })
}

/// `count` unit directions uniform in solid angle within `max_polar_deg`
/// of `+z`.
pub fn random_light_directions(count: usize, seed: u64, max_polar_deg: f64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z_min = max_polar_deg.to_radians().cos();
    (0..count)
        .map(|_| {
            let z = 1.0 - rng.random::<f64>() * (1.0 - z_min);
            let phi = std::f64::consts::TAU * rng.random::<f64>();
            let s = (1.0 - z * z).max(0.0).sqrt();
            Vec3::new(s * phi.cos(), s * phi.sin(), z)
        })
        .collect()
}

/// Lambertian images `albedo * max(n . l, 0)` under unit-intensity
/// directional lights.
pub fn render_directional_lambertian(albedo: &ColorMap, normal: &NormalMap, lights: &[Vec3]) -> Result<Vec<RadianceImage>> {
    normal.ensure_dims(albedo.dims())?;
    Ok(lights
        .iter()
        .map(|l| {
            let data: Vec<Rgb> = albedo
                .iter()
                .zip(normal.iter())
                .map(|(a, n)| a * n.dot(l).max(0.0))
                .collect();
            Grid::from_vec(albedo.height(), albedo.width(), data).expect("same dims")
        })
        .collect())
}

/// Angle between two unit vectors in degrees.
pub fn angular_error_deg(a: &Vec3, b: &Vec3) -> f64 {
    // atan2 form stays accurate for nearly parallel vectors.
    a.cross(b).norm().atan2(a.dot(b)).to_degrees()
}
