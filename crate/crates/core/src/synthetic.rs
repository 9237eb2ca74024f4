//! Procedural materials for tests, demos and round-trip experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{Grid, SvbrdfMaps};
use crate::{Rgb, Vec3};

/// Sum of a few random low-frequency cosines, rescaled to `[0, 1]`.
fn smooth_field(rng: &mut ChaCha8Rng, height: usize, width: usize) -> Grid<f64> {
    let waves: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.random_range(0.5..2.5),
                rng.random_range(0.5..2.5),
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(0.3..1.0),
            )
        })
        .collect();
    let raw = Grid::from_fn(height, width, |r, c| {
        let u = c as f64 / width.max(1) as f64;
        let v = r as f64 / height.max(1) as f64;
        waves
            .iter()
            .map(|(fx, fy, ph, amp)| amp * (std::f64::consts::TAU * (fx * u + fy * v) + ph).cos())
            .sum::<f64>()
    });
    let total: f64 = waves.iter().map(|w| w.3).sum();
    raw.map(|x| 0.5 + 0.5 * x / total)
}

/// Smooth random maps: albedo in `[0.1, 0.8]`, roughness in `[0.3, 0.9]`,
/// normals tilted up to about 20 degrees.
pub fn smooth_random_maps(seed: u64, height: usize, width: usize, f0: f64) -> SvbrdfMaps {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channels: Vec<Grid<f64>> = (0..3).map(|_| smooth_field(&mut rng, height, width)).collect();
    let albedo = Grid::from_fn(height, width, |r, c| {
        Rgb::new(
            0.1 + 0.7 * channels[0][(r, c)],
            0.1 + 0.7 * channels[1][(r, c)],
            0.1 + 0.7 * channels[2][(r, c)],
        )
    });
    let tx = smooth_field(&mut rng, height, width);
    let ty = smooth_field(&mut rng, height, width);
    let normal = Grid::from_fn(height, width, |r, c| {
        Vec3::new(0.72 * (tx[(r, c)] - 0.5), 0.72 * (ty[(r, c)] - 0.5), 1.0).normalize()
    });
    let rough = smooth_field(&mut rng, height, width);
    SvbrdfMaps {
        albedo,
        normal,
        roughness: rough.map(|x| 0.3 + 0.6 * x),
        f0,
    }
}

/// Vertical stripes of the given roughness values on a flat surface with a
/// smoothly varying albedo.
pub fn striped_roughness_maps(height: usize, width: usize, levels: &[f64], f0: f64) -> SvbrdfMaps {
    let mut maps = SvbrdfMaps::uniform(height, width, Rgb::repeat(0.5), 0.5, f0);
    maps.albedo = Grid::from_fn(height, width, |r, c| {
        let u = c as f64 / width as f64;
        let v = r as f64 / height as f64;
        Rgb::new(0.3 + 0.3 * u, 0.5, 0.3 + 0.3 * v)
    });
    maps.roughness = Grid::from_fn(height, width, |_, c| levels[c * levels.len() / width]);
    maps
}

/// A flat material with a raised spherical cap bump in the middle and a
/// checker albedo. Used by the browser demo.
pub fn bumpy_checker(size: usize, albedo_a: Rgb, albedo_b: Rgb, roughness: f64, bump: f64, f0: f64) -> SvbrdfMaps {
    let checks = 4.0;
    let albedo = Grid::from_fn(size, size, |r, c| {
        let u = (c as f64 / size as f64 * checks).floor() as i64;
        let v = (r as f64 / size as f64 * checks).floor() as i64;
        if (u + v) % 2 == 0 {
            albedo_a
        } else {
            albedo_b
        }
    });
    let normal = Grid::from_fn(size, size, |r, c| {
        let x = (c as f64 + 0.5) / size as f64 * 2.0 - 1.0;
        let y = 1.0 - (r as f64 + 0.5) / size as f64 * 2.0;
        let rad = 0.6;
        let d2 = x * x + y * y;
        if d2 < rad * rad {
            let z = (rad * rad - d2).sqrt();
            Vec3::new(bump * x, bump * y, z.max(1e-3)).normalize()
        } else {
            Vec3::z()
        }
    });
    SvbrdfMaps {
        albedo,
        normal,
        roughness: Grid::filled(size, size, roughness),
        f0,
    }
}
