//! WebAssembly bindings for the browser demo in `www/`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svbrdf_core::brdf::{eval_brdf, BrdfParams, ShadingVectors, R_MIN};
use svbrdf_core::dcrf::{dcrf_solve, DcrfPreset};
use svbrdf_core::scene::{render_image, tonemap};
use svbrdf_core::synthetic::bumpy_checker;
use svbrdf_core::{ColorMap, Rgb, SceneConfig, Vec3};
use wasm_bindgen::prelude::*;

const LIGHT_ALBEDO: [f64; 3] = [0.75, 0.62, 0.45];
const DARK_ALBEDO: [f64; 3] = [0.18, 0.22, 0.3];

fn to_rgba(maps: &[&ColorMap], tonemapped: bool) -> Vec<u8> {
    let (h, w) = maps[0].dims();
    let mut out = Vec::with_capacity(4 * h * w * maps.len());
    for r in 0..h {
        for m in maps {
            for c in 0..w {
                let p = m[(r, c)];
                for v in [p.x, p.y, p.z] {
                    let v = if tonemapped { tonemap(v) } else { v.clamp(0.0, 1.0) };
                    out.push((255.0 * v).round() as u8);
                }
                out.push(255);
            }
        }
    }
    out
}

fn checker(size: usize, roughness: f64, bump: f64, f0: f64) -> svbrdf_core::SvbrdfMaps {
    bumpy_checker(
        size,
        Rgb::from(LIGHT_ALBEDO),
        Rgb::from(DARK_ALBEDO),
        roughness.clamp(R_MIN, 1.0),
        bump,
        f0.clamp(0.0, 1.0),
    )
}

/// RGBA pixels of a bumpy checker material lit by a point light at
/// `(light_x, light_y)` on the camera plane. Empty on invalid input.
#[wasm_bindgen]
pub fn render_preview(size: usize, roughness: f64, f0: f64, bump: f64, light_x: f64, light_y: f64) -> Vec<u8> {
    let maps = checker(size, roughness, bump, f0);
    let base = SceneConfig::collocated(size, size);
    let config = base.clone().with_light(Vec3::new(light_x, light_y, base.camera_height()));
    match render_image(&maps, &config, true) {
        Ok(image) => to_rgba(&[&image], true),
        Err(_) => Vec::new(),
    }
}

/// BRDF luminance in the plane of incidence for `samples` outgoing angles
/// spread over (-90, 90) degrees, light at `incidence_deg` from the normal.
#[wasm_bindgen]
pub fn brdf_lobe(roughness: f64, f0: f64, incidence_deg: f64, samples: usize) -> Vec<f64> {
    let params = BrdfParams {
        diffuse: Rgb::repeat(0.0),
        normal: Vec3::z(),
        roughness: roughness.clamp(R_MIN, 1.0),
        f0: f0.clamp(0.0, 1.0),
    };
    let t = incidence_deg.to_radians();
    let light = Vec3::new(-t.sin(), 0.0, t.cos());
    (0..samples)
        .map(|k| {
            let a = ((k as f64 + 0.5) / samples as f64 - 0.5) * std::f64::consts::PI;
            let view = Vec3::new(a.sin(), 0.0, a.cos());
            eval_brdf(&params, &ShadingVectors::new(view, light)).x
        })
        .collect()
}

/// Corrupts the checker albedo with uniform noise of amplitude `noise` and
/// refines it with the diffuse CRF preset, its pairwise weights multiplied by
/// `smoothing`, guided by the rendered image. Returns RGBA rows of the noisy
/// and refined albedo side by side.
#[wasm_bindgen]
pub fn dcrf_denoise(size: usize, noise: f64, smoothing: f64, seed: u64) -> Vec<u8> {
    let maps = checker(size, 0.5, 0.0, 0.05);
    let config = SceneConfig::collocated(size, size);
    let Ok(image) = render_image(&maps, &config, true) else {
        return Vec::new();
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noisy = maps
        .albedo
        .map(|a| a.map(|v| (v + noise * (2.0 * rng.random::<f64>() - 1.0)).clamp(0.0, 1.0)));
    let preset = DcrfPreset::diffuse();
    let mut theta = preset.coefficients();
    for beta in &mut theta[2..] {
        *beta *= smoothing.max(0.0);
    }
    let refined = preset
        .with_coefficients(&theta)
        .and_then(|p| p.diffuse_problem(&noisy, &image))
        .and_then(|p| dcrf_solve(&p))
        .and_then(|f| f.to_color());
    match refined {
        Ok(refined) => to_rgba(&[&noisy, &refined], false),
        Err(_) => Vec::new(),
    }
}
