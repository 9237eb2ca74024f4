//! Forward rendering of a planar SVBRDF under a point light plus constant
//! ambient, seen through a pinhole camera looking down `-z`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::brdf::{self, BrdfParams, ShadingVectors};
use crate::error::{Error, Result};
use crate::grid::{Grid, RadianceImage, SvbrdfMaps};
use crate::par;
use crate::{Rgb, Vec3};

/// Full horizontal field of view of a typical phone camera.
pub const DEFAULT_FOV_DEG: f64 = 43.35;
/// Target radiance of a flat white Lambertian pixel straight under the flash.
pub const DEFAULT_CENTER_RADIANCE: f64 = 0.8;
/// Default flash jitter as a fraction of the camera height.
pub const DEFAULT_FLASH_SIGMA_FRAC: f64 = 0.05;

/// Rendering geometry. The surface spans `[-e, e]` horizontally at `z = 0`
/// and the camera sits at `(0, 0, e / tan(fov / 2))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub fov_deg: f64,
    pub surface_half_extent: f64,
    pub light_position: [f64; 3],
    pub light_intensity: [f64; 3],
    pub ambient: [f64; 3],
    /// `[height, width]`.
    pub resolution: [usize; 2],
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self::collocated(256, 256)
    }
}

impl SceneConfig {
    /// Default geometry with the light at the camera, no ambient, and an
    /// intensity that renders a flat white diffuse pixel under the camera to
    /// [`DEFAULT_CENTER_RADIANCE`].
    pub fn collocated(height: usize, width: usize) -> Self {
        let e = 1.0;
        let cam_z = e / (DEFAULT_FOV_DEG.to_radians() / 2.0).tan();
        let intensity = DEFAULT_CENTER_RADIANCE * cam_z * cam_z;
        Self {
            fov_deg: DEFAULT_FOV_DEG,
            surface_half_extent: e,
            light_position: [0.0, 0.0, cam_z],
            light_intensity: [intensity; 3],
            ambient: [0.0; 3],
            resolution: [height, width],
        }
    }

    pub fn with_resolution(mut self, height: usize, width: usize) -> Self {
        self.resolution = [height, width];
        self
    }

    pub fn with_light(mut self, position: Vec3) -> Self {
        self.light_position = [position.x, position.y, position.z];
        self
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.resolution[0], self.resolution[1])
    }

    pub fn camera_height(&self) -> f64 {
        self.surface_half_extent / (self.fov_deg.to_radians() / 2.0).tan()
    }

    pub fn camera_position(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, self.camera_height())
    }

    pub fn light(&self) -> Vec3 {
        Vec3::from(self.light_position)
    }

    pub fn intensity(&self) -> Rgb {
        Rgb::from(self.light_intensity)
    }

    pub fn ambient_rgb(&self) -> Rgb {
        Rgb::from(self.ambient)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return Err(Error::invalid(format!("fov_deg {} outside (0, 180)", self.fov_deg)));
        }
        if !(self.surface_half_extent > 0.0) {
            return Err(Error::invalid("surface_half_extent must be positive"));
        }
        if !(self.light_position[2] > 0.0) {
            return Err(Error::invalid("light_position must have positive z"));
        }
        if self.resolution[0] == 0 || self.resolution[1] == 0 {
            return Err(Error::invalid("resolution must be positive"));
        }
        let finite = self
            .light_intensity
            .iter()
            .chain(self.ambient.iter())
            .all(|v| v.is_finite() && *v >= 0.0);
        if !finite {
            return Err(Error::invalid("light_intensity and ambient must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene config serializes")
    }
}

/// World position of the center of pixel `(row, col)` on the `z = 0` plane.
///
/// Pixels are square; the horizontal axis spans `[-e, e]` and the vertical
/// axis spans `e * H / W` either side of the origin. Row 0 is `+y`.
pub fn pixel_world_position(config: &SceneConfig, row: usize, col: usize) -> Vec3 {
    let (h, w) = config.dims();
    debug_assert!(row < h && col < w, "pixel ({row}, {col}) outside {h}x{w}");
    let e = config.surface_half_extent;
    let pitch = 2.0 * e / w as f64;
    let x = -e + (col as f64 + 0.5) * pitch;
    let y = e * h as f64 / w as f64 - (row as f64 + 0.5) * pitch;
    Vec3::new(x, y, 0.0)
}

/// Per-pixel lighting geometry.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PixelGeometry {
    pub vectors: ShadingVectors,
    /// `intensity / dist^2`.
    pub irradiance: Rgb,
    pub ambient: Rgb,
}

impl PixelGeometry {
    pub(crate) fn new(config: &SceneConfig, index: usize, view_from_camera: bool) -> Self {
        let w = config.dims().1;
        let p = pixel_world_position(config, index / w, index % w);
        let to_light = config.light() - p;
        let dist2 = to_light.norm_squared();
        let view = if view_from_camera {
            config.camera_position() - p
        } else {
            Vec3::z()
        };
        Self {
            vectors: ShadingVectors::new(view, to_light),
            irradiance: config.intensity() / dist2,
            ambient: config.ambient_rgb(),
        }
    }
}

/// Radiance of one pixel:
/// `brdf * max(n.l, 0) * intensity / dist^2 + albedo * ambient`.
#[inline]
pub(crate) fn shade(params: &BrdfParams, geom: &PixelGeometry) -> Rgb {
    let n_dot_l = params.normal.dot(&geom.vectors.light);
    let ambient = params.diffuse.component_mul(&geom.ambient);
    if n_dot_l <= 0.0 {
        return ambient;
    }
    let f = brdf::eval_brdf(params, &geom.vectors);
    (f * n_dot_l).component_mul(&geom.irradiance) + ambient
}

/// Renders `maps` under `config`. With `view_from_camera` false the viewer is
/// at infinity along `+z`.
pub fn render_image(
    maps: &SvbrdfMaps,
    config: &SceneConfig,
    view_from_camera: bool,
) -> Result<RadianceImage> {
    maps.albedo.ensure_dims(config.dims())?;
    maps.normal.ensure_dims(config.dims())?;
    maps.roughness.ensure_dims(config.dims())?;
    let (h, w) = config.dims();
    let pixels = par::map_indices(h * w, |i| {
        let geom = PixelGeometry::new(config, i, view_from_camera);
        shade(&maps.params_at(i), &geom)
    });
    Grid::from_vec(h, w, pixels)
}

pub const TONEMAP_CLAMP: f64 = 1.5;
pub const TONEMAP_GAMMA: f64 = 2.2;

/// `clamp(x, 0, 1.5)^(1/2.2)`.
#[inline]
pub fn tonemap(x: f64) -> f64 {
    x.clamp(0.0, TONEMAP_CLAMP).powf(1.0 / TONEMAP_GAMMA)
}

/// Derivative of [`tonemap`]. Zero inside either clamp; `x = 1.5` takes the
/// smooth branch. At `x <= 0` the power law is unbounded and 0 is returned.
#[inline]
pub fn tonemap_derivative(x: f64) -> f64 {
    if x <= 0.0 || x > TONEMAP_CLAMP {
        0.0
    } else {
        (1.0 / TONEMAP_GAMMA) * x.powf(1.0 / TONEMAP_GAMMA - 1.0)
    }
}

pub fn tonemap_image(image: &RadianceImage) -> RadianceImage {
    image.map(|p| p.map(tonemap))
}

/// Point on the upper hemisphere of `radius`, uniform in solid angle.
pub fn sample_novel_light(rng_seed: u64, radius: f64) -> Vec3 {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    novel_light_from(&mut rng, radius)
}

pub fn novel_light_from<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> Vec3 {
    // Uniform z on (0, 1] is uniform solid angle on the hemisphere.
    let z = 1.0 - rng.random::<f64>();
    let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    let s = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(s * phi.cos(), s * phi.sin(), z) * radius
}

/// Flash position: camera plus isotropic Gaussian jitter with per-axis std
/// `sigma_frac * camera_height`. The z coordinate is kept positive.
pub fn sample_flash_position(rng_seed: u64, config: &SceneConfig, sigma_frac: f64) -> Vec3 {
    let cam = config.camera_position();
    let sigma = sigma_frac * cam.z;
    if sigma <= 0.0 {
        return cam;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let normal = Normal::new(0.0, sigma).expect("finite positive sigma");
    let offset = Vec3::new(
        normal.sample(&mut rng),
        normal.sample(&mut rng),
        normal.sample(&mut rng),
    );
    let mut p = cam + offset;
    p.z = p.z.max(1e-3 * cam.z);
    p
}
