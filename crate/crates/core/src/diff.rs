//! Analytic derivatives of rendered radiance with respect to per-pixel
//! albedo, normal and roughness, and a central-difference verifier.
//!
//! Each pixel's radiance depends only on that pixel's parameters, so the
//! full Jacobian is block diagonal and stored per pixel.

use nalgebra::Matrix3;
use serde::Serialize;
use std::f64::consts::PI;

use crate::brdf::{self, BrdfParams, EPS_COS};
use crate::error::{Error, Result};
use crate::grid::{Grid, RadianceImage, SvbrdfMaps};
use crate::par;
use crate::scene::{self, PixelGeometry, SceneConfig};
use crate::{Rgb, Vec3};

/// Per-pixel Jacobians. Row `c` of every matrix is radiance channel `c`.
#[derive(Debug, Clone)]
pub struct GradientField {
    /// Radiance with respect to albedo RGB.
    pub d_albedo: Grid<Matrix3<f64>>,
    /// Radiance with respect to the unnormalized normal, composed through
    /// `normalize()`.
    pub d_normal: Grid<Matrix3<f64>>,
    pub d_roughness: Grid<Rgb>,
}

/// Radiance and its derivatives at one pixel.
#[derive(Debug, Clone, Copy)]
pub struct PixelGradient {
    pub radiance: Rgb,
    pub d_albedo: Matrix3<f64>,
    pub d_normal: Matrix3<f64>,
    pub d_roughness: Rgb,
}

pub(crate) fn shade_with_gradient(params: &BrdfParams, geom: &PixelGeometry) -> PixelGradient {
    let radiance = scene::shade(params, geom);
    let n = params.normal;
    let vecs = &geom.vectors;
    let n_dot_l = n.dot(&vecs.light);
    if n_dot_l <= 0.0 {
        return PixelGradient {
            radiance,
            d_albedo: Matrix3::from_diagonal(&geom.ambient),
            d_normal: Matrix3::zeros(),
            d_roughness: Rgb::zeros(),
        };
    }

    let r = params.roughness;
    let n_dot_v = n.dot(&vecs.view);
    let nl = n_dot_l.max(EPS_COS);
    let nv = n_dot_v.max(EPS_COS);
    let mu = n.dot(&vecs.half);
    let v_dot_h = vecs.view.dot(&vecs.half).max(0.0);

    let a2 = brdf::alpha(r).powi(2);
    let q = mu * mu * (a2 - 1.0) + 1.0;
    let d = a2 / (PI * q * q);
    let dd_dmu = -4.0 * a2 * mu * (a2 - 1.0) / (PI * q * q * q);
    let dd_dr = (q - 2.0 * a2 * mu * mu) / (PI * q * q * q) * 4.0 * r * r * r;

    let f = brdf::fresnel_term(v_dot_h, params.f0);

    // G / (nl nv) = g(nv) g(nl) with g(x) = 1 / (x (1 - k) + k).
    let k = brdf::schlick_k(r);
    let dk_dr = (r + 1.0) / 4.0;
    let g = |x: f64| 1.0 / (x * (1.0 - k) + k);
    let (gv, gl) = (g(nv), g(nl));
    let dg_dx = |gx: f64| -(1.0 - k) * gx * gx;
    let dg_dk = |x: f64, gx: f64| -(1.0 - x) * gx * gx;

    let s = d * f * gv * gl / 4.0;
    let ds_dr = f / 4.0 * (dd_dr * gv * gl + d * (dg_dk(nv, gv) * gl + gv * dg_dk(nl, gl)) * dk_dr);

    let dnv: Vec3 = if n_dot_v > EPS_COS { vecs.view } else { Vec3::zeros() };
    let dnl: Vec3 = if n_dot_l > EPS_COS { vecs.light } else { Vec3::zeros() };
    let ds_dn: Vec3 = (vecs.half * (dd_dmu * gv * gl)
        + (dnv * (dg_dx(gv) * gl) + dnl * (gv * dg_dx(gl))) * d)
        * (f / 4.0);

    let irr = geom.irradiance;
    let shading = irr * n_dot_l + geom.ambient;
    let d_albedo = Matrix3::from_diagonal(&shading);

    // d radiance_c / d n = E_c [ (d_c + S) l + (n.l) dS/dn ]
    let mut d_free = Matrix3::zeros();
    for c in 0..3 {
        let row = (vecs.light * (params.diffuse[c] + s) + ds_dn * n_dot_l) * irr[c];
        d_free.set_row(c, &row.transpose());
    }
    // Compose with the Jacobian of m -> m / |m| evaluated at the stored normal.
    let norm = n.norm();
    let unit = n / norm;
    let projector = (Matrix3::identity() - unit * unit.transpose()) / norm;
    let d_normal = d_free * projector;

    let d_roughness = irr * (n_dot_l * ds_dr);

    PixelGradient {
        radiance,
        d_albedo,
        d_normal,
        d_roughness,
    }
}

/// Renders `maps` (camera viewpoint) together with per-pixel Jacobians. The
/// image is bit-identical to [`scene::render_image`].
pub fn render_with_gradients(
    maps: &SvbrdfMaps,
    config: &SceneConfig,
) -> Result<(RadianceImage, GradientField)> {
    let dims = config.dims();
    maps.albedo.ensure_dims(dims)?;
    maps.normal.ensure_dims(dims)?;
    maps.roughness.ensure_dims(dims)?;
    let (h, w) = dims;
    let px = par::map_indices(h * w, |i| {
        let geom = PixelGeometry::new(config, i, true);
        shade_with_gradient(&maps.params_at(i), &geom)
    });
    let image = Grid::from_vec(h, w, px.iter().map(|p| p.radiance).collect())?;
    let field = GradientField {
        d_albedo: Grid::from_vec(h, w, px.iter().map(|p| p.d_albedo).collect())?,
        d_normal: Grid::from_vec(h, w, px.iter().map(|p| p.d_normal).collect())?,
        d_roughness: Grid::from_vec(h, w, px.iter().map(|p| p.d_roughness).collect())?,
    };
    Ok((image, field))
}

/// Radiance of a single pixel, identical to the corresponding pixel of
/// [`scene::render_image`] with the camera viewpoint.
pub fn render_pixel(params: &BrdfParams, config: &SceneConfig, row: usize, col: usize) -> Rgb {
    let index = row * config.dims().1 + col;
    scene::shade(params, &PixelGeometry::new(config, index, true))
}

/// Analytic and finite-difference gradient at one pixel for one parameter.
pub fn pixel_gradient(params: &BrdfParams, config: &SceneConfig, row: usize, col: usize) -> PixelGradient {
    let index = row * config.dims().1 + col;
    shade_with_gradient(params, &PixelGeometry::new(config, index, true))
}

/// One of the seven scalar per-pixel parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Albedo(usize),
    Normal(usize),
    Roughness,
}

impl ParamKind {
    pub const ALL: [ParamKind; 7] = [
        ParamKind::Albedo(0),
        ParamKind::Albedo(1),
        ParamKind::Albedo(2),
        ParamKind::Normal(0),
        ParamKind::Normal(1),
        ParamKind::Normal(2),
        ParamKind::Roughness,
    ];

    /// Analytic column for this parameter.
    pub fn column(self, g: &PixelGradient) -> Rgb {
        match self {
            ParamKind::Albedo(k) => g.d_albedo.column(k).into(),
            ParamKind::Normal(k) => g.d_normal.column(k).into(),
            ParamKind::Roughness => g.d_roughness,
        }
    }

    /// Parameters with this component moved by `delta`; normals are
    /// renormalized after the move.
    pub fn perturb(self, params: &BrdfParams, delta: f64) -> BrdfParams {
        let mut p = *params;
        match self {
            ParamKind::Albedo(k) => p.diffuse[k] += delta,
            ParamKind::Normal(k) => {
                p.normal[k] += delta;
                p.normal = p.normal.normalize();
            }
            ParamKind::Roughness => p.roughness += delta,
        }
        p
    }
}

/// Central difference of the pixel radiance along `kind`.
pub fn central_difference(
    params: &BrdfParams,
    config: &SceneConfig,
    row: usize,
    col: usize,
    kind: ParamKind,
    step: f64,
) -> Rgb {
    let plus = render_pixel(&kind.perturb(params, step), config, row, col);
    let minus = render_pixel(&kind.perturb(params, -step), config, row, col);
    (plus - minus) / (2.0 * step)
}

/// Agreement thresholds: relative error below `rel_tol`, or absolute error
/// below `abs_tol` where the gradient magnitude is under `small_gradient`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GradTolerance {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub small_gradient: f64,
}

impl Default for GradTolerance {
    fn default() -> Self {
        Self {
            rel_tol: 1e-4,
            abs_tol: 1e-7,
            small_gradient: 1e-3,
        }
    }
}

impl GradTolerance {
    pub fn accepts(&self, analytic: f64, numeric: f64) -> bool {
        let abs = (analytic - numeric).abs();
        let scale = analytic.abs().max(numeric.abs());
        if scale < self.small_gradient {
            abs < self.abs_tol
        } else {
            abs / scale < self.rel_tol
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Discrepancy {
    pub entries: usize,
    pub failures: usize,
    /// Largest relative error among entries with gradient magnitude at or
    /// above the small-gradient cutoff.
    pub max_rel_error: f64,
    /// Largest absolute error among entries below the cutoff.
    pub max_abs_error_small: f64,
    /// Largest absolute error overall.
    pub max_abs_error: f64,
}

impl Discrepancy {
    pub fn record(&mut self, analytic: f64, numeric: f64, tol: &GradTolerance) {
        let abs = (analytic - numeric).abs();
        let scale = analytic.abs().max(numeric.abs());
        self.entries += 1;
        self.max_abs_error = self.max_abs_error.max(abs);
        if scale < tol.small_gradient {
            self.max_abs_error_small = self.max_abs_error_small.max(abs);
        } else {
            self.max_rel_error = self.max_rel_error.max(abs / scale);
        }
        if !tol.accepts(analytic, numeric) {
            self.failures += 1;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FdReport {
    pub step: f64,
    pub tolerance: GradTolerance,
    pub checked_pixels: usize,
    pub skipped: Vec<(usize, usize)>,
    pub albedo: Discrepancy,
    pub normal: Discrepancy,
    pub roughness: Discrepancy,
}

impl FdReport {
    pub fn passed(&self) -> bool {
        self.albedo.failures == 0 && self.normal.failures == 0 && self.roughness.failures == 0
    }
}

/// Whether the clamps at `n.l = 0` or `n.v = eps` are within `margin`.
pub fn near_shading_boundary(params: &BrdfParams, config: &SceneConfig, row: usize, col: usize, margin: f64) -> bool {
    let index = row * config.dims().1 + col;
    let geom = PixelGeometry::new(config, index, true);
    let n = params.normal.normalize();
    let nl = n.dot(&geom.vectors.light);
    let nv = n.dot(&geom.vectors.view);
    nl.abs() <= margin || (nv - EPS_COS).abs() <= margin || nv < EPS_COS
}

/// Compares analytic gradients against central differences at `pixels`.
///
/// Pixels whose `n.l` or `n.v` lies within `max(EPS_COS, 4 * step)` of a
/// clamp are skipped, since a difference stencil crossing the clamp does not
/// measure the one-sided derivative.
pub fn finite_diff_check(
    maps: &SvbrdfMaps,
    config: &SceneConfig,
    step: f64,
    pixels: &[(usize, usize)],
) -> Result<FdReport> {
    if !(step > 0.0) {
        return Err(Error::invalid("finite difference step must be positive"));
    }
    let dims = config.dims();
    maps.albedo.ensure_dims(dims)?;
    maps.normal.ensure_dims(dims)?;
    maps.roughness.ensure_dims(dims)?;
    let tol = GradTolerance::default();
    let margin = EPS_COS.max(4.0 * step);
    let mut report = FdReport {
        step,
        tolerance: tol,
        checked_pixels: 0,
        skipped: Vec::new(),
        albedo: Discrepancy::default(),
        normal: Discrepancy::default(),
        roughness: Discrepancy::default(),
    };
    for &(row, col) in pixels {
        if row >= dims.0 || col >= dims.1 {
            return Err(Error::invalid(format!("pixel ({row}, {col}) outside {dims:?}")));
        }
        let params = maps.params_at(row * dims.1 + col);
        if near_shading_boundary(&params, config, row, col, margin) {
            report.skipped.push((row, col));
            continue;
        }
        report.checked_pixels += 1;
        let g = pixel_gradient(&params, config, row, col);
        for kind in ParamKind::ALL {
            let analytic = kind.column(&g);
            let numeric = central_difference(&params, config, row, col, kind, step);
            let bucket = match kind {
                ParamKind::Albedo(_) => &mut report.albedo,
                ParamKind::Normal(_) => &mut report.normal,
                ParamKind::Roughness => &mut report.roughness,
            };
            for c in 0..3 {
                bucket.record(analytic[c], numeric[c], &tol);
            }
        }
    }
    Ok(report)
}
