//! Microfacet BRDF: GGX distribution with `alpha = roughness^2`, the
//! exponential Schlick Fresnel fit and Smith-Schlick shadowing with
//! `k = (roughness + 1)^2 / 8`.
//!
//! The BRDF is a plain diffuse term plus an achromatic specular lobe:
//! `d + D F G / (4 (n.l)(n.v))`.

use std::f64::consts::PI;

use crate::{Rgb, Vec3};

/// Lower bound on roughness. `alpha -> 0` turns D into a delta.
pub const R_MIN: f64 = 0.1;
/// Floor applied to `n.l` and `n.v` before dividing.
pub const EPS_COS: f64 = 1e-6;
/// F0 for dielectric (non-metal) materials.
pub const F0_DIELECTRIC_DEFAULT: f64 = 0.05;
/// F0 used for metals.
pub const F0_METAL_DEFAULT: f64 = 0.5;

const FRESNEL_A: f64 = -5.55473;
const FRESNEL_B: f64 = -6.98316;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrdfParams {
    pub diffuse: Rgb,
    pub normal: Vec3,
    pub roughness: f64,
    pub f0: f64,
}

/// Unit view, light and half vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadingVectors {
    pub view: Vec3,
    pub light: Vec3,
    pub half: Vec3,
}

impl ShadingVectors {
    /// Normalizes `view` and `light` and derives the half vector. When the two
    /// directions are opposite the half vector falls back to `+z`.
    pub fn new(view: Vec3, light: Vec3) -> Self {
        let view = view.normalize();
        let light = light.normalize();
        let sum = view + light;
        let norm = sum.norm();
        let half = if norm > 0.0 { sum / norm } else { Vec3::z() };
        Self { view, light, half }
    }
}

#[inline]
pub fn alpha(roughness: f64) -> f64 {
    roughness * roughness
}

/// GGX normal distribution `D`.
#[inline]
pub fn distribution_term(n_dot_h: f64, roughness: f64) -> f64 {
    let a2 = alpha(roughness).powi(2);
    let q = n_dot_h * n_dot_h * (a2 - 1.0) + 1.0;
    a2 / (PI * q * q)
}

/// `F = (1 - F0) 2^((-5.55473 v.h - 6.98316) v.h) + F0`.
#[inline]
pub fn fresnel_term(v_dot_h: f64, f0: f64) -> f64 {
    let exponent = (FRESNEL_A * v_dot_h + FRESNEL_B) * v_dot_h;
    (1.0 - f0) * exponent.exp2() + f0
}

#[inline]
pub fn schlick_k(roughness: f64) -> f64 {
    (roughness + 1.0).powi(2) / 8.0
}

/// Single-direction Smith-Schlick factor `G1(x) = x / (x (1 - k) + k)`.
#[inline]
pub fn g1(n_dot_x: f64, k: f64) -> f64 {
    n_dot_x / (n_dot_x * (1.0 - k) + k)
}

/// `G = G1(v) G1(l)`.
///
/// Both factors use their own cosine in the denominator. A commonly printed
/// variant writes `n.v` in the light factor's denominator; that breaks the
/// `v <-> l` symmetry of the lobe and is not used here.
#[inline]
pub fn geometry_term(n_dot_v: f64, n_dot_l: f64, roughness: f64) -> f64 {
    let k = schlick_k(roughness);
    g1(n_dot_v, k) * g1(n_dot_l, k)
}

/// Achromatic specular part `D F G / (4 (n.l)(n.v))` with both cosines
/// floored at [`EPS_COS`].
#[inline]
pub fn specular_term(params: &BrdfParams, vectors: &ShadingVectors) -> f64 {
    let n = params.normal;
    let n_dot_l = n.dot(&vectors.light).max(EPS_COS);
    let n_dot_v = n.dot(&vectors.view).max(EPS_COS);
    let n_dot_h = n.dot(&vectors.half);
    let v_dot_h = vectors.view.dot(&vectors.half).max(0.0);
    let d = distribution_term(n_dot_h, params.roughness);
    let f = fresnel_term(v_dot_h, params.f0);
    let g = geometry_term(n_dot_v, n_dot_l, params.roughness);
    d * f * g / (4.0 * n_dot_l * n_dot_v)
}

/// Full BRDF value per channel.
#[inline]
pub fn eval_brdf(params: &BrdfParams, vectors: &ShadingVectors) -> Rgb {
    let s = specular_term(params, vectors);
    params.diffuse.add_scalar(s)
}

/// F0 of a dielectric with index of refraction `eta`.
pub fn f0_dielectric(eta: f64) -> f64 {
    ((1.0 - eta) / (1.0 + eta)).powi(2)
}

/// F0 of a conductor with complex index `eta + i kappa`.
///
/// This is the normal-incidence reflectance `((eta-1)^2 + kappa^2) /
/// ((eta+1)^2 + kappa^2)`, which stays in `[0, 1)`.
pub fn f0_conductor(eta: f64, kappa: f64) -> f64 {
    let k2 = kappa * kappa;
    ((eta - 1.0).powi(2) + k2) / ((eta + 1.0).powi(2) + k2)
}
