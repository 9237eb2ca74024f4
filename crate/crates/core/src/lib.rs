//! Spatially varying BRDF toolkit.
//!
//! Renders per-pixel microfacet materials (diffuse albedo, normal, roughness,
//! scalar F0) on a planar surface lit by a near-collocated point light,
//! differentiates the rendering analytically, and recovers or refines
//! material maps with a roughness grid search, a projected gradient fitter,
//! continuous dense CRFs and Lambertian photometric stereo.

pub mod augment;
pub mod brdf;
pub mod dcrf;
pub mod diff;
pub mod error;
pub mod estimators;
pub mod grid;
pub mod io;
pub mod losses;
pub mod photometric;
pub mod scene;
pub mod synthetic;

mod par;

pub use error::{Error, Result};
pub use grid::{ColorMap, Grid, NormalMap, RadianceImage, ScalarMap, SvbrdfMaps};
pub use nalgebra::Vector3;
pub use scene::SceneConfig;

/// RGB triple in linear units.
pub type Rgb = Vector3<f64>;
/// Geometric 3-vector.
pub type Vec3 = Vector3<f64>;
