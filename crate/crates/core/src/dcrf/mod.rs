//! Continuous dense CRFs over per-pixel maps.
//!
//! Each refiner minimizes a convex quadratic
//!
//! ```text
//! E(x) = sum_i sum_u alpha_u,i |x_i - t_u,i|^2
//!      + sum_{i != j} |x_i - x_j|^2 sum_k beta_k kappa_k(i, j)
//! ```
//!
//! whose minimizer solves a symmetric, strictly diagonally dominant linear
//! system. The solver runs Gauss-Seidel sweeps in raster order (or damped
//! Jacobi) on the stationarity conditions.

mod kernel;
mod preset;
mod solver;
mod unary;

pub use kernel::{gaussian_kernel_weight, FeatureGroup, FeatureKind, FeatureMaps, KernelFeature, KernelSpec};
pub use preset::{
    blend_params_by_class, blend_presets, normalize_coefficients, DcrfPreset, RefineTarget, UnaryCoefficients,
};
pub use solver::{dcrf_energy, dcrf_solve, dcrf_solve_traced, PairwiseWeights, SolveOutcome};
pub use unary::{
    centered_positions, diffuse_unary_weight_map, roughness_unary_weight_map, SIGMA_D0, SIGMA_D1, SIGMA_R0,
    SIGMA_R1,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ColorMap, Grid, NormalMap, ScalarMap};
use crate::{Rgb, Vec3};

/// A multi-channel map in flat, channel-interleaved storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Field {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::invalid("field data length does not match its shape"));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn at(&self, i: usize) -> &[f64] {
        &self.data[i * self.channels..(i + 1) * self.channels]
    }

    pub fn from_scalar(map: &ScalarMap) -> Self {
        Self {
            height: map.height(),
            width: map.width(),
            channels: 1,
            data: map.as_slice().to_vec(),
        }
    }

    pub fn from_vectors(map: &Grid<Vec3>) -> Self {
        Self {
            height: map.height(),
            width: map.width(),
            channels: 3,
            data: map.iter().flat_map(|v| [v.x, v.y, v.z]).collect(),
        }
    }

    pub fn to_scalar(&self) -> Result<ScalarMap> {
        if self.channels != 1 {
            return Err(Error::invalid("expected a single-channel field"));
        }
        Grid::from_vec(self.height, self.width, self.data.clone())
    }

    pub fn to_color(&self) -> Result<ColorMap> {
        if self.channels != 3 {
            return Err(Error::invalid("expected a three-channel field"));
        }
        let v = self.data.chunks_exact(3).map(|c| Rgb::new(c[0], c[1], c[2])).collect();
        Grid::from_vec(self.height, self.width, v)
    }

    /// Three-channel field as unit normals with non-negative z.
    pub fn to_normals(&self) -> Result<NormalMap> {
        let raw = self.to_color()?;
        Ok(raw.map(|v| {
            let n = v.norm();
            if n > 0.0 {
                let u = v / n;
                if u.z < 0.0 {
                    Vec3::new(u.x, u.y, -u.z)
                } else {
                    u
                }
            } else {
                Vec3::z()
            }
        }))
    }
}

/// A unary term: target field and per-pixel weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Unary {
    pub target: Field,
    pub weight: ScalarMap,
}

/// Sweep order of the solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SweepMode {
    /// In-place raster-order updates.
    #[default]
    GaussSeidel,
    /// Simultaneous updates blended with the previous iterate.
    Jacobi { damping: f64 },
}

/// A complete refinement problem.
#[derive(Debug, Clone)]
pub struct DcrfProblem {
    pub unaries: Vec<Unary>,
    pub kernels: Vec<KernelSpec>,
    pub features: FeatureMaps,
    pub iterations: usize,
    pub tolerance: f64,
    pub mode: SweepMode,
    /// Drop pairwise weights below this value. `None` keeps the dense graph.
    pub truncation: Option<f64>,
    /// Renormalize three-channel output to unit vectors.
    pub renormalize: bool,
}

impl DcrfProblem {
    pub fn new(unaries: Vec<Unary>, kernels: Vec<KernelSpec>, features: FeatureMaps) -> Self {
        Self {
            unaries,
            kernels,
            features,
            iterations: 200,
            tolerance: 1e-9,
            mode: SweepMode::GaussSeidel,
            truncation: None,
            renormalize: false,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.features.dims()
    }

    pub fn channels(&self) -> usize {
        self.unaries.first().map_or(1, |u| u.target.channels)
    }

    pub fn validate(&self) -> Result<()> {
        let dims = self.dims();
        if self.unaries.is_empty() {
            return Err(Error::Underdetermined);
        }
        let channels = self.channels();
        for u in &self.unaries {
            if u.target.dims() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    actual: u.target.dims(),
                });
            }
            u.weight.ensure_dims(dims)?;
            if u.target.channels != channels {
                return Err(Error::invalid("unary targets disagree on channel count"));
            }
            if u.weight.iter().any(|a| !(*a >= 0.0)) {
                return Err(Error::invalid("unary weights must be non-negative"));
            }
        }
        for k in &self.kernels {
            k.validate(&self.features)?;
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        if let SweepMode::Jacobi { damping } = self.mode {
            if !(damping > 0.0 && damping <= 1.0) {
                return Err(Error::invalid("jacobi damping must lie in (0, 1]"));
            }
        }
        let n = dims.0 * dims.1;
        let any_positive = (0..n).any(|i| self.unaries.iter().any(|u| u.weight.as_slice()[i] > 0.0));
        if !any_positive {
            return Err(Error::Underdetermined);
        }
        Ok(())
    }

    /// Per-pixel weighted mean of the unary targets; the solver's starting
    /// point and the exact minimizer when every beta is zero.
    pub fn unary_solution(&self) -> Field {
        let (h, w) = self.dims();
        let ch = self.channels();
        let mut data = vec![0.0; h * w * ch];
        for i in 0..h * w {
            let total: f64 = self.unaries.iter().map(|u| u.weight.as_slice()[i]).sum();
            let out = &mut data[i * ch..(i + 1) * ch];
            let mut active = self.unaries.iter().filter(|u| u.weight.as_slice()[i] > 0.0);
            if let (Some(only), None) = (active.next(), active.next()) {
                // A lone unary is reproduced bit for bit.
                out.copy_from_slice(only.target.at(i));
            } else if total > 0.0 {
                for u in &self.unaries {
                    let a = u.weight.as_slice()[i];
                    for (o, t) in out.iter_mut().zip(u.target.at(i)) {
                        *o += a * t;
                    }
                }
                out.iter_mut().for_each(|o| *o /= total);
            } else {
                out.copy_from_slice(self.unaries[0].target.at(i));
            }
        }
        Field {
            height: h,
            width: w,
            channels: ch,
            data,
        }
    }
}
