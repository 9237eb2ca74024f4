//! Row-major per-pixel grids and the SVBRDF map bundle.

use crate::brdf::{BrdfParams, R_MIN};
use crate::error::{Error, Result};
use crate::{Rgb, Vec3};

/// A dense `height × width` grid stored row-major, row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

pub type ScalarMap = Grid<f64>;
pub type ColorMap = Grid<Rgb>;
pub type NormalMap = Grid<Vec3>;
pub type RadianceImage = Grid<Rgb>;

impl<T: Clone> Grid<T> {
    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "grid of {height}x{width} needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// `(height, width)`.
    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index_of(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.height && col < self.width);
        row * self.width + col
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[self.index_of(row, col)]
    }

    #[inline]
    pub fn get_mut(&mut self, row: usize, col: usize) -> &mut T {
        let i = self.index_of(row, col);
        &mut self.data[i]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.data.iter()
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn ensure_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                actual: self.dims(),
            });
        }
        Ok(())
    }
}

impl<T> std::ops::Index<(usize, usize)> for Grid<T> {
    type Output = T;

    fn index(&self, (row, col): (usize, usize)) -> &T {
        self.get(row, col)
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Grid<T> {
    fn index_mut(&mut self, (row, col): (usize, usize)) -> &mut T {
        self.get_mut(row, col)
    }
}

/// Per-pixel values that can be compared channel by channel.
pub trait MapValue: Clone {
    const CHANNELS: usize;

    fn channel(&self, c: usize) -> f64;

    fn squared_distance(&self, other: &Self) -> f64 {
        (0..Self::CHANNELS)
            .map(|c| {
                let d = self.channel(c) - other.channel(c);
                d * d
            })
            .sum()
    }
}

impl MapValue for f64 {
    const CHANNELS: usize = 1;

    fn channel(&self, _c: usize) -> f64 {
        *self
    }
}

impl MapValue for Vec3 {
    const CHANNELS: usize = 3;

    fn channel(&self, c: usize) -> f64 {
        self[c]
    }
}

/// Per-pixel diffuse albedo, unit normal and roughness plus a scalar F0.
#[derive(Debug, Clone, PartialEq)]
pub struct SvbrdfMaps {
    pub albedo: ColorMap,
    pub normal: NormalMap,
    pub roughness: ScalarMap,
    pub f0: f64,
}

impl SvbrdfMaps {
    /// Flat, uniform material.
    pub fn uniform(height: usize, width: usize, albedo: Rgb, roughness: f64, f0: f64) -> Self {
        Self {
            albedo: Grid::filled(height, width, albedo),
            normal: Grid::filled(height, width, Vec3::z()),
            roughness: Grid::filled(height, width, roughness),
            f0,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.albedo.dims()
    }

    /// Checks shared dimensions, unit normals with positive z, roughness in
    /// `[R_MIN, 1]`, non-negative albedo and `f0` in `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        let dims = self.dims();
        self.normal.ensure_dims(dims)?;
        self.roughness.ensure_dims(dims)?;
        if !(0.0..=1.0).contains(&self.f0) {
            return Err(Error::invalid(format!("f0 {} outside [0, 1]", self.f0)));
        }
        for (i, n) in self.normal.iter().enumerate() {
            if (n.norm() - 1.0).abs() > 1e-5 || n.z <= 0.0 {
                return Err(Error::invalid(format!(
                    "normal {i} = ({}, {}, {}) is not a unit vector with positive z",
                    n.x, n.y, n.z
                )));
            }
        }
        for (i, r) in self.roughness.iter().enumerate() {
            if !(R_MIN - 1e-12..=1.0 + 1e-12).contains(r) {
                return Err(Error::invalid(format!("roughness {i} = {r} outside [r_min, 1]")));
            }
        }
        for (i, a) in self.albedo.iter().enumerate() {
            if a.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
                return Err(Error::invalid(format!("albedo {i} has a negative channel")));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn params_at(&self, index: usize) -> BrdfParams {
        BrdfParams {
            diffuse: self.albedo.as_slice()[index],
            normal: self.normal.as_slice()[index],
            roughness: self.roughness.as_slice()[index],
            f0: self.f0,
        }
    }
}
