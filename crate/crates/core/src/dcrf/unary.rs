//! Spatially varying unary confidence maps.
//!
//! Highlights of a collocated flash sit near the image center and saturate
//! to white, so the diffuse unary is trusted less there while the roughness
//! grid-search unary is trusted more.

use crate::grid::{Grid, RadianceImage, ScalarMap};

pub const SIGMA_D0: f64 = 0.5;
pub const SIGMA_D1: f64 = 0.08;
pub const SIGMA_R0: f64 = 0.5;
pub const SIGMA_R1: f64 = 0.2;

/// Pixel positions centered on the image, each axis spanning `[-1, 1]`
/// from the first to the last pixel. `y` points up.
pub fn centered_positions(height: usize, width: usize) -> Grid<[f64; 2]> {
    let axis = |i: usize, n: usize| {
        if n > 1 {
            2.0 * i as f64 / (n - 1) as f64 - 1.0
        } else {
            0.0
        }
    };
    Grid::from_fn(height, width, |r, c| [axis(c, width), -axis(r, height)])
}

#[inline]
fn norm2(p: &[f64; 2]) -> f64 {
    p[0] * p[0] + p[1] * p[1]
}

#[inline]
fn min_channel(image: &RadianceImage, i: usize) -> f64 {
    let p = image.as_slice()[i];
    p.x.min(p.y).min(p.z)
}

/// `a0 * max(1 - exp(-|p|^2 / s_d0^2), 1 - exp(-(c_min - 1)^2 / s_d1^2)) + a1`.
pub fn diffuse_unary_weight_map(
    positions: &Grid<[f64; 2]>,
    input_image: &RadianceImage,
    a0: f64,
    a1: f64,
) -> crate::Result<ScalarMap> {
    input_image.ensure_dims(positions.dims())?;
    let (h, w) = positions.dims();
    let data = (0..h * w)
        .map(|i| {
            let p = &positions.as_slice()[i];
            let c = min_channel(input_image, i);
            let spatial = 1.0 - (-norm2(p) / (SIGMA_D0 * SIGMA_D0)).exp();
            let color = 1.0 - (-(c - 1.0).powi(2) / (SIGMA_D1 * SIGMA_D1)).exp();
            a0 * spatial.max(color) + a1
        })
        .collect();
    Grid::from_vec(h, w, data)
}

/// Weight maps of the two roughness unaries: a constant `a0` for the
/// prediction and `max(exp(-|p|^2 / s_r0^2), exp(-(c_min - 1)^2 / s_r1^2))`
/// for the grid search.
pub fn roughness_unary_weight_map(
    positions: &Grid<[f64; 2]>,
    input_image: &RadianceImage,
    a0: f64,
) -> crate::Result<(ScalarMap, ScalarMap)> {
    input_image.ensure_dims(positions.dims())?;
    let (h, w) = positions.dims();
    let alpha1 = (0..h * w)
        .map(|i| {
            let p = &positions.as_slice()[i];
            let c = min_channel(input_image, i);
            let spatial = (-norm2(p) / (SIGMA_R0 * SIGMA_R0)).exp();
            let color = (-(c - 1.0).powi(2) / (SIGMA_R1 * SIGMA_R1)).exp();
            spatial.max(color)
        })
        .collect();
    Ok((Grid::filled(h, w, a0), Grid::from_vec(h, w, alpha1)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rgb;
    use approx::assert_relative_eq;

    fn image(h: usize, w: usize, v: f64) -> RadianceImage {
        Grid::filled(h, w, Rgb::repeat(v))
    }

    #[test]
    fn positions_are_centered() {
        let p = centered_positions(3, 3);
        assert_eq!(p[(1, 1)], [0.0, 0.0]);
        assert_eq!(p[(0, 0)], [-1.0, 1.0]);
        assert_eq!(p[(2, 2)], [1.0, -1.0]);
    }

    #[test]
    fn diffuse_weight_examples() {
        let p = centered_positions(3, 3);
        let white = diffuse_unary_weight_map(&p, &image(3, 3, 1.0), 2.0, 0.25).unwrap();
        assert_eq!(white[(1, 1)], 0.25);
        let dark = diffuse_unary_weight_map(&p, &image(3, 3, 0.0), 2.0, 0.25).unwrap();
        // max(1 - e^-8, 1 - e^-156.25) = 1 - e^-156.25 to double precision
        assert_relative_eq!(dark[(0, 0)], 2.0 * 1.0 + 0.25, epsilon = 1e-12);
        assert!(dark[(0, 0)] > 2.0 * 0.999_664_537_372_097 + 0.25 - 1e-12);
    }

    #[test]
    fn diffuse_weight_monotone_in_radius() {
        let p = centered_positions(1, 21);
        let w = diffuse_unary_weight_map(&p, &image(1, 21, 0.9), 1.0, 0.0).unwrap();
        for c in 10..20 {
            assert!(w[(0, c + 1)] >= w[(0, c)]);
        }
    }

    #[test]
    fn roughness_weight_examples() {
        let p = centered_positions(3, 3);
        let (a0, a1) = roughness_unary_weight_map(&p, &image(3, 3, 1.0), 0.7).unwrap();
        assert_eq!(a1[(1, 1)], 1.0);
        assert!(a0.iter().all(|v| *v == 0.7));
        let (_, a1) = roughness_unary_weight_map(&p, &image(3, 3, 0.0), 0.7).unwrap();
        assert_relative_eq!(a1[(2, 0)], 0.000_335_462_627_902_511_8, epsilon = 1e-15);
        assert!(a1.iter().all(|v| *v > 0.0 && *v <= 1.0));
    }
}
