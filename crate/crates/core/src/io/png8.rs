//! 8-bit PNG encodings: normals as `(n + 1) / 2`, albedo with a 2.2 gamma,
//! roughness linear, and tonemapped radiance previews.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{ColorMap, Grid, NormalMap, RadianceImage, ScalarMap};
use crate::scene::tonemap;
use crate::{Rgb, Vec3};

/// Interleaved 8-bit RGB pixels, rows top to bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rgb8Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

#[inline]
fn quantize(x: f64) -> u8 {
    (255.0 * x).round().clamp(0.0, 255.0) as u8
}

pub fn encode_normal(n: &Vec3) -> [u8; 3] {
    [
        quantize((n.x + 1.0) / 2.0),
        quantize((n.y + 1.0) / 2.0),
        quantize((n.z + 1.0) / 2.0),
    ]
}

/// Inverse of [`encode_normal`] followed by renormalization.
///
/// Plain renormalization of the cell center can land in a neighboring
/// cell. When it does, the unit vector is found by bisection on the segment
/// joining the cell's nearest and farthest points from the origin.
pub fn decode_normal(p: [u8; 3]) -> Vec3 {
    let center = Vec3::new(
        2.0 * p[0] as f64 / 255.0 - 1.0,
        2.0 * p[1] as f64 / 255.0 - 1.0,
        2.0 * p[2] as f64 / 255.0 - 1.0,
    );
    let len = center.norm();
    if !(len > 0.0) {
        return Vec3::z();
    }
    let v = center / len;
    if encode_normal(&v) == p {
        return v;
    }
    let half = 0.999 / 255.0;
    let near = Vec3::from_fn(|i, _| 0f64.clamp(center[i] - half, center[i] + half));
    let far = Vec3::from_fn(|i, _| center[i] + half * if center[i] >= 0.0 { 1.0 } else { -1.0 });
    if near.norm() > 1.0 || far.norm() < 1.0 {
        return v;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if (near + (far - near) * mid).norm() < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (near + (far - near) * hi).normalize()
}

pub fn encode_normal_png(normal: &NormalMap) -> Rgb8Image {
    Rgb8Image {
        width: normal.width(),
        height: normal.height(),
        data: normal.iter().flat_map(encode_normal).collect(),
    }
}

pub fn decode_normal_png(image: &Rgb8Image) -> Result<NormalMap> {
    let v = image
        .data
        .chunks_exact(3)
        .map(|c| decode_normal([c[0], c[1], c[2]]))
        .collect();
    Grid::from_vec(image.height, image.width, v)
}

pub const ALBEDO_GAMMA: f64 = 2.2;

pub fn encode_albedo_png(albedo: &ColorMap) -> Rgb8Image {
    Rgb8Image {
        width: albedo.width(),
        height: albedo.height(),
        data: albedo
            .iter()
            .flat_map(|a| a.iter().map(|v| quantize(v.clamp(0.0, 1.0).powf(1.0 / ALBEDO_GAMMA))).collect::<Vec<_>>())
            .collect(),
    }
}

pub fn decode_albedo_png(image: &Rgb8Image) -> Result<ColorMap> {
    let v = image
        .data
        .chunks_exact(3)
        .map(|c| Rgb::from_fn(|i, _| (c[i] as f64 / 255.0).powf(ALBEDO_GAMMA)))
        .collect();
    Grid::from_vec(image.height, image.width, v)
}

/// Gray roughness replicated into three channels.
pub fn encode_roughness_png(roughness: &ScalarMap) -> Rgb8Image {
    Rgb8Image {
        width: roughness.width(),
        height: roughness.height(),
        data: roughness.iter().flat_map(|r| [quantize(*r); 3]).collect(),
    }
}

/// Mean of the three channels.
pub fn decode_roughness_png(image: &Rgb8Image) -> Result<ScalarMap> {
    let v = image
        .data
        .chunks_exact(3)
        .map(|c| (c[0] as f64 + c[1] as f64 + c[2] as f64) / (3.0 * 255.0))
        .collect();
    Grid::from_vec(image.height, image.width, v)
}

/// Tonemapped radiance preview, clipped to display white.
pub fn encode_preview_png(image: &RadianceImage) -> Rgb8Image {
    Rgb8Image {
        width: image.width(),
        height: image.height(),
        data: image
            .iter()
            .flat_map(|p| [quantize(tonemap(p.x)), quantize(tonemap(p.y)), quantize(tonemap(p.z))])
            .collect(),
    }
}

fn png_error(e: impl std::fmt::Display) -> Error {
    Error::format(format!("png: {e}"))
}

pub fn write_png_file(path: impl AsRef<Path>, image: &Rgb8Image) -> Result<()> {
    if image.data.len() != image.width * image.height * 3 {
        return Err(Error::invalid("image data length does not match its shape"));
    }
    let file = BufWriter::new(File::create(path)?);
    let mut encoder = png::Encoder::new(file, image.width as u32, image.height as u32);
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(png_error)?;
    writer.write_image_data(&image.data).map_err(png_error)?;
    writer.finish().map_err(png_error)?;
    Ok(())
}

/// Reads an 8-bit PNG as RGB. Gray is replicated and alpha dropped.
pub fn read_png_file(path: impl AsRef<Path>) -> Result<Rgb8Image> {
    let mut decoder = png::Decoder::new(BufReader::new(File::open(path)?));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(png_error)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::format("png too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(png_error)?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::format("only 8-bit PNG maps are supported"));
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let stride = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => return Err(Error::format("unexpanded palette PNG")),
    };
    let mut data = Vec::with_capacity(width * height * 3);
    for r in 0..height {
        let row = &buf[r * info.line_size..r * info.line_size + width * stride];
        for px in row.chunks_exact(stride) {
            if stride < 3 {
                data.extend_from_slice(&[px[0]; 3]);
            } else {
                data.extend_from_slice(&px[..3]);
            }
        }
    }
    Ok(Rgb8Image { width, height, data })
}
