//! Portable float maps: little-endian `f32`, rows stored bottom to top.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{ColorMap, Grid, ScalarMap};
use crate::Rgb;

/// Largest accepted pixel count.
pub const MAX_PIXELS: usize = 1 << 28;

/// Decoded float image, rows top to bottom, channels interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct PfmImage {
    pub width: usize,
    pub height: usize,
    /// 1 (`Pf`) or 3 (`PF`).
    pub channels: usize,
    pub data: Vec<f32>,
}

impl PfmImage {
    pub fn from_color(map: &ColorMap) -> Self {
        Self {
            width: map.width(),
            height: map.height(),
            channels: 3,
            data: map.iter().flat_map(|c| [c.x as f32, c.y as f32, c.z as f32]).collect(),
        }
    }

    pub fn from_scalar(map: &ScalarMap) -> Self {
        Self {
            width: map.width(),
            height: map.height(),
            channels: 1,
            data: map.iter().map(|v| *v as f32).collect(),
        }
    }

    /// Three-channel map. A gray image is replicated into all channels.
    pub fn to_color(&self) -> Result<ColorMap> {
        let px: Vec<Rgb> = match self.channels {
            3 => self
                .data
                .chunks_exact(3)
                .map(|c| Rgb::new(c[0] as f64, c[1] as f64, c[2] as f64))
                .collect(),
            _ => self.data.iter().map(|v| Rgb::repeat(*v as f64)).collect(),
        };
        Grid::from_vec(self.height, self.width, px)
    }

    pub fn to_scalar(&self) -> Result<ScalarMap> {
        if self.channels != 1 {
            return Err(Error::format("expected a single-channel (Pf) map"));
        }
        Grid::from_vec(self.height, self.width, self.data.iter().map(|v| *v as f64).collect())
    }
}

fn token<R: BufRead>(reader: &mut R) -> Result<String> {
    let mut out = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if reader.read(&mut byte)? == 0 {
            return Err(Error::format("truncated PFM header"));
        }
        if byte[0].is_ascii_whitespace() {
            if out.is_empty() {
                continue;
            }
            break;
        }
        out.push(byte[0]);
        if out.len() > 64 {
            return Err(Error::format("PFM header token too long"));
        }
    }
    String::from_utf8(out).map_err(|_| Error::format("PFM header is not ASCII"))
}

pub fn read_pfm<R: Read>(reader: R) -> Result<PfmImage> {
    let mut reader = BufReader::new(reader);
    let channels = match token(&mut reader)?.as_str() {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(Error::format(format!("unknown PFM magic {other:?}"))),
    };
    let dim = |s: String| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| Error::format(format!("bad PFM dimension {s:?}")))
    };
    let width = dim(token(&mut reader)?)?;
    let height = dim(token(&mut reader)?)?;
    let scale: f64 = token(&mut reader)?
        .parse()
        .map_err(|_| Error::format("bad PFM scale"))?;
    if !(scale < 0.0) {
        return Err(Error::format(format!(
            "PFM scale {scale} marks big-endian data, which is not supported"
        )));
    }
    let pixels = width
        .checked_mul(height)
        .filter(|p| *p <= MAX_PIXELS)
        .ok_or_else(|| Error::format(format!("PFM dimensions {width}x{height} too large")))?;
    let count = pixels * channels;
    let mut bytes = vec![0u8; count * 4];
    reader
        .read_exact(&mut bytes)
        .map_err(|_| Error::format("PFM pixel data truncated"))?;
    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    let row = width * channels;
    let mut data = Vec::with_capacity(count);
    for r in (0..height).rev() {
        data.extend_from_slice(&values[r * row..(r + 1) * row]);
    }
    Ok(PfmImage {
        width,
        height,
        channels,
        data,
    })
}

pub fn write_pfm<W: Write>(writer: W, image: &PfmImage) -> Result<()> {
    let magic = match image.channels {
        3 => "PF",
        1 => "Pf",
        c => return Err(Error::invalid(format!("PFM holds 1 or 3 channels, not {c}"))),
    };
    if image.data.len() != image.width * image.height * image.channels {
        return Err(Error::invalid("PFM data length does not match its shape"));
    }
    let mut w = BufWriter::new(writer);
    write!(w, "{magic}\n{} {}\n-1.0\n", image.width, image.height)?;
    let row = image.width * image.channels;
    for r in (0..image.height).rev() {
        for v in &image.data[r * row..(r + 1) * row] {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_pfm_file(path: impl AsRef<Path>) -> Result<PfmImage> {
    read_pfm(File::open(path)?)
}

pub fn write_pfm_file(path: impl AsRef<Path>, image: &PfmImage) -> Result<()> {
    write_pfm(File::create(path)?, image)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_gray_pixel() {
        let mut bytes = b"Pf\n1 1\n-1.0\n".to_vec();
        bytes.extend_from_slice(&0.5f32.to_le_bytes());
        let img = read_pfm(&bytes[..]).unwrap();
        assert_eq!(img.to_scalar().unwrap()[(0, 0)], 0.5);
    }

    #[test]
    fn big_endian_rejected() {
        let mut bytes = b"Pf\n1 1\n1.0\n".to_vec();
        bytes.extend_from_slice(&0.5f32.to_be_bytes());
        assert!(matches!(read_pfm(&bytes[..]), Err(Error::Format(_))));
    }

    #[test]
    fn malformed_headers_rejected() {
        assert!(read_pfm(&b"P6\n1 1\n-1.0\n"[..]).is_err());
        assert!(read_pfm(&b"PF\n-3 1\n-1.0\n"[..]).is_err());
        assert!(read_pfm(&b"PF\n99999999 99999999\n-1.0\n"[..]).is_err());
        assert!(read_pfm(&b"PF\n2 2\n-1.0\n\0\0"[..]).is_err());
    }

    #[test]
    fn rows_stored_bottom_up() {
        let img = PfmImage {
            width: 1,
            height: 2,
            channels: 1,
            data: vec![1.0, 2.0],
        };
        let mut bytes = Vec::new();
        write_pfm(&mut bytes, &img).unwrap();
        let body = &bytes[bytes.len() - 8..];
        assert_eq!(&body[..4], &2.0f32.to_le_bytes());
    }

    proptest! {
        #[test]
        fn round_trip_bit_exact(
            w in 1usize..6, h in 1usize..6, gray in any::<bool>(),
            seed in proptest::collection::vec(any::<u32>(), 108),
        ) {
            let channels = if gray { 1 } else { 3 };
            let data: Vec<f32> = (0..w * h * channels).map(|i| f32::from_bits(seed[i] & 0x7f7f_ffff)).collect();
            let img = PfmImage { width: w, height: h, channels, data };
            let mut bytes = Vec::new();
            write_pfm(&mut bytes, &img).unwrap();
            let back = read_pfm(&bytes[..]).unwrap();
            prop_assert_eq!(back.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                            img.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            let mut again = Vec::new();
            write_pfm(&mut again, &back).unwrap();
            prop_assert_eq!(bytes, again);
        }
    }
}
