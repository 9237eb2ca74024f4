//! File formats: PFM for linear data, 8-bit PNG for encoded maps and
//! previews, and a JSON manifest tying a material's three maps together.

pub mod pfm;
pub mod png8;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::brdf::{F0_DIELECTRIC_DEFAULT, R_MIN};
use crate::error::{Error, Result};
use crate::grid::{RadianceImage, SvbrdfMaps};

pub use pfm::{read_pfm, read_pfm_file, write_pfm, write_pfm_file, PfmImage};
pub use png8::{decode_normal_png, encode_normal_png, read_png_file, write_png_file, Rgb8Image};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapEncoding {
    #[serde(rename = "linear-float")]
    LinearFloat,
    #[serde(rename = "8-bit-encoded")]
    EightBit,
}

/// Paths are relative to the manifest's directory unless absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFileSet {
    pub albedo_path: PathBuf,
    pub normal_path: PathBuf,
    pub roughness_path: PathBuf,
    pub encoding: MapEncoding,
    #[serde(default = "default_f0")]
    pub f0: f64,
}

fn default_f0() -> f64 {
    F0_DIELECTRIC_DEFAULT
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl MapFileSet {
    pub fn read(manifest: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(manifest)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Loads and validates the maps. Eight-bit roughness is clamped to
    /// `[R_MIN, 1]` after decoding.
    pub fn load(&self, base: &Path) -> Result<SvbrdfMaps> {
        let a = resolve(base, &self.albedo_path);
        let n = resolve(base, &self.normal_path);
        let r = resolve(base, &self.roughness_path);
        let maps = match self.encoding {
            MapEncoding::LinearFloat => {
                let normal = read_pfm_file(n)?.to_color()?.map(|v| {
                    let len = v.norm();
                    if len > 0.0 {
                        v / len
                    } else {
                        crate::Vec3::z()
                    }
                });
                SvbrdfMaps {
                    albedo: read_pfm_file(a)?.to_color()?,
                    normal,
                    roughness: read_pfm_file(r)?.to_scalar()?,
                    f0: self.f0,
                }
            }
            MapEncoding::EightBit => SvbrdfMaps {
                albedo: png8::decode_albedo_png(&read_png_file(a)?)?,
                normal: decode_normal_png(&read_png_file(n)?)?,
                roughness: png8::decode_roughness_png(&read_png_file(r)?)?.map(|v| v.clamp(R_MIN, 1.0)),
                f0: self.f0,
            },
        };
        maps.validate()?;
        Ok(maps)
    }

    /// Writes `maps` as `<stem>_albedo`, `<stem>_normal`, `<stem>_roughness`
    /// into `dir` and returns the matching manifest entry with relative paths.
    pub fn save(dir: &Path, stem: &str, maps: &SvbrdfMaps, encoding: MapEncoding) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let ext = match encoding {
            MapEncoding::LinearFloat => "pfm",
            MapEncoding::EightBit => "png",
        };
        let set = Self {
            albedo_path: format!("{stem}_albedo.{ext}").into(),
            normal_path: format!("{stem}_normal.{ext}").into(),
            roughness_path: format!("{stem}_roughness.{ext}").into(),
            encoding,
            f0: maps.f0,
        };
        match encoding {
            MapEncoding::LinearFloat => {
                write_pfm_file(dir.join(&set.albedo_path), &PfmImage::from_color(&maps.albedo))?;
                write_pfm_file(dir.join(&set.normal_path), &PfmImage::from_color(&maps.normal))?;
                write_pfm_file(dir.join(&set.roughness_path), &PfmImage::from_scalar(&maps.roughness))?;
            }
            MapEncoding::EightBit => {
                write_png_file(dir.join(&set.albedo_path), &png8::encode_albedo_png(&maps.albedo))?;
                write_png_file(dir.join(&set.normal_path), &encode_normal_png(&maps.normal))?;
                write_png_file(dir.join(&set.roughness_path), &png8::encode_roughness_png(&maps.roughness))?;
            }
        }
        Ok(set)
    }

    pub fn write(&self, manifest: impl AsRef<Path>) -> Result<()> {
        std::fs::write(manifest, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Loads the maps named by a manifest file.
pub fn load_maps(manifest: impl AsRef<Path>) -> Result<SvbrdfMaps> {
    let manifest = manifest.as_ref();
    let set = MapFileSet::read(manifest)?;
    set.load(manifest.parent().unwrap_or(Path::new(".")))
}

/// Saves maps next to `manifest` and writes the manifest.
pub fn save_maps(manifest: impl AsRef<Path>, maps: &SvbrdfMaps, encoding: MapEncoding) -> Result<MapFileSet> {
    let manifest = manifest.as_ref();
    let dir = manifest.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let stem = manifest
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::invalid("manifest path has no file name"))?;
    let set = MapFileSet::save(dir, stem, maps, encoding)?;
    set.write(manifest)?;
    Ok(set)
}

/// Linear radiance from a PFM file; gray files are replicated.
pub fn read_radiance(path: impl AsRef<Path>) -> Result<RadianceImage> {
    read_pfm_file(path)?.to_color()
}

pub fn write_radiance(path: impl AsRef<Path>, image: &RadianceImage) -> Result<()> {
    write_pfm_file(path, &PfmImage::from_color(image))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::smooth_random_maps;

    fn to_f32(maps: &SvbrdfMaps) -> SvbrdfMaps {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("m.json");
        save_maps(&m, maps, MapEncoding::LinearFloat).unwrap();
        load_maps(&m).unwrap()
    }

    #[test]
    fn linear_manifest_round_trip() {
        let maps = to_f32(&smooth_random_maps(2, 5, 7, 0.05));
        let again = to_f32(&maps);
        assert_eq!(again.albedo, maps.albedo);
        assert_eq!(again.roughness, maps.roughness);
        for (a, b) in again.normal.iter().zip(maps.normal.iter()) {
            assert!((a - b).amax() < 1e-6);
        }
    }

    #[test]
    fn eight_bit_manifest_loads() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("mat.json");
        let maps = smooth_random_maps(3, 4, 4, 0.5);
        let set = save_maps(&m, &maps, MapEncoding::EightBit).unwrap();
        assert_eq!(set.albedo_path, PathBuf::from("mat_albedo.png"));
        let back = load_maps(&m).unwrap();
        assert_eq!(back.f0, 0.5);
        for (a, b) in back.roughness.iter().zip(maps.roughness.iter()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }

    #[test]
    fn manifest_json_names() {
        let json = r#"{"albedo_path":"a.pfm","normal_path":"n.pfm","roughness_path":"r.pfm","encoding":"linear-float"}"#;
        let set: MapFileSet = serde_json::from_str(json).unwrap();
        assert_eq!(set.encoding, MapEncoding::LinearFloat);
        assert_eq!(set.f0, 0.05);
        assert!(serde_json::from_str::<MapFileSet>(&json.replace("linear-float", "exr")).is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_maps(dir.path().join("none.json")), Err(Error::Io(_))));
    }
}
