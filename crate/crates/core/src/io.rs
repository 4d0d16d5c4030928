//! Dataset file I/O: PNG encoding of images and masks, per-image JSON
//! sidecars, SHA-256 manifests, and manifest verification.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{FieldLayout, InstanceMask, TissueClass};
use crate::render::{FieldSample, Modality, SampleMeta};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;

/// Encodes a rendered sample as PNG bytes: csPWS as 16-bit grayscale
/// (value = round(65535 * sigma)), the RGB modalities as 8-bit RGB.
pub fn encode_image_png(sample: &FieldSample) -> Result<Vec<u8>> {
    let w = sample.mask.width() as u32;
    let h = sample.mask.height() as u32;
    let mut bytes = Vec::new();
    let mut cursor = std::io::Cursor::new(&mut bytes);
    match sample.meta.modality {
        Modality::Cspws => {
            let plane = &sample.image[0];
            let mut img = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::new(w, h);
            for (x, y, p) in img.enumerate_pixels_mut() {
                let v = plane.get(x as usize, y as usize).clamp(0.0, 1.0);
                *p = image::Luma([(v * 65535.0).round() as u16]);
            }
            img.write_to(&mut cursor, image::ImageFormat::Png)?;
        }
        _ => {
            if sample.image.len() != 3 {
                return Err(Error::Input("RGB modality needs 3 channels".into()));
            }
            let mut img = image::RgbImage::new(w, h);
            for (x, y, p) in img.enumerate_pixels_mut() {
                let mut rgb = [0u8; 3];
                for (c, b) in rgb.iter_mut().enumerate() {
                    let v = sample.image[c].get(x as usize, y as usize).clamp(0.0, 1.0);
                    *b = (v * 255.0).round() as u8;
                }
                *p = image::Rgb(rgb);
            }
            img.write_to(&mut cursor, image::ImageFormat::Png)?;
        }
    }
    drop(cursor);
    Ok(bytes)
}

/// Encodes an instance mask as 16-bit grayscale PNG with raw labels.
pub fn encode_mask_png(mask: &InstanceMask) -> Result<Vec<u8>> {
    let w = mask.width() as u32;
    let h = mask.height() as u32;
    let mut img = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::new(w, h);
    for (x, y, p) in img.enumerate_pixels_mut() {
        let label = mask.get(x as usize, y as usize);
        if label > u16::MAX as u32 {
            return Err(Error::Input(format!("label {label} exceeds 16-bit range")));
        }
        *p = image::Luma([label as u16]);
    }
    let mut bytes = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)?;
    Ok(bytes)
}

/// Loads an image PNG back into unit-range channel planes (1 channel
/// for 16-bit grayscale, 3 for 8-bit RGB).
pub fn read_image_png(path: &Path) -> Result<Vec<ScalarField>> {
    let dynamic = image::open(path)?;
    let (w, h) = (dynamic.width() as usize, dynamic.height() as usize);
    match dynamic {
        image::DynamicImage::ImageLuma16(img) => {
            let mut plane = ScalarField::new(w, h)?;
            for (x, y, p) in img.enumerate_pixels() {
                plane.set(x as usize, y as usize, p.0[0] as f64 / 65535.0);
            }
            Ok(vec![plane])
        }
        other => {
            let rgb = other.to_rgb8();
            let mut planes =
                vec![ScalarField::new(w, h)?, ScalarField::new(w, h)?, ScalarField::new(w, h)?];
            for (x, y, p) in rgb.enumerate_pixels() {
                for c in 0..3 {
                    planes[c].set(x as usize, y as usize, p.0[c] as f64 / 255.0);
                }
            }
            Ok(planes)
        }
    }
}

/// Loads a 16-bit grayscale mask PNG.
pub fn read_mask_png(path: &Path) -> Result<InstanceMask> {
    let dynamic = image::open(path)?;
    let (w, h) = (dynamic.width() as usize, dynamic.height() as usize);
    let image::DynamicImage::ImageLuma16(img) = dynamic else {
        return Err(Error::Input(format!(
            "{}: masks must be 16-bit grayscale PNG",
            path.display()
        )));
    };
    let mut mask = InstanceMask::new(w, h)?;
    for (x, y, p) in img.enumerate_pixels() {
        mask.set(x as usize, y as usize, p.0[0] as u32);
    }
    Ok(mask)
}

// ---------------------------------------------------------------------------
// Sidecar

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NucleusRecord {
    pub id: u32,
    pub tissue_class: TissueClass,
    pub center: [f64; 2],
    pub packing_fraction: f64,
    pub equivalent_radius: f64,
}

/// Per-image JSON sidecar: seeds, modality, parameter hash, measured
/// SNR, and the nucleus table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub meta: SampleMeta,
    pub params_sha256: String,
    pub nuclei: Vec<NucleusRecord>,
}

pub fn make_sidecar(sample: &FieldSample, layout: &FieldLayout, params_sha256: &str) -> Sidecar {
    Sidecar {
        meta: sample.meta.clone(),
        params_sha256: params_sha256.to_string(),
        nuclei: layout
            .nuclei
            .iter()
            .map(|n| NucleusRecord {
                id: n.id,
                tissue_class: n.tissue_class,
                center: n.center,
                packing_fraction: n.packing_fraction,
                equivalent_radius: n.equivalent_radius,
            })
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// Hashing and atomic writes

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

/// Writes via a sibling temp file + rename so partial writes are never
/// observable at the final path.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().ok_or_else(|| Error::Input("path has no parent".into()))?;
    fs::create_dir_all(dir)?;
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Input("path has no file name".into()))?
        .to_string_lossy()
        .into_owned();
    let tmp = dir.join(format!(".{file_name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Manifest

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileRecord {
    /// Path relative to the manifest's directory.
    pub path: String,
    pub split: String,
    pub sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nucleus_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured_snr_db: Option<f64>,
}

/// Dataset inventory. Contains no wall-clock data so regeneration with
/// the same config and seed is byte-identical.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config: serde_json::Value,
    pub generation_failures: usize,
    pub files: Vec<FileRecord>,
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(manifest)?;
    bytes.push(b'\n');
    atomic_write(&dir.join(MANIFEST_NAME), &bytes)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_NAME);
    if !path.exists() {
        return Err(Error::Input(format!("no {MANIFEST_NAME} in {}", dir.display())));
    }
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum VerifyIssue {
    Missing { path: String },
    HashMismatch { path: String, expected: String, actual: String },
}

/// Re-hashes every manifest entry; empty result means the dataset is
/// intact.
pub fn verify_manifest(dir: &Path) -> Result<Vec<VerifyIssue>> {
    let manifest = read_manifest(dir)?;
    let mut issues = Vec::new();
    for record in &manifest.files {
        let path = dir.join(&record.path);
        if !path.exists() {
            issues.push(VerifyIssue::Missing { path: record.path.clone() });
            continue;
        }
        let actual = sha256_file(&path)?;
        if actual != record.sha256 {
            issues.push(VerifyIssue::HashMismatch {
                path: record.path.clone(),
                expected: record.sha256.clone(),
                actual,
            });
        }
    }
    Ok(issues)
}
