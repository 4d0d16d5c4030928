//! Deterministic dataset generation: per-image RNG streams derived from
//! (master_seed, image_index), optional data-parallel execution, and
//! manifest assembly. Output bytes are identical for any worker count.

use crate::error::{Error, Result};
use crate::geometry::{generate_layout, sample_target_count, FieldLayout, LayoutParams, TissueClass};
use crate::io::{
    atomic_write, encode_image_png, encode_mask_png, make_sidecar, sha256_hex, write_manifest,
    FileRecord, Manifest, TOOL_VERSION,
};
use crate::render::{
    render_adversarial, render_cspws, render_he, FieldSample, Modality, RenderOptions,
    RenderParams,
};
use crate::rng::{mix64, StreamRng};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Default for SplitCounts {
    fn default() -> Self {
        SplitCounts { train: 1200, val: 200, test: 200 }
    }
}

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }

    /// Split name for a global image index (train, then val, then test).
    pub fn split_of(&self, index: usize) -> &'static str {
        if index < self.train {
            "train"
        } else if index < self.train + self.val {
            "val"
        } else {
            "test"
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub modality: Modality,
    #[serde(default)]
    pub counts: SplitCounts,
    #[serde(default = "default_image_size")]
    pub image_size: usize,
    #[serde(default = "default_pixel_size")]
    pub pixel_size: f64,
    #[serde(default)]
    pub master_seed: u64,
    /// Fraction of dysplasia-class images.
    #[serde(default = "default_class_mix")]
    pub class_mix: Option<f64>,
    #[serde(default)]
    pub render: RenderParams,
    #[serde(default)]
    pub layout: LayoutParams,
}

fn default_image_size() -> usize {
    256
}

fn default_pixel_size() -> f64 {
    0.5
}

fn default_class_mix() -> Option<f64> {
    None
}

impl DatasetConfig {
    pub fn new(modality: Modality, master_seed: u64) -> Self {
        DatasetConfig {
            modality,
            counts: SplitCounts::default(),
            image_size: default_image_size(),
            pixel_size: default_pixel_size(),
            master_seed,
            class_mix: None,
            render: RenderParams::default(),
            layout: LayoutParams::default(),
        }
    }

    /// Dysplasia fraction: explicit override, else 0.5 for csPWS (the
    /// biomarker-analysis modality) and 0 otherwise.
    pub fn effective_class_mix(&self) -> f64 {
        self.class_mix.unwrap_or(match self.modality {
            Modality::Cspws => 0.5,
            _ => 0.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.image_size < 128 {
            return Err(Error::Parameter(format!(
                "image_size {} below the 128 px layout minimum",
                self.image_size
            )));
        }
        if self.pixel_size <= 0.0 {
            return Err(Error::Parameter("pixel_size must be > 0".into()));
        }
        if let Some(mix) = self.class_mix {
            if !(0.0..=1.0).contains(&mix) {
                return Err(Error::Parameter(format!("class_mix {mix} outside [0,1]")));
            }
        }
        Ok(())
    }
}

/// Stable per-image stream id.
pub fn image_stream_id(master_seed: u64, index: usize) -> u64 {
    mix64(&[master_seed, index as u64])
}

/// Generates one sample, fully determined by (config, index).
pub fn generate_sample(config: &DatasetConfig, index: usize) -> Result<(FieldSample, FieldLayout)> {
    config.validate()?;
    let stream = image_stream_id(config.master_seed, index);
    let mut rng = StreamRng::new(config.master_seed, stream);
    let tissue_class = if rng.gen::<f64>() < config.effective_class_mix() {
        TissueClass::Dysplasia
    } else {
        TissueClass::Normal
    };
    let scale = (config.image_size * config.image_size) as f64 / (256.0 * 256.0);
    let target = ((sample_target_count(&config.layout, &mut rng) as f64 * scale).round()
        as usize)
        .max(1);
    let layout = generate_layout(
        config.image_size,
        config.image_size,
        target,
        tissue_class,
        &config.layout,
        &mut rng,
    )?;
    let options = RenderOptions::default();
    let sample = match config.modality {
        Modality::Adversarial => render_adversarial(&layout, &mut rng, &config.render)?,
        Modality::Cspws => render_cspws(&layout, &mut rng, &config.render, &options)?,
        Modality::He => render_he(&layout, &mut rng, &config.render, &options)?,
    };
    Ok((sample, layout))
}

struct ImageOutput {
    records: Vec<FileRecord>,
}

fn generate_one(
    config: &DatasetConfig,
    out_dir: &Path,
    params_hash: &str,
    index: usize,
) -> Result<ImageOutput> {
    let (sample, layout) = generate_sample(config, index)?;
    let split = config.counts.split_of(index);
    let rel_dir = format!("{}/{}", config.modality.as_str(), split);
    let dir = out_dir.join(&rel_dir);

    let img_rel = format!("{rel_dir}/img_{index:05}.png");
    let mask_rel = format!("{rel_dir}/mask_{index:05}.png");
    let meta_rel = format!("{rel_dir}/meta_{index:05}.json");

    let img_bytes = encode_image_png(&sample)?;
    let mask_bytes = encode_mask_png(&sample.mask)?;
    let sidecar = make_sidecar(&sample, &layout, params_hash);
    let mut meta_bytes = serde_json::to_vec_pretty(&sidecar)?;
    meta_bytes.push(b'\n');

    atomic_write(&dir.join(format!("img_{index:05}.png")), &img_bytes)?;
    atomic_write(&dir.join(format!("mask_{index:05}.png")), &mask_bytes)?;
    atomic_write(&dir.join(format!("meta_{index:05}.json")), &meta_bytes)?;

    let make = |path: String, bytes: &[u8], with_stats: bool| FileRecord {
        path,
        split: split.to_string(),
        sha256: sha256_hex(bytes),
        nucleus_count: with_stats.then_some(layout.nuclei.len()),
        measured_snr_db: if with_stats { sample.meta.measured_snr_db } else { None },
    };
    Ok(ImageOutput {
        records: vec![
            make(img_rel, &img_bytes, true),
            make(mask_rel, &mask_bytes, false),
            make(meta_rel, &meta_bytes, false),
        ],
    })
}

#[derive(Debug)]
pub struct GenerateOutcome {
    pub manifest: Manifest,
    /// (image index, error message) for images that failed to generate.
    pub failures: Vec<(usize, String)>,
}

/// Generates the full dataset under `out_dir` and writes the manifest
/// last. `workers` controls the thread count (0 or 1 = sequential; with
/// the `parallel` feature disabled the value is ignored). Results are
/// byte-identical for any worker count.
pub fn generate_dataset(
    config: &DatasetConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<GenerateOutcome> {
    config.validate()?;
    let params_hash = sha256_hex(&serde_json::to_vec(config)?);
    let total = config.counts.total();
    let indices: Vec<usize> = (0..total).collect();

    let run = |index: &usize| -> std::result::Result<ImageOutput, (usize, String)> {
        generate_one(config, out_dir, &params_hash, *index).map_err(|e| (*index, e.to_string()))
    };

    #[cfg(feature = "parallel")]
    let results: Vec<std::result::Result<ImageOutput, (usize, String)>> = if workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
        pool.install(|| indices.par_iter().map(run).collect())
    } else {
        indices.iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<std::result::Result<ImageOutput, (usize, String)>> = {
        let _ = workers;
        indices.iter().map(run).collect()
    };

    let mut files = Vec::with_capacity(3 * total);
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(out) => files.extend(out.records),
            Err(f) => failures.push(f),
        }
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = Manifest {
        tool_version: TOOL_VERSION.to_string(),
        config: serde_json::to_value(config)?,
        generation_failures: failures.len(),
        files,
    };
    write_manifest(out_dir, &manifest)?;
    Ok(GenerateOutcome { manifest, failures })
}

/// Sequential twin of `generate_dataset`, always compiled; used by the
/// benchmark suite to compare against the parallel path.
pub fn generate_dataset_seq(config: &DatasetConfig, out_dir: &Path) -> Result<GenerateOutcome> {
    generate_dataset(config, out_dir, 1)
}
