//! Training-time augmentations. Geometric ops warp image (bilinear) and
//! mask (nearest-neighbor) with the identical transform; photometric ops
//! touch only the image.

use crate::error::Result;
use crate::fft::gaussian_blur_periodic;
use crate::field::ScalarField;
use crate::geometry::InstanceMask;
use crate::render::FieldSample;
use crate::rng::StreamRng;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};

/// Scales the elastic displacement field; calibrated so per-label mask
/// area changes stay within 10% at the reference alpha = 50.
const ELASTIC_GAIN: f64 = 0.022;

#[derive(Debug, Clone, Copy, Default)]
pub struct AugmentConfig {
    pub rotation: bool,
    pub hflip: bool,
    pub vflip: bool,
    pub elastic: bool,
    pub gaussian_noise: bool,
    pub intensity_scale: bool,
    pub speckle: bool,
}

impl AugmentConfig {
    pub fn all() -> Self {
        AugmentConfig {
            rotation: true,
            hflip: true,
            vflip: true,
            elastic: true,
            gaussian_noise: true,
            intensity_scale: true,
            speckle: true,
        }
    }
}

fn bilinear(field: &ScalarField, x: f64, y: f64) -> f64 {
    // sample in pixel-center coordinates; out-of-bounds reads as 0
    let (w, h) = (field.width(), field.height());
    let fx = x - 0.5;
    let fy = y - 0.5;
    let x0 = fx.floor();
    let y0 = fy.floor();
    let tx = fx - x0;
    let ty = fy - y0;
    let at = |ix: f64, iy: f64| -> f64 {
        if ix < 0.0 || iy < 0.0 || ix >= w as f64 || iy >= h as f64 {
            0.0
        } else {
            field.get(ix as usize, iy as usize)
        }
    };
    let v00 = at(x0, y0);
    let v10 = at(x0 + 1.0, y0);
    let v01 = at(x0, y0 + 1.0);
    let v11 = at(x0 + 1.0, y0 + 1.0);
    v00 * (1.0 - tx) * (1.0 - ty) + v10 * tx * (1.0 - ty) + v01 * (1.0 - tx) * ty + v11 * tx * ty
}

fn nearest_label(mask: &InstanceMask, x: f64, y: f64) -> u32 {
    let (w, h) = (mask.width(), mask.height());
    let ix = (x - 0.5).round();
    let iy = (y - 0.5).round();
    if ix < 0.0 || iy < 0.0 || ix >= w as f64 || iy >= h as f64 {
        0
    } else {
        mask.get(ix as usize, iy as usize)
    }
}

/// Warps image and mask with the same backward map: `map(px, py)` gives
/// the source position (pixel-center coordinates) for each output pixel.
fn warp_sample<F: Fn(f64, f64) -> (f64, f64)>(sample: &FieldSample, map: F) -> FieldSample {
    let (w, h) = (sample.mask.width(), sample.mask.height());
    let mut image = Vec::with_capacity(sample.image.len());
    for channel in &sample.image {
        let mut out = channel.clone();
        for y in 0..h {
            for x in 0..w {
                let (sx, sy) = map(x as f64 + 0.5, y as f64 + 0.5);
                out.set(x, y, bilinear(channel, sx, sy).clamp(0.0, 1.0));
            }
        }
        image.push(out);
    }
    let mut mask = InstanceMask::new(w, h).expect("nonzero dims");
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = map(x as f64 + 0.5, y as f64 + 0.5);
            mask.set(x, y, nearest_label(&sample.mask, sx, sy));
        }
    }
    FieldSample { image, mask, meta: sample.meta.clone() }
}

/// Rotation about the image center by `degrees` (counter-clockwise).
pub fn rotate_sample(sample: &FieldSample, degrees: f64) -> FieldSample {
    let (w, h) = (sample.mask.width() as f64, sample.mask.height() as f64);
    let (cx, cy) = (w / 2.0, h / 2.0);
    let rad = degrees.to_radians();
    let (s, c) = (rad.sin(), rad.cos());
    warp_sample(sample, |px, py| {
        let (dx, dy) = (px - cx, py - cy);
        (cx + c * dx + s * dy, cy - s * dx + c * dy)
    })
}

pub fn hflip_sample(sample: &FieldSample) -> FieldSample {
    let w = sample.mask.width() as f64;
    warp_sample(sample, |px, py| (w - px, py))
}

pub fn vflip_sample(sample: &FieldSample) -> FieldSample {
    let h = sample.mask.height() as f64;
    warp_sample(sample, |px, py| (px, h - py))
}

/// Elastic deformation: coarse-grid uniform noise, bilinear upsample,
/// Gaussian smoothing (`sigma`), scaled by `alpha * ELASTIC_GAIN`.
pub fn elastic_sample(
    sample: &FieldSample,
    alpha: f64,
    sigma: f64,
    grid_spacing: usize,
    rng: &mut StreamRng,
) -> Result<FieldSample> {
    let (w, h) = (sample.mask.width(), sample.mask.height());
    let gw = w / grid_spacing + 2;
    let gh = h / grid_spacing + 2;
    let make_field = |rng: &mut StreamRng| -> Vec<f64> {
        let nodes: Vec<f64> = (0..gw * gh).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let mut dense = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let gx = x as f64 / grid_spacing as f64;
                let gy = y as f64 / grid_spacing as f64;
                let (x0, y0) = (gx.floor() as usize, gy.floor() as usize);
                let (tx, ty) = (gx - x0 as f64, gy - y0 as f64);
                let n = |i: usize, j: usize| nodes[j.min(gh - 1) * gw + i.min(gw - 1)];
                dense[y * w + x] = n(x0, y0) * (1.0 - tx) * (1.0 - ty)
                    + n(x0 + 1, y0) * tx * (1.0 - ty)
                    + n(x0, y0 + 1) * (1.0 - tx) * ty
                    + n(x0 + 1, y0 + 1) * tx * ty;
            }
        }
        gaussian_blur_periodic(&dense, w, h, sigma)
    };
    let gain = alpha * ELASTIC_GAIN;
    let dx: Vec<f64> = make_field(rng).into_iter().map(|v| v * gain).collect();
    let dy: Vec<f64> = make_field(rng).into_iter().map(|v| v * gain).collect();
    Ok(warp_sample(sample, |px, py| {
        let x = (px - 0.5).clamp(0.0, (w - 1) as f64) as usize;
        let y = (py - 0.5).clamp(0.0, (h - 1) as f64) as usize;
        (px + dx[y * w + x], py + dy[y * w + x])
    }))
}

pub fn add_gaussian_noise(sample: &FieldSample, sd: f64, rng: &mut StreamRng) -> FieldSample {
    let normal = Normal::new(0.0, sd).expect("valid sd");
    let mut out = sample.clone();
    for channel in out.image.iter_mut() {
        for v in channel.values_mut() {
            *v = (*v + normal.sample(rng)).clamp(0.0, 1.0);
        }
    }
    out
}

pub fn scale_intensity(sample: &FieldSample, factor: f64) -> FieldSample {
    let mut out = sample.clone();
    for channel in out.image.iter_mut() {
        for v in channel.values_mut() {
            *v = (*v * factor).clamp(0.0, 1.0);
        }
    }
    out
}

pub fn apply_speckle(sample: &FieldSample, shape: f64, rng: &mut StreamRng) -> FieldSample {
    let gamma = Gamma::new(shape, 1.0 / shape).expect("valid shape");
    let mut out = sample.clone();
    for channel in out.image.iter_mut() {
        for v in channel.values_mut() {
            *v = (*v * gamma.sample(rng)).clamp(0.0, 1.0);
        }
    }
    out
}

/// Applies every enabled op with freshly drawn parameters. Geometric ops
/// run before photometric ones.
pub fn augment(sample: &FieldSample, rng: &mut StreamRng, config: &AugmentConfig) -> Result<FieldSample> {
    let mut out = sample.clone();
    if config.rotation {
        let degrees = rng.gen_range(-180.0..=180.0);
        out = rotate_sample(&out, degrees);
    }
    if config.hflip && rng.gen::<bool>() {
        out = hflip_sample(&out);
    }
    if config.vflip && rng.gen::<bool>() {
        out = vflip_sample(&out);
    }
    if config.elastic {
        out = elastic_sample(&out, 50.0, 5.0, 32, rng)?;
    }
    if config.gaussian_noise {
        let sd = rng.gen_range(0.01..=0.05);
        out = add_gaussian_noise(&out, sd, rng);
    }
    if config.intensity_scale {
        let factor = rng.gen_range(0.85..=1.15);
        out = scale_intensity(&out, factor);
    }
    if config.speckle {
        let shape = rng.gen_range(1.5..=3.5);
        out = apply_speckle(&out, shape, rng);
    }
    Ok(out)
}
