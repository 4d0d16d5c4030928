//! Per-nucleus chromatin biomarkers: morphometrics, Σ-intensity,
//! wavelet variance slope, spectral packing dimension, and intensity
//! entropy, plus the CSV emission used by the extraction pipeline.

use crate::dwt::dwt2_details;
use crate::error::{Error, Result};
use crate::fft::{dft_freq, fft2};
use crate::field::ScalarField;
use crate::geometry::{nearest_seed_transform, InstanceMask, TissueClass};
use crate::render::FieldSample;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PixelCalibration {
    /// Micrometers per pixel.
    pub pixel_size: f64,
}

impl Default for PixelCalibration {
    fn default() -> Self {
        PixelCalibration { pixel_size: 0.5 }
    }
}

/// The eight biomarkers for one nucleus; estimator failures leave the
/// affected fields unset and add a flag instead of aborting the batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiomarkerVector {
    pub nucleus_id: u32,
    pub tissue_class: TissueClass,
    pub area_px2: Option<f64>,
    pub area_um2: Option<f64>,
    pub perimeter_px: Option<f64>,
    pub circularity: Option<f64>,
    pub eccentricity: Option<f64>,
    pub sigma_intensity: Option<f64>,
    pub variance_slope: Option<f64>,
    pub packing_dimension: Option<f64>,
    pub entropy_bits: Option<f64>,
    pub flags: Vec<String>,
}

impl BiomarkerVector {
    fn empty(nucleus_id: u32, tissue_class: TissueClass) -> Self {
        BiomarkerVector {
            nucleus_id,
            tissue_class,
            area_px2: None,
            area_um2: None,
            perimeter_px: None,
            circularity: None,
            eccentricity: None,
            sigma_intensity: None,
            variance_slope: None,
            packing_dimension: None,
            entropy_bits: None,
            flags: Vec::new(),
        }
    }
}

// ---------------------------------------------------------------------------
// Morphometrics

#[derive(Debug, Clone, Copy)]
pub struct Morphometrics {
    pub area: f64,
    pub perimeter: f64,
    pub circularity: f64,
    pub eccentricity: f64,
}

/// Moore-neighbor boundary trace (8-connectivity) through pixel centers.
fn trace_boundary(pixels: &HashSet<(i64, i64)>) -> Vec<(i64, i64)> {
    // clockwise neighbor order starting west
    let order: [(i64, i64); 8] =
        [(-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1)];
    let start = *pixels.iter().min_by_key(|&&(x, y)| (y, x)).expect("non-empty");
    if pixels.len() == 1 {
        return vec![start];
    }
    let dir_index = |d: (i64, i64)| order.iter().position(|&o| o == d).unwrap();
    let mut boundary = Vec::new();
    let mut current = start;
    // entered from the west (background by row-major minimality)
    let mut backtrack_dir = (-1i64, 0i64);
    let mut first_move: Option<(i64, i64)> = None;
    loop {
        boundary.push(current);
        let from = dir_index(backtrack_dir);
        let mut next: Option<((i64, i64), (i64, i64))> = None;
        for k in 1..=8 {
            let d = order[(from + k) % 8];
            let cand = (current.0 + d.0, current.1 + d.1);
            if pixels.contains(&cand) {
                let prev_d = order[(from + k - 1) % 8];
                next = Some((cand, prev_d));
                break;
            }
        }
        let (next_pixel, prev_dir) = next.expect("region has >= 2 pixels");
        // backtrack for the next step points from next_pixel toward the
        // last background neighbor scanned
        let back = (
            current.0 + prev_dir.0 - next_pixel.0,
            current.1 + prev_dir.1 - next_pixel.1,
        );
        let step = (next_pixel.0 - current.0, next_pixel.1 - current.1);
        if current == start {
            match first_move {
                None => first_move = Some(step),
                Some(fm) if fm == step => {
                    boundary.pop(); // closing revisit of the start
                    break;
                }
                _ => {}
            }
        }
        current = next_pixel;
        backtrack_dir = back;
        if boundary.len() > 8 * pixels.len() {
            break; // safety net; cannot trigger on valid regions
        }
    }
    boundary
}

/// Chain length of the closed boundary after circular Gaussian smoothing
/// (sigma = 1 vertex) of the traced pixel centers, plus the half-pixel
/// closed-curve offset correction (adds 2*pi*0.5).
fn smoothed_perimeter(boundary: &[(i64, i64)]) -> f64 {
    let n = boundary.len();
    if n < 3 {
        return n as f64;
    }
    const K: i64 = 3;
    let mut weights = Vec::new();
    for k in -K..=K {
        weights.push((-(k * k) as f64 / 2.0).exp());
    }
    let wsum: f64 = weights.iter().sum();
    let mut smooth = Vec::with_capacity(n);
    for i in 0..n as i64 {
        let mut x = 0.0;
        let mut y = 0.0;
        for (j, k) in (-K..=K).enumerate() {
            let p = boundary[(i + k).rem_euclid(n as i64) as usize];
            x += weights[j] * p.0 as f64;
            y += weights[j] * p.1 as f64;
        }
        smooth.push((x / wsum, y / wsum));
    }
    let mut len = 0.0;
    for i in 0..n {
        let a = smooth[i];
        let b = smooth[(i + 1) % n];
        len += ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
    }
    len + std::f64::consts::PI
}

/// Area, perimeter, circularity, eccentricity of one labeled region.
pub fn morphometrics(mask: &InstanceMask, label: u32) -> Result<Morphometrics> {
    let pixels = mask.label_pixels(label);
    if pixels.len() < 8 {
        return Err(Error::Degenerate(format!(
            "region {label} has {} px (< 8), covariance unstable",
            pixels.len()
        )));
    }
    let area = pixels.len() as f64;

    let set: HashSet<(i64, i64)> =
        pixels.iter().map(|&(x, y)| (x as i64, y as i64)).collect();
    let boundary = trace_boundary(&set);
    let perimeter = smoothed_perimeter(&boundary);
    let circularity = 4.0 * std::f64::consts::PI * area / (perimeter * perimeter);

    let n = pixels.len() as f64;
    let mx = pixels.iter().map(|&(x, _)| x as f64).sum::<f64>() / n;
    let my = pixels.iter().map(|&(_, y)| y as f64).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in &pixels {
        let dx = x as f64 - mx;
        let dy = y as f64 - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    sxx /= n;
    syy /= n;
    sxy /= n;
    let trace = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    let disc = (trace * trace / 4.0 - det).max(0.0).sqrt();
    let l1 = trace / 2.0 + disc;
    let l2 = (trace / 2.0 - disc).max(0.0);
    let eccentricity = if l1 > 0.0 { (1.0 - l2 / l1).max(0.0).sqrt() } else { 0.0 };

    Ok(Morphometrics { area, perimeter, circularity, eccentricity })
}

// ---------------------------------------------------------------------------
// Otsu and Σ-intensity

/// Otsu threshold over a 256-bin histogram on [0,1]; exhaustive scan,
/// ties broken toward the lower threshold.
pub fn otsu_threshold(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Degenerate("empty input".into()));
    }
    let mut hist = [0usize; 256];
    for &v in values {
        let bin = ((v.clamp(0.0, 1.0) * 256.0) as usize).min(255);
        hist[bin] += 1;
    }
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::Degenerate("histogram occupies a single bin".into()));
    }
    let total = values.len() as f64;
    let total_sum: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let mut best_t = 0usize;
    let mut best_var = f64::NEG_INFINITY;
    let mut w0 = 0.0;
    let mut sum0 = 0.0;
    for t in 0..255 {
        w0 += hist[t] as f64;
        sum0 += t as f64 * hist[t] as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let mu0 = sum0 / w0;
        let mu1 = (total_sum - sum0) / w1;
        let between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if between > best_var {
            best_var = between;
            best_t = t;
        }
    }
    Ok((best_t as f64 + 1.0) / 256.0)
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    // linear interpolation between closest ranks
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p / 100.0 * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let t = pos - lo as f64;
    sorted[lo] * (1.0 - t) + sorted[hi] * t
}

/// Normalized Σ mean intensity in [0,1]; the boolean flags the
/// constant-background fallback (Otsu degenerate).
pub fn sigma_intensity(
    image: &ScalarField,
    mask: &InstanceMask,
    label: u32,
) -> Result<(f64, bool)> {
    if image.width() != mask.width() || image.height() != mask.height() {
        return Err(Error::Input("image/mask size mismatch".into()));
    }
    let mut nucleus = Vec::new();
    let mut background = Vec::new();
    for (i, &l) in mask.labels().iter().enumerate() {
        let v = image.values()[i];
        if l == label {
            nucleus.push(v);
        } else if l == 0 {
            background.push(v);
        }
    }
    if nucleus.is_empty() {
        return Err(Error::Input(format!("label {label} absent from mask")));
    }
    if background.is_empty() {
        return Err(Error::Input("mask has no background".into()));
    }
    let (bg_level, fallback) = match otsu_threshold(&background) {
        Ok(threshold) => {
            let below: Vec<f64> =
                background.iter().copied().filter(|&v| v < threshold).collect();
            if below.is_empty() {
                (background.iter().sum::<f64>() / background.len() as f64, true)
            } else {
                (below.iter().sum::<f64>() / below.len() as f64, false)
            }
        }
        Err(_) => (background.iter().sum::<f64>() / background.len() as f64, true),
    };
    let mut sorted: Vec<f64> = image.values().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let span = percentile(&sorted, 99.0) - percentile(&sorted, 1.0);
    let nucleus_mean = nucleus.iter().sum::<f64>() / nucleus.len() as f64;
    let value = if span > 0.0 {
        ((nucleus_mean - bg_level) / span).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok((value, fallback))
}

// ---------------------------------------------------------------------------
// Dyadic patch extraction

fn reflect_index(i: usize, size: usize) -> usize {
    if size == 1 {
        return 0;
    }
    let period = 2 * size - 2;
    let j = i % period;
    if j < size {
        j
    } else {
        period - j
    }
}

/// Crops the nucleus bounding box, fills exterior pixels with the value
/// of the nearest interior pixel, and mirror-pads to the next dyadic
/// side >= 32. Returns (values, side).
pub fn dyadic_patch(
    image: &ScalarField,
    mask: &InstanceMask,
    label: u32,
) -> Result<(Vec<f64>, usize)> {
    if image.width() != mask.width() || image.height() != mask.height() {
        return Err(Error::Input("image/mask size mismatch".into()));
    }
    let pixels = mask.label_pixels(label);
    if pixels.is_empty() {
        return Err(Error::Input(format!("label {label} absent from mask")));
    }
    let x0 = pixels.iter().map(|&(x, _)| x).min().unwrap();
    let x1 = pixels.iter().map(|&(x, _)| x).max().unwrap();
    let y0 = pixels.iter().map(|&(_, y)| y).min().unwrap();
    let y1 = pixels.iter().map(|&(_, y)| y).max().unwrap();
    let bw = x1 - x0 + 1;
    let bh = y1 - y0 + 1;

    let mut crop = vec![0.0; bw * bh];
    let mut interior = vec![false; bw * bh];
    for y in 0..bh {
        for x in 0..bw {
            crop[y * bw + x] = image.get(x0 + x, y0 + y);
            interior[y * bw + x] = mask.get(x0 + x, y0 + y) == label;
        }
    }
    if interior.iter().any(|&b| !b) {
        let (_, src) = nearest_seed_transform(&interior, bw, bh);
        let snapshot = crop.clone();
        for i in 0..bw * bh {
            if !interior[i] {
                crop[i] = snapshot[src[i]];
            }
        }
    }

    let side = bw.max(bh).max(32).next_power_of_two();
    let mut out = vec![0.0; side * side];
    for y in 0..side {
        let sy = reflect_index(y, bh);
        for x in 0..side {
            out[y * side + x] = crop[sy * bw + reflect_index(x, bw)];
        }
    }
    Ok((out, side))
}

// ---------------------------------------------------------------------------
// Wavelet variance slope

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Wavelet variance-slope exponent of a square field: 4-level db4 DWT,
/// pooled LH/HL/HH variance per level, LSQ slope of log Var vs log
/// scale over scales 2..16 px.
pub fn variance_slope_field(values: &[f64], side: usize) -> Result<f64> {
    let bands = dwt2_details(values, side, 4)?;
    let mut xs = Vec::with_capacity(4);
    let mut ys = Vec::with_capacity(4);
    for (j, band) in bands.iter().enumerate() {
        let all: Vec<f64> = band
            .lh
            .iter()
            .chain(&band.hl)
            .chain(&band.hh)
            .copied()
            .collect();
        let n = all.len() as f64;
        let mean = all.iter().sum::<f64>() / n;
        let var = all.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        if var <= 1e-18 {
            return Err(Error::Degenerate("zero detail variance (constant region)".into()));
        }
        xs.push((2f64.powi(j as i32 + 1)).ln());
        ys.push(var.ln());
    }
    Ok(least_squares_slope(&xs, &ys))
}

/// Variance slope of one nucleus (crop, nearest-fill, dyadic pad).
pub fn variance_slope(image: &ScalarField, mask: &InstanceMask, label: u32) -> Result<f64> {
    let (patch, side) = dyadic_patch(image, mask, label)?;
    variance_slope_field(&patch, side)
}

// ---------------------------------------------------------------------------
// Packing dimension

/// Power-law exponent beta of the radially averaged PSD: mean removal,
/// Hann window, 2D FFT, log-spaced annular bins over k in [4/N, 0.45]
/// cycles/pixel, LSQ fit of log PSD vs log k.
pub fn psd_beta_field(values: &[f64], side: usize) -> Result<f64> {
    if values.len() != side * side {
        return Err(Error::Dimension("psd input is not square".into()));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let hann: Vec<f64> = (0..side)
        .map(|i| 0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / (side - 1) as f64).cos()))
        .collect();
    let mut buf: Vec<Complex64> = Vec::with_capacity(side * side);
    for y in 0..side {
        for x in 0..side {
            buf.push(Complex64::new((values[y * side + x] - mean) * hann[y] * hann[x], 0.0));
        }
    }
    fft2(&mut buf, side, side, false);

    let k_lo = 4.0 / side as f64;
    let k_hi = 0.45;
    if k_lo >= k_hi {
        return Err(Error::Dimension(format!("side {side} too small for the fit band")));
    }
    const NBINS: usize = 24;
    let log_lo = k_lo.ln();
    let log_step = (k_hi.ln() - log_lo) / NBINS as f64;
    let mut psum = vec![0.0; NBINS];
    let mut ksum = vec![0.0; NBINS];
    let mut count = vec![0usize; NBINS];
    for y in 0..side {
        let fy = dft_freq(y, side);
        for x in 0..side {
            let fx = dft_freq(x, side);
            let k = (fx * fx + fy * fy).sqrt();
            if k < k_lo || k > k_hi {
                continue;
            }
            let bin = (((k.ln() - log_lo) / log_step) as usize).min(NBINS - 1);
            psum[bin] += buf[y * side + x].norm_sqr();
            ksum[bin] += k;
            count[bin] += 1;
        }
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for b in 0..NBINS {
        if count[b] == 0 || psum[b] <= 0.0 {
            continue;
        }
        xs.push((ksum[b] / count[b] as f64).ln());
        ys.push((psum[b] / count[b] as f64).ln());
    }
    if xs.len() < 4 {
        return Err(Error::Degenerate(format!(
            "only {} populated radial bins in the fit band",
            xs.len()
        )));
    }
    Ok(-least_squares_slope(&xs, &ys))
}

/// Packing scaling dimension D = (6 - beta) / 2 of one nucleus.
pub fn packing_dimension(image: &ScalarField, mask: &InstanceMask, label: u32) -> Result<f64> {
    let (patch, side) = dyadic_patch(image, mask, label)?;
    let beta = psd_beta_field(&patch, side)?;
    Ok((6.0 - beta) / 2.0)
}

// ---------------------------------------------------------------------------
// Entropy

/// Shannon entropy (bits) of intranuclear intensities over 16 uniform
/// bins on [0,1]; constant regions give 0 bits.
pub fn chromatin_entropy(image: &ScalarField, mask: &InstanceMask, label: u32) -> Result<f64> {
    if image.width() != mask.width() || image.height() != mask.height() {
        return Err(Error::Input("image/mask size mismatch".into()));
    }
    let mut hist = [0usize; 16];
    let mut total = 0usize;
    for (i, &l) in mask.labels().iter().enumerate() {
        if l == label {
            let v = image.values()[i].clamp(0.0, 1.0);
            hist[((v * 16.0) as usize).min(15)] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::Input(format!("label {label} absent from mask")));
    }
    let mut h = 0.0;
    for &c in &hist {
        if c > 0 {
            let p = c as f64 / total as f64;
            h -= p * p.log2();
        }
    }
    Ok(h)
}

// ---------------------------------------------------------------------------
// Pipeline

/// Mean across channels, used as the scalar intensity plane.
pub fn intensity_plane(sample: &FieldSample) -> ScalarField {
    if sample.image.len() == 1 {
        return sample.image[0].clone();
    }
    let mut out = sample.image[0].clone();
    for channel in &sample.image[1..] {
        for (o, v) in out.values_mut().iter_mut().zip(channel.values()) {
            *o += v;
        }
    }
    let n = sample.image.len() as f64;
    for v in out.values_mut() {
        *v /= n;
    }
    out
}

/// Extracts one BiomarkerVector per mask label, in label order;
/// per-nucleus failures become flags, never batch aborts.
pub fn extract_all(sample: &FieldSample, calibration: &PixelCalibration) -> Result<Vec<BiomarkerVector>> {
    if calibration.pixel_size <= 0.0 {
        return Err(Error::Parameter("pixel_size must be > 0".into()));
    }
    for channel in &sample.image {
        if channel.width() != sample.mask.width() || channel.height() != sample.mask.height() {
            return Err(Error::Input("image/mask size mismatch".into()));
        }
    }
    let intensity = intensity_plane(sample);
    let mut out = Vec::new();
    for (&label, &area) in sample.mask.label_areas().iter() {
        let mut v = BiomarkerVector::empty(label, sample.meta.tissue_class);
        v.area_px2 = Some(area as f64);
        v.area_um2 = Some(area as f64 * calibration.pixel_size * calibration.pixel_size);
        match morphometrics(&sample.mask, label) {
            Ok(m) => {
                v.perimeter_px = Some(m.perimeter);
                v.circularity = Some(m.circularity);
                v.eccentricity = Some(m.eccentricity);
            }
            Err(e) => v.flags.push(format!("morphometrics:{e}")),
        }
        match sigma_intensity(&intensity, &sample.mask, label) {
            Ok((value, fallback)) => {
                v.sigma_intensity = Some(value);
                if fallback {
                    v.flags.push("sigma_intensity:constant_background_fallback".into());
                }
            }
            Err(e) => v.flags.push(format!("sigma_intensity:{e}")),
        }
        match variance_slope(&intensity, &sample.mask, label) {
            Ok(slope) => v.variance_slope = Some(slope),
            Err(e) => v.flags.push(format!("variance_slope:{e}")),
        }
        match packing_dimension(&intensity, &sample.mask, label) {
            Ok(d) => v.packing_dimension = Some(d),
            Err(e) => v.flags.push(format!("packing_dimension:{e}")),
        }
        match chromatin_entropy(&intensity, &sample.mask, label) {
            Ok(h) => v.entropy_bits = Some(h),
            Err(e) => v.flags.push(format!("entropy:{e}")),
        }
        out.push(v);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// CSV emission

pub const CSV_HEADER: &str = "image_id,nucleus_id,tissue_class,area_px2,area_um2,perimeter_px,circularity,eccentricity,sigma_intensity,variance_slope,packing_D,entropy_bits,flags";

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.6}"),
        None => "nan".into(),
    }
}

/// One CSV row (no trailing newline), 6-decimal fixed precision.
pub fn csv_row(image_id: &str, v: &BiomarkerVector) -> String {
    let class = match v.tissue_class {
        TissueClass::Normal => "normal",
        TissueClass::Dysplasia => "dysplasia",
    };
    format!(
        "{image_id},{},{class},{},{},{},{},{},{},{},{},{},{}",
        v.nucleus_id,
        fmt_opt(v.area_px2),
        fmt_opt(v.area_um2),
        fmt_opt(v.perimeter_px),
        fmt_opt(v.circularity),
        fmt_opt(v.eccentricity),
        fmt_opt(v.sigma_intensity),
        fmt_opt(v.variance_slope),
        fmt_opt(v.packing_dimension),
        fmt_opt(v.entropy_bits),
        v.flags.join(";")
    )
}

/// Full CSV document (LF newlines) for a list of per-image vectors.
pub fn csv_document(rows: &[(String, Vec<BiomarkerVector>)]) -> String {
    let mut doc = String::from(CSV_HEADER);
    doc.push('\n');
    for (image_id, vectors) in rows {
        for v in vectors {
            doc.push_str(&csv_row(image_id, v));
            doc.push('\n');
        }
    }
    doc
}
