//! Procedural scalar-field generators: Perlin noise, Gaussian random
//! fields, Gabor texture banks, and fractal Brownian motion by spectral
//! synthesis. All generators are pure functions of their parameters and
//! the caller-supplied seeded stream.

use crate::error::{Error, Result};
use crate::fft::{convolve_periodic, dft_freq, fft2, gaussian_blur_periodic};
use crate::rng::{mix64, StreamRng};
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;

/// 2D grid of real values on a row-major lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!("zero-size field {width}x{height}")));
        }
        Ok(Self { width, height, values: vec![0.0; width * height] })
    }

    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!("zero-size field {width}x{height}")));
        }
        if values.len() != width * height {
            return Err(Error::Dimension(format!(
                "values length {} != {width}x{height}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Dimension("non-finite value in field".into()));
        }
        Ok(Self { width, height, values })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.values[y * self.width + x] = v;
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.values.len() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Linear rescale so min maps to `lo` and max to `hi` (constant fields
    /// map to the midpoint).
    pub fn rescaled(&self, lo: f64, hi: f64) -> ScalarField {
        let (mn, mx) = self.min_max();
        let mut out = self.clone();
        if mx > mn {
            let scale = (hi - lo) / (mx - mn);
            for v in out.values.iter_mut() {
                *v = lo + (*v - mn) * scale;
            }
        } else {
            for v in out.values.iter_mut() {
                *v = 0.5 * (lo + hi);
            }
        }
        out
    }

    /// Divides by the max absolute value so the result spans [-1, 1]
    /// symmetrically about zero (zero stays zero).
    pub fn rescaled_symmetric(&self) -> ScalarField {
        let peak = self.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let mut out = self.clone();
        if peak > 0.0 {
            for v in out.values.iter_mut() {
                *v /= peak;
            }
        }
        out
    }

    /// Shift/scale to zero mean, unit variance.
    pub fn standardized(&self) -> Result<ScalarField> {
        let m = self.mean();
        let sd = self.variance().sqrt();
        if sd == 0.0 {
            return Err(Error::Degenerate("constant field cannot be standardized".into()));
        }
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v = (*v - m) / sd;
        }
        Ok(out)
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Dimension(format!("zero-size field {width}x{height}")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Perlin noise

fn fade(t: f64) -> f64 {
    // quintic interpolant
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

fn gradient(noise_seed: u64, layer: u32, ix: i64, iy: i64) -> (f64, f64) {
    let h = mix64(&[noise_seed, layer as u64, ix as u64, iy as u64]);
    let angle = (h as f64 / u64::MAX as f64) * std::f64::consts::TAU;
    (angle.cos(), angle.sin())
}

pub(crate) fn perlin_sample(noise_seed: u64, layer: u32, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let (ix, iy) = (x0 as i64, y0 as i64);
    let fx = x - x0;
    let fy = y - y0;
    let corner = |dx: i64, dy: i64| -> f64 {
        let (gx, gy) = gradient(noise_seed, layer, ix + dx, iy + dy);
        gx * (fx - dx as f64) + gy * (fy - dy as f64)
    };
    let n00 = corner(0, 0);
    let n10 = corner(1, 0);
    let n01 = corner(0, 1);
    let n11 = corner(1, 1);
    let u = fade(fx);
    let v = fade(fy);
    let nx0 = n00 + u * (n10 - n00);
    let nx1 = n01 + u * (n11 - n01);
    nx0 + v * (nx1 - nx0)
}

/// One octave of gradient noise at unit amplitude. Layer `k` uses lattice
/// cell size `base_scale / 2^k`. Exposed so octave sums can be decomposed
/// exactly in tests.
pub fn perlin_layer(
    width: usize,
    height: usize,
    layer: u32,
    base_scale: f64,
    noise_seed: u64,
) -> Result<ScalarField> {
    check_dims(width, height)?;
    let cell = base_scale / f64::from(2u32.pow(layer.min(30)));
    let cell = cell.max(1.0);
    let mut out = ScalarField::new(width, height)?;
    for y in 0..height {
        for x in 0..width {
            let v = perlin_sample(noise_seed, layer, x as f64 / cell, y as f64 / cell);
            out.set(x, y, v);
        }
    }
    Ok(out)
}

/// Octave sum before rescaling: layer k weighted by persistence^k.
pub fn perlin_field_raw(
    width: usize,
    height: usize,
    octaves: u32,
    persistence: f64,
    base_scale: f64,
    rng: &mut StreamRng,
) -> Result<ScalarField> {
    check_dims(width, height)?;
    if octaves < 1 {
        return Err(Error::Parameter("octaves must be >= 1".into()));
    }
    if !(persistence > 0.0 && persistence <= 1.0) {
        return Err(Error::Parameter(format!("persistence {persistence} outside (0,1]")));
    }
    if base_scale < 2.0 {
        return Err(Error::Parameter(format!("base_scale {base_scale} < 2")));
    }
    let noise_seed = rng.gen::<u64>();
    let mut sum = ScalarField::new(width, height)?;
    let mut amp = 1.0;
    for k in 0..octaves {
        let layer = perlin_layer(width, height, k, base_scale, noise_seed)?;
        for (s, l) in sum.values_mut().iter_mut().zip(layer.values()) {
            *s += amp * l;
        }
        amp *= persistence;
    }
    Ok(sum)
}

/// Multi-octave Perlin noise, rescaled into [-1, 1] symmetrically so the
/// near-zero mean of the raw octave sum is preserved.
pub fn perlin_field(
    width: usize,
    height: usize,
    octaves: u32,
    persistence: f64,
    base_scale: f64,
    rng: &mut StreamRng,
) -> Result<ScalarField> {
    Ok(perlin_field_raw(width, height, octaves, persistence, base_scale, rng)?
        .rescaled_symmetric())
}

// ---------------------------------------------------------------------------
// Gaussian random field

/// White Gaussian noise smoothed by an isotropic Gaussian kernel of
/// standard deviation `correlation_length`, standardized to zero mean and
/// unit variance. The normalized autocovariance of the result is
/// exp(-lag^2 / (4 sigma^2)).
pub fn gaussian_random_field(
    width: usize,
    height: usize,
    correlation_length: f64,
    rng: &mut StreamRng,
) -> Result<ScalarField> {
    check_dims(width, height)?;
    if correlation_length <= 0.0 {
        return Err(Error::Parameter("correlation_length must be > 0".into()));
    }
    if correlation_length > width.min(height) as f64 / 2.0 {
        return Err(Error::Parameter(format!(
            "correlation_length {correlation_length} exceeds min(width,height)/2"
        )));
    }
    let noise: Vec<f64> = (0..width * height).map(|_| rng.sample(StandardNormal)).collect();
    let blurred = gaussian_blur_periodic(&noise, width, height, correlation_length);
    ScalarField::from_values(width, height, blurred)?.standardized()
}

// ---------------------------------------------------------------------------
// Gabor texture

/// A single zero-mean Gabor kernel.
#[derive(Debug, Clone)]
pub struct GaborKernel {
    pub orientation: f64,
    pub wavelength: f64,
    pub size: usize,
    pub values: Vec<f64>,
}

impl GaborKernel {
    fn build(orientation: f64, wavelength: f64) -> Self {
        // bandwidth-one parameterization: sigma = 0.56 lambda, gamma = 1, psi = 0
        let sigma = 0.56 * wavelength;
        let half = (3.0 * sigma).ceil() as i64;
        let size = (2 * half + 1) as usize;
        let mut values = Vec::with_capacity(size * size);
        let (c, s) = (orientation.cos(), orientation.sin());
        for dy in -half..=half {
            for dx in -half..=half {
                let xr = dx as f64 * c + dy as f64 * s;
                let yr = -(dx as f64) * s + dy as f64 * c;
                let env = (-(xr * xr + yr * yr) / (2.0 * sigma * sigma)).exp();
                values.push(env * (std::f64::consts::TAU * xr / wavelength).cos());
            }
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        for v in values.iter_mut() {
            *v -= mean;
        }
        GaborKernel { orientation, wavelength, size, values }
    }

    /// Response to a field via periodic convolution.
    pub fn apply(&self, field: &ScalarField) -> ScalarField {
        let out = convolve_periodic(
            field.values(),
            field.width(),
            field.height(),
            &self.values,
            self.size,
            self.size,
        );
        ScalarField::from_values(field.width(), field.height(), out).expect("dims preserved")
    }
}

/// The full bank: orientations uniform in [0, pi), wavelengths geometric
/// {4, 8, 16, ...} across scales.
pub fn gabor_bank(n_orientations: usize, n_scales: usize) -> Result<Vec<GaborKernel>> {
    if n_orientations < 1 || n_scales < 1 {
        return Err(Error::Parameter("gabor bank needs >= 1 orientation and scale".into()));
    }
    let mut bank = Vec::with_capacity(n_orientations * n_scales);
    for s in 0..n_scales {
        let wavelength = 4.0 * f64::from(2u32.pow(s as u32));
        for o in 0..n_orientations {
            let theta = std::f64::consts::PI * o as f64 / n_orientations as f64;
            bank.push(GaborKernel::build(theta, wavelength));
        }
    }
    Ok(bank)
}

/// White noise filtered by a random subset of the Gabor bank, responses
/// summed and rescaled to [0, 1].
pub fn gabor_texture(
    width: usize,
    height: usize,
    n_orientations: usize,
    n_scales: usize,
    rng: &mut StreamRng,
) -> Result<ScalarField> {
    check_dims(width, height)?;
    let bank = gabor_bank(n_orientations, n_scales)?;
    let mut selected: Vec<bool> = (0..bank.len()).map(|_| rng.gen::<bool>()).collect();
    if !selected.iter().any(|&b| b) {
        let idx = rng.gen_range(0..bank.len());
        selected[idx] = true;
    }
    let noise: Vec<f64> = (0..width * height).map(|_| rng.sample(StandardNormal)).collect();
    let noise = ScalarField::from_values(width, height, noise)?;
    let mut sum = ScalarField::new(width, height)?;
    for (kernel, take) in bank.iter().zip(selected) {
        if !take {
            continue;
        }
        let resp = kernel.apply(&noise);
        for (s, r) in sum.values_mut().iter_mut().zip(resp.values()) {
            *s += r;
        }
    }
    Ok(sum.rescaled(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// Spectral synthesis

fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

/// Gaussian random field with isotropic power spectrum proportional to
/// k^(-beta), by direct spectral synthesis (DC bin zeroed), standardized
/// to zero mean / unit variance. Dimensions must be powers of two.
pub fn spectral_exponent_field(
    width: usize,
    height: usize,
    beta: f64,
    rng: &mut StreamRng,
) -> Result<ScalarField> {
    check_dims(width, height)?;
    if !is_power_of_two(width) || !is_power_of_two(height) {
        return Err(Error::Dimension(format!(
            "spectral synthesis requires power-of-two dimensions, got {width}x{height}"
        )));
    }
    let mut spec = vec![Complex64::default(); width * height];
    for y in 0..height {
        let fy = dft_freq(y, height);
        for x in 0..width {
            if x == 0 && y == 0 {
                continue; // zero-mean field
            }
            let fx = dft_freq(x, width);
            let k = (fx * fx + fy * fy).sqrt();
            let amp = k.powf(-beta / 2.0);
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            spec[y * width + x] = Complex64::new(re * amp, im * amp);
        }
    }
    fft2(&mut spec, width, height, true);
    let values: Vec<f64> = spec.into_iter().map(|c| c.re).collect();
    ScalarField::from_values(width, height, values)?.standardized()
}

/// Fractal Brownian motion field with Hurst exponent `hurst`; 2D power
/// spectrum falls as k^-(2H+2).
pub fn fbm_field(width: usize, height: usize, hurst: f64, rng: &mut StreamRng) -> Result<ScalarField> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::Parameter(format!("hurst {hurst} outside (0,1)")));
    }
    spectral_exponent_field(width, height, 2.0 * hurst + 2.0, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rng(stream: u64) -> StreamRng {
        StreamRng::new(42, stream)
    }

    #[test]
    fn perlin_determinism() {
        let a = perlin_field(64, 64, 1, 0.5, 32.0, &mut rng(1)).unwrap();
        let b = perlin_field(64, 64, 1, 0.5, 32.0, &mut rng(1)).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn perlin_range_and_mean() {
        for stream in [1u64, 2, 3] {
            let f = perlin_field(256, 256, 6, 0.5, 64.0, &mut rng(stream)).unwrap();
            let (lo, hi) = f.min_max();
            assert!(lo >= -1.0 - 1e-12 && hi <= 1.0 + 1e-12);
            assert!(f.mean().abs() <= 0.05, "mean {} out of band", f.mean());
        }
    }

    #[test]
    fn perlin_octave_decomposition() {
        // raw(octaves=2) - raw(octaves=1) must equal persistence * layer 1
        let two = perlin_field_raw(64, 64, 2, 0.5, 32.0, &mut rng(9)).unwrap();
        let one = perlin_field_raw(64, 64, 1, 0.5, 32.0, &mut rng(9)).unwrap();
        let noise_seed = rng(9).gen::<u64>();
        let layer1 = perlin_layer(64, 64, 1, 32.0, noise_seed).unwrap();
        for i in 0..two.values().len() {
            let residual = two.values()[i] - one.values()[i];
            assert_abs_diff_eq!(residual, 0.5 * layer1.values()[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn perlin_zero_size_errors() {
        assert!(perlin_field(0, 10, 1, 0.5, 32.0, &mut rng(0)).is_err());
    }

    #[test]
    fn grf_standardized() {
        let f = gaussian_random_field(512, 512, 20.0, &mut rng(5)).unwrap();
        assert!(f.mean().abs() <= 0.02);
        assert!((f.variance() - 1.0).abs() <= 0.05);
    }

    #[test]
    fn grf_autocovariance_matches_gaussian_convolution_oracle() {
        // closed form for Gaussian-filtered white noise: C(lag) = exp(-lag^2/(4 sigma^2))
        let sigma = 20.0;
        let f = gaussian_random_field(512, 512, sigma, &mut rng(11)).unwrap();
        let lag = 20usize;
        let w = f.width();
        let mut acc = 0.0;
        let mut n = 0usize;
        for y in 0..f.height() {
            for x in 0..w - lag {
                acc += f.get(x, y) * f.get(x + lag, y);
                n += 1;
            }
        }
        let emp = acc / n as f64;
        let expect = (-(lag as f64).powi(2) / (4.0 * sigma * sigma)).exp();
        assert!((emp - expect).abs() <= 0.1, "autocov {emp} vs oracle {expect}");
    }

    #[test]
    fn grf_rejects_excessive_correlation_length() {
        assert!(gaussian_random_field(64, 64, 40.0, &mut rng(0)).is_err());
    }

    #[test]
    fn grf_determinism() {
        let a = gaussian_random_field(64, 64, 8.0, &mut rng(3)).unwrap();
        let b = gaussian_random_field(64, 64, 8.0, &mut rng(3)).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn gabor_bank_size() {
        assert_eq!(gabor_bank(8, 4).unwrap().len(), 32);
    }

    #[test]
    fn gabor_kernels_are_dc_free() {
        let constant = ScalarField::from_values(64, 64, vec![0.7; 64 * 64]).unwrap();
        for kernel in gabor_bank(4, 2).unwrap() {
            let resp = kernel.apply(&constant);
            for &v in resp.values() {
                assert_abs_diff_eq!(v, 0.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn gabor_determinism() {
        let a = gabor_texture(64, 64, 8, 2, &mut rng(6)).unwrap();
        let b = gabor_texture(64, 64, 8, 2, &mut rng(6)).unwrap();
        assert_eq!(a.values(), b.values());
        let (lo, hi) = a.min_max();
        assert!(lo >= 0.0 && hi <= 1.0);
    }

    /// Independent radial log-PSD slope estimator used as the oracle for
    /// spectral fields: plain periodogram (no window), linear annular bins.
    fn radial_psd_slope(f: &ScalarField) -> f64 {
        let (w, h) = (f.width(), f.height());
        let mut buf: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft2(&mut buf, w, h, false);
        let nbins = 40usize;
        let kmax = 0.5;
        let mut psum = vec![0.0; nbins];
        let mut pcnt = vec![0usize; nbins];
        let mut ksum = vec![0.0; nbins];
        for y in 0..h {
            let fy = dft_freq(y, h);
            for x in 0..w {
                let fx = dft_freq(x, w);
                let k = (fx * fx + fy * fy).sqrt();
                if k <= 0.0 || k > kmax {
                    continue;
                }
                let b = ((k / kmax) * nbins as f64) as usize;
                let b = b.min(nbins - 1);
                psum[b] += buf[y * w + x].norm_sqr();
                pcnt[b] += 1;
                ksum[b] += k;
            }
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for b in 0..nbins {
            if pcnt[b] < 8 {
                continue;
            }
            let k = ksum[b] / pcnt[b] as f64;
            // mid-frequency band only
            if k < 4.0 / w as f64 || k > 0.4 {
                continue;
            }
            xs.push(k.ln());
            ys.push((psum[b] / pcnt[b] as f64).ln());
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        sxy / sxx
    }

    #[test]
    fn fbm_slope_recovery() {
        for (hurst, expect) in [(0.3, -2.6), (0.5, -3.0), (0.7, -3.4)] {
            let mut acc = 0.0;
            for stream in 0..10u64 {
                let f = fbm_field(256, 256, hurst, &mut rng(100 + stream)).unwrap();
                acc += radial_psd_slope(&f);
            }
            let mean = acc / 10.0;
            assert!(
                (mean - expect).abs() <= 0.2,
                "H={hurst}: mean slope {mean} vs {expect}"
            );
        }
    }

    #[test]
    fn fbm_rejects_non_power_of_two() {
        assert!(fbm_field(100, 256, 0.7, &mut rng(0)).is_err());
    }

    #[test]
    fn fbm_determinism() {
        let a = fbm_field(64, 64, 0.7, &mut rng(8)).unwrap();
        let b = fbm_field(64, 64, 0.7, &mut rng(8)).unwrap();
        assert_eq!(a.values(), b.values());
    }
}
