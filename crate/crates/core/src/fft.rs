//! Small 2D FFT helpers over row-major buffers (rustfft-backed).

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// In-place 2D FFT of a row-major `height x width` complex buffer.
pub fn fft2(data: &mut [Complex64], width: usize, height: usize, inverse: bool) {
    assert_eq!(data.len(), width * height);
    let mut planner = FftPlanner::<f64>::new();
    let row_fft = if inverse { planner.plan_fft_inverse(width) } else { planner.plan_fft_forward(width) };
    let col_fft = if inverse { planner.plan_fft_inverse(height) } else { planner.plan_fft_forward(height) };

    for row in data.chunks_exact_mut(width) {
        row_fft.process(row);
    }
    let mut col = vec![Complex64::default(); height];
    for x in 0..width {
        for y in 0..height {
            col[y] = data[y * width + x];
        }
        col_fft.process(&mut col);
        for y in 0..height {
            data[y * width + x] = col[y];
        }
    }
    if inverse {
        let scale = 1.0 / (width * height) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Frequency (cycles/pixel) of DFT bin `i` out of `n`, in [-0.5, 0.5).
pub fn dft_freq(i: usize, n: usize) -> f64 {
    let i = i as isize;
    let n_i = n as isize;
    let signed = if i <= (n_i - 1) / 2 { i } else { i - n_i };
    signed as f64 / n as f64
}

/// Periodic Gaussian blur of a real field via the FFT transfer function
/// exp(-2 pi^2 sigma^2 k^2).
pub fn gaussian_blur_periodic(values: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut buf, width, height, false);
    for y in 0..height {
        let fy = dft_freq(y, height);
        for x in 0..width {
            let fx = dft_freq(x, width);
            let k2 = fx * fx + fy * fy;
            let h = (-2.0 * std::f64::consts::PI.powi(2) * sigma * sigma * k2).exp();
            buf[y * width + x] *= h;
        }
    }
    fft2(&mut buf, width, height, true);
    buf.into_iter().map(|c| c.re).collect()
}

/// Periodic convolution of a real field with a small real kernel, via FFT.
/// The kernel is centered: `kernel[ky][kx]` maps to offset
/// `(kx - kw/2, ky - kh/2)`.
pub fn convolve_periodic(
    values: &[f64],
    width: usize,
    height: usize,
    kernel: &[f64],
    kw: usize,
    kh: usize,
) -> Vec<f64> {
    let mut field: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut kbuf = vec![Complex64::default(); width * height];
    let cx = (kw / 2) as isize;
    let cy = (kh / 2) as isize;
    for ky in 0..kh {
        for kx in 0..kw {
            let dx = kx as isize - cx;
            let dy = ky as isize - cy;
            let x = dx.rem_euclid(width as isize) as usize;
            let y = dy.rem_euclid(height as isize) as usize;
            kbuf[y * width + x] += Complex64::new(kernel[ky * kw + kx], 0.0);
        }
    }
    fft2(&mut field, width, height, false);
    fft2(&mut kbuf, width, height, false);
    for (f, k) in field.iter_mut().zip(kbuf.iter()) {
        *f *= *k;
    }
    fft2(&mut field, width, height, true);
    field.into_iter().map(|c| c.re).collect()
}
