//! Single-nucleus boundary sampling: log-normal elongated ellipse,
//! radial Perlin perturbation, periodic B-spline smoothing, exact-area
//! rescale.

use super::bspline::smooth_boundary_bspline;
use super::poly::{self, Point};
use crate::error::{Error, Result};
use crate::field::perlin_sample;
use crate::rng::StreamRng;
use rand::Rng;
use rand_distr::{Distribution, LogNormal};

pub const AREA_MIN: f64 = 500.0;
pub const AREA_MAX: f64 = 3000.0;
pub const KNOT_SPACING: f64 = 8.0;

/// Mean axis ratio 1.4 with sigma 0.3 on the underlying normal; mu is
/// solved so the log-normal mean comes out at 1.4.
const AXIS_RATIO_MEAN: f64 = 1.4;
const AXIS_RATIO_SIGMA_LOG: f64 = 0.3;

fn axis_ratio_mu_log() -> f64 {
    AXIS_RATIO_MEAN.ln() - AXIS_RATIO_SIGMA_LOG * AXIS_RATIO_SIGMA_LOG / 2.0
}

pub fn sample_axis_ratio(rng: &mut StreamRng) -> f64 {
    let dist = LogNormal::new(axis_ratio_mu_log(), AXIS_RATIO_SIGMA_LOG).expect("valid params");
    dist.sample(rng)
}

/// Builds a boundary with every stochastic choice made explicit; the
/// public sampler draws the choices and delegates here. `perturb_amplitude`
/// is the peak radial deviation in pixels (0 disables perturbation).
pub fn build_boundary(
    target_area: f64,
    axis_ratio: f64,
    orientation: f64,
    perturb_amplitude: f64,
    noise_seed: u64,
) -> Result<Vec<Point>> {
    if !(AREA_MIN..=AREA_MAX).contains(&target_area) {
        return Err(Error::Parameter(format!(
            "target_area {target_area} outside [{AREA_MIN}, {AREA_MAX}]"
        )));
    }
    // ratios below 1 just swap major/minor axes; only non-positive is invalid
    if axis_ratio <= 0.0 {
        return Err(Error::Parameter(format!("axis_ratio {axis_ratio} must be > 0")));
    }
    if !(0.0..=5.0).contains(&perturb_amplitude) {
        return Err(Error::Parameter(format!(
            "perturb_amplitude {perturb_amplitude} outside [0, 5]"
        )));
    }
    let r0 = (target_area / std::f64::consts::PI).sqrt();
    let a = r0 * axis_ratio.sqrt();
    let b = r0 / axis_ratio.sqrt();

    const M: usize = 128;
    let mut radii = Vec::with_capacity(M);
    let mut noise = Vec::with_capacity(M);
    for i in 0..M {
        let theta = std::f64::consts::TAU * i as f64 / M as f64;
        let t = theta - orientation;
        let r_ell = a * b / ((b * t.cos()).powi(2) + (a * t.sin()).powi(2)).sqrt();
        radii.push(r_ell);
        // periodic 1D noise: walk a circle (radius 2 lattice cells)
        // through the 2D Perlin lattice
        noise.push(perlin_sample(noise_seed, 0, 2.0 + 2.0 * theta.cos(), 2.0 + 2.0 * theta.sin()));
    }
    if perturb_amplitude > 0.0 {
        let peak = noise.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if peak > 0.0 {
            for (r, n) in radii.iter_mut().zip(&noise) {
                *r = (*r + perturb_amplitude * n / peak).max(1.0);
            }
        }
    }
    let rough: Vec<Point> = (0..M)
        .map(|i| {
            let theta = std::f64::consts::TAU * i as f64 / M as f64;
            [radii[i] * theta.cos(), radii[i] * theta.sin()]
        })
        .collect();
    let smooth = smooth_boundary_bspline(&poly::close_ring(rough), KNOT_SPACING)?;

    // re-center on the area centroid, then rescale to the exact target area
    let c = poly::centroid(&smooth);
    let centered = poly::translated(&smooth, -c[0], -c[1]);
    let measured = poly::area(&centered);
    if measured <= 0.0 {
        return Err(Error::Geometry("perturbed boundary collapsed".into()));
    }
    let out = poly::scaled_about(&centered, [0.0, 0.0], (target_area / measured).sqrt());
    Ok(poly::close_ring(out))
}

/// Samples a nucleus boundary centered at the origin: ellipse with
/// log-normal axis ratio and uniform orientation, radial Perlin
/// perturbation at the given amplitude, B-spline smoothed, rescaled to
/// the exact target area.
pub fn sample_nucleus_boundary(
    rng: &mut StreamRng,
    target_area: f64,
    perturb_amplitude: f64,
) -> Result<Vec<Point>> {
    let axis_ratio = sample_axis_ratio(rng);
    let orientation = rng.gen_range(0.0..std::f64::consts::PI);
    let noise_seed = rng.gen::<u64>();
    build_boundary(target_area, axis_ratio, orientation, perturb_amplitude, noise_seed)
}
