//! Periodic cubic B-spline smoothing of closed boundaries.
//!
//! Control points are solved so the spline interpolates data points
//! resampled from the input ring at uniform arc-length spacing; the
//! curve is then densely re-evaluated.

use super::poly::{arc_length, close_ring, open_ring, Point};
use crate::error::{Error, Result};

/// Thomas solve of a tridiagonal system with constant bands
/// (sub, diag, sup).
fn tridiag_solve(sub: f64, diag: f64, sup: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup / diag;
    d[0] = rhs[0] / diag;
    for i in 1..n {
        let m = diag - sub * c[i - 1];
        c[i] = sup / m;
        d[i] = (rhs[i] - sub * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Cyclic tridiagonal solve (constant bands plus wrap-around corners
/// equal to `sub`/`sup`) via the Sherman-Morrison correction.
fn cyclic_tridiag_solve(sub: f64, diag: f64, sup: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    assert!(n >= 3);
    let gamma = -diag;
    // perturbed diagonal: subtract gamma at 0 and sup*sub/gamma at n-1
    let solve_perturbed = |r: &[f64]| -> Vec<f64> {
        // variable diagonal Thomas
        let mut diags = vec![diag; n];
        diags[0] = diag - gamma;
        diags[n - 1] = diag - sup * sub / gamma;
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = sup / diags[0];
        d[0] = r[0] / diags[0];
        for i in 1..n {
            let m = diags[i] - sub * c[i - 1];
            c[i] = sup / m;
            d[i] = (r[i] - sub * d[i - 1]) / m;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    };
    let x = solve_perturbed(rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = sup;
    let z = solve_perturbed(&u);
    // v = (1, 0, ..., 0, sub/gamma)
    let vx = x[0] + sub / gamma * x[n - 1];
    let vz = z[0] + sub / gamma * z[n - 1];
    let factor = vx / (1.0 + vz);
    (0..n).map(|i| x[i] - factor * z[i]).collect()
}

/// Resamples a closed ring at `count` points spaced uniformly in arc
/// length, starting at the first vertex.
fn resample_by_arc_length(ring: &[Point], count: usize) -> Vec<Point> {
    let n = ring.len();
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for i in 0..n {
        let [x1, y1] = ring[i];
        let [x2, y2] = ring[(i + 1) % n];
        let seg = ((x2 - x1).powi(2) + (y2 - y1).powi(2)).sqrt();
        cum.push(cum[i] + seg);
    }
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(count);
    let mut seg = 0usize;
    for k in 0..count {
        let target = total * k as f64 / count as f64;
        while seg + 1 < n && cum[seg + 1] < target {
            seg += 1;
        }
        let seg_len = cum[seg + 1] - cum[seg];
        let t = if seg_len > 0.0 { (target - cum[seg]) / seg_len } else { 0.0 };
        let [x1, y1] = ring[seg];
        let [x2, y2] = ring[(seg + 1) % n];
        out.push([x1 + t * (x2 - x1), y1 + t * (y2 - y1)]);
    }
    out
}

/// Evaluates a closed uniform cubic B-spline with control ring `ctrl` at
/// parameter `t` in units of knot intervals.
fn eval_periodic_cubic(ctrl: &[Point], t: f64) -> Point {
    let n = ctrl.len();
    let j = t.floor() as isize;
    let u = t - j as f64;
    let idx = |k: isize| -> Point { ctrl[(j + k).rem_euclid(n as isize) as usize] };
    let b0 = (1.0 - u).powi(3) / 6.0;
    let b1 = (3.0 * u.powi(3) - 6.0 * u * u + 4.0) / 6.0;
    let b2 = (-3.0 * u.powi(3) + 3.0 * u * u + 3.0 * u + 1.0) / 6.0;
    let b3 = u.powi(3) / 6.0;
    let (p0, p1, p2, p3) = (idx(-1), idx(0), idx(1), idx(2));
    [
        b0 * p0[0] + b1 * p1[0] + b2 * p2[0] + b3 * p3[0],
        b0 * p0[1] + b1 * p1[1] + b2 * p2[1] + b3 * p3[1],
    ]
}

/// Smooths a closed boundary with an interpolating periodic cubic
/// B-spline whose knots sit every `knot_spacing` pixels of arc length.
/// Returns a closed ring with at least 64 distinct vertices.
pub fn smooth_boundary_bspline(points: &[Point], knot_spacing: f64) -> Result<Vec<Point>> {
    if knot_spacing <= 0.0 {
        return Err(Error::Parameter(format!("knot_spacing {knot_spacing} must be > 0")));
    }
    let ring = open_ring(points);
    if ring.len() < 4 {
        return Err(Error::Geometry(format!("need >= 4 vertices, got {}", ring.len())));
    }
    let total = arc_length(points);
    if total <= 0.0 {
        return Err(Error::Geometry("zero-length boundary".into()));
    }
    let n_knots = ((total / knot_spacing).round() as usize).max(4);
    let data = resample_by_arc_length(ring, n_knots);

    // interpolation condition for uniform cubic B-splines:
    // (c[j-1] + 4 c[j] + c[j+1]) / 6 = d[j], cyclically
    let rx: Vec<f64> = data.iter().map(|p| 6.0 * p[0]).collect();
    let ry: Vec<f64> = data.iter().map(|p| 6.0 * p[1]).collect();
    let (cx, cy) = if n_knots >= 3 {
        (cyclic_tridiag_solve(1.0, 4.0, 1.0, &rx), cyclic_tridiag_solve(1.0, 4.0, 1.0, &ry))
    } else {
        (tridiag_solve(1.0, 4.0, 1.0, &rx), tridiag_solve(1.0, 4.0, 1.0, &ry))
    };
    let ctrl: Vec<Point> = cx.into_iter().zip(cy).map(|(x, y)| [x, y]).collect();

    let n_out = (4 * n_knots).max(64);
    let mut out = Vec::with_capacity(n_out + 1);
    for k in 0..n_out {
        let t = n_knots as f64 * k as f64 / n_out as f64;
        out.push(eval_periodic_cubic(&ctrl, t));
    }
    Ok(close_ring(out))
}
