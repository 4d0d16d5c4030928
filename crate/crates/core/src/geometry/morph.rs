//! Label-aware morphology on instance masks via exact Euclidean
//! distance transforms (Felzenszwalb-Huttenlocher lower envelopes).

use super::raster::InstanceMask;
use crate::error::{Error, Result};

const INF: f64 = 1e20;

/// 1D squared-distance transform with argmin tracking. `f[i]` is the
/// seed cost at position i (0 for seeds, INF otherwise); returns the
/// transformed costs and, per position, the index attaining the minimum.
fn dt1d(f: &[f64], src: &[usize]) -> (Vec<f64>, Vec<usize>) {
    let n = f.len();
    let mut d = vec![0.0; n];
    let mut arg = vec![0usize; n];
    let mut v = vec![0usize; n]; // parabola sites
    let mut z = vec![0.0; n + 1]; // envelope breakpoints
    let mut k = 0usize;
    v[0] = 0;
    z[0] = -INF;
    z[1] = INF;
    for q in 1..n {
        let mut s;
        loop {
            let p = v[k];
            s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
            if s <= z[k] {
                if k == 0 {
                    break;
                }
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = INF;
    }
    let mut k = 0usize;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        d[q] = (q as f64 - p as f64).powi(2) + f[p];
        arg[q] = src[p];
    }
    (d, arg)
}

/// Exact squared Euclidean distance from every pixel to the nearest seed,
/// plus the linear index of that seed. Non-seed-reachable pixels (no
/// seeds at all) keep INF.
pub fn nearest_seed_transform(
    seeds: &[bool],
    width: usize,
    height: usize,
) -> (Vec<f64>, Vec<usize>) {
    assert_eq!(seeds.len(), width * height);
    let mut dist = vec![INF; width * height];
    let mut src = vec![0usize; width * height];
    // pass 1: columns
    let mut col_f = vec![0.0; height];
    let mut col_src = vec![0usize; height];
    for x in 0..width {
        for y in 0..height {
            col_f[y] = if seeds[y * width + x] { 0.0 } else { INF };
            col_src[y] = y * width + x;
        }
        let (d, a) = dt1d(&col_f, &col_src);
        for y in 0..height {
            dist[y * width + x] = d[y];
            src[y * width + x] = a[y];
        }
    }
    // pass 2: rows
    let mut row_f = vec![0.0; width];
    let mut row_src = vec![0usize; width];
    for y in 0..height {
        for x in 0..width {
            row_f[x] = dist[y * width + x];
            row_src[x] = src[y * width + x];
        }
        let (d, a) = dt1d(&row_f, &row_src);
        for x in 0..width {
            dist[y * width + x] = d[x];
            src[y * width + x] = a[x];
        }
    }
    (dist, src)
}

/// Result of a mask perturbation: the new mask plus any labels erased
/// entirely by erosion.
#[derive(Debug, Clone)]
pub struct PerturbedMask {
    pub mask: InstanceMask,
    pub dropped_labels: Vec<u32>,
}

/// Uniformly dilates (offset > 0) or erodes (offset < 0) every label with
/// a disk structuring element of radius |offset|. Dilation assigns
/// contested pixels to the nearest label (labels never merge); erosion
/// removes pixels within |offset| of the background. Labels erased by
/// erosion are reported, not treated as errors.
pub fn perturb_mask(mask: &InstanceMask, offset: i32) -> Result<PerturbedMask> {
    if offset == 0 || offset.abs() > 5 {
        return Err(Error::Parameter(format!("offset {offset} outside +-[1, 5]")));
    }
    let (w, h) = (mask.width(), mask.height());
    let r2 = f64::from(offset * offset);
    let mut out = InstanceMask::new(w, h)?;
    if offset > 0 {
        let seeds: Vec<bool> = mask.labels().iter().map(|&l| l != 0).collect();
        if seeds.iter().any(|&s| s) {
            let (dist, src) = nearest_seed_transform(&seeds, w, h);
            for i in 0..w * h {
                if dist[i] <= r2 {
                    let label = mask.labels()[src[i]];
                    out.set(i % w, i / w, label);
                }
            }
        }
        Ok(PerturbedMask { mask: out, dropped_labels: Vec::new() })
    } else {
        let seeds: Vec<bool> = mask.labels().iter().map(|&l| l == 0).collect();
        let before = mask.label_areas();
        if seeds.iter().any(|&s| s) {
            let (dist, _) = nearest_seed_transform(&seeds, w, h);
            for i in 0..w * h {
                let l = mask.labels()[i];
                if l != 0 && dist[i] > r2 {
                    out.set(i % w, i / w, l);
                }
            }
        } else {
            // no background anywhere: erosion removes nothing
            out = mask.clone();
        }
        let after = out.label_areas();
        let dropped = before.keys().filter(|k| !after.contains_key(k)).copied().collect();
        Ok(PerturbedMask { mask: out, dropped_labels: dropped })
    }
}
