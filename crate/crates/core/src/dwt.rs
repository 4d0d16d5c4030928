//! Separable 2D discrete wavelet transform (orthonormal Daubechies-4,
//! 8-tap filters, periodic boundary handling).

use crate::error::{Error, Result};

/// db4 analysis lowpass filter (orthonormal; sums to sqrt(2)).
const DB4_LO: [f64; 8] = [
    0.230_377_813_308_855_2,
    0.714_846_570_552_541_5,
    0.630_880_767_929_590_4,
    -0.027_983_769_416_983_85,
    -0.187_034_811_718_881_1,
    0.030_841_381_835_986_97,
    0.032_883_011_666_982_95,
    -0.010_597_401_784_997_278,
];

fn db4_hi() -> [f64; 8] {
    let mut g = [0.0; 8];
    for (k, g_k) in g.iter_mut().enumerate() {
        *g_k = if k % 2 == 0 { DB4_LO[7 - k] } else { -DB4_LO[7 - k] };
    }
    g
}

/// One level of periodic analysis filtering + dyadic downsampling along a
/// 1D signal of even length.
fn analyze_1d(signal: &[f64], lo: &[f64; 8], hi: &[f64; 8]) -> (Vec<f64>, Vec<f64>) {
    let n = signal.len();
    let half = n / 2;
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for i in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for k in 0..8 {
            let idx = (2 * i + k) % n;
            a += lo[k] * signal[idx];
            d += hi[k] * signal[idx];
        }
        approx[i] = a;
        detail[i] = d;
    }
    (approx, detail)
}

/// Detail sub-bands of one 2D decomposition level.
pub struct DetailBands {
    pub lh: Vec<f64>,
    pub hl: Vec<f64>,
    pub hh: Vec<f64>,
}

/// Multi-level 2D DWT of a square field (side must be divisible by
/// 2^levels); returns the detail bands per level, coarsest last.
pub fn dwt2_details(values: &[f64], side: usize, levels: usize) -> Result<Vec<DetailBands>> {
    if values.len() != side * side {
        return Err(Error::Dimension("dwt input is not square".into()));
    }
    if side % (1 << levels) != 0 {
        return Err(Error::Dimension(format!(
            "side {side} not divisible by 2^{levels}"
        )));
    }
    let hi = db4_hi();
    let mut current = values.to_vec();
    let mut n = side;
    let mut out = Vec::with_capacity(levels);
    for _ in 0..levels {
        let half = n / 2;
        // rows
        let mut row_lo = vec![0.0; half * n];
        let mut row_hi = vec![0.0; half * n];
        for r in 0..n {
            let row: Vec<f64> = (0..n).map(|c| current[r * n + c]).collect();
            let (a, d) = analyze_1d(&row, &DB4_LO, &hi);
            for c in 0..half {
                row_lo[r * half + c] = a[c];
                row_hi[r * half + c] = d[c];
            }
        }
        // columns
        let mut ll = vec![0.0; half * half];
        let mut lh = vec![0.0; half * half];
        let mut hl = vec![0.0; half * half];
        let mut hh = vec![0.0; half * half];
        for c in 0..half {
            let col_l: Vec<f64> = (0..n).map(|r| row_lo[r * half + c]).collect();
            let col_h: Vec<f64> = (0..n).map(|r| row_hi[r * half + c]).collect();
            let (la, ld) = analyze_1d(&col_l, &DB4_LO, &hi);
            let (ha, hd) = analyze_1d(&col_h, &DB4_LO, &hi);
            for r in 0..half {
                ll[r * half + c] = la[r];
                lh[r * half + c] = ld[r];
                hl[r * half + c] = ha[r];
                hh[r * half + c] = hd[r];
            }
        }
        out.push(DetailBands { lh, hl, hh });
        current = ll;
        n = half;
    }
    Ok(out)
}
