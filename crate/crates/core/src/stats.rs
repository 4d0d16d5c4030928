//! Nonparametric statistics powering the population report:
//! Mann-Whitney U (exact and normal-approximation), Cohen's d, ROC/AUC
//! with Youden threshold selection, Kolmogorov-Smirnov distance,
//! percentile bootstrap, and Bonferroni correction.

use crate::biomarker::BiomarkerVector;
use crate::error::{Error, Result};
use crate::geometry::TissueClass;
use crate::rng::StreamRng;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

// ---------------------------------------------------------------------------
// Normal distribution helpers

/// Complementary error function (Abramowitz & Stegun 7.1.26, |err| < 1.5e-7).
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let tau = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587
                                        + t * (-0.82215223 + t * 0.17087277)))))))))
            .exp();
    if x >= 0.0 {
        tau
    } else {
        2.0 - tau
    }
}

/// Standard normal upper tail P(Z > z).
fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

// ---------------------------------------------------------------------------
// Ranks

/// Midranks (1-based) of the values, plus the tie-correction term
/// sum over tie groups of (t^3 - t).
fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        let rank = (i + 1 + j + 1) as f64 / 2.0;
        for k in i..=j {
            ranks[order[k]] = rank;
        }
        tie_term += t * t * t - t;
        i = j + 1;
    }
    (ranks, tie_term)
}

// ---------------------------------------------------------------------------
// Mann-Whitney U

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MwMode {
    Exact,
    NormalApprox,
    Auto,
}

pub const MW_EXACT_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MannWhitneyResult {
    /// min(U_a, U_b), the reported convention.
    pub u: f64,
    pub u_a: f64,
    pub u_b: f64,
    pub p_two_sided: f64,
    pub exact: bool,
}

/// Two-sided Mann-Whitney U test with midranks. Exact p by full
/// enumeration of the C(n_a+n_b, n_a) group assignments (permutation
/// null conditioned on the pooled values); otherwise a normal
/// approximation with tie-corrected variance and continuity correction.
pub fn mann_whitney_u(group_a: &[f64], group_b: &[f64], mode: MwMode) -> Result<MannWhitneyResult> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(Error::Input("empty group".into()));
    }
    let na = group_a.len();
    let nb = group_b.len();
    let n = na + nb;
    if !group_a.iter().chain(group_b).all(|v| v.is_finite()) {
        return Err(Error::Input("non-finite sample value".into()));
    }
    let pooled: Vec<f64> = group_a.iter().chain(group_b).copied().collect();
    let (ranks, tie_term) = midranks(&pooled);
    let rank_sum_a: f64 = ranks[..na].iter().sum();
    let u_a = rank_sum_a - (na * (na + 1)) as f64 / 2.0;
    let u_b = (na * nb) as f64 - u_a;
    let mu = (na * nb) as f64 / 2.0;

    let exact_feasible = n <= MW_EXACT_LIMIT;
    let use_exact = match mode {
        MwMode::Exact => {
            if !exact_feasible {
                return Err(Error::Parameter(format!(
                    "exact mode requires n_a + n_b <= {MW_EXACT_LIMIT}, got {n}"
                )));
            }
            true
        }
        MwMode::NormalApprox => false,
        MwMode::Auto => exact_feasible,
    };

    let p = if use_exact {
        let dev = (u_a - mu).abs();
        let mut hits = 0u64;
        let mut total = 0u64;
        let offset = (na * (na + 1)) as f64 / 2.0;
        for mask in 0u32..(1u32 << n) {
            if mask.count_ones() as usize != na {
                continue;
            }
            total += 1;
            let mut rs = 0.0;
            for (i, r) in ranks.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    rs += r;
                }
            }
            if ((rs - offset) - mu).abs() >= dev - 1e-9 {
                hits += 1;
            }
        }
        hits as f64 / total as f64
    } else {
        let nf = n as f64;
        let var = (na * nb) as f64 / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
        if var <= 0.0 {
            1.0
        } else {
            let dev = (u_a - mu).abs();
            let z = ((dev - 0.5).max(0.0)) / var.sqrt();
            (2.0 * normal_sf(z)).min(1.0)
        }
    };

    Ok(MannWhitneyResult { u: u_a.min(u_b), u_a, u_b, p_two_sided: p, exact: use_exact })
}

// ---------------------------------------------------------------------------
// Cohen's d

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// d = (mu2 - mu1) / sqrt((sd1^2 + sd2^2) / 2).
pub fn cohens_d_summary(mu1: f64, sd1: f64, mu2: f64, sd2: f64) -> Result<f64> {
    let pooled = ((sd1 * sd1 + sd2 * sd2) / 2.0).sqrt();
    if pooled <= 0.0 {
        return Err(Error::Degenerate("both standard deviations are zero".into()));
    }
    Ok((mu2 - mu1) / pooled)
}

/// Cohen's d from samples (group_b minus group_a, sample SDs).
pub fn cohens_d(group_a: &[f64], group_b: &[f64]) -> Result<f64> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(Error::Input("empty group".into()));
    }
    let (m1, s1) = mean_sd(group_a);
    let (m2, s2) = mean_sd(group_b);
    cohens_d_summary(m1, s1, m2, s2)
}

// ---------------------------------------------------------------------------
// ROC / Youden

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RocResult {
    pub auc: f64,
    pub youden_threshold: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

/// AUC by the rank (Mann-Whitney) formulation with midranks; Youden
/// threshold = adjacent-score midpoint maximizing J = sens + spec - 1,
/// ties broken toward the lower threshold. Scores above the threshold
/// classify as positive.
pub fn roc_auc_youden(scores: &[f64], labels: &[bool]) -> Result<RocResult> {
    if scores.len() != labels.len() {
        return Err(Error::Input("scores/labels length mismatch".into()));
    }
    let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l).map(|(&s, _)| s).collect();
    let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| !l).map(|(&s, _)| s).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Input("both label classes must be present".into()));
    }
    let mw = mann_whitney_u(&neg, &pos, MwMode::NormalApprox)?;
    let auc = mw.u_b / (pos.len() * neg.len()) as f64;

    let mut sorted: Vec<f64> = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup();
    let mut candidates: Vec<f64> = sorted.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
    if candidates.is_empty() {
        candidates.push(sorted[0]); // all scores identical
    }
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0, 0.0);
    for &t in &candidates {
        let tp = pos.iter().filter(|&&s| s > t).count() as f64;
        let tn = neg.iter().filter(|&&s| s <= t).count() as f64;
        let sens = tp / pos.len() as f64;
        let spec = tn / neg.len() as f64;
        let j = sens + spec - 1.0;
        if j > best.0 + 1e-12 {
            best = (j, t, sens, spec);
        }
    }
    Ok(RocResult {
        auc,
        youden_threshold: best.1,
        sensitivity: best.2,
        specificity: best.3,
    })
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

/// Exact sup-distance between the two empirical CDFs.
pub fn ks_statistic(group_a: &[f64], group_b: &[f64]) -> Result<f64> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(Error::Input("empty group".into()));
    }
    let mut a: Vec<f64> = group_a.to_vec();
    let mut b: Vec<f64> = group_b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        let fa = i as f64 / a.len() as f64;
        let fb = j as f64 / b.len() as f64;
        d = d.max((fa - fb).abs());
    }
    Ok(d)
}

// ---------------------------------------------------------------------------
// Bootstrap

/// 95%-style percentile bootstrap CI of the sample mean. Each resample
/// draws from its own forked RNG stream, so the result is independent
/// of how resamples are partitioned across workers.
pub fn bootstrap_ci(
    values: &[f64],
    resamples: usize,
    level: f64,
    rng: &StreamRng,
) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::Input("bootstrap needs at least 2 values".into()));
    }
    if !(0.0..1.0).contains(&level) || level <= 0.0 {
        return Err(Error::Parameter(format!("invalid confidence level {level}")));
    }
    if resamples == 0 {
        return Err(Error::Parameter("resamples must be >= 1".into()));
    }
    let one = |r: usize| -> f64 {
        let mut local = rng.fork(r as u64);
        let mut acc = 0.0;
        for _ in 0..values.len() {
            acc += values[local.gen_range(0..values.len())];
        }
        acc / values.len() as f64
    };
    #[cfg(feature = "parallel")]
    let mut means: Vec<f64> = (0..resamples).into_par_iter().map(one).collect();
    #[cfg(not(feature = "parallel"))]
    let mut means: Vec<f64> = (0..resamples).map(one).collect();
    means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile = |q: f64| -> f64 {
        let pos = q * (means.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let t = pos - lo as f64;
        means[lo] * (1.0 - t) + means[hi] * t
    };
    let tail = (1.0 - level) / 2.0;
    Ok((quantile(tail), quantile(1.0 - tail)))
}

/// alpha / k.
pub fn bonferroni(alpha: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Parameter("k must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Parameter(format!("invalid alpha {alpha}")));
    }
    Ok(alpha / k as f64)
}

// ---------------------------------------------------------------------------
// Population report

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub metric: String,
    pub n_normal: usize,
    pub n_dysplasia: usize,
    pub mean_normal: f64,
    pub sd_normal: f64,
    pub ci_normal: (f64, f64),
    pub mean_dysplasia: f64,
    pub sd_dysplasia: f64,
    pub ci_dysplasia: (f64, f64),
    pub u: f64,
    pub p_value: f64,
    pub significant: bool,
    pub cohens_d: f64,
    pub auc: f64,
    pub youden_threshold: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PopulationReport {
    pub alpha: f64,
    pub alpha_corrected: f64,
    pub resamples: usize,
    pub rows: Vec<ReportRow>,
}

fn metric_columns(v: &BiomarkerVector) -> [(&'static str, Option<f64>); 8] {
    [
        ("area_px2", v.area_px2),
        ("perimeter_px", v.perimeter_px),
        ("circularity", v.circularity),
        ("eccentricity", v.eccentricity),
        ("sigma_intensity", v.sigma_intensity),
        ("variance_slope", v.variance_slope),
        ("packing_D", v.packing_dimension),
        ("entropy_bits", v.entropy_bits),
    ]
}

/// Per-metric normal-vs-dysplasia comparison: group means/SDs with
/// bootstrap CIs, Mann-Whitney p (Bonferroni-flagged), Cohen's d, AUC,
/// and the Youden operating point.
pub fn population_report(
    biomarkers: &[BiomarkerVector],
    alpha: f64,
    resamples: usize,
    rng: &StreamRng,
) -> Result<PopulationReport> {
    let alpha_corrected = bonferroni(alpha, 8)?;
    let mut rows = Vec::new();
    for (k, &(name, _)) in metric_columns(&BiomarkerVector {
        nucleus_id: 0,
        tissue_class: TissueClass::Normal,
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
    })
    .iter()
    .enumerate()
    {
        let mut normal = Vec::new();
        let mut dysplasia = Vec::new();
        for v in biomarkers {
            if let (nm, Some(x)) = metric_columns(v)[k] {
                debug_assert_eq!(nm, name);
                match v.tissue_class {
                    TissueClass::Normal => normal.push(x),
                    TissueClass::Dysplasia => dysplasia.push(x),
                }
            }
        }
        if normal.len() < 2 || dysplasia.len() < 2 {
            return Err(Error::Input(format!(
                "metric {name}: both classes need >= 2 values (got {} / {})",
                normal.len(),
                dysplasia.len()
            )));
        }
        let (mean_a, sd_a) = mean_sd(&normal);
        let (mean_b, sd_b) = mean_sd(&dysplasia);
        let mw = mann_whitney_u(&normal, &dysplasia, MwMode::Auto)?;
        let d = cohens_d(&normal, &dysplasia).unwrap_or(0.0);
        let scores: Vec<f64> = normal.iter().chain(&dysplasia).copied().collect();
        let labels: Vec<bool> = normal
            .iter()
            .map(|_| false)
            .chain(dysplasia.iter().map(|_| true))
            .collect();
        let roc = roc_auc_youden(&scores, &labels)?;
        let ci_a = bootstrap_ci(&normal, resamples, 0.95, &rng.fork(2 * k as u64))?;
        let ci_b = bootstrap_ci(&dysplasia, resamples, 0.95, &rng.fork(2 * k as u64 + 1))?;
        rows.push(ReportRow {
            metric: name.to_string(),
            n_normal: normal.len(),
            n_dysplasia: dysplasia.len(),
            mean_normal: mean_a,
            sd_normal: sd_a,
            ci_normal: ci_a,
            mean_dysplasia: mean_b,
            sd_dysplasia: sd_b,
            ci_dysplasia: ci_b,
            u: mw.u,
            p_value: mw.p_two_sided,
            significant: mw.p_two_sided < alpha_corrected,
            cohens_d: d,
            auc: roc.auc,
            youden_threshold: roc.youden_threshold,
            sensitivity: roc.sensitivity,
            specificity: roc.specificity,
        });
    }
    Ok(PopulationReport { alpha, alpha_corrected, resamples, rows })
}

pub const REPORT_CSV_HEADER: &str = "metric,n_normal,n_dysplasia,mean_normal,sd_normal,ci_lo_normal,ci_hi_normal,mean_dysplasia,sd_dysplasia,ci_lo_dysplasia,ci_hi_dysplasia,u,p_value,significant,cohens_d,auc,youden_threshold,sensitivity,specificity";

/// CSV serialization of the population report (LF newlines).
pub fn report_csv(report: &PopulationReport) -> String {
    let mut doc = String::from(REPORT_CSV_HEADER);
    doc.push('\n');
    for r in &report.rows {
        doc.push_str(&format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6e},{},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            r.metric,
            r.n_normal,
            r.n_dysplasia,
            r.mean_normal,
            r.sd_normal,
            r.ci_normal.0,
            r.ci_normal.1,
            r.mean_dysplasia,
            r.sd_dysplasia,
            r.ci_dysplasia.0,
            r.ci_dysplasia.1,
            r.u,
            r.p_value,
            r.significant,
            r.cohens_d,
            r.auc,
            r.youden_threshold,
            r.sensitivity,
            r.specificity,
        ));
    }
    doc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mw_exact_spec_fixtures() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], MwMode::Exact).unwrap();
        assert_eq!(r.u, 0.0);
        assert!((r.p_two_sided - 0.1).abs() < 1e-12, "p {}", r.p_two_sided);
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], MwMode::Exact).unwrap();
        assert!((r.p_two_sided - 1.0).abs() < 1e-12, "p {}", r.p_two_sided);
    }

    #[test]
    fn mw_exact_matches_independent_enumeration() {
        // independent oracle: enumerate subsets with explicit pairwise
        // counting of U (wins + half-ties), no rank arithmetic
        let mut rng = StreamRng::new(31, 0);
        for trial in 0..40 {
            let na = 2 + (trial % 4) as usize;
            let nb = 2 + (trial / 4 % 4) as usize;
            if na + nb > 10 {
                continue;
            }
            let pooled: Vec<f64> = (0..na + nb)
                .map(|_| (rng.gen_range(0..6) as f64) / 2.0) // heavy ties
                .collect();
            let (a, b) = pooled.split_at(na);
            let got = mann_whitney_u(a, b, MwMode::Exact).unwrap();

            let u_of = |mask: u32| -> f64 {
                let mut u = 0.0;
                for i in 0..na + nb {
                    if mask >> i & 1 == 0 {
                        continue; // i in group a
                    }
                    for j in 0..na + nb {
                        if mask >> j & 1 == 1 {
                            continue; // j in group b
                        }
                        // count pairs where a-value beats b-value
                        if pooled[i] > pooled[j] {
                            u += 1.0;
                        } else if pooled[i] == pooled[j] {
                            u += 0.5;
                        }
                    }
                }
                u
            };
            let obs_mask = ((1u32 << na) - 1) as u32;
            let mu = (na * nb) as f64 / 2.0;
            let obs_dev = (u_of(obs_mask) - mu).abs();
            let mut hits = 0u64;
            let mut total = 0u64;
            for mask in 0u32..(1 << (na + nb)) {
                if mask.count_ones() as usize == na {
                    total += 1;
                    if (u_of(mask) - mu).abs() >= obs_dev - 1e-9 {
                        hits += 1;
                    }
                }
            }
            let p_oracle = hits as f64 / total as f64;
            assert!(
                (got.p_two_sided - p_oracle).abs() < 1e-12,
                "trial {trial}: {} vs {p_oracle}",
                got.p_two_sided
            );
            assert!((got.u_a - u_of(obs_mask)).abs() < 1e-12);
        }
    }

    #[test]
    fn mw_exact_vs_normal_close() {
        let mut rng = StreamRng::new(32, 0);
        for _ in 0..20 {
            let a: Vec<f64> = (0..8).map(|_| rng.gen::<f64>()).collect();
            let b: Vec<f64> = (0..8).map(|_| rng.gen::<f64>() + 0.2).collect();
            let pe = mann_whitney_u(&a, &b, MwMode::Exact).unwrap().p_two_sided;
            let pn = mann_whitney_u(&a, &b, MwMode::NormalApprox).unwrap().p_two_sided;
            assert!((pe - pn).abs() <= 0.02, "exact {pe} vs approx {pn}");
        }
    }

    #[test]
    fn mw_guards() {
        assert!(mann_whitney_u(&[], &[1.0], MwMode::Auto).is_err());
        let long: Vec<f64> = (0..17).map(|i| i as f64).collect();
        assert!(mann_whitney_u(&long, &[1.0], MwMode::Exact).is_err());
        // auto switches to the approximation above the limit
        let r = mann_whitney_u(&long, &[8.5], MwMode::Auto).unwrap();
        assert!(!r.exact);
    }

    #[test]
    fn cohens_d_fixtures() {
        assert_eq!(cohens_d_summary(5.0, 1.0, 5.0, 1.0).unwrap(), 0.0);
        assert!((cohens_d_summary(0.0, 2.0, 2.0, 2.0).unwrap() - 1.0).abs() < 1e-12);
        let d = cohens_d_summary(1201.0, 156.0, 1802.0, 224.0).unwrap();
        let expect = 601.0 / ((156.0f64.powi(2) + 224.0f64.powi(2)) / 2.0).sqrt();
        assert!((d - expect).abs() < 1e-9, "d {d} vs {expect}");
        assert!((d - 3.11).abs() < 0.01);
        assert!(cohens_d_summary(1.0, 0.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn cohens_d_antisymmetry_and_affine_invariance() {
        let a = [1.0, 2.0, 3.5, 2.2];
        let b = [4.0, 5.5, 3.9, 6.0];
        let d = cohens_d(&a, &b).unwrap();
        assert!((d + cohens_d(&b, &a).unwrap()).abs() < 1e-12);
        let ta: Vec<f64> = a.iter().map(|v| 3.0 * v + 7.0).collect();
        let tb: Vec<f64> = b.iter().map(|v| 3.0 * v + 7.0).collect();
        assert!((d - cohens_d(&ta, &tb).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn auc_matches_pairwise_oracle() {
        let mut rng = StreamRng::new(33, 0);
        for _ in 0..200 {
            let n = 20usize;
            let scores: Vec<f64> = (0..n).map(|_| (rng.gen_range(0..40) as f64) / 4.0).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            if labels.iter().all(|&l| l) {
                labels[0] = false;
            }
            if labels.iter().all(|&l| !l) {
                labels[0] = true;
            }
            let roc = roc_auc_youden(&scores, &labels).unwrap();
            let mut num = 0.0;
            let mut den = 0.0;
            for (i, &li) in labels.iter().enumerate() {
                if !li {
                    continue;
                }
                for (j, &lj) in labels.iter().enumerate() {
                    if lj {
                        continue;
                    }
                    den += 1.0;
                    if scores[i] > scores[j] {
                        num += 1.0;
                    } else if scores[i] == scores[j] {
                        num += 0.5;
                    }
                }
            }
            assert!((roc.auc - num / den).abs() < 1e-12, "{} vs {}", roc.auc, num / den);
        }
    }

    #[test]
    fn youden_maximal_and_trivial_cases() {
        let scores = [0.1, 0.2, 0.3, 0.8, 0.9, 1.0];
        let labels = [false, false, false, true, true, true];
        let roc = roc_auc_youden(&scores, &labels).unwrap();
        assert_eq!(roc.auc, 1.0);
        assert_eq!(roc.sensitivity, 1.0);
        assert_eq!(roc.specificity, 1.0);
        assert!(roc.youden_threshold > 0.3 && roc.youden_threshold < 0.8);

        let same = [0.5; 6];
        let roc = roc_auc_youden(&same, &labels).unwrap();
        assert_eq!(roc.auc, 0.5);

        // maximality vs exhaustive midpoint scan
        let mut rng = StreamRng::new(34, 0);
        for _ in 0..50 {
            let scores: Vec<f64> = (0..15).map(|_| rng.gen::<f64>()).collect();
            let mut labels: Vec<bool> = (0..15).map(|_| rng.gen_bool(0.5)).collect();
            labels[0] = true;
            labels[1] = false;
            let roc = roc_auc_youden(&scores, &labels).unwrap();
            let got_j = roc.sensitivity + roc.specificity - 1.0;
            let mut sorted = scores.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for w in sorted.windows(2) {
                let t = (w[0] + w[1]) / 2.0;
                let tp = scores.iter().zip(&labels).filter(|&(&s, &l)| l && s > t).count() as f64;
                let tn = scores.iter().zip(&labels).filter(|&(&s, &l)| !l && s <= t).count() as f64;
                let p = labels.iter().filter(|&&l| l).count() as f64;
                let n = labels.len() as f64 - p;
                let j = tp / p + tn / n - 1.0;
                assert!(j <= got_j + 1e-12, "candidate {t} beats Youden: {j} > {got_j}");
            }
        }
    }

    #[test]
    fn ks_fixtures() {
        assert_eq!(ks_statistic(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(ks_statistic(&[0.0, 1.0], &[5.0, 6.0]).unwrap(), 1.0);
        assert!((ks_statistic(&[1.0, 2.0], &[1.5, 2.5]).unwrap() - 0.5).abs() < 1e-12);
        // in [0,1] and monotone-transform invariant
        let a = [0.3, 1.2, 2.0, 0.1];
        let b = [0.5, 0.8, 3.0];
        let d = ks_statistic(&a, &b).unwrap();
        assert!((0.0..=1.0).contains(&d));
        let ta: Vec<f64> = a.iter().map(|v| v.exp()).collect();
        let tb: Vec<f64> = b.iter().map(|v| v.exp()).collect();
        assert!((d - ks_statistic(&ta, &tb).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_basics() {
        let rng = StreamRng::new(35, 0);
        let (lo, hi) = bootstrap_ci(&[2.0; 10], 500, 0.95, &rng).unwrap();
        assert_eq!((lo, hi), (2.0, 2.0));
        let values: Vec<f64> = (0..50).map(|i| (i as f64) / 10.0).collect();
        let c1 = bootstrap_ci(&values, 1000, 0.95, &rng).unwrap();
        let c2 = bootstrap_ci(&values, 1000, 0.95, &StreamRng::new(35, 0)).unwrap();
        assert_eq!(c1, c2);
        assert!(c1.0 < 2.45 && c1.1 > 2.45, "CI {c1:?} should cover the mean");
        assert!(bootstrap_ci(&[1.0], 100, 0.95, &rng).is_err());
    }

    #[test]
    fn bootstrap_coverage() {
        use rand_distr::{Distribution, StandardNormal};
        let mut covered = 0;
        let trials = 30;
        for t in 0..trials {
            let mut rng = StreamRng::new(36, t);
            let values: Vec<f64> =
                (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
            let (lo, hi) = bootstrap_ci(&values, 2000, 0.95, &rng.fork(99)).unwrap();
            if lo <= 0.0 && 0.0 <= hi {
                covered += 1;
            }
        }
        assert!(covered >= trials * 9 / 10, "coverage {covered}/{trials}");
    }

    #[test]
    fn bonferroni_fixtures() {
        assert_eq!(bonferroni(0.05, 8).unwrap(), 0.00625);
        assert_eq!(bonferroni(0.05, 1).unwrap(), 0.05);
        assert!((bonferroni(0.05, 3).unwrap() - 0.05 / 3.0).abs() < 1e-15);
        assert!(bonferroni(0.05, 0).is_err());
    }

    #[test]
    fn population_report_identical_groups() {
        let mut vectors = Vec::new();
        for class in [TissueClass::Normal, TissueClass::Dysplasia] {
            for i in 0..20u32 {
                let x = i as f64 / 10.0;
                vectors.push(BiomarkerVector {
                    nucleus_id: i,
                    tissue_class: class,
                    area_px2: Some(1000.0 + x),
                    area_um2: Some(250.0 + x),
                    perimeter_px: Some(120.0 + x),
                    circularity: Some(0.9 - x / 100.0),
                    eccentricity: Some(0.4 + x / 100.0),
                    sigma_intensity: Some(0.5 + x / 50.0),
                    variance_slope: Some(1.0 + x / 10.0),
                    packing_dimension: Some(2.5 - x / 20.0),
                    entropy_bits: Some(3.0 + x / 30.0),
                    flags: Vec::new(),
                });
            }
        }
        let rng = StreamRng::new(37, 0);
        let report = population_report(&vectors, 0.05, 500, &rng).unwrap();
        assert_eq!(report.rows.len(), 8);
        assert_eq!(report.alpha_corrected, 0.00625);
        for r in &report.rows {
            assert_eq!(r.cohens_d, 0.0);
            assert!((r.auc - 0.5).abs() < 1e-12, "{}: auc {}", r.metric, r.auc);
            assert!(!r.significant);
        }
        let c1 = report_csv(&report);
        let c2 = report_csv(&population_report(&vectors, 0.05, 500, &StreamRng::new(37, 0)).unwrap());
        assert_eq!(c1, c2);
        assert!(c1.starts_with(REPORT_CSV_HEADER));
    }
}
