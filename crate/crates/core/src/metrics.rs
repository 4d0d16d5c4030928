//! Segmentation quality metrics, the Dice and Lovász losses, and the
//! mask-perturbation sensitivity analysis.

use crate::biomarker::{extract_all, BiomarkerVector, PixelCalibration};
use crate::error::{Error, Result};
use crate::geometry::perturb_mask;
use crate::render::FieldSample;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapMetrics {
    pub dice: f64,
    pub iou: f64,
    pub precision: f64,
    pub recall: f64,
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Input(format!("mask length mismatch: {a} vs {b}")));
    }
    if a == 0 {
        return Err(Error::Input("empty masks".into()));
    }
    Ok(())
}

/// Dice, IoU, precision, recall from pixel-wise TP/FP/FN counts.
/// Empty-denominator convention: 1 when both masks are empty, else 0.
pub fn overlap_metrics(prediction: &[bool], truth: &[bool]) -> Result<OverlapMetrics> {
    check_dims(prediction.len(), truth.len())?;
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut fne = 0.0;
    for (&p, &t) in prediction.iter().zip(truth) {
        match (p, t) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fne += 1.0,
            (false, false) => {}
        }
    }
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 1.0 };
    Ok(OverlapMetrics {
        dice: ratio(2.0 * tp, 2.0 * tp + fp + fne),
        iou: ratio(tp, tp + fp + fne),
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fne),
    })
}

/// Soft Dice loss with squared-denominator form and additive epsilon.
pub fn dice_loss(probs: &[f64], truth: &[bool], epsilon: f64) -> Result<f64> {
    check_dims(probs.len(), truth.len())?;
    if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::Input("probabilities outside [0,1]".into()));
    }
    let mut inter = 0.0;
    let mut p2 = 0.0;
    let mut g2 = 0.0;
    for (&p, &t) in probs.iter().zip(truth) {
        if t {
            inter += p;
            g2 += 1.0;
        }
        p2 += p * p;
    }
    Ok(1.0 - (2.0 * inter + epsilon) / (p2 + g2 + epsilon))
}

/// Binary Lovász hinge on the foreground class. When the truth has no
/// foreground the loss is computed on the background class instead and
/// the returned flag is set.
pub fn lovasz_loss(probs: &[f64], truth: &[bool]) -> Result<(f64, bool)> {
    check_dims(probs.len(), truth.len())?;
    if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::Input("probabilities outside [0,1]".into()));
    }
    let fg_empty = !truth.iter().any(|&t| t);
    let (g, m): (Vec<bool>, Vec<f64>) = if fg_empty {
        // complement class: ground truth is background, score is 1 - p
        (
            truth.iter().map(|&t| !t).collect(),
            probs.iter().zip(truth).map(|(&p, &t)| if t { 1.0 - p } else { p }).collect(),
        )
    } else {
        (
            truth.to_vec(),
            probs.iter().zip(truth).map(|(&p, &t)| if t { 1.0 - p } else { p }).collect(),
        )
    };
    // sort errors descending, stable on index for determinism
    let mut order: Vec<usize> = (0..m.len()).collect();
    order.sort_by(|&a, &b| m[b].partial_cmp(&m[a]).unwrap().then(a.cmp(&b)));
    let total_fg: f64 = g.iter().filter(|&&t| t).count() as f64;
    let mut loss = 0.0;
    let mut fg_hit = 0.0; // foreground pixels among the top-i errors
    let mut bg_hit = 0.0;
    let mut prev_j = 0.0;
    for &idx in &order {
        if g[idx] {
            fg_hit += 1.0;
        } else {
            bg_hit += 1.0;
        }
        // Jaccard loss if the top-i sorted pixels are misclassified
        let inter = total_fg - fg_hit;
        let union = total_fg + bg_hit;
        let j = 1.0 - inter / union;
        loss += m[idx] * (j - prev_j);
        prev_j = j;
    }
    Ok((loss, fg_empty))
}

/// Equal-weight sum of the Dice loss (epsilon = 1) and the Lovász hinge.
pub fn combined_loss(probs: &[f64], truth: &[bool]) -> Result<f64> {
    Ok(dice_loss(probs, truth, 1.0)? + lovasz_loss(probs, truth)?.0)
}

// ---------------------------------------------------------------------------
// Sensitivity analysis

/// The eight scalar biomarkers tracked by the sensitivity table.
pub const SENSITIVITY_METRICS: [&str; 8] = [
    "area_px2",
    "perimeter_px",
    "circularity",
    "eccentricity",
    "sigma_intensity",
    "variance_slope",
    "packing_D",
    "entropy_bits",
];

fn metric_values(v: &BiomarkerVector) -> [Option<f64>; 8] {
    [
        v.area_px2,
        v.perimeter_px,
        v.circularity,
        v.eccentricity,
        v.sigma_intensity,
        v.variance_slope,
        v.packing_dimension,
        v.entropy_bits,
    ]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub offset: i32,
    pub annihilated: usize,
    /// Mean absolute relative error per metric, order of SENSITIVITY_METRICS.
    pub mean_abs_rel_error: [f64; 8],
    /// Median absolute relative error per metric, same order.
    pub median_abs_rel_error: [f64; 8],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityTable {
    pub rows: Vec<SensitivityRow>,
}

fn median(sorted: &mut Vec<f64>) -> f64 {
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Perturbs every ground-truth mask by each offset in {0, ±1..±5},
/// re-extracts the biomarkers, and reports per-metric mean and median
/// absolute relative error vs the unperturbed values. Annihilated
/// nuclei are excluded from the errors and counted per row.
pub fn sensitivity_analysis(
    samples: &[FieldSample],
    calibration: &PixelCalibration,
) -> Result<SensitivityTable> {
    if samples.is_empty() {
        return Err(Error::Input("no samples".into()));
    }
    let baseline_of = |s: &FieldSample| -> Result<BTreeMap<u32, [Option<f64>; 8]>> {
        Ok(extract_all(s, calibration)?
            .into_iter()
            .map(|v| (v.nucleus_id, metric_values(&v)))
            .collect())
    };
    #[cfg(feature = "parallel")]
    let baselines: Vec<BTreeMap<u32, [Option<f64>; 8]>> = {
        use rayon::prelude::*;
        samples.par_iter().map(baseline_of).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let baselines: Vec<BTreeMap<u32, [Option<f64>; 8]>> =
        samples.iter().map(baseline_of).collect::<Result<_>>()?;

    // per-(sample, offset) relative errors; aggregation order is fixed
    // by sample index so the table is deterministic
    type PerSample = ([Vec<f64>; 8], usize);
    let one = |(s, base): (&FieldSample, &BTreeMap<u32, [Option<f64>; 8]>),
               offset: i32|
     -> Result<PerSample> {
        let (mask, dropped) = if offset == 0 {
            (s.mask.clone(), Vec::new())
        } else {
            let p = perturb_mask(&s.mask, offset)?;
            (p.mask, p.dropped_labels)
        };
        let perturbed = FieldSample { image: s.image.clone(), mask, meta: s.meta.clone() };
        let mut errors: [Vec<f64>; 8] = Default::default();
        for v in extract_all(&perturbed, calibration)? {
            let Some(orig) = base.get(&v.nucleus_id) else { continue };
            let new = metric_values(&v);
            for k in 0..8 {
                if let (Some(o), Some(n)) = (orig[k], new[k]) {
                    if o.abs() > 1e-12 {
                        errors[k].push((n - o).abs() / o.abs());
                    }
                }
            }
        }
        Ok((errors, dropped.len()))
    };

    let mut rows = Vec::new();
    for offset in -5i32..=5 {
        #[cfg(feature = "parallel")]
        let partials: Vec<PerSample> = {
            use rayon::prelude::*;
            samples
                .par_iter()
                .zip(baselines.par_iter())
                .map(|pair| one(pair, offset))
                .collect::<Result<_>>()?
        };
        #[cfg(not(feature = "parallel"))]
        let partials: Vec<PerSample> = samples
            .iter()
            .zip(baselines.iter())
            .map(|pair| one(pair, offset))
            .collect::<Result<_>>()?;

        let mut errors: [Vec<f64>; 8] = Default::default();
        let mut annihilated = 0usize;
        for (per_metric, dropped) in partials {
            for (k, list) in per_metric.into_iter().enumerate() {
                errors[k].extend(list);
            }
            annihilated += dropped;
        }
        let mut mean = [0.0; 8];
        let mut med = [0.0; 8];
        for k in 0..8 {
            if !errors[k].is_empty() {
                mean[k] = errors[k].iter().sum::<f64>() / errors[k].len() as f64;
            }
            med[k] = median(&mut errors[k]);
        }
        rows.push(SensitivityRow {
            offset,
            annihilated,
            mean_abs_rel_error: mean,
            median_abs_rel_error: med,
        });
    }
    Ok(SensitivityTable { rows })
}

/// CSV document for the sensitivity table (LF newlines).
pub fn sensitivity_csv(table: &SensitivityTable) -> String {
    let mut doc = String::from("offset,annihilated");
    for m in SENSITIVITY_METRICS {
        doc.push_str(&format!(",mean_{m}"));
    }
    for m in SENSITIVITY_METRICS {
        doc.push_str(&format!(",median_{m}"));
    }
    doc.push('\n');
    for r in &table.rows {
        doc.push_str(&format!("{},{}", r.offset, r.annihilated));
        for v in r.mean_abs_rel_error.iter().chain(&r.median_abs_rel_error) {
            doc.push_str(&format!(",{v:.6}"));
        }
        doc.push('\n');
    }
    doc
}
