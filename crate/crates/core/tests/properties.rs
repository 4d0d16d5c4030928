//! Randomized property tests for the metric, statistic, and geometry
//! invariants that hold for every input, not just fixtures.

use nucleosim_core::geometry::{perturb_mask, InstanceMask};
use nucleosim_core::metrics::{dice_loss, lovasz_loss, overlap_metrics};
use nucleosim_core::stats::{cohens_d, ks_statistic, mann_whitney_u, roc_auc_youden, MwMode};
use proptest::prelude::*;

fn mask_pair() -> impl Strategy<Value = (Vec<bool>, Vec<bool>)> {
    (1usize..64).prop_flat_map(|n| {
        (
            proptest::collection::vec(any::<bool>(), n),
            proptest::collection::vec(any::<bool>(), n),
        )
    })
}

proptest! {
    #[test]
    fn dice_dominates_iou((pred, truth) in mask_pair()) {
        let m = overlap_metrics(&pred, &truth).unwrap();
        prop_assert!(m.dice >= m.iou - 1e-15);
        for v in [m.dice, m.iou, m.precision, m.recall] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn metric_symmetry((pred, truth) in mask_pair()) {
        let m = overlap_metrics(&pred, &truth).unwrap();
        let s = overlap_metrics(&truth, &pred).unwrap();
        prop_assert_eq!(m.dice, s.dice);
        prop_assert_eq!(m.iou, s.iou);
        prop_assert_eq!(m.precision, s.recall);
        prop_assert_eq!(m.recall, s.precision);
    }

    #[test]
    fn losses_bounded(
        truth in proptest::collection::vec(any::<bool>(), 1..64),
        raw in proptest::collection::vec(0.0f64..=1.0, 64),
    ) {
        let probs = &raw[..truth.len()];
        let d = dice_loss(probs, &truth, 1.0).unwrap();
        prop_assert!((0.0..1.0).contains(&d), "dice loss {}", d);
        let (l, _) = lovasz_loss(probs, &truth).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&l), "lovasz {}", l);
    }

    #[test]
    fn auc_u_identity(
        scores in proptest::collection::vec(0u8..20, 4..40),
        labels_raw in proptest::collection::vec(any::<bool>(), 40),
    ) {
        let scores: Vec<f64> = scores.iter().map(|&s| s as f64 / 4.0).collect();
        let mut labels: Vec<bool> = labels_raw[..scores.len()].to_vec();
        labels[0] = true;
        labels[1] = false;
        let roc = roc_auc_youden(&scores, &labels).unwrap();
        let a: Vec<f64> = scores.iter().zip(&labels).filter(|(_, &l)| !l).map(|(&s, _)| s).collect();
        let b: Vec<f64> = scores.iter().zip(&labels).filter(|(_, &l)| l).map(|(&s, _)| s).collect();
        let mw = mann_whitney_u(&a, &b, MwMode::NormalApprox).unwrap();
        prop_assert!((roc.auc - mw.u_b / (a.len() * b.len()) as f64).abs() < 1e-12);
    }

    #[test]
    fn ks_bounds_and_monotone_invariance(
        a in proptest::collection::vec(-100.0f64..100.0, 1..30),
        b in proptest::collection::vec(-100.0f64..100.0, 1..30),
    ) {
        let d = ks_statistic(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        let ta: Vec<f64> = a.iter().map(|v| v / 50.0 + (v / 40.0).tanh()).collect();
        let tb: Vec<f64> = b.iter().map(|v| v / 50.0 + (v / 40.0).tanh()).collect();
        prop_assert!((d - ks_statistic(&ta, &tb).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn cohens_d_antisymmetric(
        a in proptest::collection::vec(-10.0f64..10.0, 2..20),
        b in proptest::collection::vec(-10.0f64..10.0, 2..20),
    ) {
        if let (Ok(d1), Ok(d2)) = (cohens_d(&a, &b), cohens_d(&b, &a)) {
            prop_assert!((d1 + d2).abs() < 1e-10);
        }
    }

    #[test]
    fn erosion_shrinks_dilation_grows(offset in 1i32..=5) {
        let mut mask = InstanceMask::new(64, 64).unwrap();
        for y in 20..44usize {
            for x in 16..40usize {
                mask.set(x, y, 1);
            }
        }
        let original: std::collections::HashSet<(usize, usize)> =
            mask.label_pixels(1).into_iter().collect();
        let grown = perturb_mask(&mask, offset).unwrap();
        let grown_px: std::collections::HashSet<(usize, usize)> =
            grown.mask.label_pixels(1).into_iter().collect();
        prop_assert!(original.is_subset(&grown_px));
        let shrunk = perturb_mask(&mask, -offset).unwrap();
        let shrunk_px: std::collections::HashSet<(usize, usize)> =
            shrunk.mask.label_pixels(1).into_iter().collect();
        prop_assert!(shrunk_px.is_subset(&original));
    }
}
