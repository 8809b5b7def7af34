//! Video-AP and mAP over labelled, scored action tubes.
//!
//! A prediction is a true positive when it matches a not-yet-matched ground
//! truth tube of the same video and class with tube IoU at least `delta`.
//! AP is the area under the all-point interpolated precision/recall curve.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{tube_iou, Tube};

/// IoU thresholds reported by default.
pub const DEFAULT_DELTAS: [f64; 6] = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5];

/// Name of the precision interpolation scheme used by [`average_precision`].
pub const INTERPOLATION: &str = "all-point";

/// A tube tagged with the video it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoTube {
    pub video_id: String,
    pub tube: Tube,
}

impl VideoTube {
    pub fn new(video_id: impl Into<String>, tube: Tube) -> Self {
        Self {
            video_id: video_id.into(),
            tube,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    deltas: Vec<f64>,
    pub require_label_match: bool,
}

impl EvalConfig {
    pub fn new(deltas: Vec<f64>) -> Result<Self> {
        if deltas.is_empty() {
            return Err(Error::InvalidParameter("at least one IoU threshold is required".into()));
        }
        if let Some(d) = deltas.iter().find(|d| !(**d > 0.0 && **d <= 1.0)) {
            return Err(Error::InvalidParameter(format!("IoU threshold {d} outside (0, 1]")));
        }
        Ok(Self {
            deltas,
            require_label_match: true,
        })
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self::new(DEFAULT_DELTAS.to_vec()).unwrap()
    }
}

/// Matching outcome for one class, in descending score order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMatches {
    /// Index of each prediction in the caller's list.
    pub pred_indices: Vec<usize>,
    pub scores: Vec<f64>,
    /// Best available IoU at match time.
    pub ious: Vec<f64>,
    pub flags: Vec<bool>,
    pub num_gt: usize,
}

fn class_of(t: &VideoTube, what: &str, label_match: bool) -> Result<u32> {
    if !label_match {
        return Ok(0);
    }
    t.tube.label.ok_or_else(|| {
        Error::InvalidInput(format!("{what} tube in video {} has no label", t.video_id))
    })
}

/// Greedy matching of predictions to ground truth, per class.
///
/// Predictions are visited by descending score (input order breaks ties).
/// Each one takes the unmatched same-video ground truth with the highest IoU
/// (earliest on ties) and is a true positive iff that IoU is at least `delta`.
pub fn match_predictions(preds: &[VideoTube], gts: &[VideoTube], delta: f64) -> Result<BTreeMap<u32, ClassMatches>> {
    match_with(preds, gts, delta, true)
}

fn match_with(
    preds: &[VideoTube],
    gts: &[VideoTube],
    delta: f64,
    label_match: bool,
) -> Result<BTreeMap<u32, ClassMatches>> {
    let mut gt_by_class: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, g) in gts.iter().enumerate() {
        gt_by_class.entry(class_of(g, "ground-truth", label_match)?).or_default().push(i);
    }
    let mut pred_by_class: BTreeMap<u32, Vec<(usize, f64)>> = BTreeMap::new();
    for (i, p) in preds.iter().enumerate() {
        let score = p.tube.score.filter(|s| s.is_finite()).ok_or_else(|| {
            Error::InvalidInput(format!("predicted tube {i} in video {} needs a finite score", p.video_id))
        })?;
        pred_by_class.entry(class_of(p, "predicted", label_match)?).or_default().push((i, score));
    }

    let classes: Vec<u32> = {
        let mut c: Vec<u32> = gt_by_class.keys().chain(pred_by_class.keys()).copied().collect();
        c.sort_unstable();
        c.dedup();
        c
    };
    let mut out = BTreeMap::new();
    for class in classes {
        let class_gts = gt_by_class.get(&class).map(Vec::as_slice).unwrap_or(&[]);
        let mut ranked = pred_by_class.remove(&class).unwrap_or_default();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        let mut taken = vec![false; class_gts.len()];
        let mut m = ClassMatches {
            pred_indices: Vec::with_capacity(ranked.len()),
            scores: Vec::with_capacity(ranked.len()),
            ious: Vec::with_capacity(ranked.len()),
            flags: Vec::with_capacity(ranked.len()),
            num_gt: class_gts.len(),
        };
        for (pi, score) in ranked {
            let pred = &preds[pi];
            let mut best: Option<(usize, f64)> = None;
            for (slot, &gi) in class_gts.iter().enumerate() {
                if taken[slot] || gts[gi].video_id != pred.video_id {
                    continue;
                }
                let iou = tube_iou(&pred.tube, &gts[gi].tube);
                if best.is_none_or(|(_, b)| iou > b) {
                    best = Some((slot, iou));
                }
            }
            let iou = best.map_or(0.0, |b| b.1);
            let hit = matches!(best, Some((_, v)) if v >= delta);
            if hit {
                taken[best.unwrap().0] = true;
            }
            m.pred_indices.push(pi);
            m.scores.push(score);
            m.ious.push(iou);
            m.flags.push(hit);
        }
        out.insert(class, m);
    }
    Ok(out)
}

/// `(recall, precision)` after each ranked prediction. Recall is 0 when
/// there is no ground truth.
pub fn precision_recall(flags: &[bool], num_gt: usize) -> Vec<(f64, f64)> {
    let mut tp = 0usize;
    flags
        .iter()
        .enumerate()
        .map(|(i, &hit)| {
            tp += hit as usize;
            let recall = if num_gt == 0 { 0.0 } else { tp as f64 / num_gt as f64 };
            (recall, tp as f64 / (i + 1) as f64)
        })
        .collect()
}

/// All-point interpolated average precision.
///
/// `None` when there is neither ground truth nor any prediction; 0 when
/// predictions exist without ground truth.
pub fn average_precision(flags: &[bool], num_gt: usize) -> Option<f64> {
    if num_gt == 0 {
        return (!flags.is_empty()).then_some(0.0);
    }
    let curve = precision_recall(flags, num_gt);
    let mut envelope: Vec<f64> = curve.iter().map(|p| p.1).collect();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (&(recall, _), &p) in curve.iter().zip(&envelope) {
        ap += (recall - prev_recall) * p;
        prev_recall = recall;
    }
    Some(ap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassReport {
    pub class: u32,
    pub ap: f64,
    pub num_gt: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub pr: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaReport {
    pub delta: f64,
    pub classes: Vec<ClassReport>,
    pub map: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub interpolation: &'static str,
    pub per_delta: Vec<DeltaReport>,
}

impl EvalReport {
    pub fn map_at(&self, delta: f64) -> Option<f64> {
        self.per_delta.iter().find(|d| d.delta == delta).map(|d| d.map)
    }
}

/// Per-class AP and their mean at every threshold of `cfg`.
///
/// Classes without ground truth are left out unless they were predicted, in
/// which case they count with AP 0.
pub fn video_map(preds: &[VideoTube], gts: &[VideoTube], cfg: &EvalConfig) -> Result<EvalReport> {
    let per_delta = cfg
        .deltas
        .iter()
        .map(|&delta| {
            let matches = match_with(preds, gts, delta, cfg.require_label_match)?;
            let classes: Vec<ClassReport> = matches
                .into_iter()
                .filter_map(|(class, m)| {
                    let ap = average_precision(&m.flags, m.num_gt)?;
                    let tp = m.flags.iter().filter(|&&f| f).count();
                    Some(ClassReport {
                        class,
                        ap,
                        num_gt: m.num_gt,
                        true_positives: tp,
                        false_positives: m.flags.len() - tp,
                        pr: precision_recall(&m.flags, m.num_gt),
                    })
                })
                .collect();
            let map = if classes.is_empty() {
                0.0
            } else {
                classes.iter().map(|c| c.ap).sum::<f64>() / classes.len() as f64
            };
            Ok(DeltaReport { delta, classes, map })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport {
        interpolation: INTERPOLATION,
        per_delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Box2D;
    use proptest::prelude::*;

    fn tube(start: u32, len: u32, x: f64, label: u32, score: Option<f64>) -> Tube {
        let boxes = (start..start + len)
            .map(|t| Box2D::new(t, x, 0.0, x + 10.0, 10.0).unwrap())
            .collect();
        Tube::new(boxes, Some(label), score).unwrap()
    }

    fn vt(video: &str, t: Tube) -> VideoTube {
        VideoTube::new(video, t)
    }

    #[test]
    fn identical_prediction_is_tp() {
        let g = vt("a", tube(0, 10, 0.0, 1, None));
        let p = vt("a", tube(0, 10, 0.0, 1, Some(0.9)));
        let m = match_predictions(&[p], &[g], 0.5).unwrap();
        assert_eq!(m[&1].flags, vec![true]);
    }

    #[test]
    fn wrong_label_is_fp() {
        let g = vt("a", tube(0, 10, 0.0, 1, None));
        let p = vt("a", tube(0, 10, 0.0, 2, Some(0.9)));
        let m = match_predictions(&[p], &[g], 0.5).unwrap();
        assert_eq!(m[&2].flags, vec![false]);
        assert_eq!(m[&2].num_gt, 0);
        assert_eq!(m[&1].flags, Vec::<bool>::new());
    }

    #[test]
    fn other_video_never_matches() {
        let g = vt("a", tube(0, 10, 0.0, 1, None));
        let p = vt("b", tube(0, 10, 0.0, 1, Some(0.9)));
        assert_eq!(match_predictions(&[p], &[g], 0.5).unwrap()[&1].flags, vec![false]);
    }

    #[test]
    fn duplicate_only_counts_once() {
        let g = vt("a", tube(0, 10, 0.0, 1, None));
        let low = vt("a", tube(0, 10, 0.0, 1, Some(0.3)));
        let high = vt("a", tube(0, 9, 0.0, 1, Some(0.8)));
        let m = match_predictions(&[low, high], &[g], 0.5).unwrap();
        assert_eq!(m[&1].pred_indices, vec![1, 0]);
        assert_eq!(m[&1].flags, vec![true, false]);
    }

    #[test]
    fn equal_scores_keep_input_order() {
        let g = vt("a", tube(0, 10, 0.0, 1, None));
        let p0 = vt("a", tube(0, 10, 0.0, 1, Some(0.5)));
        let p1 = vt("a", tube(0, 10, 0.0, 1, Some(0.5)));
        let m = match_predictions(&[p0, p1], &[g], 0.5).unwrap();
        assert_eq!(m[&1].pred_indices, vec![0, 1]);
        assert_eq!(m[&1].flags, vec![true, false]);
    }

    #[test]
    fn missing_score_or_label_rejected() {
        let g = vt("a", tube(0, 10, 0.0, 1, None));
        let p = vt("a", tube(0, 10, 0.0, 1, None));
        assert!(match_predictions(&[p], std::slice::from_ref(&g), 0.5).is_err());
        let mut unlabeled = vt("a", tube(0, 10, 0.0, 1, Some(1.0)));
        unlabeled.tube.label = None;
        assert!(match_predictions(&[unlabeled], &[g], 0.5).is_err());
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&[true], 1), Some(1.0));
        assert_eq!(average_precision(&[true, false], 1), Some(1.0));
        assert_eq!(average_precision(&[false, true], 1), Some(0.5));
        assert_eq!(average_precision(&[], 0), None);
        assert_eq!(average_precision(&[false], 0), Some(0.0));
        assert_eq!(average_precision(&[], 3), Some(0.0));
        // recall 1/2 at precision 1, recall 1 at precision 2/3
        assert_eq!(average_precision(&[true, false, true], 2), Some(0.5 + 0.5 * (2.0 / 3.0)));
    }

    #[test]
    fn map_examples() {
        let gts = vec![
            vt("a", tube(0, 10, 0.0, 0, None)),
            vt("a", tube(5, 10, 50.0, 1, None)),
            vt("b", tube(0, 20, 0.0, 2, None)),
        ];
        let perfect: Vec<VideoTube> = gts
            .iter()
            .map(|g| {
                let mut p = g.clone();
                p.tube.score = Some(1.0);
                p
            })
            .collect();
        let report = video_map(&perfect, &gts, &EvalConfig::default()).unwrap();
        assert_eq!(report.interpolation, "all-point");
        assert!(report.per_delta.iter().all(|d| d.map == 1.0));
        let empty = video_map(&[], &gts, &EvalConfig::default()).unwrap();
        assert!(empty.per_delta.iter().all(|d| d.map == 0.0 && d.classes.len() == 3));
    }

    #[test]
    fn predicted_class_without_gt_scores_zero() {
        let gts = vec![vt("a", tube(0, 10, 0.0, 0, None))];
        let preds = vec![
            vt("a", tube(0, 10, 0.0, 0, Some(0.9))),
            vt("a", tube(0, 10, 0.0, 4, Some(0.9))),
        ];
        let r = video_map(&preds, &gts, &EvalConfig::new(vec![0.5]).unwrap()).unwrap();
        assert_eq!(r.per_delta[0].classes.len(), 2);
        assert_eq!(r.per_delta[0].map, 0.5);
    }

    #[test]
    fn config_validation() {
        assert!(EvalConfig::new(vec![]).is_err());
        assert!(EvalConfig::new(vec![0.0]).is_err());
        assert!(EvalConfig::new(vec![1.5]).is_err());
        assert!(EvalConfig::new(vec![1.0]).is_ok());
    }

    proptest! {
        #[test]
        fn pr_curve_shape(flags in prop::collection::vec(any::<bool>(), 0..40), extra in 0usize..5) {
            let num_gt = flags.iter().filter(|&&f| f).count() + extra;
            let curve = precision_recall(&flags, num_gt);
            for w in curve.windows(2) {
                prop_assert!(w[0].0 <= w[1].0);
            }
            if let Some(ap) = average_precision(&flags, num_gt) {
                prop_assert!((0.0..=1.0).contains(&ap));
            }
        }

        #[test]
        fn ap_depends_only_on_ranking(
            data in prop::collection::vec((0u32..40, 0.0..1.0f64), 1..10),
        ) {
            let gts: Vec<VideoTube> = (0..4).map(|i| vt("v", tube(i * 10, 10, 0.0, 0, None))).collect();
            let preds: Vec<VideoTube> = data
                .iter()
                .map(|&(s, score)| vt("v", tube(s, 8, 1.0, 0, Some(score))))
                .collect();
            let mapped: Vec<VideoTube> = preds
                .iter()
                .map(|p| {
                    let mut q = p.clone();
                    q.tube.score = p.tube.score.map(|s| (3.0 * s).exp() - 7.0);
                    q
                })
                .collect();
            let cfg = EvalConfig::new(vec![0.3]).unwrap();
            prop_assert_eq!(
                video_map(&preds, &gts, &cfg).unwrap().per_delta[0].map,
                video_map(&mapped, &gts, &cfg).unwrap().per_delta[0].map
            );
        }
    }
}
