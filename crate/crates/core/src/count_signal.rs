//! Per-frame detection counts: median smoothing, expected counts and padding.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{Box2D, TemporalSpan};

pub const DEFAULT_MEDIAN_WINDOW: usize = 80;

/// All person boxes of one video, indexed by frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDetections {
    video_id: String,
    frames: Vec<Vec<Box2D>>,
}

impl FrameDetections {
    /// `frames[t]` holds the boxes of frame `t`; each box must carry that frame index.
    pub fn new(video_id: impl Into<String>, frames: Vec<Vec<Box2D>>) -> Result<Self> {
        for (t, boxes) in frames.iter().enumerate() {
            if let Some(b) = boxes.iter().find(|b| b.frame as usize != t) {
                return Err(Error::InvalidInput(format!(
                    "box tagged with frame {} stored under frame {t}",
                    b.frame
                )));
            }
        }
        Ok(Self {
            video_id: video_id.into(),
            frames,
        })
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    /// Total frame count of the video.
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, t: usize) -> &[Box2D] {
        &self.frames[t]
    }

    pub fn frames(&self) -> &[Vec<Box2D>] {
        &self.frames
    }

    pub fn total_boxes(&self) -> usize {
        self.frames.iter().map(Vec::len).sum()
    }

    pub fn into_frames(self) -> Vec<Vec<Box2D>> {
        self.frames
    }
}

/// Raw, smoothed and expected box counts for one video.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionCountSeries {
    pub raw: Vec<u32>,
    pub smoothed: Vec<u32>,
    pub expected: Vec<u32>,
}

impl DetectionCountSeries {
    pub fn compute(dets: &FrameDetections, window: usize) -> Result<Self> {
        let raw = count_series(dets);
        let smoothed = median_smooth(&raw, window)?;
        let expected = expected_counts(&raw, &smoothed)?;
        Ok(Self {
            raw,
            smoothed,
            expected,
        })
    }
}

pub fn count_series(dets: &FrameDetections) -> Vec<u32> {
    dets.frames.iter().map(|f| f.len() as u32).collect()
}

/// Sliding median with a window of `window` samples centred on each frame.
///
/// The window for frame `t` is `[t - window/2, t - window/2 + window - 1]`,
/// clipped to the series. With an even number of samples in the window the
/// lower of the two middle values is taken.
pub fn median_smooth(series: &[u32], window: usize) -> Result<Vec<u32>> {
    if window == 0 {
        return Err(Error::InvalidParameter("median window must be >= 1".into()));
    }
    let n = series.len();
    let back = window / 2;
    let ahead = window - 1 - back;
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    let mut in_window = 0usize;
    let (mut lo, mut hi) = (0usize, 0usize); // current window is [lo, hi)
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        let want_lo = t.saturating_sub(back);
        let want_hi = (t + ahead + 1).min(n);
        while hi < want_hi {
            *counts.entry(series[hi]).or_default() += 1;
            in_window += 1;
            hi += 1;
        }
        while lo < want_lo {
            let c = counts.get_mut(&series[lo]).unwrap();
            *c -= 1;
            if *c == 0 {
                counts.remove(&series[lo]);
            }
            in_window -= 1;
            lo += 1;
        }
        let mut rank = (in_window - 1) / 2;
        let mut median = 0;
        for (&value, &c) in &counts {
            if rank < c {
                median = value;
                break;
            }
            rank -= c;
        }
        out.push(median);
    }
    Ok(out)
}

/// Elementwise `max(raw, smoothed)`.
pub fn expected_counts(raw: &[u32], smoothed: &[u32]) -> Result<Vec<u32>> {
    if raw.len() != smoothed.len() {
        return Err(Error::InvalidInput(format!(
            "raw series has {} frames but smoothed series has {}",
            raw.len(),
            smoothed.len()
        )));
    }
    Ok(raw.iter().zip(smoothed).map(|(&r, &s)| r.max(s)).collect())
}

/// Index of the largest-area box; the first one wins ties.
pub(crate) fn largest_box(boxes: &[Box2D]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, b) in boxes.iter().enumerate() {
        if best.is_none_or(|(_, area)| b.area() > area) {
            best = Some((i, b.area()));
        }
    }
    best.map(|(i, _)| i)
}

/// Tops up every non-empty frame to `expected[t]` boxes by duplicating its
/// largest box. Frames without boxes and frames already at or above the
/// expected count are returned untouched.
pub fn pad_detections(dets: &FrameDetections, expected: &[u32]) -> Result<FrameDetections> {
    if expected.len() != dets.len() {
        return Err(Error::InvalidInput(format!(
            "expected counts cover {} frames but the video has {}",
            expected.len(),
            dets.len()
        )));
    }
    let frames = dets
        .frames
        .iter()
        .zip(expected)
        .map(|(boxes, &want)| {
            let mut boxes = boxes.clone();
            if let Some(big) = largest_box(&boxes) {
                let dup = boxes[big];
                while boxes.len() < want as usize {
                    boxes.push(dup);
                }
            }
            boxes
        })
        .collect();
    Ok(FrameDetections {
        video_id: dets.video_id.clone(),
        frames,
    })
}

/// Maximal runs of frames whose smoothed count is at least one.
pub fn continuous_regions(smoothed: &[u32]) -> Vec<TemporalSpan> {
    runs(smoothed.iter().map(|&c| c >= 1))
}

/// Maximal runs of `true` in a boolean sequence, as inclusive spans.
pub(crate) fn runs(flags: impl IntoIterator<Item = bool>) -> Vec<TemporalSpan> {
    let mut spans = Vec::new();
    let mut open: Option<u32> = None;
    let mut last = 0u32;
    for (t, on) in flags.into_iter().enumerate() {
        let t = t as u32;
        match (on, open) {
            (true, None) => open = Some(t),
            (false, Some(s)) => {
                spans.push(TemporalSpan::new(s, t - 1).unwrap());
                open = None;
            }
            _ => {}
        }
        last = t;
    }
    if let Some(s) = open {
        spans.push(TemporalSpan::new(s, last).unwrap());
    }
    spans
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference_median(series: &[u32], window: usize) -> Vec<u32> {
        let n = series.len() as i64;
        let back = (window / 2) as i64;
        (0..n)
            .map(|t| {
                let lo = (t - back).max(0);
                let hi = (t - back + window as i64 - 1).min(n - 1);
                let mut w: Vec<u32> = series[lo as usize..=hi as usize].to_vec();
                w.sort_unstable();
                w[(w.len() - 1) / 2]
            })
            .collect()
    }

    fn video(counts: &[usize], rect: impl Fn(usize, usize) -> [f64; 4]) -> FrameDetections {
        let frames = counts
            .iter()
            .enumerate()
            .map(|(t, &c)| {
                (0..c)
                    .map(|i| {
                        let r = rect(t, i);
                        Box2D::new(t as u32, r[0], r[1], r[2], r[3]).unwrap()
                    })
                    .collect()
            })
            .collect();
        FrameDetections::new("v", frames).unwrap()
    }

    #[test]
    fn count_series_examples() {
        let r = |_, _| [0., 0., 1., 1.];
        assert_eq!(count_series(&video(&[2, 0, 1], r)), vec![2, 0, 1]);
        assert_eq!(count_series(&video(&[], r)), Vec::<u32>::new());
        assert_eq!(count_series(&video(&[1; 5], r)), vec![1; 5]);
    }

    #[test]
    fn frame_tag_mismatch_rejected() {
        let b = Box2D::new(3, 0., 0., 1., 1.).unwrap();
        assert!(FrameDetections::new("v", vec![vec![b]]).is_err());
    }

    #[test]
    fn median_examples() {
        assert_eq!(median_smooth(&[3, 3, 3, 3], 80).unwrap(), vec![3, 3, 3, 3]);
        assert_eq!(
            median_smooth(&[1, 1, 1, 9, 1, 1, 1], 3).unwrap(),
            vec![1; 7]
        );
        // every position sees the whole series {5,0,5}; the median is 5
        assert_eq!(median_smooth(&[5, 0, 5], 5).unwrap(), vec![5, 5, 5]);
        assert_eq!(median_smooth(&[], 80).unwrap(), Vec::<u32>::new());
    }

    #[test]
    fn median_even_window_takes_lower_middle() {
        // window 2 at t covers [t-1, t]
        assert_eq!(median_smooth(&[0, 4, 2], 2).unwrap(), vec![0, 0, 2]);
    }

    #[test]
    fn median_zero_window_rejected() {
        assert!(matches!(
            median_smooth(&[1], 0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn expected_count_examples() {
        assert_eq!(expected_counts(&[2, 0, 2], &[1, 1, 1]).unwrap(), vec![2, 1, 2]);
        assert_eq!(expected_counts(&[4, 1], &[4, 1]).unwrap(), vec![4, 1]);
        assert_eq!(expected_counts(&[0, 0], &[3, 1]).unwrap(), vec![3, 1]);
        assert!(expected_counts(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn padding_duplicates_largest_box() {
        let dets = video(&[1, 0, 2], |t, i| {
            if t == 2 && i == 1 {
                [0., 0., 5., 5.]
            } else {
                [0., 0., 10., 10.]
            }
        });
        let padded = pad_detections(&dets, &[3, 2, 3]).unwrap();
        assert_eq!(padded.frame(0).len(), 3);
        assert!(padded.frame(0).iter().all(|b| *b == dets.frame(0)[0]));
        assert!(padded.frame(1).is_empty());
        assert_eq!(padded.frame(2).len(), 3);
        assert_eq!(padded.frame(2)[2].area(), 100.0);
    }

    #[test]
    fn padding_tie_prefers_first_box() {
        let dets = video(&[2], |_, i| [i as f64 * 20.0, 0., i as f64 * 20.0 + 10.0, 10.]);
        let padded = pad_detections(&dets, &[3]).unwrap();
        assert_eq!(padded.frame(0)[2], dets.frame(0)[0]);
    }

    #[test]
    fn padding_leaves_extra_boxes() {
        let dets = video(&[3], |_, i| [i as f64, 0., i as f64 + 1.0, 1.]);
        assert_eq!(pad_detections(&dets, &[1]).unwrap(), dets);
        assert!(pad_detections(&dets, &[1, 1]).is_err());
    }

    #[test]
    fn region_examples() {
        let s = |a, b| TemporalSpan::new(a, b).unwrap();
        assert_eq!(continuous_regions(&[0, 1, 1, 0, 1]), vec![s(1, 2), s(4, 4)]);
        assert_eq!(continuous_regions(&[0, 0, 0]), vec![]);
        assert_eq!(continuous_regions(&[1; 7]), vec![s(0, 6)]);
        assert_eq!(continuous_regions(&[2, 3, 0]), vec![s(0, 1)]);
    }

    proptest! {
        #[test]
        fn median_matches_reference(
            series in prop::collection::vec(0u32..10, 0..200),
            window in 1usize..100,
        ) {
            prop_assert_eq!(median_smooth(&series, window).unwrap(), reference_median(&series, window));
        }

        #[test]
        fn median_stays_within_input_range(series in prop::collection::vec(0u32..10, 1..100), window in 1usize..90) {
            let out = median_smooth(&series, window).unwrap();
            let (lo, hi) = (*series.iter().min().unwrap(), *series.iter().max().unwrap());
            prop_assert!(out.iter().all(|&v| lo <= v && v <= hi));
        }

        #[test]
        fn median_fixes_constant_series(c in 0u32..20, n in 0usize..50, window in 1usize..90) {
            prop_assert_eq!(median_smooth(&vec![c; n], window).unwrap(), vec![c; n]);
        }

        #[test]
        fn expected_dominates_inputs(pairs in prop::collection::vec((0u32..9, 0u32..9), 0..50)) {
            let (raw, smooth): (Vec<u32>, Vec<u32>) = pairs.into_iter().unzip();
            let exp = expected_counts(&raw, &smooth).unwrap();
            for t in 0..exp.len() {
                prop_assert!(exp[t] >= raw[t] && exp[t] >= smooth[t]);
                prop_assert!(exp[t] == raw[t] || exp[t] == smooth[t]);
            }
        }

        #[test]
        fn padding_meets_expected_and_keeps_originals(
            counts in prop::collection::vec(0usize..4, 0..30),
            extra in prop::collection::vec(0u32..5, 30),
        ) {
            let dets = video(&counts, |t, i| [i as f64, t as f64, i as f64 + 1.0 + (i % 2) as f64, t as f64 + 2.0]);
            let expected: Vec<u32> = extra[..counts.len()].to_vec();
            let padded = pad_detections(&dets, &expected).unwrap();
            for t in 0..counts.len() {
                let orig = dets.frame(t);
                let after = padded.frame(t);
                prop_assert_eq!(&after[..orig.len()], orig);
                if orig.is_empty() {
                    prop_assert!(after.is_empty());
                } else {
                    prop_assert!(after.len() >= expected[t] as usize);
                    prop_assert_eq!(after.len(), orig.len().max(expected[t] as usize));
                }
            }
        }

        #[test]
        fn regions_partition_positive_frames(smoothed in prop::collection::vec(0u32..3, 0..60)) {
            let spans = continuous_regions(&smoothed);
            for w in spans.windows(2) {
                // disjoint and not adjacent
                prop_assert!(w[0].end() + 1 < w[1].start());
            }
            let mut covered = vec![false; smoothed.len()];
            for s in &spans {
                for t in s.frames() {
                    covered[t as usize] = true;
                }
            }
            for t in 0..smoothed.len() {
                prop_assert_eq!(covered[t], smoothed[t] >= 1);
            }
        }
    }
}
