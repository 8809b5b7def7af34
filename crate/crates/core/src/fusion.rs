//! Score-level arithmetic: softmax, clip/crop aggregation, multi-granular
//! averaging, per-frame distribution, actionness and temporal localization.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::count_signal::runs;
use crate::error::{Error, Result};
use crate::geometry::{TemporalSpan, Tube};

/// Frames per network input clip.
pub const CLIP_LEN: u32 = 16;
/// Offset between consecutive test-time clips.
pub const CLIP_STRIDE: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoreKind {
    /// Pre-softmax scores, or any unnormalised fused scores.
    Raw,
    /// Non-negative values summing to one.
    Probability,
}

/// One score per action class.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    values: Vec<f64>,
    kind: ScoreKind,
}

const PROB_SUM_TOL: f64 = 1e-9;

impl ScoreVector {
    pub fn raw(values: Vec<f64>) -> Result<Self> {
        check_values(&values)?;
        Ok(Self {
            values,
            kind: ScoreKind::Raw,
        })
    }

    pub fn probability(values: Vec<f64>) -> Result<Self> {
        check_values(&values)?;
        if values.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidInput("negative probability".into()));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidInput(format!("probabilities sum to {sum}")));
        }
        Ok(Self {
            values,
            kind: ScoreKind::Probability,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    pub fn num_classes(&self) -> usize {
        self.values.len()
    }

    /// Index of the largest score; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        argmax(&self.values)
    }
}

fn check_values(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidInput("score vector has no classes".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite score".into()));
    }
    Ok(())
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

macro_rules! vocabulary {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.pad(self.name())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(other.to_string()),
                }
            }
        }
    };
}

vocabulary!(
    /// Input modality of a network stream.
    Stream { Pose => "pose", Flow => "flow", Rgb => "rgb" }
);

vocabulary!(
    /// Temporal resolution of the classifier that produced a score.
    Granularity { Net16 => "net16", Net32 => "net32", NetW => "netW" }
);

vocabulary!(
    /// Spatial test-time augmentation a score was computed on.
    Crop {
        Center => "center",
        CenterFlip => "center_flip",
        TopLeft => "top_left",
        TopLeftFlip => "top_left_flip",
        TopRight => "top_right",
        TopRightFlip => "top_right_flip",
        BottomLeft => "bottom_left",
        BottomLeftFlip => "bottom_left_flip",
        BottomRight => "bottom_right",
        BottomRightFlip => "bottom_right_flip",
    }
);

vocabulary!(
    /// Set of crops aggregated per clip.
    CropScheme { Center => "center", Fixed => "fixed" }
);

vocabulary!(
    FusionMethod { Mean => "mean", Max => "max", Majority => "majority" }
);

impl Granularity {
    /// Frames spanned by one input clip.
    pub fn clip_len(self, video_len: usize) -> u32 {
        match self {
            Granularity::Net16 => CLIP_LEN,
            Granularity::Net32 => 2 * CLIP_LEN,
            Granularity::NetW => video_len.max(1) as u32,
        }
    }
}

impl CropScheme {
    /// Two crops (centre, flipped) or ten (centre and four corners, each flipped).
    pub fn crops(self) -> &'static [Crop] {
        match self {
            CropScheme::Center => &[Crop::Center, Crop::CenterFlip],
            CropScheme::Fixed => Crop::ALL,
        }
    }

    pub fn includes(self, crop: Crop) -> bool {
        self.crops().contains(&crop)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEntry {
    pub clip_start: u32,
    pub crop: Crop,
    pub vector: ScoreVector,
}

/// All clip/crop scores of one stream and granularity for one video.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamScoreSet {
    pub video_id: String,
    pub stream: Stream,
    pub granularity: Granularity,
    pub entries: Vec<ScoreEntry>,
}

impl StreamScoreSet {
    pub fn num_classes(&self) -> Option<usize> {
        self.entries.first().map(|e| e.vector.num_classes())
    }

    /// Mean vector over crops for each clip start, in clip order.
    pub fn clip_means(&self) -> Result<Vec<(u32, ScoreVector)>> {
        let mut by_clip: BTreeMap<u32, Vec<&ScoreVector>> = BTreeMap::new();
        for e in &self.entries {
            by_clip.entry(e.clip_start).or_default().push(&e.vector);
        }
        by_clip
            .into_iter()
            .map(|(start, vs)| Ok((start, mean_of(&vs)?)))
            .collect()
    }
}

/// Exponential normalisation, shifted by the maximum for overflow safety.
pub fn softmax(v: &ScoreVector) -> Result<ScoreVector> {
    check_values(&v.values)?;
    let max = v.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.values.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(ScoreVector {
        values: exps.into_iter().map(|e| e / sum).collect(),
        kind: ScoreKind::Probability,
    })
}

fn same_width(vs: &[&ScoreVector]) -> Result<usize> {
    let k = vs
        .first()
        .ok_or_else(|| Error::InvalidInput("no score vectors to combine".into()))?
        .num_classes();
    if let Some(bad) = vs.iter().find(|v| v.num_classes() != k) {
        return Err(Error::InvalidInput(format!(
            "score vectors disagree on class count ({k} vs {})",
            bad.num_classes()
        )));
    }
    Ok(k)
}

/// Mean taken in sorted order, so the result does not depend on the order of
/// the inputs. Offsets from the minimum keep equal inputs exact.
fn order_free_mean(column: &mut [f64]) -> f64 {
    column.sort_by(f64::total_cmp);
    let base = column[0];
    base + column.iter().map(|v| v - base).sum::<f64>() / column.len() as f64
}

/// Elementwise arithmetic mean. Probability inputs give a probability output.
fn mean_of(vs: &[&ScoreVector]) -> Result<ScoreVector> {
    let k = same_width(vs)?;
    let mut column = vec![0.0; vs.len()];
    let values = (0..k)
        .map(|c| {
            for (slot, v) in column.iter_mut().zip(vs) {
                *slot = v.values[c];
            }
            order_free_mean(&mut column)
        })
        .collect();
    let kind = if vs.iter().all(|v| v.kind == ScoreKind::Probability) {
        ScoreKind::Probability
    } else {
        ScoreKind::Raw
    };
    Ok(ScoreVector { values, kind })
}

/// Fuses all clip x crop units of a video into one label and score vector.
///
/// `Majority` returns the normalised vote histogram; vote ties go to the
/// class with the higher mean score, then to the lower class index.
pub fn aggregate_video(units: &[ScoreVector], method: FusionMethod) -> Result<(usize, ScoreVector)> {
    let refs: Vec<&ScoreVector> = units.iter().collect();
    let k = same_width(&refs)?;
    match method {
        FusionMethod::Mean => {
            let fused = mean_of(&refs)?;
            Ok((fused.argmax(), fused))
        }
        FusionMethod::Max => {
            let values: Vec<f64> = (0..k)
                .map(|c| units.iter().map(|u| u.values[c]).fold(f64::NEG_INFINITY, f64::max))
                .collect();
            let fused = ScoreVector {
                values,
                kind: ScoreKind::Raw,
            };
            Ok((fused.argmax(), fused))
        }
        FusionMethod::Majority => {
            let mut votes = vec![0usize; k];
            for u in units {
                votes[u.argmax()] += 1;
            }
            let top = *votes.iter().max().unwrap();
            let mean = mean_of(&refs)?;
            let mut label = None::<usize>;
            for c in (0..k).filter(|&c| votes[c] == top) {
                if label.is_none_or(|l| mean.values[c] > mean.values[l]) {
                    label = Some(c);
                }
            }
            let n = units.len() as f64;
            let fused = ScoreVector {
                values: votes.iter().map(|&v| v as f64 / n).collect(),
                kind: ScoreKind::Probability,
            };
            Ok((label.unwrap(), fused))
        }
    }
}

/// Average of the per-granularity video scores.
pub fn multigranular_fuse(vectors: &[ScoreVector]) -> Result<ScoreVector> {
    if vectors.len() > Granularity::ALL.len() {
        return Err(Error::InvalidInput(format!(
            "expected at most {} granularities, got {}",
            Granularity::ALL.len(),
            vectors.len()
        )));
    }
    mean_of(&vectors.iter().collect::<Vec<_>>())
}

/// Spreads clip scores over frames.
///
/// Each clip contributes its crop-mean vector to the frames it covers; frames
/// under several clips get their mean, and uncovered frames copy the nearest
/// clip (the earlier one on equal distance).
pub fn frame_scores_from_clips(scores: &StreamScoreSet, video_len: usize) -> Result<Vec<ScoreVector>> {
    if video_len == 0 {
        return Err(Error::InvalidInput("video length must be positive".into()));
    }
    let clips = scores.clip_means()?;
    if clips.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no {} scores for video {}",
            scores.stream, scores.video_id
        )));
    }
    let clip_len = scores.granularity.clip_len(video_len) as usize;
    let mut covering: Vec<Vec<&ScoreVector>> = vec![Vec::new(); video_len];
    for (start, v) in &clips {
        let s = *start as usize;
        for slot in covering.iter_mut().take((s + clip_len).min(video_len)).skip(s) {
            slot.push(v);
        }
    }
    let distance = |frame: usize, start: usize| {
        if frame < start {
            start - frame
        } else {
            frame.saturating_sub(start + clip_len - 1)
        }
    };
    covering
        .iter()
        .enumerate()
        .map(|(t, vs)| {
            if vs.is_empty() {
                // clips are sorted by start, min_by_key keeps the first minimum
                let (_, nearest) = clips
                    .iter()
                    .min_by_key(|(s, _)| distance(t, *s as usize))
                    .unwrap();
                Ok(nearest.clone())
            } else {
                mean_of(vs)
            }
        })
        .collect()
}

/// `pose^2 * rgb^(1/3) * flow^(1/3)` over per-class softmax outputs.
pub fn actionness(pose: f64, rgb: f64, flow: f64) -> Result<f64> {
    for (name, v) in [("pose", pose), ("rgb", rgb), ("flow", flow)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidInput(format!("{name} score {v} outside [0, 1]")));
        }
    }
    Ok(pose * pose * rgb.cbrt() * flow.cbrt())
}

/// Per-frame actionness of one class, with per-frame human presence.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionnessSeries {
    scores: Vec<f64>,
    human_present: Vec<bool>,
}

impl ActionnessSeries {
    pub fn new(scores: Vec<f64>, human_present: Vec<bool>) -> Result<Self> {
        if scores.len() != human_present.len() {
            return Err(Error::InvalidInput(format!(
                "{} scores but {} presence flags",
                scores.len(),
                human_present.len()
            )));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidInput("non-finite actionness".into()));
        }
        Ok(Self {
            scores,
            human_present,
        })
    }

    /// Combines per-frame class probabilities of the three streams.
    pub fn from_streams(pose: &[f64], rgb: &[f64], flow: &[f64], human_present: Vec<bool>) -> Result<Self> {
        if pose.len() != rgb.len() || rgb.len() != flow.len() {
            return Err(Error::InvalidInput("stream series lengths differ".into()));
        }
        let scores = pose
            .iter()
            .zip(rgb)
            .zip(flow)
            .map(|((&p, &r), &f)| actionness(p, r, f))
            .collect::<Result<Vec<_>>>()?;
        Self::new(scores, human_present)
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn human_present(&self) -> &[bool] {
        &self.human_present
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Sum of the per-frame actionness over the tube's frames.
pub fn tube_actionness(tube: &Tube, series: &ActionnessSeries) -> Result<f64> {
    let span = tube.span();
    if span.end() as usize >= series.len() {
        return Err(Error::InvalidInput(format!(
            "tube ends at frame {} but the series has {} frames",
            span.end(),
            series.len()
        )));
    }
    Ok(series.scores[span.start() as usize..=span.end() as usize].iter().sum())
}

/// Maximal runs of frames whose actionness reaches `threshold` while a person
/// is visible.
pub fn temporal_localize(series: &ActionnessSeries, threshold: f64) -> Vec<TemporalSpan> {
    runs(
        series
            .scores
            .iter()
            .zip(&series.human_present)
            .map(|(&s, &h)| h && s >= threshold),
    )
}
