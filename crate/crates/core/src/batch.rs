//! Per-video orchestration shared by the command line and the examples.

use crate::count_signal::FrameDetections;
use crate::error::{Error, Result};
use crate::evaluation::VideoTube;
use crate::fusion::{
    aggregate_video, frame_scores_from_clips, multigranular_fuse, softmax, ActionnessSeries, CropScheme,
    FusionMethod, Granularity, ScoreEntry, ScoreKind, ScoreVector, Stream, StreamScoreSet,
};
use crate::geometry::Tube;
use crate::linking::{extract_tubes, ExtractionConfig};
use crate::pipeline::{ActionnessRecord, ScoreTable, TubeActionness, VideoPrediction};

/// How clip/crop scores are turned into one video-level prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionConfig {
    pub stream: Stream,
    pub method: FusionMethod,
    pub crop_scheme: CropScheme,
    /// More than one entry averages the per-granularity results.
    pub granularities: Vec<Granularity>,
    /// Normalise raw scores with softmax before aggregating.
    pub softmax: bool,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            stream: Stream::Rgb,
            method: FusionMethod::Mean,
            crop_scheme: CropScheme::Fixed,
            granularities: vec![Granularity::Net16],
            softmax: false,
        }
    }
}

/// Entries of `set` whose crop belongs to `scheme`, optionally softmaxed.
fn select_units(set: &StreamScoreSet, scheme: CropScheme, to_prob: bool) -> Result<Vec<ScoreEntry>> {
    set.entries
        .iter()
        .filter(|e| scheme.includes(e.crop))
        .map(|e| {
            let vector = if to_prob && e.vector.kind() == ScoreKind::Raw {
                softmax(&e.vector)?
            } else {
                e.vector.clone()
            };
            Ok(ScoreEntry { vector, ..e.clone() })
        })
        .collect()
}

fn stream_set<'a>(
    scores: &'a ScoreTable,
    video_id: &str,
    stream: Stream,
    granularity: Granularity,
) -> Result<&'a StreamScoreSet> {
    scores.get(video_id, stream, granularity).ok_or_else(|| {
        Error::InvalidInput(format!(
            "video {video_id} has no {stream} scores at granularity {granularity}"
        ))
    })
}

/// Fused label and score vector of one video.
pub fn fuse_video(scores: &ScoreTable, video_id: &str, cfg: &FusionConfig) -> Result<VideoPrediction> {
    if cfg.granularities.is_empty() {
        return Err(Error::InvalidParameter("no granularity selected".into()));
    }
    let per_granularity = cfg
        .granularities
        .iter()
        .map(|&g| {
            let set = stream_set(scores, video_id, cfg.stream, g)?;
            let units: Vec<ScoreVector> = select_units(set, cfg.crop_scheme, cfg.softmax)?
                .into_iter()
                .map(|e| e.vector)
                .collect();
            if units.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "video {video_id} has no {} crops for {g}",
                    cfg.crop_scheme
                )));
            }
            aggregate_video(&units, cfg.method)
        })
        .collect::<Result<Vec<_>>>()?;
    let (label, values) = match per_granularity.as_slice() {
        [(label, v)] => (*label, v.clone()),
        many => {
            let fused = multigranular_fuse(&many.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>())?;
            (fused.argmax(), fused)
        }
    };
    Ok(VideoPrediction {
        video_id: video_id.to_string(),
        method: cfg.method.name().to_string(),
        label: label as u32,
        values: values.values().to_vec(),
    })
}

/// Extracts tubes, labelling them with the fused video class when scores
/// are available. Tube scores are the mean link scores.
pub fn extract_video(
    dets: &FrameDetections,
    cfg: &ExtractionConfig,
    labels: Option<(&ScoreTable, &FusionConfig)>,
) -> Result<Vec<VideoTube>> {
    let label = labels
        .map(|(scores, fusion)| fuse_video(scores, dets.video_id(), fusion).map(|p| p.label))
        .transpose()?;
    Ok(extract_tubes(dets, cfg)?
        .into_iter()
        .map(|mut t| {
            t.label = label;
            VideoTube::new(dets.video_id(), t)
        })
        .collect())
}

/// Settings for per-frame actionness.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionnessConfig {
    pub class: usize,
    pub threshold: f64,
    pub granularity: Granularity,
    pub crop_scheme: CropScheme,
}

/// Per-frame probability of `class` in one stream.
pub fn stream_class_series(
    scores: &ScoreTable,
    video_id: &str,
    stream: Stream,
    cfg: &ActionnessConfig,
    video_len: usize,
) -> Result<Vec<f64>> {
    let set = stream_set(scores, video_id, stream, cfg.granularity)?;
    let selected = StreamScoreSet {
        entries: select_units(set, cfg.crop_scheme, true)?,
        ..set.clone()
    };
    let frames = frame_scores_from_clips(&selected, video_len)?;
    frames
        .iter()
        .map(|v| {
            v.values().get(cfg.class).copied().ok_or_else(|| {
                Error::InvalidParameter(format!("class {} out of range for {} classes", cfg.class, v.num_classes()))
            })
        })
        .collect()
}

/// Actionness series of one video, gated by person presence.
pub fn video_actionness(
    scores: &ScoreTable,
    video_id: &str,
    human_present: Vec<bool>,
    cfg: &ActionnessConfig,
) -> Result<ActionnessSeries> {
    let n = human_present.len();
    let pose = stream_class_series(scores, video_id, Stream::Pose, cfg, n)?;
    let rgb = stream_class_series(scores, video_id, Stream::Rgb, cfg, n)?;
    let flow = stream_class_series(scores, video_id, Stream::Flow, cfg, n)?;
    ActionnessSeries::from_streams(&pose, &rgb, &flow, human_present)
}

/// The full per-video actionness record: series, thresholded spans and
/// summed tube scores.
pub fn actionness_record(
    scores: &ScoreTable,
    video_id: &str,
    human_present: Vec<bool>,
    tubes: &[Tube],
    cfg: &ActionnessConfig,
) -> Result<ActionnessRecord> {
    let series = video_actionness(scores, video_id, human_present, cfg)?;
    let spans = crate::fusion::temporal_localize(&series, cfg.threshold)
        .into_iter()
        .map(|s| [s.start(), s.end()])
        .collect();
    let tubes = tubes
        .iter()
        .map(|t| {
            Ok(TubeActionness {
                start: t.span().start(),
                end: t.span().end(),
                actionness: crate::fusion::tube_actionness(t, &series)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ActionnessRecord {
        video_id: video_id.to_string(),
        class: cfg.class as u32,
        actionness: series.scores().to_vec(),
        spans,
        tubes,
    })
}

/// A frame shows a person iff it has at least one detection.
pub fn presence_from_detections(dets: &FrameDetections) -> Vec<bool> {
    dets.frames().iter().map(|f| !f.is_empty()).collect()
}

/// Presence from tube coverage, for when only tubes are available.
pub fn presence_from_tubes(tubes: &[Tube], video_len: usize) -> Vec<bool> {
    let mut present = vec![false; video_len];
    for t in tubes {
        for f in t.span().frames() {
            if let Some(p) = present.get_mut(f as usize) {
                *p = true;
            }
        }
    }
    present
}
