//! Line-delimited JSON records: one object per line.
//!
//! Readers ignore unknown fields and report the file, line and field of the
//! first malformed record. Writers emit fields in a fixed order and round
//! every real to six significant digits, so equal inputs give equal bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::round_sig6;
use crate::count_signal::FrameDetections;
use crate::error::{Error, Result};
use crate::evaluation::{EvalReport, VideoTube};
use crate::fusion::{Crop, Granularity, ScoreEntry, ScoreKind, ScoreVector, Stream, StreamScoreSet};
use crate::geometry::{Box2D, TemporalSpan, Tube};

/// Rounding slack accepted on the sum of a stored probability vector.
const STORED_PROB_TOL: f64 = 1e-5;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        file: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn vocab_err(path: &Path, line: usize, field: &'static str, value: String) -> Error {
    Error::Vocabulary {
        file: path.to_path_buf(),
        line,
        field,
        value,
    }
}

/// Feeds every non-blank line, decoded as `T`, to `visit` with its 1-based number.
fn read_records<T: DeserializeOwned>(
    path: &Path,
    mut visit: impl FnMut(usize, T) -> Result<()>,
) -> Result<()> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line).map_err(|e| {
            let msg = e.to_string();
            // serde reports positions relative to the single line it saw
            let msg = msg.rsplit_once(" at line ").map_or(msg.as_str(), |(m, _)| m);
            parse_err(path, i + 1, msg)
        })?;
        visit(i + 1, record)?;
    }
    Ok(())
}

fn write_records<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<()> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, &r).expect("records serialize");
        buf.push(b'\n');
    }
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    file.write_all(&buf).map_err(io_err(path))
}

fn round_all(values: &[f64]) -> Vec<f64> {
    values.iter().copied().map(round_sig6).collect()
}

#[derive(Serialize, Deserialize)]
struct BoxRecord {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct DetectionRecord {
    video_id: String,
    frame: u32,
    boxes: Vec<BoxRecord>,
}

/// Reads detections grouped by video, ordered by video id. The video length
/// is one past the highest frame seen; frames without a record are empty.
pub fn read_detections(path: &Path) -> Result<Vec<FrameDetections>> {
    let mut videos: BTreeMap<String, Vec<Vec<Box2D>>> = BTreeMap::new();
    read_records(path, |line, r: DetectionRecord| {
        let frames = videos.entry(r.video_id).or_default();
        let t = r.frame as usize;
        if frames.len() <= t {
            frames.resize_with(t + 1, Vec::new);
        }
        for (i, b) in r.boxes.iter().enumerate() {
            let mut parsed = Box2D::new(r.frame, b.x1, b.y1, b.x2, b.y2)
                .map_err(|e| parse_err(path, line, format!("boxes[{i}]: {e}")))?;
            parsed.score = b.score;
            frames[t].push(parsed);
        }
        Ok(())
    })?;
    videos
        .into_iter()
        .map(|(id, frames)| FrameDetections::new(id, frames))
        .collect()
}

/// Writes one record per frame, empty frames included.
pub fn write_detections(path: &Path, videos: &[FrameDetections]) -> Result<()> {
    let records = videos.iter().flat_map(|v| {
        v.frames().iter().enumerate().map(|(t, boxes)| DetectionRecord {
            video_id: v.video_id().to_string(),
            frame: t as u32,
            boxes: boxes
                .iter()
                .map(|b| BoxRecord {
                    x1: round_sig6(b.x1),
                    y1: round_sig6(b.y1),
                    x2: round_sig6(b.x2),
                    y2: round_sig6(b.y2),
                    score: b.score.map(round_sig6),
                })
                .collect(),
        })
    });
    write_records(path, records)
}

#[derive(Serialize, Deserialize)]
struct RawScoreRecord {
    video_id: String,
    stream: String,
    granularity: String,
    clip_start: u32,
    crop_id: String,
    kind: String,
    values: Vec<f64>,
}

/// One clip/crop score vector of one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub video_id: String,
    pub stream: Stream,
    pub granularity: Granularity,
    pub clip_start: u32,
    pub crop: Crop,
    pub vector: ScoreVector,
}

/// Score sets of a file, keyed by video and then by (stream, granularity).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    videos: BTreeMap<String, BTreeMap<(Stream, Granularity), StreamScoreSet>>,
    num_classes: Option<usize>,
}

impl ScoreTable {
    pub fn insert(&mut self, r: ScoreRecord) -> Result<()> {
        let k = r.vector.num_classes();
        match self.num_classes {
            Some(expected) if expected != k => {
                return Err(Error::InvalidInput(format!(
                    "score vector has {k} classes, earlier vectors have {expected}"
                )))
            }
            _ => self.num_classes = Some(k),
        }
        self.videos
            .entry(r.video_id.clone())
            .or_default()
            .entry((r.stream, r.granularity))
            .or_insert_with(|| StreamScoreSet {
                video_id: r.video_id.clone(),
                stream: r.stream,
                granularity: r.granularity,
                entries: Vec::new(),
            })
            .entries
            .push(ScoreEntry {
                clip_start: r.clip_start,
                crop: r.crop,
                vector: r.vector,
            });
        Ok(())
    }

    pub fn num_classes(&self) -> Option<usize> {
        self.num_classes
    }

    pub fn video_ids(&self) -> impl Iterator<Item = &str> {
        self.videos.keys().map(String::as_str)
    }

    pub fn get(&self, video_id: &str, stream: Stream, granularity: Granularity) -> Option<&StreamScoreSet> {
        self.videos.get(video_id)?.get(&(stream, granularity))
    }

    /// All score sets of a video, ordered by stream then granularity.
    pub fn sets(&self, video_id: &str) -> impl Iterator<Item = &StreamScoreSet> {
        self.videos.get(video_id).into_iter().flat_map(|m| m.values())
    }

    pub fn records(&self) -> impl Iterator<Item = ScoreRecord> + '_ {
        self.videos.values().flat_map(|m| m.values()).flat_map(|set| {
            set.entries.iter().map(move |e| ScoreRecord {
                video_id: set.video_id.clone(),
                stream: set.stream,
                granularity: set.granularity,
                clip_start: e.clip_start,
                crop: e.crop,
                vector: e.vector.clone(),
            })
        })
    }
}

pub fn read_scores(path: &Path) -> Result<ScoreTable> {
    let mut table = ScoreTable::default();
    read_records(path, |line, r: RawScoreRecord| {
        let stream = r.stream.parse().map_err(|v| vocab_err(path, line, "stream", v))?;
        let granularity = r.granularity.parse().map_err(|v| vocab_err(path, line, "granularity", v))?;
        let crop = r.crop_id.parse().map_err(|v| vocab_err(path, line, "crop_id", v))?;
        let vector = match r.kind.as_str() {
            "raw" => ScoreVector::raw(r.values),
            "prob" => {
                let sum: f64 = r.values.iter().sum();
                if r.values.is_empty() || (sum - 1.0).abs() > STORED_PROB_TOL {
                    return Err(parse_err(path, line, format!("values: probabilities sum to {sum}")));
                }
                ScoreVector::probability(r.values.iter().map(|v| v / sum).collect())
            }
            _ => return Err(vocab_err(path, line, "kind", r.kind)),
        }
        .map_err(|e| parse_err(path, line, format!("values: {e}")))?;
        table
            .insert(ScoreRecord {
                video_id: r.video_id,
                stream,
                granularity,
                clip_start: r.clip_start,
                crop,
                vector,
            })
            .map_err(|e| parse_err(path, line, format!("values: {e}")))
    })?;
    Ok(table)
}

pub fn write_scores(path: &Path, table: &ScoreTable) -> Result<()> {
    write_records(
        path,
        table.records().map(|r| RawScoreRecord {
            video_id: r.video_id,
            stream: r.stream.name().into(),
            granularity: r.granularity.name().into(),
            clip_start: r.clip_start,
            crop_id: r.crop.name().into(),
            kind: match r.vector.kind() {
                ScoreKind::Raw => "raw".into(),
                ScoreKind::Probability => "prob".into(),
            },
            values: round_all(r.vector.values()),
        }),
    )
}

#[derive(Serialize, Deserialize)]
struct TubeRecord {
    video_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<u32>,
    start: u32,
    end: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
    boxes: Vec<[f64; 4]>,
}

/// Reads predicted or ground-truth tubes in file order.
pub fn read_tubes(path: &Path) -> Result<Vec<VideoTube>> {
    let mut out = Vec::new();
    read_records(path, |line, r: TubeRecord| {
        let span = TemporalSpan::new(r.start, r.end).map_err(|e| parse_err(path, line, format!("end: {e}")))?;
        if r.boxes.len() != span.len() {
            return Err(parse_err(
                path,
                line,
                format!("boxes: {} boxes for {} frames", r.boxes.len(), span.len()),
            ));
        }
        let boxes = r
            .boxes
            .iter()
            .zip(span.frames())
            .enumerate()
            .map(|(i, (c, t))| {
                Box2D::new(t, c[0], c[1], c[2], c[3]).map_err(|e| parse_err(path, line, format!("boxes[{i}]: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let tube = Tube::new(boxes, r.label, r.score).map_err(|e| parse_err(path, line, e.to_string()))?;
        out.push(VideoTube::new(r.video_id, tube));
        Ok(())
    })?;
    Ok(out)
}

/// Writes tubes in the given order. Per-box detection scores are not stored.
pub fn write_tubes(path: &Path, tubes: &[VideoTube]) -> Result<()> {
    write_records(
        path,
        tubes.iter().map(|vt| TubeRecord {
            video_id: vt.video_id.clone(),
            label: vt.tube.label,
            start: vt.tube.span().start(),
            end: vt.tube.span().end(),
            score: vt.tube.score.map(round_sig6),
            boxes: vt.tube.boxes().iter().map(|b| b.coords().map(round_sig6)).collect(),
        }),
    )
}

#[derive(Serialize)]
struct ReportRecord {
    delta: f64,
    class: u32,
    ap: f64,
    pr: Vec<[f64; 2]>,
    map: f64,
}

/// One record per (threshold, class).
pub fn write_report(path: &Path, report: &EvalReport) -> Result<()> {
    write_records(
        path,
        report.per_delta.iter().flat_map(|d| {
            d.classes.iter().map(move |c| ReportRecord {
                delta: round_sig6(d.delta),
                class: c.class,
                ap: round_sig6(c.ap),
                pr: c.pr.iter().map(|&(r, p)| [round_sig6(r), round_sig6(p)]).collect(),
                map: round_sig6(d.map),
            })
        }),
    )
}

/// Fused video-level classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoPrediction {
    pub video_id: String,
    pub method: String,
    pub label: u32,
    pub values: Vec<f64>,
}

pub fn write_predictions(path: &Path, preds: &[VideoPrediction]) -> Result<()> {
    write_records(
        path,
        preds.iter().map(|p| VideoPrediction {
            values: round_all(&p.values),
            ..p.clone()
        }),
    )
}

pub fn read_predictions(path: &Path) -> Result<Vec<VideoPrediction>> {
    let mut out = Vec::new();
    read_records(path, |_, p: VideoPrediction| {
        out.push(p);
        Ok(())
    })?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeActionness {
    pub start: u32,
    pub end: u32,
    pub actionness: f64,
}

/// Per-frame actionness of one class for one video, its thresholded spans and
/// the summed score of each tube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionnessRecord {
    pub video_id: String,
    pub class: u32,
    pub actionness: Vec<f64>,
    pub spans: Vec<[u32; 2]>,
    pub tubes: Vec<TubeActionness>,
}

pub fn write_actionness(path: &Path, records: &[ActionnessRecord]) -> Result<()> {
    write_records(
        path,
        records.iter().map(|r| ActionnessRecord {
            actionness: round_all(&r.actionness),
            tubes: r
                .tubes
                .iter()
                .map(|t| TubeActionness {
                    actionness: round_sig6(t.actionness),
                    ..t.clone()
                })
                .collect(),
            ..r.clone()
        }),
    )
}
