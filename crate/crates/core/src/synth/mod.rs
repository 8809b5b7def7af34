//! Deterministic synthetic corpora with planted ground truth.
//!
//! Each video gets one or more people drifting by a bounded random walk, each
//! in its own horizontal lane, plus missed detections, uniform false positives and
//! per-clip three-stream class scores peaked at the video's true class.

#[cfg(feature = "oracle")]
pub mod oracle;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::count_signal::FrameDetections;
use crate::error::{Error, Result};
use crate::evaluation::VideoTube;
use crate::fusion::{Crop, Granularity, ScoreVector, Stream, CLIP_STRIDE};
use crate::geometry::{Box2D, Tube};
use crate::pipeline::{ScoreRecord, ScoreTable};

pub const CANVAS_WIDTH: i32 = 320;
pub const CANVAS_HEIGHT: i32 = 240;
/// Smallest planted box side.
pub const MIN_BOX_SIDE: i32 = 40;
const MAX_BOX_SIDE: i32 = 60;
/// Largest per-frame step that keeps consecutive planted boxes at IoU >= 0.5
/// for the smallest box side.
pub const MAX_JITTER: u32 = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub videos: usize,
    pub frames: usize,
    /// Each video plants between 1 and this many people.
    pub max_persons: usize,
    /// Largest per-frame displacement of a planted box along each axis, in pixels.
    pub jitter: u32,
    /// Probability that a frame receives one false-positive box.
    pub fp_rate: f64,
    /// Probability that a planted box is missing from the detections.
    pub miss_rate: f64,
    pub num_classes: usize,
    /// Standard deviation of the logit noise.
    pub score_noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            videos: 10,
            frames: 100,
            max_persons: 2,
            jitter: 1,
            fp_rate: 0.1,
            miss_rate: 0.05,
            num_classes: 5,
            score_noise: 1.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, rate) in [("fp_rate", self.fp_rate), ("miss_rate", self.miss_rate)] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::InvalidParameter(format!("{name} {rate} outside [0, 1]")));
            }
        }
        if self.jitter > MAX_JITTER {
            return Err(Error::InvalidParameter(format!(
                "jitter {} exceeds {MAX_JITTER} pixels",
                self.jitter
            )));
        }
        if self.num_classes == 0 {
            return Err(Error::InvalidParameter("at least one class is required".into()));
        }
        if !(self.score_noise >= 0.0 && self.score_noise.is_finite()) {
            return Err(Error::InvalidParameter(format!("score noise {} is invalid", self.score_noise)));
        }
        if self.max_persons as i32 * MAX_BOX_SIDE > CANVAS_WIDTH {
            return Err(Error::InvalidParameter(format!(
                "{} lanes do not fit the canvas",
                self.max_persons
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub detections: Vec<FrameDetections>,
    pub ground_truth: Vec<VideoTube>,
    pub scores: ScoreTable,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of video `index`, independent of how many videos are generated.
pub fn video_seed(seed: u64, index: usize) -> u64 {
    splitmix64(splitmix64(seed) ^ index as u64)
}

pub fn video_id(index: usize) -> String {
    format!("video_{index:04}")
}

pub fn generate_scene(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let mut corpus = SynthCorpus {
        detections: Vec::with_capacity(cfg.videos),
        ground_truth: Vec::new(),
        scores: ScoreTable::default(),
    };
    for i in 0..cfg.videos {
        generate_video(cfg, i, &mut corpus)?;
    }
    Ok(corpus)
}

fn generate_video(cfg: &SynthConfig, index: usize, corpus: &mut SynthCorpus) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(video_seed(cfg.seed, index));
    let id = video_id(index);
    let n = cfg.frames;
    let class = rng.random_range(0..cfg.num_classes) as u32;
    let persons = if n == 0 || cfg.max_persons == 0 {
        0
    } else {
        rng.random_range(1..=cfg.max_persons)
    };

    let mut frames: Vec<Vec<Box2D>> = vec![Vec::new(); n];
    let mut spans: Vec<(usize, usize)> = Vec::new();
    let lane_width = CANVAS_WIDTH / cfg.max_persons.max(1) as i32;
    for p in 0..persons {
        // the first person spans most of the video; later people stay inside it
        let (start, end) = if p == 0 {
            let margin = n / 10;
            (rng.random_range(0..=margin), rng.random_range(n - 1 - margin..n))
        } else {
            let (s0, e0) = spans[0];
            let outer = e0 - s0 + 1;
            let len = rng.random_range((n / 2).clamp(1, outer)..=outer);
            let s = rng.random_range(s0..=e0 + 1 - len);
            (s, s + len - 1)
        };
        spans.push((start, end));

        let lane_lo = p as i32 * lane_width;
        let w = rng.random_range(MIN_BOX_SIDE..=MAX_BOX_SIDE.min(lane_width));
        let h = rng.random_range(MIN_BOX_SIDE..=MAX_BOX_SIDE);
        let (x_min, x_max) = (lane_lo, lane_lo + lane_width - w);
        let (y_min, y_max) = (0, CANVAS_HEIGHT - h);
        let mut x = rng.random_range(x_min..=x_max);
        let mut y = rng.random_range(y_min..=y_max);
        let j = cfg.jitter as i32;
        let mut planted = Vec::with_capacity(end - start + 1);
        for t in start..=end {
            if t > start {
                x = (x + rng.random_range(-j..=j)).clamp(x_min, x_max);
                y = (y + rng.random_range(-j..=j)).clamp(y_min, y_max);
            }
            let b = Box2D::new(t as u32, x as f64, y as f64, (x + w) as f64, (y + h) as f64)?;
            planted.push(b);
            if rng.random::<f64>() >= cfg.miss_rate {
                frames[t].push(b.with_score(score3(rng.random_range(0.5..1.0))));
            }
        }
        corpus
            .ground_truth
            .push(VideoTube::new(id.clone(), Tube::new(planted, Some(class), None)?));
    }

    for (t, boxes) in frames.iter_mut().enumerate() {
        if rng.random::<f64>() < cfg.fp_rate {
            let w = rng.random_range(MIN_BOX_SIDE..=MAX_BOX_SIDE);
            let h = rng.random_range(MIN_BOX_SIDE..=MAX_BOX_SIDE);
            let x = rng.random_range(0..=CANVAS_WIDTH - w);
            let y = rng.random_range(0..=CANVAS_HEIGHT - h);
            let b = Box2D::new(t as u32, x as f64, y as f64, (x + w) as f64, (y + h) as f64)?;
            boxes.push(b.with_score(score3(rng.random_range(0.3..0.9))));
        }
    }
    corpus.detections.push(FrameDetections::new(id.clone(), frames)?);

    let noise = Normal::new(0.0, cfg.score_noise).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    for stream in Stream::ALL.iter().copied() {
        for granularity in Granularity::ALL.iter().copied() {
            for clip_start in clip_starts(granularity, n) {
                let clip_end = clip_start as usize + granularity.clip_len(n) as usize - 1;
                let active = spans.iter().any(|&(s, e)| s <= clip_end && clip_start as usize <= e);
                let peak = if active { 4.0 } else { 0.5 };
                for crop in Crop::ALL.iter().copied() {
                    let values = (0..cfg.num_classes)
                        .map(|k| {
                            let base = if k as u32 == class { peak } else { 0.0 };
                            score3(base + noise.sample(&mut rng))
                        })
                        .collect();
                    corpus.scores.insert(ScoreRecord {
                        video_id: id.clone(),
                        stream,
                        granularity,
                        clip_start,
                        crop,
                        vector: ScoreVector::raw(values)?,
                    })?;
                }
            }
        }
    }
    Ok(())
}

/// Keeps generated reals on a 1e-3 grid so they survive six-digit storage.
fn score3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

/// Test-time clip starts: every 8 frames while the clip fits, at least one.
pub fn clip_starts(granularity: Granularity, video_len: usize) -> Vec<u32> {
    if granularity == Granularity::NetW || video_len == 0 {
        return vec![0];
    }
    let len = granularity.clip_len(video_len) as usize;
    let mut starts = vec![0u32];
    let mut s = CLIP_STRIDE as usize;
    while s + len <= video_len {
        starts.push(s as u32);
        s += CLIP_STRIDE as usize;
    }
    starts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::box_iou;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            seed,
            videos: 4,
            frames: 60,
            ..Default::default()
        }
    }

    #[test]
    fn same_seed_same_corpus() {
        assert_eq!(generate_scene(&small(3)).unwrap(), generate_scene(&small(3)).unwrap());
        assert_ne!(generate_scene(&small(3)).unwrap(), generate_scene(&small(4)).unwrap());
    }

    #[test]
    fn noiseless_detections_are_the_planted_boxes() {
        let cfg = SynthConfig {
            fp_rate: 0.0,
            miss_rate: 0.0,
            ..small(11)
        };
        let c = generate_scene(&cfg).unwrap();
        for det in &c.detections {
            let gts: Vec<&VideoTube> = c.ground_truth.iter().filter(|g| g.video_id == det.video_id()).collect();
            for t in 0..det.len() {
                let mut planted: Vec<[f64; 4]> = gts
                    .iter()
                    .filter_map(|g| g.tube.box_at(t as u32))
                    .map(|b| b.coords())
                    .collect();
                let mut seen: Vec<[f64; 4]> = det.frame(t).iter().map(|b| b.coords()).collect();
                planted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
                assert_eq!(planted, seen);
            }
        }
    }

    #[test]
    fn planted_boxes_stay_coherent() {
        for jitter in 0..=MAX_JITTER {
            let cfg = SynthConfig { jitter, ..small(5) };
            for g in generate_scene(&cfg).unwrap().ground_truth {
                for w in g.tube.boxes().windows(2) {
                    let iou = box_iou(&w[0], &w[1]);
                    assert!(iou >= 0.5, "jitter {jitter}: iou {iou}");
                    if jitter == 0 {
                        assert_eq!(iou, 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_rates_rejected() {
        for bad in [-0.1, 1.5, f64::NAN] {
            assert!(generate_scene(&SynthConfig { fp_rate: bad, ..small(0) }).is_err());
            assert!(generate_scene(&SynthConfig { miss_rate: bad, ..small(0) }).is_err());
        }
        assert!(generate_scene(&SynthConfig { jitter: 9, ..small(0) }).is_err());
    }

    #[test]
    fn clip_layout() {
        assert_eq!(clip_starts(Granularity::Net16, 100), (0..=80).step_by(8).collect::<Vec<u32>>());
        assert_eq!(clip_starts(Granularity::Net32, 100), (0..=64).step_by(8).collect::<Vec<u32>>());
        assert_eq!(clip_starts(Granularity::NetW, 100), vec![0]);
        assert_eq!(clip_starts(Granularity::Net16, 5), vec![0]);
    }

    #[test]
    fn scores_cover_all_streams_and_crops() {
        let c = generate_scene(&small(2)).unwrap();
        assert_eq!(c.scores.num_classes(), Some(5));
        for id in c.scores.video_ids() {
            assert_eq!(c.scores.sets(id).count(), 9);
            let set = c.scores.get(id, Stream::Pose, Granularity::Net16).unwrap();
            assert_eq!(set.entries.len(), clip_starts(Granularity::Net16, 60).len() * 10);
        }
    }
}
