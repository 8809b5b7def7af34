//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use actiontube::evaluation::VideoTube;
use actiontube::linking::LinkingProblem;
use actiontube::{Box2D, Tube};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform box inside a `canvas`×`canvas` square.
pub fn random_box(rng: &mut impl Rng, frame: u32, canvas: f64) -> Box2D {
    let x1 = rng.random_range(0.0..canvas - 1.0);
    let y1 = rng.random_range(0.0..canvas - 1.0);
    let x2 = rng.random_range(x1 + 0.5..=canvas);
    let y2 = rng.random_range(y1 + 0.5..=canvas);
    Box2D::new(frame, x1, y1, x2, y2).unwrap()
}

/// Up to `max_t` frames with 1..=`max_boxes` boxes each.
pub fn random_problem(rng: &mut impl Rng, max_t: usize, max_boxes: usize) -> LinkingProblem {
    let t = rng.random_range(1..=max_t);
    let frames = (0..t)
        .map(|f| {
            let n = rng.random_range(1..=max_boxes);
            (0..n).map(|_| random_box(rng, f as u32, 100.0)).collect()
        })
        .collect();
    LinkingProblem::new(0, frames).unwrap()
}

fn anchored_tube(rng: &mut impl Rng, start: u32, len: u32, anchor: f64, label: u32, score: Option<f64>) -> Tube {
    let boxes = (start..start + len)
        .map(|t| {
            let dx = rng.random_range(-3i32..=3) as f64;
            let dy = rng.random_range(-3i32..=3) as f64;
            let x = anchor + dx;
            Box2D::new(t, x, 10.0 + dy, x + 20.0, 30.0 + dy).unwrap()
        })
        .collect();
    Tube::new(boxes, Some(label), score).unwrap()
}

/// A tiny evaluation instance: at most six ground-truth tubes and eight
/// predictions over two videos and three classes. Scores are coarse so that
/// ties occur.
pub fn random_eval_instance(rng: &mut impl Rng) -> (Vec<VideoTube>, Vec<VideoTube>) {
    let anchors = [0.0, 12.0, 40.0];
    let videos = ["a", "b"];
    let mut gts = Vec::new();
    for _ in 0..rng.random_range(0..=6) {
        let v = videos[rng.random_range(0..2)];
        let start = rng.random_range(0..6);
        let len = rng.random_range(1..=6);
        let anchor = anchors[rng.random_range(0..3)];
        let label = rng.random_range(0..3);
        gts.push(VideoTube::new(v, anchored_tube(rng, start, len, anchor, label, None)));
    }
    let mut preds = Vec::new();
    for _ in 0..rng.random_range(0..=8) {
        let score = Some(rng.random_range(1..=5) as f64 / 5.0);
        let tube = if !gts.is_empty() && rng.random_bool(0.6) {
            let g: &VideoTube = &gts[rng.random_range(0..gts.len())];
            let label = if rng.random_bool(0.8) { g.tube.label.unwrap() } else { rng.random_range(0..3) };
            let start = (g.tube.span().start() as i64 + rng.random_range(-1..=1)).max(0) as u32;
            let len = (g.tube.len() as i64 + rng.random_range(-1..=1)).max(1) as u32;
            let anchor = g.tube.boxes()[0].x1 + rng.random_range(-2i32..=2) as f64;
            VideoTube::new(g.video_id.clone(), anchored_tube(rng, start, len, anchor, label, score))
        } else {
            let v = videos[rng.random_range(0..2)];
            let start = rng.random_range(0..6);
            let len = rng.random_range(1..=6);
            let anchor = anchors[rng.random_range(0..3)];
            let label = rng.random_range(0..3);
            VideoTube::new(v, anchored_tube(rng, start, len, anchor, label, score))
        };
        preds.push(tube);
    }
    (preds, gts)
}

/// Ground truth with a copy of every tube as a prediction, scored distinctly.
pub fn perfect_instance(rng: &mut impl Rng) -> (Vec<VideoTube>, Vec<VideoTube>) {
    let (_, mut gts) = random_eval_instance(rng);
    if gts.is_empty() {
        gts.push(VideoTube::new("a", anchored_tube(rng, 0, 4, 0.0, 0, None)));
    }
    let preds = gts
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let mut t = g.tube.clone();
            t.score = Some(1.0 - i as f64 * 0.01);
            VideoTube::new(g.video_id.clone(), t)
        })
        .collect();
    (preds, gts)
}

/// Naive median: sort each clamped window and take the lower middle.
pub fn reference_median(series: &[u32], window: usize) -> Vec<u32> {
    let n = series.len() as i64;
    (0..n)
        .map(|t| {
            let lo = (t - window as i64 / 2).max(0);
            let hi = (t - window as i64 / 2 + window as i64 - 1).min(n - 1);
            let mut w: Vec<u32> = series[lo as usize..=hi as usize].to_vec();
            w.sort_unstable();
            w[(w.len() - 1) / 2]
        })
        .collect()
}
