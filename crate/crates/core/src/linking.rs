//! Viterbi box linking and iterative action-tube extraction.
//!
//! A tube is found by choosing one box per frame so that the summed IoU of
//! consecutive boxes is maximal. Extraction repeatedly takes the longest
//! remaining proposal (a run of frames where the smoothed detection count is
//! positive), links it, and removes the linked boxes from the working set.

use crate::count_signal::{
    continuous_regions, pad_detections, DetectionCountSeries, FrameDetections,
    DEFAULT_MEDIAN_WINDOW,
};
use crate::error::{Error, Result};
use crate::geometry::{box_iou, Box2D, TemporalSpan, Tube};

pub const DEFAULT_MIN_TUBE_LEN: usize = 5;
pub const DEFAULT_MAX_GAP: usize = 2;

/// Candidate boxes for every frame of a span.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkingProblem {
    span: TemporalSpan,
    candidates: Vec<Vec<Box2D>>,
}

impl LinkingProblem {
    /// `candidates[i]` are the boxes on frame `start + i`. Box frame tags are
    /// rewritten to match their position.
    pub fn new(start: u32, candidates: Vec<Vec<Box2D>>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::InvalidInput("linking problem has no frames".into()));
        }
        if let Some(i) = candidates.iter().position(Vec::is_empty) {
            return Err(Error::EmptyFrame {
                frame: start + i as u32,
            });
        }
        let span = TemporalSpan::new(start, start + candidates.len() as u32 - 1)?;
        let candidates = candidates
            .into_iter()
            .enumerate()
            .map(|(i, boxes)| {
                boxes
                    .into_iter()
                    .map(|b| b.on_frame(start + i as u32))
                    .collect()
            })
            .collect();
        Ok(Self { span, candidates })
    }

    pub fn span(&self) -> TemporalSpan {
        self.span
    }

    pub fn candidates(&self) -> &[Vec<Box2D>] {
        &self.candidates
    }

    /// Number of distinct box sequences.
    pub fn path_count(&self) -> f64 {
        self.candidates.iter().map(|c| c.len() as f64).product()
    }
}

/// A chosen box per frame together with its linking objective.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxPath {
    pub tube: Tube,
    /// Candidate index picked on each frame.
    pub indices: Vec<usize>,
    /// Sum of consecutive-frame IoU, accumulated front to back.
    pub objective: f64,
    /// `objective / T` for a path of `T` frames.
    pub mean_link_score: f64,
}

impl BoxPath {
    pub(crate) fn from_indices(problem: &LinkingProblem, indices: Vec<usize>, objective: f64) -> Self {
        let boxes = indices
            .iter()
            .zip(&problem.candidates)
            .map(|(&i, c)| c[i])
            .collect::<Vec<_>>();
        let len = boxes.len() as f64;
        let mean_link_score = objective / len;
        let tube = Tube::new(boxes, None, Some(mean_link_score)).expect("path frames are consecutive");
        Self {
            tube,
            indices,
            objective,
            mean_link_score,
        }
    }
}

/// Exact maximiser of the summed consecutive IoU by forward dynamic
/// programming. Ties resolve to the lowest candidate index at each
/// backtracking step.
pub fn viterbi_link(problem: &LinkingProblem) -> BoxPath {
    let frames = &problem.candidates;
    let mut score = vec![0.0f64; frames[0].len()];
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(frames.len());
    back.push(Vec::new());
    for pair in frames.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        let mut next = Vec::with_capacity(cur.len());
        let mut from = Vec::with_capacity(cur.len());
        for b in cur {
            let mut best = (0usize, f64::NEG_INFINITY);
            for (i, a) in prev.iter().enumerate() {
                let v = score[i] + box_iou(a, b);
                if v > best.1 {
                    best = (i, v);
                }
            }
            next.push(best.1);
            from.push(best.0);
        }
        score = next;
        back.push(from);
    }
    let (mut j, objective) = score
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    let mut indices = vec![0; frames.len()];
    for t in (0..frames.len()).rev() {
        indices[t] = j;
        if t > 0 {
            j = back[t][j];
        }
    }
    BoxPath::from_indices(problem, indices, objective)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtractionConfig {
    /// Proposals and tubes shorter than this are dropped.
    pub min_tube_len: usize,
    /// Size of the median filter applied to the per-frame box counts.
    pub median_window: usize,
    /// Longest run of box-less frames inside a proposal that is bridged by
    /// holding the previous frame's boxes. Zero splits at every empty frame.
    pub max_gap: usize,
    /// On frames where the raw count falls short of the expected count, also
    /// offer copies of the previous frame's detections.
    pub hold_missed: bool,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            min_tube_len: DEFAULT_MIN_TUBE_LEN,
            median_window: DEFAULT_MEDIAN_WINDOW,
            max_gap: DEFAULT_MAX_GAP,
            hold_missed: true,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_tube_len == 0 {
            return Err(Error::InvalidParameter("min tube length must be >= 1".into()));
        }
        if self.median_window == 0 {
            return Err(Error::InvalidParameter("median window must be >= 1".into()));
        }
        Ok(())
    }
}

/// Where a tube's box on a given frame came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoxSource {
    /// Slot in the padded detection list of that frame.
    Detection(usize),
    /// Copy of a box held across a bridged gap.
    Held,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedTube {
    pub tube: Tube,
    pub sources: Vec<BoxSource>,
    pub mean_link_score: f64,
}

/// Everything extraction produced for one video.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub counts: DetectionCountSeries,
    pub padded: FrameDetections,
    pub tubes: Vec<ExtractedTube>,
}

/// Runs the full extraction and returns only the tubes.
pub fn extract_tubes(dets: &FrameDetections, cfg: &ExtractionConfig) -> Result<Vec<Tube>> {
    Ok(extract_tubes_traced(dets, cfg)?
        .tubes
        .into_iter()
        .map(|t| t.tube)
        .collect())
}

pub fn extract_tubes_traced(dets: &FrameDetections, cfg: &ExtractionConfig) -> Result<Extraction> {
    cfg.validate()?;
    let counts = DetectionCountSeries::compute(dets, cfg.median_window)?;
    let padded = pad_detections(dets, &counts.expected)?;
    let mut work: Vec<Vec<Option<Box2D>>> = padded
        .frames()
        .iter()
        .map(|f| f.iter().copied().map(Some).collect())
        .collect();

    let mut queue = continuous_regions(&counts.smoothed);
    let mut tubes = Vec::new();
    while let Some(pick) = take_longest(&mut queue) {
        if pick.len() < cfg.min_tube_len {
            continue;
        }
        let pieces = linkable_runs(&work, pick, cfg.max_gap);
        if pieces != [pick] {
            queue.extend(pieces.into_iter().filter(|p| p.len() >= cfg.min_tube_len));
            continue;
        }
        let short: Vec<bool> = counts
            .raw
            .iter()
            .zip(&counts.expected)
            .map(|(&n, &e)| cfg.hold_missed && n < e)
            .collect();
        let (problem, origin) = build_problem(&work, pick, &short);
        let path = viterbi_link(&problem);
        let sources: Vec<BoxSource> = path
            .indices
            .iter()
            .zip(&origin)
            .map(|(&i, slots)| slots[i])
            .collect();
        for (t, src) in pick.frames().zip(&sources) {
            if let BoxSource::Detection(slot) = *src {
                work[t as usize][slot] = None;
            }
        }
        tubes.push(ExtractedTube {
            tube: path.tube,
            sources,
            mean_link_score: path.mean_link_score,
        });
        queue.push(pick);
    }
    // stable: equal keys keep extraction order
    tubes.sort_by_key(|t| (t.tube.span().start(), std::cmp::Reverse(t.tube.len())));
    Ok(Extraction {
        counts,
        padded,
        tubes,
    })
}

fn take_longest(queue: &mut Vec<TemporalSpan>) -> Option<TemporalSpan> {
    let best = queue
        .iter()
        .enumerate()
        .min_by_key(|(_, s)| (std::cmp::Reverse(s.len()), s.start()))?
        .0;
    Some(queue.swap_remove(best))
}

fn has_boxes(work: &[Vec<Option<Box2D>>], t: u32) -> bool {
    work[t as usize].iter().any(Option::is_some)
}

/// Sub-spans of `region` whose frames all hold boxes, allowing interior gaps
/// of at most `max_gap` empty frames. Each run starts and ends on a frame
/// with boxes.
fn linkable_runs(work: &[Vec<Option<Box2D>>], region: TemporalSpan, max_gap: usize) -> Vec<TemporalSpan> {
    let mut runs = Vec::new();
    let mut current: Option<(u32, u32)> = None;
    for t in region.frames().filter(|&t| has_boxes(work, t)) {
        current = match current {
            Some((s, e)) if (t - e - 1) as usize <= max_gap => Some((s, t)),
            Some((s, e)) => {
                runs.push(TemporalSpan::new(s, e).unwrap());
                Some((t, t))
            }
            None => Some((t, t)),
        };
    }
    if let Some((s, e)) = current {
        runs.push(TemporalSpan::new(s, e).unwrap());
    }
    runs
}

/// Candidates per frame of `span`; empty frames inherit the previous frame's
/// candidates as held copies. Frames flagged in `short` keep their own boxes
/// and add held copies of those previous detections that nothing on the
/// frame overlaps.
fn build_problem(
    work: &[Vec<Option<Box2D>>],
    span: TemporalSpan,
    short: &[bool],
) -> (LinkingProblem, Vec<Vec<BoxSource>>) {
    let mut candidates: Vec<Vec<Box2D>> = Vec::with_capacity(span.len());
    let mut origin: Vec<Vec<BoxSource>> = Vec::with_capacity(span.len());
    for t in span.frames() {
        let (boxes, slots): (Vec<Box2D>, Vec<BoxSource>) = work[t as usize]
            .iter()
            .enumerate()
            .filter_map(|(slot, b)| b.map(|b| (b, BoxSource::Detection(slot))))
            .unzip();
        if boxes.is_empty() {
            let held = candidates.last().expect("runs start on a frame with boxes").clone();
            origin.push(vec![BoxSource::Held; held.len()]);
            candidates.push(held);
        } else {
            let (mut boxes, mut slots) = (boxes, slots);
            if short[t as usize] && t > span.start() {
                let prev = candidates.last().unwrap();
                let from = origin.last().unwrap();
                let missed: Vec<Box2D> = prev
                    .iter()
                    .zip(from)
                    .filter(|(b, src)| {
                        matches!(src, BoxSource::Detection(_))
                            && boxes.iter().all(|c| box_iou(b, c) == 0.0)
                    })
                    .map(|(b, _)| *b)
                    .collect();
                for b in missed {
                    boxes.push(b);
                    slots.push(BoxSource::Held);
                }
            }
            candidates.push(boxes);
            origin.push(slots);
        }
    }
    let problem = LinkingProblem::new(span.start(), candidates).expect("every frame has candidates");
    (problem, origin)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(t: u32, x: f64, y: f64, w: f64) -> Box2D {
        Box2D::new(t, x, y, x + w, y + w).unwrap()
    }

    fn track(len: u32, x: f64) -> Vec<Vec<Box2D>> {
        (0..len).map(|t| vec![bx(t, x + t as f64 * 0.5, 10.0, 20.0)]).collect()
    }

    #[test]
    fn single_frame_path() {
        let p = LinkingProblem::new(4, vec![vec![bx(0, 0., 0., 10.)]]).unwrap();
        let path = viterbi_link(&p);
        assert_eq!(path.indices, vec![0]);
        assert_eq!(path.objective, 0.0);
        assert_eq!(path.mean_link_score, 0.0);
        assert_eq!(path.tube.span().start(), 4);
    }

    #[test]
    fn two_frame_path_follows_overlap() {
        let a = bx(0, 0., 0., 10.);
        let far = bx(1, 50., 50., 10.);
        let p = LinkingProblem::new(0, vec![vec![a], vec![far, a.on_frame(1)]]).unwrap();
        let path = viterbi_link(&p);
        assert_eq!(path.indices, vec![0, 1]);
        assert_eq!(path.objective, 1.0);
        assert_eq!(path.mean_link_score, 0.5);
    }

    #[test]
    fn ties_pick_lowest_index() {
        let a = bx(0, 0., 0., 10.);
        let p = LinkingProblem::new(0, vec![vec![a, a], vec![a, a]]).unwrap();
        assert_eq!(viterbi_link(&p).indices, vec![0, 0]);
    }

    #[test]
    fn empty_frame_rejected() {
        let a = bx(0, 0., 0., 10.);
        let err = LinkingProblem::new(3, vec![vec![a], vec![], vec![a]]).unwrap_err();
        assert!(matches!(err, Error::EmptyFrame { frame: 4 }));
    }

    #[test]
    fn mean_link_score_bounds() {
        let p = LinkingProblem::new(0, track(10, 0.0)).unwrap();
        let path = viterbi_link(&p);
        assert!(path.mean_link_score <= 9.0 / 10.0);
        assert!(path.mean_link_score > 0.8);
    }

    #[test]
    fn perfect_track_gives_one_tube() {
        let dets = FrameDetections::new("v", track(20, 0.0)).unwrap();
        let tubes = extract_tubes(&dets, &ExtractionConfig::default()).unwrap();
        assert_eq!(tubes.len(), 1);
        assert_eq!(tubes[0].span(), TemporalSpan::new(0, 19).unwrap());
    }

    #[test]
    fn four_frame_region_yields_nothing() {
        let mut frames = vec![Vec::new(); 30];
        for t in 10..14 {
            frames[t] = vec![bx(t as u32, 5., 5., 20.)];
        }
        let dets = FrameDetections::new("v", frames).unwrap();
        let cfg = ExtractionConfig {
            median_window: 3,
            ..Default::default()
        };
        assert!(extract_tubes(&dets, &cfg).unwrap().is_empty());
        assert!(extract_tubes(&dets, &ExtractionConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn empty_video() {
        let dets = FrameDetections::new("v", vec![]).unwrap();
        assert!(extract_tubes(&dets, &ExtractionConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn short_gap_is_bridged_long_gap_splits() {
        let mut frames = track(30, 0.0);
        frames[12].clear();
        let dets = FrameDetections::new("v", frames.clone()).unwrap();
        let out = extract_tubes_traced(&dets, &ExtractionConfig::default()).unwrap();
        assert_eq!(out.tubes.len(), 1);
        assert_eq!(out.tubes[0].tube.len(), 30);
        assert_eq!(out.tubes[0].sources[12], BoxSource::Held);

        let strict = ExtractionConfig {
            max_gap: 0,
            hold_missed: false,
            ..Default::default()
        };
        let tubes = extract_tubes(&dets, &strict).unwrap();
        let spans: Vec<_> = tubes.iter().map(|t| (t.span().start(), t.span().end())).collect();
        assert_eq!(spans, vec![(0, 11), (13, 29)]);
    }

    fn alternating_misses() -> FrameDetections {
        let frames: Vec<Vec<Box2D>> = (0..40u32)
            .map(|t| {
                let a = bx(t, 10.0 + t as f64, 10.0, 30.0);
                let b = bx(t, 200.0 - t as f64, 100.0, 40.0);
                match t {
                    10 | 30 => vec![b],
                    20 => vec![a],
                    _ => vec![a, b],
                }
            })
            .collect();
        FrameDetections::new("v", frames).unwrap()
    }

    fn switches(tube: &Tube) -> usize {
        tube.boxes().windows(2).filter(|w| w[0].y1 != w[1].y1).count()
    }

    #[test]
    fn missed_boxes_are_held_instead_of_switching_tracks() {
        let tubes = extract_tubes(&alternating_misses(), &ExtractionConfig::default()).unwrap();
        assert_eq!(tubes.len(), 2);
        assert!(tubes.iter().all(|t| t.len() == 40 && switches(t) == 0));
    }

    #[test]
    fn without_holding_misses_force_switches() {
        let cfg = ExtractionConfig {
            hold_missed: false,
            ..ExtractionConfig::default()
        };
        let tubes = extract_tubes(&alternating_misses(), &cfg).unwrap();
        assert!(tubes.iter().any(|t| switches(t) > 0));
    }

    #[test]
    fn two_parallel_tracks_become_two_tubes() {
        let frames: Vec<Vec<Box2D>> = (0..40)
            .map(|t| vec![bx(t, 10.0 + t as f64, 10.0, 30.0), bx(t, 200.0 - t as f64, 100.0, 30.0)])
            .collect();
        let dets = FrameDetections::new("v", frames).unwrap();
        let tubes = extract_tubes(&dets, &ExtractionConfig::default()).unwrap();
        assert_eq!(tubes.len(), 2);
        for tube in &tubes {
            assert_eq!(tube.len(), 40);
            let y = tube.boxes()[0].y1;
            assert!(tube.boxes().iter().all(|b| b.y1 == y), "tube switched tracks");
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let dets = FrameDetections::new("v", track(5, 0.0)).unwrap();
        let cfg = ExtractionConfig {
            min_tube_len: 0,
            ..Default::default()
        };
        assert!(matches!(extract_tubes(&dets, &cfg), Err(Error::InvalidParameter(_))));
    }
}
