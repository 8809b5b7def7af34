//! Boxes, temporal spans and tubes, plus the overlap measures defined on them.
//!
//! Boxes use a half-open continuous convention `[x1, x2) x [y1, y2)`, so a box
//! derived from integer pixel bounds has area exactly `width * height`.
//! Temporal spans are inclusive integer frame ranges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One axis-aligned detection rectangle on one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box2D {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    pub frame: u32,
    pub score: Option<f64>,
}

impl Box2D {
    /// Builds a box, rejecting non-finite coordinates and empty rectangles.
    pub fn new(frame: u32, x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        if ![x1, y1, x2, y2].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite box coordinates ({x1}, {y1}, {x2}, {y2})"
            )));
        }
        if !(x1 < x2 && y1 < y2) {
            return Err(Error::InvalidInput(format!(
                "box ({x1}, {y1}, {x2}, {y2}) has no area"
            )));
        }
        Ok(Self {
            x1,
            y1,
            x2,
            y2,
            frame,
            score: None,
        })
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = Some(score);
        self
    }

    /// Same rectangle, placed on another frame.
    pub fn on_frame(mut self, frame: u32) -> Self {
        self.frame = frame;
        self
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }
}

/// Intersection over union of two boxes. Frame indices are ignored.
pub fn box_iou(a: &Box2D, b: &Box2D) -> f64 {
    let iw = a.x2.min(b.x2) - a.x1.max(b.x1);
    let ih = a.y2.min(b.y2) - a.y1.max(b.y1);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    // identical boxes must give exactly 1
    if inter >= union {
        1.0
    } else {
        inter / union
    }
}

/// Inclusive range of frames `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TemporalSpan {
    start: u32,
    end: u32,
}

impl TemporalSpan {
    pub fn new(start: u32, end: u32) -> Result<Self> {
        if start > end {
            return Err(Error::InvalidInput(format!(
                "span start {start} is after end {end}"
            )));
        }
        Ok(Self { start, end })
    }

    pub fn start(&self) -> u32 {
        self.start
    }

    pub fn end(&self) -> u32 {
        self.end
    }

    pub fn len(&self) -> usize {
        (self.end - self.start) as usize + 1
    }

    /// Spans always hold at least one frame.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, frame: u32) -> bool {
        self.start <= frame && frame <= self.end
    }

    /// The shared frames, if any.
    pub fn intersection(&self, other: &TemporalSpan) -> Option<TemporalSpan> {
        let start = self.start.max(other.start);
        let end = self.end.min(other.end);
        (start <= end).then_some(TemporalSpan { start, end })
    }

    pub fn frames(&self) -> impl Iterator<Item = u32> {
        self.start..=self.end
    }
}

/// `|a ∩ b| / |a ∪ b|` over inclusive integer frame sets.
pub fn temporal_iou(a: &TemporalSpan, b: &TemporalSpan) -> f64 {
    match a.intersection(b) {
        None => 0.0,
        Some(inter) => {
            let inter = inter.len();
            let union = a.len() + b.len() - inter;
            inter as f64 / union as f64
        }
    }
}

/// A temporally contiguous sequence of boxes, one per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Tube {
    span: TemporalSpan,
    boxes: Vec<Box2D>,
    pub label: Option<u32>,
    pub score: Option<f64>,
}

impl Tube {
    /// Builds a tube from boxes on consecutive frames.
    pub fn new(boxes: Vec<Box2D>, label: Option<u32>, score: Option<f64>) -> Result<Self> {
        let first = boxes
            .first()
            .ok_or_else(|| Error::InvalidInput("tube has no boxes".into()))?
            .frame;
        for (i, b) in boxes.iter().enumerate() {
            if b.frame as usize != first as usize + i {
                return Err(Error::InvalidInput(format!(
                    "tube box {i} is on frame {} but frame {} was expected",
                    b.frame,
                    first as usize + i
                )));
            }
        }
        let span = TemporalSpan::new(first, first + (boxes.len() as u32 - 1))?;
        Ok(Self {
            span,
            boxes,
            label,
            score,
        })
    }

    pub fn span(&self) -> TemporalSpan {
        self.span
    }

    pub fn boxes(&self) -> &[Box2D] {
        &self.boxes
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// The box on `frame`, if the tube covers it.
    pub fn box_at(&self, frame: u32) -> Option<&Box2D> {
        self.span
            .contains(frame)
            .then(|| &self.boxes[(frame - self.span.start) as usize])
    }
}

/// Temporal IoU times the mean spatial IoU over the overlapping frames.
///
/// Returns 0 when the spans do not overlap. Labels are not compared.
pub fn tube_iou(p: &Tube, g: &Tube) -> f64 {
    let Some(overlap) = p.span.intersection(&g.span) else {
        return 0.0;
    };
    let spatial: f64 = overlap
        .frames()
        .map(|t| box_iou(p.box_at(t).unwrap(), g.box_at(t).unwrap()))
        .sum::<f64>()
        / overlap.len() as f64;
    temporal_iou(&p.span, &g.span) * spatial
}
