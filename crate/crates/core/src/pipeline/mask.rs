use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::geometry::Box2D;

/// Components smaller than this are treated as segmentation speckle.
pub const DEFAULT_MIN_COMPONENT_PIXELS: usize = 25;

/// Per-pixel body-part labels, row-major. 0 is background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    width: usize,
    height: usize,
    labels: Vec<u16>,
}

impl LabelMask {
    /// `num_parts` is the largest valid part label.
    pub fn new(width: usize, height: usize, labels: Vec<u16>, num_parts: u16) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("mask must have positive dimensions".into()));
        }
        if labels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "mask of {width}x{height} needs {} labels, got {}",
                width * height,
                labels.len()
            )));
        }
        if let Some(l) = labels.iter().find(|&&l| l > num_parts) {
            return Err(Error::InvalidInput(format!("part label {l} exceeds {num_parts}")));
        }
        Ok(Self { width, height, labels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn label(&self, x: usize, y: usize) -> u16 {
        self.labels[y * self.width + x]
    }
}

/// One tight box per 8-connected foreground component of at least
/// `min_pixels` pixels, largest first.
pub fn mask_to_boxes(mask: &LabelMask, frame: u32, min_pixels: usize) -> Vec<Box2D> {
    let (w, h) = (mask.width, mask.height);
    let mut seen = vec![false; w * h];
    let mut boxes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if seen[start] || mask.labels[start] == 0 {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        let mut pixels = 0usize;
        while let Some(idx) = queue.pop_front() {
            let (x, y) = (idx % w, idx / w);
            pixels += 1;
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let n = ny * w + nx;
                    if !seen[n] && mask.labels[n] != 0 {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        if pixels >= min_pixels {
            boxes.push(
                Box2D::new(frame, x0 as f64, y0 as f64, (x1 + 1) as f64, (y1 + 1) as f64)
                    .expect("component box has area"),
            );
        }
    }
    // stable, so equal areas stay in raster order
    boxes.sort_by(|a, b| b.area().total_cmp(&a.area()));
    boxes
}
