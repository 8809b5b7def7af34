use crate::error::{Error, Result};

/// Gain applied to flow components and magnitude before quantisation.
pub const FLOW_SCALE: f64 = 16.0;
/// Offset that moves zero displacement to mid-range for the signed channels.
pub const FLOW_OFFSET: f64 = 128.0;
/// The magnitude channel is unsigned and is not offset.
pub const FLOW_MAGNITUDE_OFFSET: f64 = 0.0;

/// Dense optical flow for one frame pair, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("flow field must have positive dimensions".into()));
        }
        if u.len() != width * height || v.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "flow components need {} values, got {} and {}",
                width * height,
                u.len(),
                v.len()
            )));
        }
        Ok(Self { width, height, u, v })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }
}

/// Three-channel 8-bit image, row-major, channels `(u, v, magnitude)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

fn quantize(x: f64) -> u8 {
    x.round().clamp(0.0, 255.0) as u8
}

/// Encodes flow as an RGB-like image: both components and the magnitude,
/// scaled by 16 and quantised to `[0, 255]`.
pub fn encode_flow(flow: &FlowField) -> Result<FlowImage> {
    if flow.u.iter().chain(&flow.v).any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("flow field contains non-finite values".into()));
    }
    let pixels = flow
        .u
        .iter()
        .zip(&flow.v)
        .map(|(&u, &v)| {
            [
                quantize(u * FLOW_SCALE + FLOW_OFFSET),
                quantize(v * FLOW_SCALE + FLOW_OFFSET),
                quantize(u.hypot(v) * FLOW_SCALE + FLOW_MAGNITUDE_OFFSET),
            ]
        })
        .collect();
    Ok(FlowImage {
        width: flow.width,
        height: flow.height,
        pixels,
    })
}
