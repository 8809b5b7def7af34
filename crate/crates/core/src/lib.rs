//! Post-processing and evaluation for spatio-temporal action detection.
//!
//! The crate turns per-frame person boxes and per-stream classifier scores
//! into linked action tubes, fused video-level predictions, per-frame
//! actionness, temporal localizations and video-mAP reports.
//!
//! * [`geometry`]: boxes, spans, tubes and their IoU measures
//! * [`count_signal`]: detection-count smoothing and box padding
//! * [`linking`]: Viterbi linking and iterative tube extraction
//! * [`fusion`]: softmax, score aggregation and actionness
//! * [`evaluation`]: video-AP and mAP
//! * [`pipeline`]: file formats, mask-to-box and flow encoding
//! * [`synth`]: synthetic corpora and brute-force oracles
//! * [`cli`]: the `actiontube` command line

pub mod batch;
pub mod cli;
pub mod count_signal;
pub mod error;
pub mod evaluation;
pub mod fusion;
pub mod geometry;
pub mod linking;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{box_iou, temporal_iou, tube_iou, Box2D, TemporalSpan, Tube};
