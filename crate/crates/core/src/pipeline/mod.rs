//! File formats and raw-array conversions at the edges of the pipeline.

mod flow;
mod format;
mod mask;

pub use flow::{encode_flow, FlowField, FlowImage, FLOW_MAGNITUDE_OFFSET, FLOW_OFFSET, FLOW_SCALE};
pub use format::{
    read_detections, read_predictions, read_scores, read_tubes, write_actionness, write_detections,
    write_predictions, write_report, write_scores, write_tubes, ActionnessRecord, ScoreRecord,
    ScoreTable, TubeActionness, VideoPrediction,
};
pub use mask::{mask_to_boxes, LabelMask, DEFAULT_MIN_COMPONENT_PIXELS};

/// Rounds to six significant digits, the precision of every real written.
pub fn round_sig6(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.5e}").parse().unwrap()
}
