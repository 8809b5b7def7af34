//! Synthetic corpus through extraction, fusion labelling and evaluation.

use actiontube::batch::{extract_video, FusionConfig};
use actiontube::evaluation::{video_map, EvalConfig};
use actiontube::linking::ExtractionConfig;
use actiontube::synth::{generate_scene, SynthConfig};

fn main() -> actiontube::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let corpus = generate_scene(&SynthConfig {
        seed,
        videos: 50,
        ..SynthConfig::default()
    })?;
    let fusion = FusionConfig::default();
    let mut preds = Vec::new();
    for dets in &corpus.detections {
        preds.extend(extract_video(dets, &ExtractionConfig::default(), Some((&corpus.scores, &fusion)))?);
    }
    println!("{} planted tubes, {} extracted", corpus.ground_truth.len(), preds.len());
    let report = video_map(&preds, &corpus.ground_truth, &EvalConfig::default())?;
    for d in &report.per_delta {
        println!("mAP@{:.2} = {:.4}", d.delta, d.map);
    }
    Ok(())
}
