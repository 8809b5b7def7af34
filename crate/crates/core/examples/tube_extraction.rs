//! Iterative tube extraction on a synthetic two-person video.

use actiontube::linking::{extract_tubes_traced, BoxSource, ExtractionConfig};
use actiontube::synth::{generate_scene, SynthConfig};

fn main() -> actiontube::Result<()> {
    let corpus = generate_scene(&SynthConfig {
        seed: 3,
        videos: 1,
        frames: 120,
        ..SynthConfig::default()
    })?;
    let dets = &corpus.detections[0];
    let run = extract_tubes_traced(dets, &ExtractionConfig::default())?;

    println!("{} frames, {} boxes", dets.len(), dets.total_boxes());
    for gt in &corpus.ground_truth {
        println!("planted   {:3}..={:3}", gt.tube.span().start(), gt.tube.span().end());
    }
    for t in &run.tubes {
        let held = t.sources.iter().filter(|s| **s == BoxSource::Held).count();
        println!(
            "extracted {:3}..={:3}  mean link {:.3}  held boxes {held}",
            t.tube.span().start(),
            t.tube.span().end(),
            t.mean_link_score
        );
    }
    Ok(())
}
