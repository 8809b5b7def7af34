//! Video-AP and mAP at several overlap thresholds.

use actiontube::evaluation::{video_map, EvalConfig, VideoTube};
use actiontube::{Box2D, Tube};

fn tube(start: u32, len: u32, x: f64, label: u32, score: Option<f64>) -> actiontube::Result<Tube> {
    let boxes = (start..start + len)
        .map(|t| Box2D::new(t, x, 0.0, x + 30.0, 60.0))
        .collect::<actiontube::Result<Vec<_>>>()?;
    Tube::new(boxes, Some(label), score)
}

fn main() -> actiontube::Result<()> {
    let gts = vec![
        VideoTube::new("v1", tube(0, 40, 10.0, 0, None)?),
        VideoTube::new("v2", tube(10, 30, 50.0, 1, None)?),
    ];
    let preds = vec![
        VideoTube::new("v1", tube(2, 40, 12.0, 0, Some(0.9))?),
        VideoTube::new("v1", tube(0, 10, 200.0, 0, Some(0.4))?),
        VideoTube::new("v2", tube(20, 30, 55.0, 1, Some(0.8))?),
    ];
    let report = video_map(&preds, &gts, &EvalConfig::default())?;
    println!("interpolation: {}", report.interpolation);
    for d in &report.per_delta {
        let aps: Vec<String> = d.classes.iter().map(|c| format!("c{}={:.3}", c.class, c.ap)).collect();
        println!("delta {:.2}  mAP {:.4}  {}", d.delta, d.map, aps.join(" "));
    }
    Ok(())
}
