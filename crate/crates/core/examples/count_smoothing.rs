//! Count signal: raw counts, the median-smoothed count, expected counts,
//! padding and the resulting proposal regions.

use actiontube::count_signal::{
    continuous_regions, count_series, expected_counts, median_smooth, pad_detections, FrameDetections,
};
use actiontube::Box2D;

fn main() -> actiontube::Result<()> {
    // One person throughout, a second one on frames 4..=15, a miss on frame 9
    // and a stray detection on frame 18.
    let frames = (0..24u32)
        .map(|t| {
            let mut f = vec![Box2D::new(t, 10.0, 10.0, 50.0, 90.0)?];
            if (4..=15).contains(&t) && t != 9 {
                f.push(Box2D::new(t, 120.0, 20.0, 150.0, 80.0)?);
            }
            if t == 18 {
                f.push(Box2D::new(t, 200.0, 200.0, 210.0, 210.0)?);
            }
            if t >= 21 {
                f.clear();
            }
            Ok(f)
        })
        .collect::<actiontube::Result<Vec<_>>>()?;
    let dets = FrameDetections::new("demo", frames)?;

    let raw = count_series(&dets);
    let smoothed = median_smooth(&raw, 5)?;
    let expected = expected_counts(&raw, &smoothed)?;
    println!("raw       {raw:?}");
    println!("smoothed  {smoothed:?}");
    println!("expected  {expected:?}");

    let padded = pad_detections(&dets, &expected)?;
    println!("boxes before padding {}, after {}", dets.total_boxes(), padded.total_boxes());
    for r in continuous_regions(&smoothed) {
        println!("proposal frames {}..={}", r.start(), r.end());
    }
    Ok(())
}
