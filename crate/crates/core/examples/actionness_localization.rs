//! Per-frame actionness from three streams, gated by human presence, and
//! the thresholded temporal spans.

use actiontube::fusion::{actionness, temporal_localize, ActionnessSeries};

fn main() -> actiontube::Result<()> {
    println!("actionness(0.9, 0.8, 0.7) = {:.4}", actionness(0.9, 0.8, 0.7)?);

    let n = 30;
    let bump = |t: usize, c: f64| (-((t as f64 - c) / 5.0).powi(2)).exp();
    let pose: Vec<f64> = (0..n).map(|t| bump(t, 12.0)).collect();
    let rgb: Vec<f64> = (0..n).map(|t| 0.2 + 0.8 * bump(t, 14.0)).collect();
    let flow: Vec<f64> = (0..n).map(|t| 0.1 + 0.9 * bump(t, 11.0)).collect();
    // nobody detected on frames 13 and 14
    let present: Vec<bool> = (0..n).map(|t| t != 13 && t != 14).collect();

    let series = ActionnessSeries::from_streams(&pose, &rgb, &flow, present)?;
    for span in temporal_localize(&series, 0.3) {
        println!("action on frames {}..={}", span.start(), span.end());
    }
    Ok(())
}
