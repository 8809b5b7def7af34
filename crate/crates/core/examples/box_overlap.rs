//! Box, temporal and tube IoU on a pair of hand-made tubes.

use actiontube::{box_iou, temporal_iou, tube_iou, Box2D, TemporalSpan, Tube};

fn main() -> actiontube::Result<()> {
    let a = Box2D::new(0, 0.0, 0.0, 10.0, 10.0)?;
    let b = Box2D::new(0, 5.0, 5.0, 15.0, 15.0)?;
    println!("box IoU          {:.4}", box_iou(&a, &b));

    let s1 = TemporalSpan::new(0, 9)?;
    let s2 = TemporalSpan::new(5, 14)?;
    println!("temporal IoU     {:.4}", temporal_iou(&s1, &s2));

    let walk = |start: u32, len: u32, x0: f64| -> actiontube::Result<Tube> {
        let boxes = (start..start + len)
            .map(|t| Box2D::new(t, x0 + t as f64, 0.0, x0 + t as f64 + 20.0, 20.0))
            .collect::<actiontube::Result<Vec<_>>>()?;
        Tube::new(boxes, None, None)
    };
    let gt = walk(0, 10, 0.0)?;
    let pred = walk(2, 10, 2.0)?;
    println!("tube IoU         {:.4}", tube_iou(&gt, &pred));
    Ok(())
}
