//! Person boxes from a body-part label mask, one per connected component.

use actiontube::pipeline::{mask_to_boxes, LabelMask, DEFAULT_MIN_COMPONENT_PIXELS};

fn main() -> actiontube::Result<()> {
    let (w, h) = (40, 30);
    let mut labels = vec![0u16; w * h];
    let mut paint = |x0: usize, y0: usize, x1: usize, y1: usize, part: u16| {
        for y in y0..y1 {
            for x in x0..x1 {
                labels[y * w + x] = part;
            }
        }
    };
    paint(2, 2, 8, 6, 1); // head
    paint(3, 6, 9, 20, 2); // torso, touching the head
    paint(25, 5, 35, 25, 3); // second person
    paint(20, 27, 22, 29, 1); // speckle, too small to keep

    let mask = LabelMask::new(w, h, labels, 4)?;
    for b in mask_to_boxes(&mask, 0, DEFAULT_MIN_COMPONENT_PIXELS) {
        println!("box ({}, {}) - ({}, {})  area {}", b.x1, b.y1, b.x2, b.y2, b.area());
    }
    Ok(())
}
