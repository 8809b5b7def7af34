//! Quantising a flow field into an 8-bit three-channel image.

use actiontube::pipeline::{encode_flow, FlowField, FLOW_OFFSET, FLOW_SCALE};

fn main() -> actiontube::Result<()> {
    let u = vec![0.0, 1.5, -2.0, 10.0];
    let v = vec![0.0, -0.5, 3.0, 0.0];
    let img = encode_flow(&FlowField::new(2, 2, u.clone(), v.clone())?)?;
    println!("scale {FLOW_SCALE}, component offset {FLOW_OFFSET}");
    for (i, px) in img.pixels.iter().enumerate() {
        println!("u {:5.1} v {:5.1} -> {:?}", u[i], v[i], px);
    }
    Ok(())
}
