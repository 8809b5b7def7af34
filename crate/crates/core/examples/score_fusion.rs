//! Softmax, the three video-level aggregation rules and multi-granular
//! averaging.

use actiontube::fusion::{aggregate_video, multigranular_fuse, softmax, FusionMethod, ScoreVector};

fn main() -> actiontube::Result<()> {
    let units: Vec<ScoreVector> = [[2.0, 1.0, 0.1], [0.5, 2.5, 0.0], [1.8, 0.2, 0.3]]
        .iter()
        .map(|v| ScoreVector::raw(v.to_vec()))
        .collect::<actiontube::Result<_>>()?;

    let p = softmax(&units[0])?;
    println!("softmax {:?}", p.values());

    for &method in FusionMethod::ALL.iter() {
        let (label, fused) = aggregate_video(&units, method)?;
        println!("{method:<8} label {label}  {:?}", fused.values());
    }

    let net16 = ScoreVector::probability(vec![0.6, 0.3, 0.1])?;
    let net32 = ScoreVector::probability(vec![0.4, 0.5, 0.1])?;
    let whole = ScoreVector::probability(vec![0.5, 0.2, 0.3])?;
    let mg = multigranular_fuse(&[net16, net32, whole])?;
    println!("multi-granular {:?} -> class {}", mg.values(), mg.argmax());
    Ok(())
}
