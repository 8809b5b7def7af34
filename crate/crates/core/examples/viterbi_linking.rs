//! Optimal box linking over a small candidate lattice, checked against the
//! exhaustive search.

use actiontube::linking::{viterbi_link, LinkingProblem};
use actiontube::synth::oracle::brute_force_link;
use actiontube::Box2D;

fn main() -> actiontube::Result<()> {
    let b = |x: f64| Box2D::new(0, x, 0.0, x + 20.0, 20.0);
    let frames = vec![
        vec![b(0.0)?, b(100.0)?],
        vec![b(60.0)?, b(2.0)?],
        vec![b(4.0)?, b(101.0)?, b(50.0)?],
        vec![b(6.0)?],
    ];
    let problem = LinkingProblem::new(0, frames)?;
    let path = viterbi_link(&problem);
    println!("indices            {:?}", path.indices);
    println!("objective          {:.6}", path.objective);
    println!("mean link score    {:.6}", path.mean_link_score);

    let check = brute_force_link(&problem)?;
    println!("exhaustive search  {:?} {:.6}", check.indices, check.objective);
    Ok(())
}
