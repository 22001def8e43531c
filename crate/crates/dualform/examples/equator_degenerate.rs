//! A totally geodesic curve: the dual collapses to two points, the second
//! fundamental form vanishes and the inverse relation holds vacuously.

use dualform::curvature::{decomposition_report, inverse_duality};
use dualform::{builtin, dual_pair, generic_dual_dimension, trace_dual, JetMethod, TraceGrid};

fn main() -> dualform::Result<()> {
    let patch = builtin("great_circle", &[])?;
    let ms = patch.metric();
    let cloud = trace_dual(&patch, &TraceGrid::uniform(360), JetMethod::Ad)?;
    let (rank, fraction) = generic_dual_dimension(&cloud)?;
    println!("{} dual samples, dual rank {rank} on {:.0}% of them", cloud.pairs.len(), 100.0 * fraction);

    let mut distinct: Vec<Vec<f64>> = Vec::new();
    for pair in &cloud.pairs {
        if !distinct.iter().any(|q| q.iter().zip(pair.q.iter()).all(|(a, b)| (a - b).abs() < 1e-12)) {
            distinct.push(pair.q.to_vec());
        }
    }
    println!("distinct dual points: {distinct:?}");

    let pair = dual_pair(&patch, &[1.0], &[1.0], JetMethod::Ad)?;
    let (jet_p, jet_q) = pair.jets(&patch, JetMethod::Ad)?;
    let d = decomposition_report(&ms, &pair, &jet_p, &jet_q, 1e-8)?;
    println!("decomposition dims {:?}: {:?}", d.dims, d.status);
    let r = inverse_duality(&ms, &pair, &jet_p, &jet_q, 1e-9)?;
    println!("inverse duality: {:?}", r.status);
    Ok(())
}
