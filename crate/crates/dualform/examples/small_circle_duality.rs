//! Second fundamental forms of a small circle and of its dual circle, and
//! their product on the shared unit tangent.
//!
//! cargo run --example small_circle_duality -- [r] [t]

use dualform::curvature::inverse_duality;
use dualform::{builtin, dual_pair, JetMethod};

fn main() -> dualform::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let r = args.first().copied().unwrap_or(0.6);
    let t = args.get(1).copied().unwrap_or(0.0);
    let patch = builtin("small_circle", &[r])?;
    let ms = patch.metric();

    for method in [JetMethod::Ad, JetMethod::Fd { h: 1e-3 }] {
        let pair = dual_pair(&patch, &[t], &[1.0], method)?;
        let (jet_p, jet_q) = pair.jets(&patch, method)?;
        let report = inverse_duality(&ms, &pair, &jet_p, &jet_q, 1e-9)?;
        let a = report.a.as_ref().map(|f| f.entries[0][0]).unwrap_or(f64::NAN);
        let a_dual = report.a_dual.as_ref().map(|f| f.entries[0][0]).unwrap_or(f64::NAN);
        println!("jets: {method:?}");
        println!("  p = {:?}", pair.p.coords());
        println!("  q = {:?}", pair.q.coords());
        println!("  A = {a:.15}, A_dual = {a_dual:.15}, |A*A_dual - 1| = {:.3e}", report.residual);
    }
    let c = (1.0 - r * r).sqrt();
    println!("closed form: A = -c/r = {:.15}, A_dual = -r/c = {:.15}", -c / r, -r / c);
    Ok(())
}
