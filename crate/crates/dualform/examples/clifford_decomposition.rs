//! The orthogonal splitting of R^4 into Rp, rad II, T_p ∩ T_q, rad II∨ and
//! Rq at a point of a torus in S^3.
//!
//! cargo run --example clifford_decomposition -- [a b]

use dualform::curvature::{decomposition_report, inverse_duality};
use dualform::{builtin, dual_pair, JetMethod};

fn main() -> dualform::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let patch = match args.as_slice() {
        [a, b] => builtin("latitude_torus", &[*a, *b])?,
        _ => builtin("clifford_torus", &[])?,
    };
    let ms = patch.metric();
    println!("patch {}: {}", patch.label(), patch.map());

    for u in [[0.0, 0.0], [0.7, 2.1], [3.0, 5.5]] {
        let pair = dual_pair(&patch, &u, &[1.0], JetMethod::Ad)?;
        let (jet_p, jet_q) = pair.jets(&patch, JetMethod::Ad)?;
        let d = decomposition_report(&ms, &pair, &jet_p, &jet_q, 1e-8)?;
        let names = ["Rp", "rad II", "T_p ∩ T_q", "rad II∨", "Rq"];
        println!("\nu = {u:?}: {:?}", d.status);
        for (name, block) in names.iter().zip(&d.blocks) {
            println!("  {name:<10} dim {}", block.dim());
            for v in block.vectors() {
                println!("    {:+.6?}", v.coords());
            }
        }
        println!("  ortho residual {:.2e}, span residual {:.2e}", d.ortho_residual, d.span_residual);

        let r = inverse_duality(&ms, &pair, &jet_p, &jet_q, 1e-9)?;
        if let (Some(a), Some(ad)) = (&r.a, &r.a_dual) {
            println!("  A      = {:+.12?}", a.entries);
            println!("  A_dual = {:+.12?}", ad.entries);
            println!("  eigenvalues of A: {:+.12?}", a.eigenvalues());
            println!("  |A*A_dual - I| = {:.2e}", r.residual);
        }
    }
    Ok(())
}
