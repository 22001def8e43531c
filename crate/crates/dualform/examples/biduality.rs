//! The dual of the dual: on the sphere it is M together with its antipodal
//! image, on the hyperbolic sheet it is M alone.
//!
//! cargo run --release --example biduality -- [grid]

use dualform::curvature::bidual_distance;
use dualform::{builtin, JetMethod, TraceGrid};

fn main() -> dualform::Result<()> {
    let res: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(720);
    let cases = [
        ("small_circle", vec![0.6], vec![res]),
        ("great_circle", vec![], vec![res]),
        ("hyperbolic_circle", vec![0.6], vec![res]),
        ("clifford_torus", vec![], vec![48]),
        ("random_trig_curve", vec![7.0, 3.0, 4.0], vec![128]),
    ];
    for (name, params, grid) in cases {
        let patch = builtin(name, &params)?;
        let fiber_res = grid[0];
        let r = bidual_distance(&patch, &TraceGrid { param_res: grid, fiber_res }, JetMethod::Ad)?;
        println!(
            "{:<28} target {:<9} dual rank {}  d_fwd {:.2e}  d_bwd {:.2e}  d(-M) {}  ({} bidual points)",
            patch.label(),
            r.target.label(),
            r.dual_rank,
            r.d_forward,
            r.d_backward,
            r.d_antipodal.map(|d| format!("{d:.2e}")).unwrap_or_else(|| "-".into()),
            r.bidual_points
        );
    }
    Ok(())
}
