//! Exact Taylor jets against central differences: the gap shrinks like h^2.

use dualform::patch::fd_crosscheck;
use dualform::variety::{builtin, CATALOG};

fn main() -> dualform::Result<()> {
    println!("{:<20} {:>12} {:>12} {:>8}", "variety", "h=1e-3", "h=5e-4", "ratio");
    for entry in CATALOG {
        let params: &[f64] = match entry.name {
            "small_circle" | "hyperbolic_circle" => &[0.6],
            "latitude_torus" => &[0.6, 0.8],
            "random_trig_curve" => &[7.0, 3.0, 4.0],
            _ => &[],
        };
        let patch = builtin(entry.name, params)?;
        let u: Vec<f64> = (0..patch.param_dim()).map(|i| 0.9 + 0.7 * i as f64).collect();
        let coarse = fd_crosscheck(&patch, &u, 1e-3)?;
        let fine = fd_crosscheck(&patch, &u, 5e-4)?;
        println!("{:<20} {coarse:>12.3e} {fine:>12.3e} {:>8.3}", entry.name, coarse / fine);
    }
    Ok(())
}
