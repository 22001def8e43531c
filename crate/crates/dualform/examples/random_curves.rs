//! Seeded random curves in S^3: decomposition and inverse-duality statistics
//! over sampled pairs, with the rank-unstable tail listed.
//!
//! cargo run --release --example random_curves -- [curves] [pairs]

use dualform::curvature::{decomposition_report, inverse_duality, CheckStatus};
use dualform::{builtin, sample_pairs, JetMethod};

fn main() -> dualform::Result<()> {
    let mut args = std::env::args().skip(1).filter_map(|a| a.parse::<u64>().ok());
    let curves = args.next().unwrap_or(50);
    let per_curve = args.next().unwrap_or(20) as usize;

    let (mut generic, mut passed, mut worst) = (0usize, 0usize, 0.0f64);
    let mut tail = Vec::new();
    for seed in 0..curves {
        let degree = 1 + seed % 3;
        let patch = builtin("random_trig_curve", &[seed as f64, degree as f64, 4.0])?;
        let ms = patch.metric();
        for pair in sample_pairs(&patch, per_curve, seed, JetMethod::Ad)? {
            let (jet_p, jet_q) = pair.jets(&patch, JetMethod::Ad)?;
            let d = decomposition_report(&ms, &pair, &jet_p, &jet_q, 1e-8)?;
            if d.status == CheckStatus::Excluded {
                tail.push((seed, pair.u[0], d.form_gap));
                continue;
            }
            generic += 1;
            let r = inverse_duality(&ms, &pair, &jet_p, &jet_q, 1e-6)?;
            worst = worst.max(r.residual);
            if d.status == CheckStatus::Pass && r.status == CheckStatus::Pass {
                passed += 1;
            }
        }
    }
    println!("{generic} generic pairs, {passed} pass both checks, worst |A*A_dual - 1| = {worst:.2e}");
    for (seed, t, gap) in tail {
        println!("  excluded: seed {seed}, t = {t:.4}, gap {gap:.2e}");
    }
    Ok(())
}
