//! Loading a patch from the DSL, printing it back, differentiating it
//! symbolically and sampling its dual.
//!
//! cargo run --example parse_dsl -- [file.dual]

use dualform::{generic_dual_dimension, load_dsl, trace_dual, JetMethod, TraceGrid};

const DEFAULT: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/viviani.dual");

fn main() -> dualform::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| DEFAULT.to_string());
    let patch = load_dsl(&std::fs::read_to_string(&path)?)?;
    let map = patch.map();
    println!("{} on the {:?} sheet, parameters {:?}", patch.label(), patch.sheet(), map.params);
    println!("  f = {map}");
    for (i, name) in map.params.iter().enumerate() {
        let derivs: Vec<String> = map.exprs.iter().map(|e| e.differentiate(i).display(&map.params).to_string()).collect();
        println!("  ∂f/∂{name} = ({})", derivs.join(", "));
    }

    let cloud = trace_dual(&patch, &TraceGrid::uniform(64), JetMethod::Ad)?;
    let (rank, fraction) = generic_dual_dimension(&cloud)?;
    println!("dual: {} samples, rank {rank} on {:.1}% of them", cloud.pairs.len(), 100.0 * fraction);

    match load_dsl("(cos(t), sin(t)") {
        Err(e) => println!("malformed input is rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
