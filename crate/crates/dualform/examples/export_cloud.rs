//! Writing a dual cloud as CSV and PLY, plus plot columns of a projection,
//! into a directory (default: the system temp dir).
//!
//! cargo run --example export_cloud -- [out_dir]

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use dualform::report::{project_columns, write_cloud_csv, write_columns, write_ply};
use dualform::{builtin, trace_dual, JetMethod, TraceGrid};

fn main() -> dualform::Result<()> {
    let dir: PathBuf = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&dir)?;
    let patch = builtin("latitude_torus", &[0.6, 0.8])?;
    let cloud = trace_dual(&patch, &TraceGrid { param_res: vec![48, 32], fiber_res: 1 }, JetMethod::Ad)?;

    let csv = dir.join("latitude_torus_dual.csv");
    write_cloud_csv(&cloud, &patch, BufWriter::new(File::create(&csv)?))?;
    let qs: Vec<_> = cloud.pairs.iter().map(|p| p.q.clone()).collect();
    let ply = dir.join("latitude_torus_dual.ply");
    write_ply(&qs, BufWriter::new(File::create(&ply)?))?;

    let rows: Vec<Vec<f64>> = qs.iter().map(|q| q.to_vec()).collect();
    let projected = project_columns(&rows, Some(&[1, 2, 4]))?;
    let txt = dir.join("latitude_torus_dual_124.txt");
    write_columns(&projected, BufWriter::new(File::create(&txt)?))?;

    println!("{} dual points", cloud.pairs.len());
    for path in [csv, ply, txt] {
        println!("  wrote {}", path.display());
    }
    Ok(())
}
