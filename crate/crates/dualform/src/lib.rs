//! Dual varieties of submanifolds of the unit sphere and of hyperbolic
//! space, and numerical checks of the duality between their second
//! fundamental forms.
//!
//! The usual flow: build a [`ParamPatch`] (from the [`variety`] catalog or a
//! DSL file), sample its dual with [`trace_dual`] or [`sample_pairs`], then
//! inspect pairs with the tools in [`curvature`].

pub mod curvature;
pub mod dualizer;
pub mod error;
pub mod expr;
pub mod metric;
pub mod patch;
pub mod report;
pub mod taylor;
pub mod variety;

pub use dualizer::{
    antipode, dual_jet2, dual_pair, dual_point, generic_dual_dimension, normal_frame, normal_space, pair_residuals,
    sample_pairs, trace_dual, DualCloud, DualMap, DualPair, FiberChart, NormalFrame, TraceGrid,
};
pub use error::{Error, Result};
pub use metric::{AmbientVector, MetricSpace, NumericalRank, Signature, SubspaceBasis};
pub use patch::{Jet2, JetMethod, ParamAxis, ParamPatch, Sheet};
pub use variety::{builtin, builtin_spec, load_dsl, CATALOG};

/// Caps the global rayon pool from `DUALFORM_THREADS` if set. Call once,
/// before any parallel work; later calls are no-ops.
pub fn init_threads() {
    if let Some(n) = std::env::var("DUALFORM_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}
