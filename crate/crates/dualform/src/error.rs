use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("ambient dimension must be at least 2, got {0}")]
    AmbientTooSmall(usize),

    #[error("non-finite coordinate in vector")]
    NonFinite,

    #[error("indefinite span: null direction with residual norm {residual:.3e}")]
    IndefiniteSpan { residual: f64 },

    #[error("subspace is not contained in the enclosing subspace (residual {residual:.3e})")]
    NotInside { residual: f64 },

    #[error("basis is not orthonormal")]
    NotOrthonormal,

    #[error("parameter {value} on axis {axis} lies outside [{lo}, {hi}]")]
    OutsideDomain {
        axis: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("parameter point has {found} coordinates, patch has {expected}")]
    ParamArity { expected: usize, found: usize },

    #[error("point is not on the sheet (constraint residual {residual:.3e})")]
    NotOnSheet { residual: f64 },

    #[error("point lies on the wrong sheet of the hyperboloid")]
    WrongSheet,

    #[error("non-smooth point: tangent rank {rank}, expected {expected}")]
    NonSmooth { rank: usize, expected: usize },

    #[error("fiber coordinates are not a unit vector (norm {norm})")]
    NonUnitFiber { norm: f64 },

    #[error("frame discontinuity: frozen pivot {axis} no longer dominates")]
    FrameDiscontinuity { axis: usize },

    #[error("direction is not normal to the patch (residual {residual:.3e})")]
    NotNormal { residual: f64 },

    #[error("vector lies outside the tangent span (residual {residual:.3e})")]
    NotInTangentSpan { residual: f64 },

    #[error("finite-difference step {h} leaves the domain on axis {axis}")]
    MarginViolation { axis: usize, h: f64 },

    #[error("empty dual cloud")]
    EmptyCloud,

    #[error("unknown builtin '{0}'")]
    UnknownBuiltin(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
