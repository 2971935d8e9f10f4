use thiserror::Error;

use crate::solver::SolveReport;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid polynomial degree {degree}: {reason}")]
    InvalidDegree { degree: usize, reason: &'static str },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("mesh is not conforming: {0}")]
    MeshConformity(String),
    #[error("mesh validation failed: {0}")]
    MeshValidation(#[from] MeshDefect),
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("ill-conditioned local system: {0}")]
    Conditioning(String),
    #[error("unsupported derivative order {0} (at most 3)")]
    UnsupportedOrder(usize),
    #[error("unsupported quadrature degree {requested} (at most {max})")]
    UnsupportedDegree { requested: usize, max: usize },
    #[error("solver failure: {message} ({report})")]
    SolverFailure {
        message: String,
        report: SolveReport,
    },
    #[error("unknown manufactured case `{0}`")]
    UnknownCase(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Named mesh defects reported by validation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshDefect {
    #[error("cell {cell} has fewer than three vertices")]
    TooFewVertices { cell: usize },
    #[error("cell {cell} is inverted (clockwise, signed area {area:e})")]
    InvertedCell { cell: usize, area: f64 },
    #[error("cell {cell} has zero area")]
    DegenerateCell { cell: usize },
    #[error("cell {cell} is not a simple polygon")]
    SelfIntersecting { cell: usize },
    #[error("cell {cell} repeats vertex {vertex}")]
    RepeatedVertex { cell: usize, vertex: usize },
    #[error("edge ({a}, {b}) is used twice with the same orientation")]
    DuplicateFace { a: usize, b: usize },
    #[error("edge ({a}, {b}) is shared by more than two cells")]
    OvershareFace { a: usize, b: usize },
    #[error("vertex {vertex} is not used by any cell")]
    DanglingVertex { vertex: usize },
    #[error("face {face} has a zero-length edge")]
    ZeroLengthFace { face: usize },
    #[error("cell {cell} subtriangle {triangle} is degenerate")]
    DegenerateSubtriangle { cell: usize, triangle: usize },
    #[error("cell {cell} does not close: |sum of h_S n_S| = {residual:e}")]
    OpenCell { cell: usize, residual: f64 },
    #[error("cells cover area {cells:e} but the boundary encloses {boundary:e}")]
    CoverageMismatch { cells: f64, boundary: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
