use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("region is empty")]
    EmptyRegion,

    #[error("region leaves the active grid: {0}")]
    RegionOutsideDomain(String),

    #[error("non-finite value at node {index}")]
    NonFinite { index: usize },

    #[error("field is under-resolved (epsilon = {epsilon}, h = {spacing}); pass allow_under_resolved to evaluate anyway")]
    UnderResolved { epsilon: f64, spacing: f64 },

    #[error("grid too small for the {0} stencil")]
    GridTooSmall(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shooting bracket not found: slope interval [{lo}, {hi}] does not separate undershoot from overshoot")]
    BracketNotFound { lo: f64, hi: f64 },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("vortex core at ({x}, {y}) lies within {margin} of the domain boundary")]
    CoreNearBoundary { x: f64, y: f64, margin: f64 },

    #[error("interpolation footprint exceeded at ({x}, {y})")]
    FootprintExceeded { x: f64, y: f64 },

    #[error("degree undefined: |u| = {modulus:e} at loop point ({x}, {y})")]
    DegreeUndefined { x: f64, y: f64, modulus: f64 },

    #[error("energy increased beyond slack and time step underflowed at step {step} (dt = {dt:e})")]
    TimeStepUnderflow { step: usize, dt: f64 },

    #[error("linear solver breakdown: {0}")]
    LinearBreakdown(String),

    #[error("boundary data violates the problem: {0}")]
    BadBoundary(String),

    #[error("vorticity touches the cutoff support at ({x}, {y})")]
    VorticityOutsideCutoff { x: f64, y: f64 },

    #[error("point ({x}, {y}) lies outside the cutoff plateau")]
    OutsideCutoff { x: f64, y: f64 },

    #[error("separation {separation:e} is below the floor {floor:e}")]
    SeparationBelowFloor { separation: f64, floor: f64 },

    #[error("input field is not a certified critical point (residual {residual:e} > {tolerance:e})")]
    NotCertified { residual: f64, tolerance: f64 },

    #[error("vortex inside the annulus: |u| = {modulus:.3} at radius {radius:.4}")]
    VortexInAnnulus { radius: f64, modulus: f64 },

    #[error("magic mismatch: expected GLF1, found {0:?}")]
    BadMagic([u8; 4]),

    #[error("truncated payload at byte {0}")]
    Truncated(usize),

    #[error("topology code {code} is invalid for a {dim}D field")]
    BadTopology { code: u8, dim: u32 },

    #[error("NaN in active region at node {0}")]
    NanInActive(usize),

    #[error("config error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
