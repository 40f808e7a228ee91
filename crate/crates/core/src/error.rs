use alloc::string::String;

/// Failure modes shared by every module of the core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension {0} is not supported here")]
    UnsupportedDimension(usize),
    #[error("invalid body: {0}")]
    InvalidBody(String),
    #[error("invalid patch: {0}")]
    InvalidPatch(String),
    #[error("cap height {0} outside [-1, 1]")]
    CapHeightOutOfRange(f64),
    #[error("point is {distance:e} from the boundary (tolerance {tolerance:e})")]
    OffSurface { distance: f64, tolerance: f64 },
    #[error("operation requires a unit sphere body")]
    NotASphere,
    #[error("operation requires a C2 body (meshes have no curvature)")]
    NotSmooth,
    #[error("mesh face {0} has zero area")]
    DegenerateFace(usize),
    #[error("level function changes sign {0} times along a line; body is not convex")]
    NonConvexityDetected(usize),
    #[error("line is tangent to the boundary")]
    TangentialContact,
    #[error("no line hit the body after {0} consecutive proposals")]
    ProposalCapExceeded(u64),
    #[error("patch rejection budget of {0} draws exhausted; patch measure is too small")]
    PatchTooSmall(u64),
    #[error("surface sampler weight {weight:e} exceeded its envelope {bound:e}")]
    EnvelopeExceeded { weight: f64, bound: f64 },
    #[error("points are closer than {0:e}; kernel is evaluated only for distinct points")]
    CoincidentPoints(f64),
    #[error("patches overlap: a sampled point lies in both")]
    OverlappingPatches,
    #[error("smallest expected cell count {min_expected:.3} is below 5; increase the sample count")]
    InsufficientSamples { min_expected: f64 },
    #[error("root finding did not converge")]
    NoConvergence,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = core::result::Result<T, Error>;
