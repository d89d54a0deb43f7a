use thiserror::Error;

/// Every failure the segmentation core can report.
///
/// Variant names double as stable diagnostic tokens for the CLI and the
/// HTTP service, so renaming one is a breaking change.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("DegenerateTemplate: {0}")]
    DegenerateTemplate(&'static str),
    #[error("NonWatertightMesh: edge ({0}, {1}) is shared by {2} faces")]
    NonWatertightMesh(usize, usize, usize),
    #[error("TooFewPoints: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("NoIntersection: ray {0} does not hit the template")]
    NoIntersection(usize),
    #[error("InvalidSeed: {0}")]
    InvalidSeed(&'static str),
    #[error("WindowDegenerate: averaging window {0} is smaller than one voxel")]
    WindowDegenerate(f64),
    #[error("AverageNotSet: estimate the object average before evaluating costs")]
    AverageNotSet,
    #[error("InfiniteFlow: source and sink are joined by uncuttable arcs")]
    InfiniteFlow,
    #[error("TooLarge: brute force supports at most {max} inner nodes, got {got}")]
    TooLarge { max: usize, got: usize },
    #[error("EmptySegmentation: every ray is empty")]
    EmptySegmentation,
    #[error("InternalError: {0}")]
    InternalError(&'static str),
    #[error("EmptyAtRay: ray {0} has no source-side node")]
    EmptyAtRay(usize),
    #[error("OpenSurface: {0}")]
    OpenSurface(&'static str),
    #[error("DegenerateShape: shape {0} has zero scatter")]
    DegenerateShape(usize),
    #[error("DimensionMismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("ShapeMismatch: masks are not congruent")]
    ShapeMismatch,
    #[error("EmptySet: nothing to summarize")]
    EmptySet,
    #[error("InvalidConfig: {0}")]
    InvalidConfig(&'static str),
    #[error("InvalidNetwork: {0}")]
    InvalidNetwork(&'static str),
}

impl Error {
    /// The leading token of the message, e.g. `"InvalidSeed"`.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegenerateTemplate(_) => "DegenerateTemplate",
            Error::NonWatertightMesh(..) => "NonWatertightMesh",
            Error::TooFewPoints { .. } => "TooFewPoints",
            Error::NoIntersection(_) => "NoIntersection",
            Error::InvalidSeed(_) => "InvalidSeed",
            Error::WindowDegenerate(_) => "WindowDegenerate",
            Error::AverageNotSet => "AverageNotSet",
            Error::InfiniteFlow => "InfiniteFlow",
            Error::TooLarge { .. } => "TooLarge",
            Error::EmptySegmentation => "EmptySegmentation",
            Error::InternalError(_) => "InternalError",
            Error::EmptyAtRay(_) => "EmptyAtRay",
            Error::OpenSurface(_) => "OpenSurface",
            Error::DegenerateShape(_) => "DegenerateShape",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::ShapeMismatch => "ShapeMismatch",
            Error::EmptySet => "EmptySet",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::InvalidNetwork(_) => "InvalidNetwork",
        }
    }

    /// Errors caused by caller input rather than by the computation itself.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DegenerateTemplate(_)
                | Error::NonWatertightMesh(..)
                | Error::TooFewPoints { .. }
                | Error::InvalidSeed(_)
                | Error::WindowDegenerate(_)
                | Error::DimensionMismatch { .. }
                | Error::ShapeMismatch
                | Error::InvalidConfig(_)
                | Error::DegenerateShape(_)
                | Error::EmptySet
                | Error::OpenSurface(_)
                | Error::InvalidNetwork(_)
        )
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
