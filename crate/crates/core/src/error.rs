use thiserror::Error;

use crate::container::ContainerError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported Lebedev order {order}; supported orders: {supported}")]
    UnsupportedLebedevOrder { order: usize, supported: String },

    #[error("unsupported Fliege grid size {num_points}; supported sizes: {supported}")]
    UnsupportedFliegeSize { num_points: usize, supported: String },

    #[error("horizontal step {step_deg} deg does not divide 360")]
    InvalidHorizontalStep { step_deg: f64 },

    #[error("invalid direction ({azimuth_deg}, {elevation_deg}): {reason}")]
    InvalidDirection {
        azimuth_deg: f64,
        elevation_deg: f64,
        reason: &'static str,
    },

    #[error("invalid grid '{grid}': {reason}")]
    InvalidGrid { grid: String, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("SH order {order} needs {needed} directions but grid '{grid}' has {available}")]
    TooFewDirections {
        grid: String,
        order: usize,
        needed: usize,
        available: usize,
    },

    #[error("grid '{0}' has no quadrature weights")]
    MissingWeights(String),

    #[error(
        "least-squares SH system for grid '{grid}' at order {order} is rank deficient \
         (condition number {condition:.3e})"
    )]
    RankDeficient {
        grid: String,
        order: usize,
        condition: f64,
    },

    #[error("rigid-sphere series did not converge at ka = {ka:.4}")]
    SeriesDivergence { ka: f64 },

    #[error(
        "time aliasing: tail holds {tail_db:.1} dB of the energy of a {ir_length}-sample IR \
         (limit -60 dB); use a longer IR"
    )]
    TimeAliasing { tail_db: f64, ir_length: usize },

    #[error("head radius {0} m outside the sanity window [0.05, 0.15] m")]
    HeadRadiusOutOfRange(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{0} has zero energy")]
    ZeroEnergy(String),

    #[error("no direction lies within {radius_deg} deg of ({azimuth_deg}, {elevation_deg})")]
    EmptyRegion {
        azimuth_deg: f64,
        elevation_deg: f64,
        radius_deg: f64,
    },

    #[error("stage '{stage}': {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Container(#[from] ContainerError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse failure classes, used by the CLI to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Io,
    Validation,
    Numeric,
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io(_) => ErrorClass::Io,
            Error::Container(e) => e.class(),
            Error::Stage { source, .. } => source.class(),
            Error::RankDeficient { .. }
            | Error::SeriesDivergence { .. }
            | Error::TimeAliasing { .. }
            | Error::NonFinite(_)
            | Error::ZeroEnergy(_) => ErrorClass::Numeric,
            _ => ErrorClass::Validation,
        }
    }
}
