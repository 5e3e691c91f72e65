use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate direction: point coincides with the array phase center")]
    DegenerateDirection,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("weight vector has {got} entries, array has {expected} elements")]
    SizeMismatch { expected: usize, got: usize },

    #[error("level {level_db} dB exceeds the pattern's dynamic range")]
    LevelOutOfRange { level_db: f64 },

    #[error("beam ({m}, {n}) is outside the {az_count}x{tilt_count} codebook")]
    BeamOutOfBounds {
        m: usize,
        n: usize,
        az_count: usize,
        tilt_count: usize,
    },

    #[error("exposure limited: no feasible beam")]
    ExposureLimited,

    #[error("non-positive distance {0} m")]
    NonPositiveDistance(f64),

    #[error("non-positive bandwidth {0} MHz")]
    NonPositiveBandwidth(f64),

    #[error("near-field: model invalid at {range_m:.3} m (floor {floor_m} m)")]
    NearField { range_m: f64, floor_m: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
