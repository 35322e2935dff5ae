use core::fmt;

/// Identifies a diagonal block of a joint information array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    /// Track slot (position in the layout, not the stable track id).
    Track(usize),
    Registration,
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Block::Track(slot) => write!(f, "track slot {slot}"),
            Block::Registration => f.write_str("registration block"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Both inputs of a Givens rotation were zero.
    DegenerateRotation,
    /// Zero or non-finite pivot at the given row/column.
    Singular { index: usize },
    /// Zero diagonal inside a structured block.
    SingularBlock { block: Block, index: usize },
    NotPositiveDefinite { index: usize },
    DimensionMismatch { expected: usize, found: usize, what: &'static str },
    NonFinite { what: &'static str },
    /// Row of the measurement Jacobian touches more than one track block.
    CrossTrackRow { row: usize },
    /// Target within the minimum range of a sensor.
    SingularGeometry { range: f64 },
    NonPositiveSigma,
    UnknownTrack { id: u64 },
    DuplicateTrack { id: u64 },
    UnknownSensor { sensor: usize },
    InvalidArgument(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DegenerateRotation => f.write_str("givens rotation requested for (0, 0)"),
            Error::Singular { index } => write!(f, "singular matrix: zero pivot at {index}"),
            Error::SingularBlock { block, index } => {
                write!(f, "singular information array: zero diagonal in {block} (row {index})")
            }
            Error::NotPositiveDefinite { index } => {
                write!(f, "matrix is not positive definite (pivot {index})")
            }
            Error::DimensionMismatch { expected, found, what } => {
                write!(f, "dimension mismatch in {what}: expected {expected}, found {found}")
            }
            Error::NonFinite { what } => write!(f, "non-finite entries in {what}"),
            Error::CrossTrackRow { row } => {
                write!(f, "measurement row {row} couples more than one track block")
            }
            Error::SingularGeometry { range } => {
                write!(f, "target at range {range} m is too close to the sensor")
            }
            Error::NonPositiveSigma => f.write_str("noise standard deviations must be positive"),
            Error::UnknownTrack { id } => write!(f, "unknown track id {id}"),
            Error::DuplicateTrack { id } => write!(f, "track id {id} already present"),
            Error::UnknownSensor { sensor } => write!(f, "unknown sensor index {sensor}"),
            Error::InvalidArgument(msg) => f.write_str(msg),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
