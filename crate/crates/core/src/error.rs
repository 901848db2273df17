use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed header at byte {offset}: {message}")]
    MalformedHeader { offset: usize, message: String },

    #[error("property list mismatch at byte {offset}: expected `{expected}`, found `{found}`")]
    PropertyMismatch {
        offset: usize,
        expected: String,
        found: String,
    },

    #[error("truncated body at byte {offset}: need {needed} bytes, have {available}")]
    TruncatedBody {
        offset: usize,
        needed: usize,
        available: usize,
    },

    #[error("non-finite value {0}")]
    NonFinite(f64),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("slot index {0} out of range")]
    SlotOutOfRange(usize),

    #[error("empty index set: no hidden opacity exceeds the threshold")]
    EmptyIndexSet,

    #[error("ambiguous match: coordinate ({}, {}, {}) appears more than once in the scene", .0[0], .0[1], .0[2])]
    AmbiguousMatch([f32; 3]),

    #[error("no coordinates matched: the key does not belong to this asset")]
    NoCoordinatesMatched,

    #[error("position mismatch between cover and hidden at primitive {0}")]
    PositionMismatch(usize),

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Divergence { epoch: usize, loss: f64 },

    #[error("zero-norm quaternion")]
    DegenerateQuaternion,

    #[error("zero-length direction")]
    ZeroDirection,

    #[error("point has non-positive depth {0}")]
    NonPositiveDepth(f64),

    #[error("image dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("image {0}x{1} is smaller than the {2}x{2} window")]
    ImageTooSmall(usize, usize, usize),

    #[error("pruning ratio {0} outside [0, 1)")]
    InvalidRatio(f64),

    #[error("bad key magic {0:?}")]
    BadMagic([u8; 4]),

    #[error("unsupported key version {0}")]
    VersionMismatch(u16),

    #[error("truncated key at byte {0}")]
    TruncatedKey(usize),

    #[error("invalid key: {0}")]
    InvalidKey(String),

    #[error("{0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
