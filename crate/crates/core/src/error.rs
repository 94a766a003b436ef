use thiserror::Error;

use crate::word::Width;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} does not fit in {width} bits")]
    ValueOutOfRange { value: u64, width: u32 },

    #[error("unsupported operand width {0} (expected 8, 16 or 32)")]
    UnsupportedWidth(u32),

    #[error("division by zero")]
    DivisionByZero,

    #[error("region bits {0} out of range 1..=4")]
    RegionBits(u32),

    #[error("coefficient bits {0} out of range 1..=16")]
    CoeffBits(u32),

    #[error("correction table built for {found:?}, operation needs {expected:?}")]
    TableMode {
        expected: crate::OpMode,
        found: crate::OpMode,
    },

    #[error("malformed correction table: {0}")]
    TableFormat(String),

    #[error("layout field {0:#06b} is not one-hot")]
    LayoutNotOneHot(u8),

    #[error("mode bits {bits:#06b} set beyond the {lanes} lanes of the layout")]
    StrayModeBits { bits: u8, lanes: usize },

    #[error("expected {expected} lane modes, got {found}")]
    LaneCount { expected: usize, found: usize },

    #[error("lane {lane} is {found}-bit, layout expects {expected}-bit")]
    LaneWidth {
        lane: usize,
        expected: Width,
        found: Width,
    },

    #[error("operands packed as {a:?} and {b:?}, configuration expects {expected:?}")]
    LayoutMismatch {
        expected: crate::simd::Layout,
        a: crate::simd::Layout,
        b: crate::simd::Layout,
    },

    #[error("{0}")]
    InvalidSweep(String),

    #[error("heatmap grid {0} is below the minimum of 16")]
    GridTooSmall(usize),

    #[error("exhaustive sweep of {pairs} pairs exceeds the 2^24 limit")]
    ExhaustiveTooLarge { pairs: u64 },

    #[error("sample count must be positive")]
    NoSamples,

    #[error("empty input")]
    EmptyInput,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("image {width}x{height} is smaller than 3x3")]
    ImageTooSmall { width: usize, height: usize },

    #[error("parse error at byte {offset}: {msg}")]
    Parse { offset: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(offset: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            msg: msg.into(),
        }
    }
}
