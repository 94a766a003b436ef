//! Bit-accurate model of a Mitchell-logarithm approximate multiplier-divider
//! with per-region error correction and sub-word SIMD lanes.
//!
//! The integer datapath ([`mitchell`], [`correction`], [`simd`]) works on
//! [`UIntWord`] operands of 8, 16 or 32 bits. The analytic error surfaces
//! used to derive correction tables and heatmaps are generic over [`Real`].

pub mod apps;
pub mod correction;
pub mod error;
pub mod metrics;
pub mod mitchell;
pub mod scalar;
pub mod simd;
pub mod unit;
pub mod word;

pub use correction::{
    build_table, corrected_div, corrected_div_fixed, corrected_mul, CorrectionTable, OpMode,
    TablePair,
};
pub use error::{Error, Result};
pub use mitchell::{
    exact_div, exact_mul, leading_one, log_approx, lod_segment, mitchell_div, mitchell_mul,
    LodSegmentResult, LogApprox,
};
pub use scalar::Real;
pub use unit::{Arith, Operator, Unit};
pub use word::{UIntWord, Width};

pub type NormalizedErrorF64 = correction::NormalizedError<f64>;
pub type NormalizedErrorF32 = correction::NormalizedError<f32>;
pub type HeatmapF64 = metrics::Heatmap<f64>;
pub type HeatmapF32 = metrics::Heatmap<f32>;

/// Default region bits (64 regions).
pub const DEFAULT_REGION_BITS: u32 = 3;
/// Default coefficient bits.
pub const DEFAULT_COEFF_BITS: u32 = 6;
