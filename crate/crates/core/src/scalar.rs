//! Real scalar abstraction for the analytic side of the model.
//!
//! The datapath itself is integer-only; everything that evaluates the
//! continuous error surfaces (region means, heatmaps, NED) is written once
//! against [`Real`] and instantiated for `f32` and `f64`.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for constants.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }

    /// `2^e` computed exactly (for exponents within range).
    fn exp2i(e: i32) -> Self {
        Self::lit(2.0).powi(e)
    }
}

impl Real for f32 {}
impl Real for f64 {}
