//! Exact reference arithmetic and the uncorrected Mitchell logarithmic
//! multiplier and divider.
//!
//! An operand `A = 2^k (1 + x)` is split into the leading-one position `k`
//! and the fraction `x ∈ [0, 1)`, so that `log2(A) ≈ k + x`. Products add
//! the two logs, quotients subtract them, and a shift-based anti-log turns
//! the result back into an integer. All fixed-point work here is integer
//! arithmetic on a fraction register of `width - 1` bits, which holds every
//! bit below the leading one without loss.

use crate::error::{Error, Result};
use crate::word::{common_width, UIntWord};
use crate::Real;

/// Output of one 4-bit leading-one detector segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LodSegmentResult {
    /// Set when all four bits are zero.
    pub zero_flag: bool,
    /// Position (0..=3) of the highest set bit; 0 when `zero_flag` is set.
    pub position: u8,
}

// Contents of the two per-segment LUTs: zero flag and 2-bit position.
const LOD_LUT: [LodSegmentResult; 16] = {
    let mut lut = [LodSegmentResult {
        zero_flag: true,
        position: 0,
    }; 16];
    let mut n = 1;
    while n < 16 {
        lut[n] = LodSegmentResult {
            zero_flag: false,
            position: (7 - (n as u8).leading_zeros()) as u8,
        };
        n += 1;
    }
    lut
};

/// Leading-one detection on a single nibble. Only the low four bits of
/// `nibble` are inspected.
pub fn lod_segment(nibble: u8) -> LodSegmentResult {
    debug_assert!(nibble < 16, "segment input {nibble} wider than 4 bits");
    LOD_LUT[(nibble & 0xF) as usize]
}

/// Position of the leading one, composed from per-nibble detectors: the most
/// significant non-zero segment wins. `None` for a zero operand.
pub fn leading_one(a: UIntWord) -> Option<u32> {
    let segments = a.width().bits() / 4;
    (0..segments).rev().find_map(|seg| {
        let r = lod_segment(((a.value() >> (4 * seg)) & 0xF) as u8);
        (!r.zero_flag).then_some(4 * seg + r.position as u32)
    })
}

/// The `(k, x)` decomposition of an operand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LogApprox {
    /// Leading-one position.
    pub k: u32,
    /// Fraction `x` as an unsigned fixed-point number with `frac_len`
    /// fractional bits.
    pub frac: u64,
    /// Number of fractional bits in `frac` (`width - 1`).
    pub frac_len: u32,
    pub is_zero: bool,
}

impl LogApprox {
    /// The fraction as a real number in `[0, 1)`.
    pub fn fraction<T: Real>(&self) -> T {
        T::from_u64(self.frac).unwrap() / T::exp2i(self.frac_len as i32)
    }

    /// Fraction re-expressed with `bits >= frac_len` fractional bits.
    pub(crate) fn frac_at(&self, bits: u32) -> u64 {
        debug_assert!(bits >= self.frac_len);
        self.frac << (bits - self.frac_len)
    }

    /// `floor(2^k (1 + x))`, which for a valid decomposition is the
    /// original operand.
    pub fn reconstruct(&self) -> u64 {
        if self.is_zero {
            return 0;
        }
        let one = 1u128 << self.frac_len;
        scale_floor(one + self.frac as u128, self.k as i32, self.frac_len) as u64
    }
}

/// Approximate base-2 logarithm `k + x` of an operand.
pub fn log_approx(a: UIntWord) -> LogApprox {
    let frac_len = a.width().frac_bits();
    match leading_one(a) {
        None => LogApprox {
            k: 0,
            frac: 0,
            frac_len,
            is_zero: true,
        },
        Some(k) => {
            let below = a.value() as u64 & ((1u64 << k) - 1);
            LogApprox {
                k,
                frac: below << (frac_len - k),
                frac_len,
                is_zero: false,
            }
        }
    }
}

/// `floor(mantissa * 2^(exp - frac_len))`.
pub(crate) fn scale_floor(mantissa: u128, exp: i32, frac_len: u32) -> u128 {
    let shift = exp - frac_len as i32;
    if shift >= 0 {
        mantissa << shift
    } else if shift <= -128 {
        0
    } else {
        mantissa >> (-shift)
    }
}

/// Anti-log for a product: `2^K (1 + S)` when the fraction sum has no carry
/// out, `2^(K+1) S` otherwise. `frac_sum` carries `frac_len` fractional bits
/// and may exceed one (the carry bit is absorbed into the exponent).
pub(crate) fn antilog_sum(k_sum: u32, frac_sum: u64, frac_len: u32) -> u128 {
    let one = 1u128 << frac_len;
    let s = frac_sum as u128;
    if s < one {
        scale_floor(one + s, k_sum as i32, frac_len)
    } else {
        scale_floor(s, k_sum as i32 + 1, frac_len)
    }
}

/// Anti-log for a quotient, scaled by `2^quot_bits`: `2^(K) (1 + D)` for a
/// non-negative fraction difference, `2^(K-1) (2 + D)` otherwise.
pub(crate) fn antilog_diff(k_diff: i32, frac_diff: i64, frac_len: u32, quot_bits: u32) -> u128 {
    let one = 1i128 << frac_len;
    let (mantissa, exp) = if frac_diff >= 0 {
        (one + frac_diff as i128, k_diff)
    } else {
        (2 * one + frac_diff as i128, k_diff - 1)
    };
    scale_floor(mantissa.max(0) as u128, exp + quot_bits as i32, frac_len)
}

/// Largest supported number of fractional quotient bits.
pub const MAX_QUOT_BITS: u32 = 32;

/// Mitchell's approximate product. Operands of different widths are
/// zero-extended to the wider one; a zero operand yields zero.
pub fn mitchell_mul(a: UIntWord, b: UIntWord) -> u64 {
    let (a, b) = common_width(a, b);
    let (la, lb) = (log_approx(a), log_approx(b));
    if la.is_zero || lb.is_zero {
        return 0;
    }
    antilog_sum(la.k + lb.k, la.frac + lb.frac, la.frac_len) as u64
}

/// Mitchell's approximate integer quotient (floored).
pub fn mitchell_div(dividend: UIntWord, divisor: UIntWord) -> Result<u64> {
    mitchell_div_fixed(dividend, divisor, 0)
}

/// Mitchell's approximate quotient as a fixed-point number with `quot_bits`
/// fractional bits, i.e. `floor(D * 2^quot_bits)`.
pub fn mitchell_div_fixed(dividend: UIntWord, divisor: UIntWord, quot_bits: u32) -> Result<u64> {
    assert!(quot_bits <= MAX_QUOT_BITS);
    let (a, b) = common_width(dividend, divisor);
    if b.is_zero() {
        return Err(Error::DivisionByZero);
    }
    let (la, lb) = (log_approx(a), log_approx(b));
    if la.is_zero {
        return Ok(0);
    }
    let k_diff = la.k as i32 - lb.k as i32;
    let frac_diff = la.frac as i64 - lb.frac as i64;
    Ok(antilog_diff(k_diff, frac_diff, la.frac_len, quot_bits) as u64)
}

pub fn exact_mul(a: UIntWord, b: UIntWord) -> u64 {
    a.value() as u64 * b.value() as u64
}

pub fn exact_div(dividend: UIntWord, divisor: UIntWord) -> Result<u64> {
    exact_div_fixed(dividend, divisor, 0)
}

/// `floor(dividend * 2^quot_bits / divisor)`.
pub fn exact_div_fixed(dividend: UIntWord, divisor: UIntWord, quot_bits: u32) -> Result<u64> {
    assert!(quot_bits <= MAX_QUOT_BITS);
    if divisor.is_zero() {
        return Err(Error::DivisionByZero);
    }
    Ok(((dividend.value() as u64) << quot_bits) / divisor.value() as u64)
}
