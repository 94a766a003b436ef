//! Unsigned operands with an explicit bit width.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Supported operand widths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Width {
    W8,
    W16,
    W32,
}

impl Width {
    pub const ALL: [Width; 3] = [Width::W8, Width::W16, Width::W32];

    pub const fn bits(self) -> u32 {
        match self {
            Width::W8 => 8,
            Width::W16 => 16,
            Width::W32 => 32,
        }
    }

    /// Fractional bits of the log-domain fraction register (`width - 1`).
    pub const fn frac_bits(self) -> u32 {
        self.bits() - 1
    }

    pub const fn max_value(self) -> u32 {
        match self {
            Width::W8 => u8::MAX as u32,
            Width::W16 => u16::MAX as u32,
            Width::W32 => u32::MAX,
        }
    }

    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            8 => Ok(Width::W8),
            16 => Ok(Width::W16),
            32 => Ok(Width::W32),
            other => Err(Error::UnsupportedWidth(other)),
        }
    }
}

impl fmt::Display for Width {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bits())
    }
}

/// An unsigned integer together with the width of the register holding it.
///
/// The value is always `< 2^width`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UIntWord {
    value: u32,
    width: Width,
}

impl UIntWord {
    pub fn new(value: u64, width: Width) -> Result<Self> {
        if value > width.max_value() as u64 {
            return Err(Error::ValueOutOfRange {
                value,
                width: width.bits(),
            });
        }
        Ok(Self {
            value: value as u32,
            width,
        })
    }

    pub const fn u8(value: u8) -> Self {
        Self {
            value: value as u32,
            width: Width::W8,
        }
    }

    pub const fn u16(value: u16) -> Self {
        Self {
            value: value as u32,
            width: Width::W16,
        }
    }

    pub const fn u32(value: u32) -> Self {
        Self {
            value,
            width: Width::W32,
        }
    }

    pub const fn value(self) -> u32 {
        self.value
    }

    pub const fn width(self) -> Width {
        self.width
    }

    pub const fn is_zero(self) -> bool {
        self.value == 0
    }

    /// Zero-extends into a register at least as wide as this one.
    pub fn zero_extend(self, width: Width) -> Self {
        debug_assert!(width >= self.width);
        Self {
            value: self.value,
            width: width.max(self.width),
        }
    }
}

impl fmt::Display for UIntWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}u{}", self.value, self.width)
    }
}

/// Brings two operands to a common width by zero-extending the narrower one.
pub(crate) fn common_width(a: UIntWord, b: UIntWord) -> (UIntWord, UIntWord) {
    let w = a.width.max(b.width);
    (a.zero_extend(w), b.zero_extend(w))
}
