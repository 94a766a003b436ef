//! Selection of an arithmetic unit: exact, plain Mitchell, or corrected.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::correction::{corrected_div_unchecked, corrected_mul_unchecked, OpMode, TablePair};
use crate::error::Result;
use crate::mitchell::{exact_div_fixed, exact_mul, mitchell_div_fixed, mitchell_mul};
use crate::word::UIntWord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Exact,
    Mitchell,
    Corrected,
}

impl Unit {
    pub const ALL: [Unit; 3] = [Unit::Exact, Unit::Mitchell, Unit::Corrected];
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Exact => "exact",
            Unit::Mitchell => "mitchell",
            Unit::Corrected => "corrected",
        })
    }
}

impl FromStr for Unit {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Unit::Exact),
            "mitchell" => Ok(Unit::Mitchell),
            "corrected" => Ok(Unit::Corrected),
            other => Err(format!(
                "unknown unit `{other}` (expected exact, mitchell or corrected)"
            )),
        }
    }
}

/// A unit together with the operation it performs, e.g. `mitchell-mul`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Operator {
    pub unit: Unit,
    pub mode: OpMode,
}

impl Operator {
    pub const fn new(unit: Unit, mode: OpMode) -> Self {
        Self { unit, mode }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.unit, self.mode)
    }
}

impl FromStr for Operator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (unit, mode) = s
            .split_once('-')
            .ok_or_else(|| format!("invalid operator `{s}` (expected <unit>-<mul|div>)"))?;
        Ok(Self {
            unit: unit.parse()?,
            mode: mode.parse()?,
        })
    }
}

/// Result of one approximate operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub value: u64,
    pub clamped: bool,
}

impl Outcome {
    const fn plain(value: u64) -> Self {
        Self {
            value,
            clamped: false,
        }
    }
}

/// An arithmetic unit bound to its correction tables.
#[derive(Debug, Clone, Copy)]
pub struct Arith<'t> {
    pub unit: Unit,
    tables: &'t TablePair,
}

impl<'t> Arith<'t> {
    pub fn new(unit: Unit, tables: &'t TablePair) -> Self {
        Self { unit, tables }
    }

    pub fn tables(&self) -> &'t TablePair {
        self.tables
    }

    pub fn mul(&self, a: UIntWord, b: UIntWord) -> Outcome {
        match self.unit {
            Unit::Exact => Outcome::plain(exact_mul(a, b)),
            Unit::Mitchell => Outcome::plain(mitchell_mul(a, b)),
            Unit::Corrected => {
                let c = corrected_mul_unchecked(a, b, &self.tables.mul);
                Outcome {
                    value: c.value,
                    clamped: c.clamped,
                }
            }
        }
    }

    /// Quotient with `quot_bits` fractional bits.
    pub fn div(&self, dividend: UIntWord, divisor: UIntWord, quot_bits: u32) -> Result<Outcome> {
        match self.unit {
            Unit::Exact => exact_div_fixed(dividend, divisor, quot_bits).map(Outcome::plain),
            Unit::Mitchell => mitchell_div_fixed(dividend, divisor, quot_bits).map(Outcome::plain),
            Unit::Corrected => {
                let c = corrected_div_unchecked(dividend, divisor, &self.tables.div, quot_bits)?;
                Ok(Outcome {
                    value: c.value,
                    clamped: c.clamped,
                })
            }
        }
    }

    pub fn apply(&self, mode: OpMode, a: UIntWord, b: UIntWord, quot_bits: u32) -> Result<Outcome> {
        match mode {
            OpMode::Mul => Ok(self.mul(a, b)),
            OpMode::Div => self.div(a, b, quot_bits),
        }
    }
}
