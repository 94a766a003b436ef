//! Region-indexed error correction for the Mitchell multiplier and divider.
//!
//! The unit square of fraction pairs `(x1, x2)` is cut into `2^m × 2^m`
//! regions by the top `m` bits of each fraction. Every region gets one signed
//! coefficient that is added to the fraction sum (or difference) together
//! with the two fractions, as a single three-input addition, before the
//! anti-log. Because Mitchell's error scales exactly with `2^(k1 ± k2)`, the
//! coefficients depend only on the fractions and one table serves every
//! operand width.
//!
//! A coefficient is the region mean of the *fraction-domain* correction: the
//! amount that, added inside the anti-log, turns the Mitchell result into the
//! exact one. It is derived from the normalized output error through the
//! inverse of the piecewise-linear anti-log, which has slope 1 below the carry
//! boundary and slope 2 above it (slope 1/2 and 1 for division). In the
//! divider the corrected difference never changes sign: the sign of
//! `x1 - x2` alone already tells on which side of `2^(k1-k2)` the exact
//! quotient lies. Inputs on which Mitchell's result is already exact (a zero
//! multiplier fraction, a zero divisor fraction) bypass the coefficient.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mitchell::{antilog_diff, antilog_sum, log_approx, LogApprox, MAX_QUOT_BITS};
use crate::word::{common_width, UIntWord};
use crate::Real;

/// Which unit a table (or a SIMD lane) serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpMode {
    Mul,
    Div,
}

impl fmt::Display for OpMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OpMode::Mul => "mul",
            OpMode::Div => "div",
        })
    }
}

impl FromStr for OpMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "mul" => Ok(OpMode::Mul),
            "div" => Ok(OpMode::Div),
            other => Err(format!("unknown mode `{other}` (expected mul or div)")),
        }
    }
}

/// Which case of the piecewise Mitchell error applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Multiplication, `x1 + x2 < 1`.
    SumBelowOne,
    /// Multiplication, `x1 + x2 >= 1`.
    SumAtLeastOne,
    /// Division, `x1 - x2 < 0`.
    DiffNegative,
    /// Division, `x1 - x2 >= 0`.
    DiffNonNegative,
}

/// Mitchell error divided by the power-of-two scale `2^(k1 ± k2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedError<T> {
    pub branch: Branch,
    pub value: T,
}

/// Normalized multiplier error `(P - P~) / 2^(k1+k2)`; always in `[0, 1)`.
pub fn normalized_error_mul<T: Real>(x1: T, x2: T) -> NormalizedError<T> {
    let one = T::one();
    if x1 + x2 < one {
        NormalizedError {
            branch: Branch::SumBelowOne,
            value: x1 * x2,
        }
    } else {
        NormalizedError {
            branch: Branch::SumAtLeastOne,
            value: one - x1 - x2 + x1 * x2,
        }
    }
}

/// Normalized divider error `(D~ - D) / 2^(k1-k2)`.
///
/// Mitchell division never underestimates, so the value is non-negative:
/// `(x1(x2-1) + x2 - x2²) / (2(1+x2))` for `x1 < x2` and
/// `(x1 x2 - x2²) / (1+x2)` otherwise.
pub fn normalized_error_div<T: Real>(x1: T, x2: T) -> NormalizedError<T> {
    let one = T::one();
    let two = one + one;
    if x1 < x2 {
        NormalizedError {
            branch: Branch::DiffNegative,
            value: (x1 * (x2 - one) + x2 - x2 * x2) / (two * (one + x2)),
        }
    } else {
        NormalizedError {
            branch: Branch::DiffNonNegative,
            value: (x1 * x2 - x2 * x2) / (one + x2),
        }
    }
}

/// Mitchell's anti-log of a fraction sum, normalized by `2^(k1+k2)`.
pub fn antilog_sum_real<T: Real>(s: T) -> T {
    let one = T::one();
    if s < one {
        one + s
    } else {
        (one + one) * s
    }
}

/// Mitchell's anti-log of a fraction difference, normalized by `2^(k1-k2)`.
pub fn antilog_diff_real<T: Real>(d: T) -> T {
    let one = T::one();
    let two = one + one;
    if d >= T::zero() {
        one + d
    } else {
        (two + d) / two
    }
}

/// Term to add to `x1 + x2` so the anti-log yields the exact product.
pub fn fraction_correction_mul<T: Real>(x1: T, x2: T) -> T {
    let s = x1 + x2;
    let exact = antilog_sum_real(s) + normalized_error_mul(x1, x2).value;
    let one = T::one();
    let target = if exact < one + one {
        exact - one
    } else {
        exact / (one + one)
    };
    target - s
}

/// Term to add to `x1 - x2` so the anti-log yields the exact quotient.
pub fn fraction_correction_div<T: Real>(x1: T, x2: T) -> T {
    let d = x1 - x2;
    let exact = antilog_diff_real(d) - normalized_error_div(x1, x2).value;
    let one = T::one();
    let target = if exact >= one {
        exact - one
    } else {
        (one + one) * (exact - one)
    };
    target - d
}

/// Default number of grid points per axis used to average a region.
pub const DEFAULT_GRID: usize = 256;

/// Mean of the fraction-domain correction over region `(i, j)` using a
/// `grid × grid` midpoint rule.
pub fn region_mean<T: Real>(mode: OpMode, region_bits: u32, i: usize, j: usize, grid: usize) -> T {
    let regions = 1usize << region_bits;
    assert!(i < regions && j < regions && grid > 0);
    let cells = T::from_usize(regions * grid).unwrap();
    let half = T::lit(0.5);
    let f = match mode {
        OpMode::Mul => fraction_correction_mul::<T>,
        OpMode::Div => fraction_correction_div::<T>,
    };
    let mut total = T::zero();
    for u in 0..grid {
        let x1 = (T::from_usize(i * grid + u).unwrap() + half) / cells;
        let mut row = T::zero();
        for v in 0..grid {
            let x2 = (T::from_usize(j * grid + v).unwrap() + half) / cells;
            row = row + f(x1, x2);
        }
        total = total + row;
    }
    total / T::from_usize(grid * grid).unwrap()
}

/// Rounds `value * 2^bits` to the nearest integer, ties away from zero.
pub fn quantize<T: Real>(value: T, bits: u32) -> i32 {
    (value * T::exp2i(bits as i32)).round().to_i32().unwrap()
}

/// Signed fixed-point coefficients for every region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectionTable {
    mode: OpMode,
    region_bits: u32,
    coeff_bits: u32,
    /// Row-major by `(i, j)`, in units of `2^-coeff_bits`.
    entries: Vec<i32>,
}

fn check_params(region_bits: u32, coeff_bits: u32) -> Result<()> {
    if !(1..=4).contains(&region_bits) {
        return Err(Error::RegionBits(region_bits));
    }
    if !(1..=16).contains(&coeff_bits) {
        return Err(Error::CoeffBits(coeff_bits));
    }
    Ok(())
}

/// Builds the table with the default averaging grid.
pub fn build_table(mode: OpMode, region_bits: u32, coeff_bits: u32) -> Result<CorrectionTable> {
    build_table_with_grid(mode, region_bits, coeff_bits, DEFAULT_GRID)
}

pub fn build_table_with_grid(
    mode: OpMode,
    region_bits: u32,
    coeff_bits: u32,
    grid: usize,
) -> Result<CorrectionTable> {
    check_params(region_bits, coeff_bits)?;
    let regions = 1usize << region_bits;
    let mut entries = Vec::with_capacity(regions * regions);
    for i in 0..regions {
        for j in 0..regions {
            let mean: f64 = region_mean(mode, region_bits, i, j, grid);
            entries.push(quantize(mean, coeff_bits));
        }
    }
    CorrectionTable::from_entries(mode, region_bits, coeff_bits, entries)
}

impl CorrectionTable {
    pub fn from_entries(
        mode: OpMode,
        region_bits: u32,
        coeff_bits: u32,
        entries: Vec<i32>,
    ) -> Result<Self> {
        check_params(region_bits, coeff_bits)?;
        let expected = 1usize << (2 * region_bits);
        if entries.len() != expected {
            return Err(Error::TableFormat(format!(
                "expected {expected} entries, got {}",
                entries.len()
            )));
        }
        let limit = 1i64 << coeff_bits;
        if let Some(bad) = entries.iter().find(|&&c| (c as i64).abs() >= limit) {
            return Err(Error::TableFormat(format!(
                "coefficient {bad} not representable with {coeff_bits} fractional bits"
            )));
        }
        Ok(Self {
            mode,
            region_bits,
            coeff_bits,
            entries,
        })
    }

    pub fn mode(&self) -> OpMode {
        self.mode
    }

    pub fn region_bits(&self) -> u32 {
        self.region_bits
    }

    pub fn coeff_bits(&self) -> u32 {
        self.coeff_bits
    }

    pub fn regions_per_axis(&self) -> usize {
        1 << self.region_bits
    }

    pub fn entries(&self) -> &[i32] {
        &self.entries
    }

    /// Raw coefficient of region `(i, j)` in units of `2^-coeff_bits`.
    pub fn coefficient(&self, i: usize, j: usize) -> i32 {
        self.entries[i * self.regions_per_axis() + j]
    }

    pub fn coefficient_real<T: Real>(&self, i: usize, j: usize) -> T {
        T::from_i32(self.coefficient(i, j)).unwrap() / T::exp2i(self.coeff_bits as i32)
    }

    /// Region index of a fraction in `[0, 1)`.
    pub fn region_of<T: Real>(&self, x: T) -> usize {
        let r = (x * T::from_usize(self.regions_per_axis()).unwrap())
            .floor()
            .to_usize()
            .unwrap();
        r.min(self.regions_per_axis() - 1)
    }

    fn require(&self, mode: OpMode) -> Result<()> {
        if self.mode != mode {
            return Err(Error::TableMode {
                expected: mode,
                found: self.mode,
            });
        }
        Ok(())
    }

    /// Writes the table as CSV with columns
    /// `mode,region_bits,i,j,coefficient,scale_bits`. The real coefficient is
    /// `coefficient / 2^scale_bits`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.regions_per_axis();
        for i in 0..n {
            for j in 0..n {
                w.serialize(TableRow {
                    mode: self.mode,
                    region_bits: self.region_bits,
                    i,
                    j,
                    coefficient: self.coefficient(i, j),
                    scale_bits: self.coeff_bits,
                })?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rows: Vec<TableRow> = Vec::new();
        for row in csv::Reader::from_reader(input).deserialize() {
            rows.push(row?);
        }
        let first = rows
            .first()
            .ok_or_else(|| Error::TableFormat("no rows".into()))?;
        let (mode, region_bits, coeff_bits) = (first.mode, first.region_bits, first.scale_bits);
        check_params(region_bits, coeff_bits)?;
        let n = 1usize << region_bits;
        let mut entries = vec![None; n * n];
        for row in &rows {
            if (row.mode, row.region_bits, row.scale_bits) != (mode, region_bits, coeff_bits) {
                return Err(Error::TableFormat(format!(
                    "row ({}, {}) disagrees with the table header parameters",
                    row.i, row.j
                )));
            }
            if row.i >= n || row.j >= n {
                return Err(Error::TableFormat(format!(
                    "region ({}, {}) outside a {n}x{n} table",
                    row.i, row.j
                )));
            }
            if entries[row.i * n + row.j].replace(row.coefficient).is_some() {
                return Err(Error::TableFormat(format!("duplicate region ({}, {})", row.i, row.j)));
            }
        }
        let entries = entries
            .into_iter()
            .enumerate()
            .map(|(k, c)| c.ok_or_else(|| Error::TableFormat(format!("missing region ({}, {})", k / n, k % n))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_entries(mode, region_bits, coeff_bits, entries)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TableRow {
    mode: OpMode,
    region_bits: u32,
    i: usize,
    j: usize,
    coefficient: i32,
    scale_bits: u32,
}

/// A corrected result together with whether it hit the saturation limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Corrected {
    pub value: u64,
    pub clamped: bool,
}

impl Corrected {
    fn saturate(raw: u128, max: u128) -> Self {
        Self {
            value: raw.min(max) as u64,
            clamped: raw > max,
        }
    }
}

/// Fraction operands and coefficient aligned on a common register of
/// `max(width - 1, coeff_bits)` fractional bits.
fn aligned_terms(la: &LogApprox, lb: &LogApprox, table: &CorrectionTable) -> (i64, i64, i64, u32) {
    let bits = la.frac_len.max(table.coeff_bits);
    let shift = la.frac_len - table.region_bits;
    let i = (la.frac >> shift) as usize;
    let j = (lb.frac >> shift) as usize;
    let coeff = (table.coefficient(i, j) as i64) << (bits - table.coeff_bits);
    (la.frac_at(bits) as i64, lb.frac_at(bits) as i64, coeff, bits)
}

/// Corrected product with saturation reporting.
pub fn corrected_mul_outcome(a: UIntWord, b: UIntWord, table: &CorrectionTable) -> Result<Corrected> {
    table.require(OpMode::Mul)?;
    Ok(corrected_mul_unchecked(a, b, table))
}

pub(crate) fn corrected_mul_unchecked(a: UIntWord, b: UIntWord, table: &CorrectionTable) -> Corrected {
    let (a, b) = common_width(a, b);
    let (la, lb) = (log_approx(a), log_approx(b));
    if la.is_zero || lb.is_zero {
        return Corrected {
            value: 0,
            clamped: false,
        };
    }
    let (x1, x2, c, bits) = aligned_terms(&la, &lb, table);
    // A zero fraction on either side makes the Mitchell product exact.
    let c = if x1 == 0 || x2 == 0 { 0 } else { c };
    let sum = (x1 + x2 + c).max(0) as u64;
    let raw = antilog_sum(la.k + lb.k, sum, bits);
    let max = (1u128 << (2 * a.width().bits())) - 1;
    Corrected::saturate(raw, max)
}

/// Corrected approximate product.
pub fn corrected_mul(a: UIntWord, b: UIntWord, table: &CorrectionTable) -> Result<u64> {
    corrected_mul_outcome(a, b, table).map(|c| c.value)
}

/// Corrected quotient with `quot_bits` fractional bits and saturation
/// reporting.
pub fn corrected_div_outcome(
    dividend: UIntWord,
    divisor: UIntWord,
    table: &CorrectionTable,
    quot_bits: u32,
) -> Result<Corrected> {
    table.require(OpMode::Div)?;
    corrected_div_unchecked(dividend, divisor, table, quot_bits)
}

pub(crate) fn corrected_div_unchecked(
    dividend: UIntWord,
    divisor: UIntWord,
    table: &CorrectionTable,
    quot_bits: u32,
) -> Result<Corrected> {
    assert!(quot_bits <= MAX_QUOT_BITS);
    let (a, b) = common_width(dividend, divisor);
    if b.is_zero() {
        return Err(Error::DivisionByZero);
    }
    let (la, lb) = (log_approx(a), log_approx(b));
    if la.is_zero {
        return Ok(Corrected {
            value: 0,
            clamped: false,
        });
    }
    let (x1, x2, c, bits) = aligned_terms(&la, &lb, table);
    // Power-of-two divisors are already exact.
    let c = if x2 == 0 { 0 } else { c };
    // The exact quotient lies in [2^K, 2^(K+1)) when x1 >= x2 and below 2^K
    // otherwise, so the corrected difference stays on the same side of zero.
    let diff = x1 - x2;
    let corrected = if diff >= 0 {
        (diff + c).max(0)
    } else {
        (diff + c).min(-1)
    };
    let raw = antilog_diff(la.k as i32 - lb.k as i32, corrected, bits, quot_bits);
    let max = (a.width().max_value() as u128) << quot_bits;
    Ok(Corrected::saturate(raw, max))
}

/// Corrected approximate integer quotient.
pub fn corrected_div(dividend: UIntWord, divisor: UIntWord, table: &CorrectionTable) -> Result<u64> {
    corrected_div_outcome(dividend, divisor, table, 0).map(|c| c.value)
}

/// Corrected approximate quotient with `quot_bits` fractional bits.
pub fn corrected_div_fixed(
    dividend: UIntWord,
    divisor: UIntWord,
    table: &CorrectionTable,
    quot_bits: u32,
) -> Result<u64> {
    corrected_div_outcome(dividend, divisor, table, quot_bits).map(|c| c.value)
}

/// Matching multiplier and divider tables, as held by one SIMD unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TablePair {
    pub mul: CorrectionTable,
    pub div: CorrectionTable,
}

impl TablePair {
    pub fn build(region_bits: u32, coeff_bits: u32) -> Result<Self> {
        Ok(Self {
            mul: build_table(OpMode::Mul, region_bits, coeff_bits)?,
            div: build_table(OpMode::Div, region_bits, coeff_bits)?,
        })
    }

    pub fn new(mul: CorrectionTable, div: CorrectionTable) -> Result<Self> {
        mul.require(OpMode::Mul)?;
        div.require(OpMode::Div)?;
        Ok(Self { mul, div })
    }

    pub fn get(&self, mode: OpMode) -> &CorrectionTable {
        match mode {
            OpMode::Mul => &self.mul,
            OpMode::Div => &self.div,
        }
    }
}
