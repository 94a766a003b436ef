//! Error characterization: exhaustive and sampled sweeps, relative-error
//! heatmaps over the fraction plane, and the normalized error distance.
//!
//! Sweep statistics are accumulated in integer fixed point so that partial
//! results merge associatively and the outcome does not depend on how the
//! input space was split across threads.

use std::io::Write;
use std::ops::Range;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correction::{antilog_diff_real, antilog_sum_real, OpMode, TablePair};
use crate::error::{Error, Result};
use crate::mitchell::MAX_QUOT_BITS;
use crate::unit::{Arith, Operator, Unit};
use crate::word::{UIntWord, Width};
use crate::Real;

/// Largest input space an exhaustive sweep may cover.
pub const EXHAUSTIVE_LIMIT: u64 = 1 << 24;

/// Pairs per parallel work item.
pub const CHUNK: u64 = 1 << 16;

/// Fractional bits of the per-pair relative error terms.
const REL_BITS: u32 = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Sampling {
    Exhaustive,
    Uniform { count: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub op: Operator,
    pub width: Width,
    /// Narrower second operand, e.g. 8 for a 16/8 divider sweep.
    pub divisor_width: Option<Width>,
    pub sampling: Sampling,
    pub region_bits: u32,
    pub coeff_bits: u32,
    /// Fractional quotient bits for division; defaults to the dividend width.
    pub quot_bits: Option<u32>,
}

impl SweepSpec {
    pub fn new(op: Operator, width: Width, sampling: Sampling) -> Self {
        Self {
            op,
            width,
            divisor_width: None,
            sampling,
            region_bits: crate::DEFAULT_REGION_BITS,
            coeff_bits: crate::DEFAULT_COEFF_BITS,
            quot_bits: None,
        }
    }

    pub fn with_divisor_width(mut self, width: Width) -> Self {
        self.divisor_width = Some(width);
        self
    }

    pub fn with_tables(mut self, region_bits: u32, coeff_bits: u32) -> Self {
        self.region_bits = region_bits;
        self.coeff_bits = coeff_bits;
        self
    }

    pub fn second_width(&self) -> Width {
        self.divisor_width.unwrap_or(self.width)
    }

    pub fn effective_quot_bits(&self) -> u32 {
        match self.op.mode {
            OpMode::Mul => 0,
            OpMode::Div => self.quot_bits.unwrap_or(self.width.bits()),
        }
    }

    /// Number of values the second operand ranges over (zero is excluded
    /// for division).
    fn second_span(&self) -> u64 {
        let n = self.second_width().max_value() as u64 + 1;
        match self.op.mode {
            OpMode::Mul => n,
            OpMode::Div => n - 1,
        }
    }

    /// Size of the full input space.
    pub fn space(&self) -> u64 {
        (self.width.max_value() as u64 + 1) * self.second_span()
    }

    /// Number of pairs the sweep evaluates.
    pub fn pairs(&self) -> u64 {
        match self.sampling {
            Sampling::Exhaustive => self.space(),
            Sampling::Uniform { count, .. } => count,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.second_width() > self.width {
            return Err(Error::InvalidSweep(format!(
                "second operand width {} exceeds operand width {}",
                self.second_width(),
                self.width
            )));
        }
        if self.effective_quot_bits() > MAX_QUOT_BITS {
            return Err(Error::InvalidSweep(format!(
                "quotient bits {} exceed {MAX_QUOT_BITS}",
                self.effective_quot_bits()
            )));
        }
        match self.sampling {
            Sampling::Exhaustive if self.space() > EXHAUSTIVE_LIMIT => {
                Err(Error::ExhaustiveTooLarge { pairs: self.space() })
            }
            Sampling::Uniform { count: 0, .. } => Err(Error::NoSamples),
            _ => Ok(()),
        }
    }

    /// Operand pair number `index` of an exhaustive sweep.
    fn exhaustive_pair(&self, index: u64) -> (u64, u64) {
        let span = self.second_span();
        let b = index % span;
        let b = match self.op.mode {
            OpMode::Mul => b,
            OpMode::Div => b + 1,
        };
        (index / span, b)
    }

    /// Maps one 64-bit random word to an operand pair.
    fn sampled_pair(&self, word: u64) -> (u64, u64) {
        let a = word & self.width.max_value() as u64;
        let hi = word >> 32;
        let b = match self.op.mode {
            OpMode::Mul => hi & self.second_width().max_value() as u64,
            OpMode::Div => 1 + ((hi * self.second_span()) >> 32),
        };
        (a, b)
    }
}

/// Integer partial statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ErrorAccumulator {
    pub count: u64,
    pub zero_exact: u64,
    pub clamp_events: u64,
    rel_count: u64,
    rel_sum: u128,
    signed_sum: i128,
    rel_max: u128,
    dist_sum: u128,
    dist_max: u128,
}

impl ErrorAccumulator {
    pub fn push(&mut self, exact: u64, approx: u64, clamped: bool) {
        self.count += 1;
        self.clamp_events += u64::from(clamped);
        let dist = exact.abs_diff(approx) as u128;
        self.dist_sum += dist;
        self.dist_max = self.dist_max.max(dist);
        if exact == 0 {
            self.zero_exact += 1;
            return;
        }
        let rel = (dist << REL_BITS) / exact as u128;
        self.rel_count += 1;
        self.rel_sum += rel;
        self.rel_max = self.rel_max.max(rel);
        self.signed_sum += if approx <= exact {
            rel as i128
        } else {
            -(rel as i128)
        };
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.count += other.count;
        self.zero_exact += other.zero_exact;
        self.clamp_events += other.clamp_events;
        self.rel_count += other.rel_count;
        self.rel_sum += other.rel_sum;
        self.signed_sum += other.signed_sum;
        self.rel_max = self.rel_max.max(other.rel_max);
        self.dist_sum += other.dist_sum;
        self.dist_max = self.dist_max.max(other.dist_max);
        self
    }

    pub fn stats(&self) -> ErrorStats {
        let scale = 100.0 / (1u64 << REL_BITS) as f64;
        let mean = |sum: f64| {
            if self.rel_count == 0 {
                0.0
            } else {
                sum * scale / self.rel_count as f64
            }
        };
        ErrorStats {
            are: mean(self.rel_sum as f64),
            pre: self.rel_max as f64 * scale,
            ned: if self.dist_max == 0 {
                0.0
            } else {
                self.dist_sum as f64 / self.count as f64 / self.dist_max as f64
            },
            mean_signed: mean(self.signed_sum as f64),
            count: self.count,
            zero_exact: self.zero_exact,
            clamp_events: self.clamp_events,
        }
    }
}

/// Aggregate sweep statistics. `are`, `pre` and `mean_signed` are percent;
/// relative terms skip pairs whose exact result is zero (`zero_exact`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub are: f64,
    pub pre: f64,
    pub ned: f64,
    /// Mean of `(exact - approx) / exact`; positive means underestimation.
    pub mean_signed: f64,
    pub count: u64,
    pub zero_exact: u64,
    pub clamp_events: u64,
}

/// Accumulators for one partition: all pairs, and for division the pairs
/// whose dividend is at least the divisor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PartialSweep {
    pub all: ErrorAccumulator,
    pub dividend_ge_divisor: ErrorAccumulator,
}

impl PartialSweep {
    pub fn merge(self, other: Self) -> Self {
        Self {
            all: self.all.merge(other.all),
            dividend_ge_divisor: self.dividend_ge_divisor.merge(other.dividend_ge_divisor),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub stats: ErrorStats,
    /// Division only: statistics restricted to dividend >= divisor.
    pub filtered: Option<ErrorStats>,
}

/// Evaluates pairs `range` of the sweep's pair sequence. Any partition of
/// `0..spec.pairs()` merges to the same totals.
pub fn evaluate_range(spec: &SweepSpec, tables: &TablePair, range: Range<u64>) -> Result<PartialSweep> {
    spec.validate()?;
    let arith = Arith::new(spec.op.unit, tables);
    let exact = Arith::new(Unit::Exact, tables);
    let q = spec.effective_quot_bits();
    let (wa, wb) = (spec.width, spec.second_width());
    let mut part = PartialSweep::default();
    let mut eval = |a: u64, b: u64| -> Result<()> {
        let (a, b) = (UIntWord::new(a, wa)?, UIntWord::new(b, wb)?);
        let e = exact.apply(spec.op.mode, a, b, q)?.value;
        let r = arith.apply(spec.op.mode, a, b, q)?;
        part.all.push(e, r.value, r.clamped);
        if spec.op.mode == OpMode::Div && a.value() >= b.value() {
            part.dividend_ge_divisor.push(e, r.value, r.clamped);
        }
        Ok(())
    };
    match spec.sampling {
        Sampling::Exhaustive => {
            for i in range {
                let (a, b) = spec.exhaustive_pair(i);
                eval(a, b)?;
            }
        }
        Sampling::Uniform { seed, .. } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_word_pos(2 * range.start as u128);
            for _ in range {
                let (a, b) = spec.sampled_pair(rng.next_u64());
                eval(a, b)?;
            }
        }
    }
    Ok(part)
}

/// Runs a sweep with the given tables, in parallel over fixed chunks.
pub fn characterize_with(spec: &SweepSpec, tables: &TablePair) -> Result<SweepResult> {
    spec.validate()?;
    let n = spec.pairs();
    let part = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| evaluate_range(spec, tables, c * CHUNK..((c + 1) * CHUNK).min(n)))
        .try_reduce(PartialSweep::default, |x, y| Ok(x.merge(y)))?;
    Ok(SweepResult {
        spec: *spec,
        stats: part.all.stats(),
        filtered: (spec.op.mode == OpMode::Div).then(|| part.dividend_ge_divisor.stats()),
    })
}

/// Runs a sweep, building the correction tables named in `spec`.
pub fn characterize(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let tables = TablePair::build(spec.region_bits, spec.coeff_bits)?;
    characterize_with(spec, &tables)
}

/// One CSV stats row. Column order is part of the CLI contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub op: String,
    pub width: u32,
    pub divisor_width: u32,
    pub sampling: String,
    pub seed: Option<u64>,
    pub region_bits: u32,
    pub coeff_bits: u32,
    pub quot_bits: u32,
    pub subset: String,
    pub are: f64,
    pub pre: f64,
    pub ned: f64,
    pub mean_signed: f64,
    pub count: u64,
    pub zero_exact: u64,
    pub clamp_events: u64,
}

impl SweepResult {
    pub fn rows(&self) -> Vec<StatsRow> {
        let s = &self.spec;
        let (sampling, seed) = match s.sampling {
            Sampling::Exhaustive => ("exhaustive".to_string(), None),
            Sampling::Uniform { count, seed } => (format!("uniform:{count}"), Some(seed)),
        };
        let row = |subset: &str, st: &ErrorStats| StatsRow {
            op: s.op.to_string(),
            width: s.width.bits(),
            divisor_width: s.second_width().bits(),
            sampling: sampling.clone(),
            seed,
            region_bits: s.region_bits,
            coeff_bits: s.coeff_bits,
            quot_bits: s.effective_quot_bits(),
            subset: subset.to_string(),
            are: st.are,
            pre: st.pre,
            ned: st.ned,
            mean_signed: st.mean_signed,
            count: st.count,
            zero_exact: st.zero_exact,
            clamp_events: st.clamp_events,
        };
        let mut rows = vec![row("all", &self.stats)];
        if let Some(f) = &self.filtered {
            rows.push(row("dividend>=divisor", f));
        }
        rows
    }
}

pub fn write_stats_csv<W: Write>(out: W, results: &[SweepResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        for row in r.rows() {
            w.serialize(row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `mean(|e|) / max(|e|)`, zero when every error is zero.
pub fn ned<T: Real>(errors: &[T]) -> Result<T> {
    if errors.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (sum, max) = errors
        .iter()
        .fold((T::zero(), T::zero()), |(s, m), e| (s + e.abs(), m.max(e.abs())));
    if max == T::zero() {
        return Ok(T::zero());
    }
    Ok(sum / T::from_usize(errors.len()).unwrap() / max)
}

/// Signed relative error `(exact - approx) / exact` over a grid of fraction
/// cells; row `i` is the first operand's fraction, column `j` the second's.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap<T> {
    pub op: Operator,
    pub grid: usize,
    pub k1: i32,
    pub k2: i32,
    pub cells: Vec<T>,
}

impl<T: Real> Heatmap<T> {
    pub fn get(&self, i: usize, j: usize) -> T {
        self.cells[i * self.grid + j]
    }

    pub fn max_abs(&self) -> T {
        self.cells.iter().fold(T::zero(), |m, c| m.max(c.abs()))
    }

    pub fn mean_abs(&self) -> T {
        let sum = self.cells.iter().fold(T::zero(), |s, c| s + c.abs());
        sum / T::from_usize(self.cells.len()).unwrap()
    }

    /// Writes the matrix as CSV, one grid row per line, no header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for row in self.cells.chunks(self.grid) {
            w.write_record(row.iter().map(|c| format!("{:e}", c.to_f64().unwrap())))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn cell_center<T: Real>(i: usize, grid: usize) -> T {
    (T::from_usize(i).unwrap() + T::lit(0.5)) / T::from_usize(grid).unwrap()
}

/// Analytic heatmap: operands `2^k1 (1 + x1)` and `2^k2 (1 + x2)` at cell
/// centers, evaluated on the continuous model of the chosen unit.
pub fn heatmap<T: Real>(op: Operator, tables: &TablePair, grid: usize, k1: i32, k2: i32) -> Result<Heatmap<T>> {
    if grid < 16 {
        return Err(Error::GridTooSmall(grid));
    }
    let table = tables.get(op.mode);
    let mut cells = Vec::with_capacity(grid * grid);
    for i in 0..grid {
        let x1: T = cell_center(i, grid);
        for j in 0..grid {
            let x2: T = cell_center(j, grid);
            let coeff = match op.unit {
                Unit::Corrected => {
                    table.coefficient_real::<T>(table.region_of(x1), table.region_of(x2))
                }
                _ => T::zero(),
            };
            let (a, b) = (
                T::exp2i(k1) * (T::one() + x1),
                T::exp2i(k2) * (T::one() + x2),
            );
            let (exact, approx) = match op.mode {
                OpMode::Mul => {
                    let s = (x1 + x2 + coeff).max(T::zero());
                    (a * b, T::exp2i(k1 + k2) * antilog_sum_real(s))
                }
                OpMode::Div => {
                    let d = x1 - x2;
                    let d = if d >= T::zero() {
                        (d + coeff).max(T::zero())
                    } else {
                        (d + coeff).min(T::zero())
                    };
                    (a / b, T::exp2i(k1 - k2) * antilog_diff_real(d))
                }
            };
            let rel = match op.unit {
                Unit::Exact => T::zero(),
                _ => (exact - approx) / exact,
            };
            cells.push(rel);
        }
    }
    Ok(Heatmap {
        op,
        grid,
        k1,
        k2,
        cells,
    })
}

/// Bit-level heatmap: each cell runs the integer unit on
/// `2^k1 + floor(x1 * 2^k1)` and `2^k2 + floor(x2 * 2^k2)` at `width` bits.
/// Division uses the width as fractional quotient bits.
pub fn heatmap_bits(
    op: Operator,
    tables: &TablePair,
    width: Width,
    grid: usize,
    k1: u32,
    k2: u32,
) -> Result<Heatmap<f64>> {
    if grid < 16 {
        return Err(Error::GridTooSmall(grid));
    }
    if k1 >= width.bits() || k2 >= width.bits() {
        return Err(Error::InvalidSweep(format!(
            "leading-one positions ({k1}, {k2}) outside a {width}-bit operand"
        )));
    }
    let arith = Arith::new(op.unit, tables);
    let exact = Arith::new(Unit::Exact, tables);
    let q = match op.mode {
        OpMode::Mul => 0,
        OpMode::Div => width.bits(),
    };
    let operand = |k: u32, i: usize| {
        let x: f64 = cell_center(i, grid);
        UIntWord::new((1u64 << k) + (x * (1u64 << k) as f64) as u64, width)
    };
    let mut cells = Vec::with_capacity(grid * grid);
    for i in 0..grid {
        let a = operand(k1, i)?;
        for j in 0..grid {
            let b = operand(k2, j)?;
            let e = exact.apply(op.mode, a, b, q)?.value as f64;
            let r = arith.apply(op.mode, a, b, q)?.value as f64;
            cells.push((e - r) / e);
        }
    }
    Ok(Heatmap {
        op,
        grid,
        k1: k1 as i32,
        k2: k2 as i32,
        cells,
    })
}
