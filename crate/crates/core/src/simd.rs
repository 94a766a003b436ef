//! Packed sub-word execution on a 32-bit container.
//!
//! A [`LaneConfig`] splits the container into one to four lanes, lane 0 at
//! the least significant bits, and gives each lane its own operation. Every
//! lane is computed by the scalar corrected unit on its own bits only.
//!
//! Results go into a 64-bit container with the same lane order, each lane
//! twice as wide as its operands: products use the full field, integer
//! quotients are zero-extended into it.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correction::{corrected_div_unchecked, corrected_mul_unchecked, OpMode, TablePair};
use crate::error::{Error, Result};
use crate::word::{UIntWord, Width};

/// Maximum number of lanes (quad 8-bit).
pub const MAX_LANES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Layout {
    One32,
    Two16,
    One16Two8,
    Four8,
}

impl Layout {
    pub const ALL: [Layout; 4] = [Layout::One32, Layout::Two16, Layout::One16Two8, Layout::Four8];

    /// Lane widths from lane 0 (least significant) upwards.
    pub fn lane_widths(self) -> &'static [Width] {
        match self {
            Layout::One32 => &[Width::W32],
            Layout::Two16 => &[Width::W16, Width::W16],
            Layout::One16Two8 => &[Width::W16, Width::W8, Width::W8],
            Layout::Four8 => &[Width::W8, Width::W8, Width::W8, Width::W8],
        }
    }

    pub fn lanes(self) -> usize {
        self.lane_widths().len()
    }

    /// Bit offset of each lane in the 32-bit operand container.
    pub fn lane_offsets(self) -> impl Iterator<Item = u32> {
        self.lane_widths().iter().scan(0, |off, w| {
            let here = *off;
            *off += w.bits();
            Some(here)
        })
    }

    fn one_hot(self) -> u8 {
        match self {
            Layout::One32 => 0b0001,
            Layout::Two16 => 0b0010,
            Layout::One16Two8 => 0b0100,
            Layout::Four8 => 0b1000,
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layout::One32 => "1x32",
            Layout::Two16 => "2x16",
            Layout::One16Two8 => "16+8+8",
            Layout::Four8 => "4x8",
        })
    }
}

/// Lane layout plus one operation per lane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LaneConfig {
    layout: Layout,
    modes: [OpMode; MAX_LANES],
}

impl LaneConfig {
    pub fn new(layout: Layout, modes: &[OpMode]) -> Result<Self> {
        if modes.len() != layout.lanes() {
            return Err(Error::LaneCount {
                expected: layout.lanes(),
                found: modes.len(),
            });
        }
        let mut all = [OpMode::Mul; MAX_LANES];
        all[..modes.len()].copy_from_slice(modes);
        Ok(Self { layout, modes: all })
    }

    /// Every lane running the same operation.
    pub fn uniform(layout: Layout, mode: OpMode) -> Self {
        let mut modes = [OpMode::Mul; MAX_LANES];
        modes[..layout.lanes()].fill(mode);
        Self { layout, modes }
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn modes(&self) -> &[OpMode] {
        &self.modes[..self.layout.lanes()]
    }

    /// Copy of this configuration with lane `lane` switched to `mode`.
    pub fn with_mode(mut self, lane: usize, mode: OpMode) -> Self {
        assert!(lane < self.layout.lanes(), "lane {lane} out of range");
        self.modes[lane] = mode;
        self
    }

    /// All 30 valid configurations.
    pub fn all() -> Vec<LaneConfig> {
        Layout::ALL
            .iter()
            .flat_map(|&layout| {
                (0..1u8 << layout.lanes()).map(move |bits| {
                    let mut cfg = LaneConfig::uniform(layout, OpMode::Mul);
                    for lane in 0..layout.lanes() {
                        if bits >> lane & 1 == 1 {
                            cfg.modes[lane] = OpMode::Div;
                        }
                    }
                    cfg
                })
            })
            .collect()
    }
}

impl fmt::Display for LaneConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.layout)?;
        for (i, m) in self.modes().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{m}")?;
        }
        f.write_str("]")
    }
}

/// Control word: bits 0..4 hold the one-hot layout (bit 0 = 1x32,
/// bit 3 = 4x8), bits 4..8 one mode bit per lane (set = divide).
pub fn encode_config(cfg: &LaneConfig) -> u8 {
    let modes = cfg
        .modes()
        .iter()
        .enumerate()
        .fold(0u8, |acc, (i, m)| acc | (u8::from(*m == OpMode::Div) << i));
    cfg.layout.one_hot() | modes << 4
}

pub fn decode_config(word: u8) -> Result<LaneConfig> {
    let field = word & 0xF;
    let layout = Layout::ALL
        .into_iter()
        .find(|l| l.one_hot() == field)
        .ok_or(Error::LayoutNotOneHot(field))?;
    let modes = word >> 4;
    let lanes = layout.lanes();
    if modes >> lanes != 0 {
        return Err(Error::StrayModeBits { bits: modes, lanes });
    }
    let mut cfg = LaneConfig::uniform(layout, OpMode::Mul);
    for lane in 0..lanes {
        if modes >> lane & 1 == 1 {
            cfg.modes[lane] = OpMode::Div;
        }
    }
    Ok(cfg)
}

/// A 32-bit container holding lanes packed under `layout`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PackedWord {
    pub bits: u32,
    pub layout: Layout,
}

impl PackedWord {
    pub fn new(bits: u32, layout: Layout) -> Self {
        Self { bits, layout }
    }

    pub fn lane(&self, lane: usize) -> UIntWord {
        let width = self.layout.lane_widths()[lane];
        let offset = self.layout.lane_offsets().nth(lane).unwrap();
        let value = (self.bits as u64 >> offset) & width.max_value() as u64;
        UIntWord::new(value, width).expect("masked to lane width")
    }
}

pub fn pack(lanes: &[UIntWord], layout: Layout) -> Result<PackedWord> {
    let widths = layout.lane_widths();
    if lanes.len() != widths.len() {
        return Err(Error::LaneCount {
            expected: widths.len(),
            found: lanes.len(),
        });
    }
    let mut bits = 0u64;
    for (lane, ((word, &width), offset)) in lanes
        .iter()
        .zip(widths)
        .zip(layout.lane_offsets())
        .enumerate()
    {
        if word.width() != width {
            return Err(Error::LaneWidth {
                lane,
                expected: width,
                found: word.width(),
            });
        }
        bits |= (word.value() as u64) << offset;
    }
    Ok(PackedWord::new(bits as u32, layout))
}

pub fn unpack(p: &PackedWord) -> Vec<UIntWord> {
    (0..p.layout.lanes()).map(|i| p.lane(i)).collect()
}

/// Why a lane produced no result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaneFault {
    DivisionByZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LaneResult {
    pub mode: OpMode,
    pub value: u64,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecOutput {
    pub layout: Layout,
    pub lanes: Vec<std::result::Result<LaneResult, LaneFault>>,
    /// 8-bit sub-unit slots left idle by the layout (quad 8x8 uses them all).
    pub gated_lanes: usize,
}

impl ExecOutput {
    /// Results packed into the 64-bit container; faulted lanes read as zero.
    pub fn packed(&self) -> u64 {
        self.lanes
            .iter()
            .zip(self.layout.lane_offsets())
            .fold(0u64, |acc, (r, offset)| match r {
                Ok(r) => acc | r.value << (2 * offset),
                Err(_) => acc,
            })
    }

    /// Bit `i` set when lane `i` faulted.
    pub fn fault_mask(&self) -> u8 {
        self.lanes
            .iter()
            .enumerate()
            .fold(0, |acc, (i, r)| acc | (u8::from(r.is_err()) << i))
    }
}

/// Runs every lane of `cfg` through the corrected unit. Division lanes
/// return integer quotients.
pub fn simdive_exec(
    a: &PackedWord,
    b: &PackedWord,
    cfg: &LaneConfig,
    tables: &TablePair,
) -> Result<ExecOutput> {
    if a.layout != cfg.layout || b.layout != cfg.layout {
        return Err(Error::LayoutMismatch {
            expected: cfg.layout,
            a: a.layout,
            b: b.layout,
        });
    }
    let lanes = cfg
        .modes()
        .iter()
        .enumerate()
        .map(|(i, &mode)| {
            let (x, y) = (a.lane(i), b.lane(i));
            let c = match mode {
                OpMode::Mul => corrected_mul_unchecked(x, y, &tables.mul),
                OpMode::Div => corrected_div_unchecked(x, y, &tables.div, 0)
                    .map_err(|_| LaneFault::DivisionByZero)?,
            };
            Ok(LaneResult {
                mode,
                value: c.value,
                clamped: c.clamped,
            })
        })
        .collect();
    Ok(ExecOutput {
        layout: cfg.layout,
        lanes,
        gated_lanes: MAX_LANES - cfg.layout.lanes(),
    })
}

/// [`simdive_exec`] over a batch of operand pairs, in parallel.
pub fn exec_batch(
    pairs: &[(PackedWord, PackedWord)],
    cfg: &LaneConfig,
    tables: &TablePair,
) -> Result<Vec<ExecOutput>> {
    pairs
        .par_iter()
        .map(|(a, b)| simdive_exec(a, b, cfg, tables))
        .collect()
}
