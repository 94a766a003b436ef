//! 8-bit grayscale images, binary PGM I/O, and the image applications.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::correction::TablePair;
use crate::error::{Error, Result};
use crate::unit::{Arith, Unit};
use crate::word::{UIntWord, Width};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Dimension(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let pixels = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    fn same_shape(&self, other: &GrayImage) -> Result<()> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}

/// Reads a binary (P5) PGM with a maximum value of at most 255.
pub fn read_pgm<R: Read>(mut input: R) -> Result<GrayImage> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut pos = 0;
    if bytes.get(..2) != Some(b"P5") {
        return Err(Error::parse(0, "missing P5 magic"));
    }
    pos += 2;
    let mut header = [0usize; 3];
    for (field, name) in header.iter_mut().zip(["width", "height", "maxval"]) {
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::parse(pos, format!("expected {name}")));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .unwrap()
            .parse()
            .map_err(|_| Error::parse(start, format!("{name} out of range")))?;
    }
    let [width, height, maxval] = header;
    if maxval == 0 || maxval > 255 {
        return Err(Error::parse(pos, format!("unsupported maxval {maxval} (8-bit only)")));
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::parse(pos, "expected whitespace after header"));
    }
    pos += 1;
    let len = width
        .checked_mul(height)
        .ok_or_else(|| Error::parse(pos, "image dimensions overflow"))?;
    let data = bytes.get(pos..pos + len).ok_or_else(|| {
        Error::parse(
            bytes.len(),
            format!("truncated pixel data: {} of {len} bytes", bytes.len() - pos),
        )
    })?;
    GrayImage::new(width, height, data.to_vec())
}

pub fn write_pgm<W: Write>(mut out: W, img: &GrayImage) -> Result<()> {
    write!(out, "P5\n{} {}\n255\n", img.width, img.height)?;
    out.write_all(&img.pixels)?;
    out.flush()?;
    Ok(())
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    read_pgm(BufReader::new(File::open(path)?))
}

pub fn save_pgm(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    write_pgm(BufWriter::new(File::create(path)?), img)
}

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` for identical images.
pub fn psnr(reference: &GrayImage, test: &GrayImage) -> Result<f64> {
    reference.same_shape(test)?;
    if reference.pixels.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sse: u64 = reference
        .pixels
        .iter()
        .zip(&test.pixels)
        .map(|(&a, &b)| (a.abs_diff(b) as u64).pow(2))
        .sum();
    if sse == 0 {
        return Ok(f64::INFINITY);
    }
    let mse = sse as f64 / reference.pixels.len() as f64;
    Ok(10.0 * (255.0f64 * 255.0 / mse).log10())
}

/// Multiply blend: `floor(a * b / 255)` with the product from `arith`.
pub fn blend(a: &GrayImage, b: &GrayImage, arith: &Arith) -> Result<GrayImage> {
    a.same_shape(b)?;
    let pixels = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(&p, &q)| {
            let prod = arith.mul(UIntWord::u8(p), UIntWord::u8(q)).value;
            (prod / 255).min(255) as u8
        })
        .collect();
    GrayImage::new(a.width, a.height, pixels)
}

/// Which operations of the smoothing filter go through the approximate unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoothArith {
    pub mul: Unit,
    pub div: Unit,
}

impl SmoothArith {
    pub const EXACT: Self = Self {
        mul: Unit::Exact,
        div: Unit::Exact,
    };

    pub fn div_only(unit: Unit) -> Self {
        Self {
            mul: Unit::Exact,
            div: unit,
        }
    }

    pub fn hybrid(unit: Unit) -> Self {
        Self { mul: unit, div: unit }
    }
}

/// Integer smoothing kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// `[1 2 1]` outer product, normalized by 16.
    #[default]
    Binomial3,
    /// The common 5x5 integer Gaussian, normalized by 273.
    Gauss5,
}

const BINOMIAL3: [[u8; 3]; 3] = [[1, 2, 1], [2, 4, 2], [1, 2, 1]];

const GAUSS5: [[u8; 5]; 5] = [
    [1, 4, 7, 4, 1],
    [4, 16, 26, 16, 4],
    [7, 26, 41, 26, 7],
    [4, 16, 26, 16, 4],
    [1, 4, 7, 4, 1],
];

impl Kernel {
    pub fn size(self) -> usize {
        match self {
            Kernel::Binomial3 => 3,
            Kernel::Gauss5 => 5,
        }
    }

    /// Normalization divisor (the sum of the weights).
    pub fn divisor(self) -> u32 {
        match self {
            Kernel::Binomial3 => 16,
            Kernel::Gauss5 => 273,
        }
    }

    fn weight(self, dx: usize, dy: usize) -> u8 {
        match self {
            Kernel::Binomial3 => BINOMIAL3[dy][dx],
            Kernel::Gauss5 => GAUSS5[dy][dx],
        }
    }
}

/// Fractional quotient bits used for the normalization before rounding.
pub const SMOOTH_QUOT_BITS: u32 = 4;

/// Gaussian smoothing with replicated edges. Each tap is `weight * pixel`
/// through `arith.mul` (8-bit), the weighted sum is divided by the kernel
/// divisor through `arith.div` with four fractional bits, then rounded.
pub fn gaussian_smooth(
    img: &GrayImage,
    kernel: Kernel,
    arith: SmoothArith,
    tables: &TablePair,
) -> Result<GrayImage> {
    if img.width < 3 || img.height < 3 {
        return Err(Error::ImageTooSmall {
            width: img.width,
            height: img.height,
        });
    }
    let mul = Arith::new(arith.mul, tables);
    let div = Arith::new(arith.div, tables);
    let r = kernel.size() / 2;
    // The 5x5 sum reaches 273 * 255, beyond 16 bits.
    let sum_width = match kernel {
        Kernel::Binomial3 => Width::W16,
        Kernel::Gauss5 => Width::W32,
    };
    let divisor = UIntWord::new(kernel.divisor() as u64, sum_width)?;
    let clamp = |v: usize, dv: usize, n: usize| (v + dv).saturating_sub(r).min(n - 1);
    let mut pixels = Vec::with_capacity(img.pixels.len());
    for y in 0..img.height {
        for x in 0..img.width {
            let mut sum = 0u64;
            for dy in 0..kernel.size() {
                for dx in 0..kernel.size() {
                    let p = img.get(clamp(x, dx, img.width), clamp(y, dy, img.height));
                    let w = UIntWord::u8(kernel.weight(dx, dy));
                    sum += mul.mul(UIntWord::u8(p), w).value;
                }
            }
            let sum = UIntWord::new(sum.min(sum_width.max_value() as u64), sum_width)?;
            let q = div.div(sum, divisor, SMOOTH_QUOT_BITS)?.value;
            let rounded = (q + (1 << (SMOOTH_QUOT_BITS - 1))) >> SMOOTH_QUOT_BITS;
            pixels.push(rounded.min(255) as u8);
        }
    }
    GrayImage::new(img.width, img.height, pixels)
}

/// Adds rounded zero-mean Gaussian noise, clamped to 0..=255.
pub fn add_gaussian_noise(img: &GrayImage, sigma: f64, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    let pixels = img
        .pixels
        .iter()
        .map(|&p| (p as f64 + normal.sample(&mut rng)).round().clamp(0.0, 255.0) as u8)
        .collect();
    GrayImage {
        pixels,
        ..img.clone()
    }
}

/// Deterministic test scenes used for the committed fixtures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scene {
    /// Concentric rings over a diagonal gradient.
    Rings,
    /// Overlapping soft discs with a textured background.
    Discs,
    /// Sum of sinusoids with seeded phases and fine grain.
    Waves,
}

impl Scene {
    pub const ALL: [Scene; 3] = [Scene::Rings, Scene::Discs, Scene::Waves];

    pub fn name(self) -> &'static str {
        match self {
            Scene::Rings => "rings",
            Scene::Discs => "discs",
            Scene::Waves => "waves",
        }
    }

    pub fn render(self, width: usize, height: usize, seed: u64) -> GrayImage {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h) = (width as f64, height as f64);
        match self {
            Scene::Rings => {
                let (cx, cy) = (w * rng.gen_range(0.3..0.7), h * rng.gen_range(0.3..0.7));
                GrayImage::from_fn(width, height, |x, y| {
                    let (fx, fy) = (x as f64, y as f64);
                    let d = ((fx - cx).powi(2) + (fy - cy).powi(2)).sqrt();
                    let v = 0.45 * (fx + fy) / (w + h) + 0.35 * (0.5 + 0.5 * (d / 6.0).cos()) + 0.15;
                    (v * 255.0).clamp(0.0, 255.0) as u8
                })
            }
            Scene::Discs => {
                let discs: Vec<(f64, f64, f64, f64)> = (0..12)
                    .map(|_| {
                        (
                            rng.gen_range(0.0..w),
                            rng.gen_range(0.0..h),
                            rng.gen_range(0.08..0.3) * w.min(h),
                            rng.gen_range(-0.5..0.5),
                        )
                    })
                    .collect();
                let grain: Vec<f64> = (0..width * height).map(|_| rng.gen_range(-0.04..0.04)).collect();
                GrayImage::from_fn(width, height, |x, y| {
                    let (fx, fy) = (x as f64, y as f64);
                    let mut v = 0.5 + 0.1 * (fx / 9.0).sin() * (fy / 13.0).cos();
                    for &(cx, cy, r, a) in &discs {
                        let d = ((fx - cx).powi(2) + (fy - cy).powi(2)).sqrt();
                        v += a / (1.0 + ((d - r) / 2.0).exp());
                    }
                    ((v + grain[y * width + x]) * 255.0).clamp(0.0, 255.0) as u8
                })
            }
            Scene::Waves => {
                let waves: Vec<(f64, f64, f64)> = (0..5)
                    .map(|_| (rng.gen_range(0.02..0.2), rng.gen_range(0.02..0.2), rng.gen_range(0.0..6.3)))
                    .collect();
                let grain: Vec<f64> = (0..width * height).map(|_| rng.gen_range(-0.03..0.03)).collect();
                GrayImage::from_fn(width, height, |x, y| {
                    let (fx, fy) = (x as f64, y as f64);
                    let s: f64 = waves.iter().map(|&(a, b, p)| (a * fx + b * fy + p).sin()).sum();
                    let v = 0.5 + 0.45 * s / waves.len() as f64 * 1.8 + grain[y * width + x];
                    (v * 255.0).clamp(0.0, 255.0) as u8
                })
            }
        }
    }
}
