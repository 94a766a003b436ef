//! Application benchmarks: image blending, Gaussian smoothing and quantized
//! MLP inference, each parameterized by the arithmetic unit.

pub mod ann;
pub mod idx;
pub mod image;

pub use ann::{AnnModel, FloatMlp};
pub use idx::{load_idx, IdxArray, Mnist};
pub use image::{blend, gaussian_smooth, load_pgm, psnr, save_pgm, GrayImage, Kernel, SmoothArith};
