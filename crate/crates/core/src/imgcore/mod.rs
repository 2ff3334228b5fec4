//! Raster types and deterministic image math.

mod color;
mod filter;
mod image;
pub mod io;
mod loss;

pub use color::{gray_to_rgb, rgb_to_gray};
pub use filter::{area_downsample, convolve2d, convolve2d_with, gaussian_kernel, Border};
pub use image::{FrameSequence, Image, Kernel2D};
pub use loss::{
    charbonnier, charbonnier_with, cleaning_loss, mean_abs_diff, mse, output_loss, psnr, Reduction,
    ADVERSARIAL_LOSS_WEIGHT, CHARBONNIER_EPS, LOSS_REDUCTION, PERCEPTUAL_LOSS_WEIGHT, PSNR_CAP,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImageError {
    #[error("channel count must be 1 or 3, got {0}")]
    Channels(usize),
    #[error("image must be non-empty, got {height}x{width}")]
    Empty { height: usize, width: usize },
    #[error("data length mismatch: expected {expected}, got {actual}")]
    DataLength { expected: usize, actual: usize },
    #[error("non-finite value at element {index}")]
    NonFinite { index: usize },
    #[error("frame sequence must be non-empty")]
    EmptySequence,
    #[error("frame {index} has dims {actual:?}, expected {expected:?}")]
    HeterogeneousSequence {
        index: usize,
        expected: (usize, usize, usize),
        actual: (usize, usize, usize),
    },
    #[error("kernel size must be odd, got {0}")]
    EvenKernel(usize),
    #[error("kernel size must be at least {min}, got {size}")]
    KernelTooSmall { size: usize, min: usize },
    #[error("kernel weights sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("kernel side {kernel} exceeds image {height}x{width}")]
    KernelLargerThanImage { kernel: usize, height: usize, width: usize },
    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("scale must be >= 1, got {0}")]
    InvalidScale(usize),
    #[error("{axis} of {len} is not divisible by scale {scale}")]
    NotDivisible { axis: &'static str, len: usize, scale: usize },
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize, usize),
        right: (usize, usize, usize),
    },
    #[error("sequence length mismatch: {left} vs {right} frames")]
    LengthMismatch { left: usize, right: usize },
    #[error("crop {height}x{width} at ({top},{left}) exceeds image {image_height}x{image_width}")]
    CropOutOfBounds {
        top: usize,
        left: usize,
        height: usize,
        width: usize,
        image_height: usize,
        image_width: usize,
    },
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEps(f64),
    #[error("expected a {expected}-channel image, got {actual}")]
    ChannelMismatch { expected: usize, actual: usize },
}
