//! PNG read/write for [`Image`].

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, Rgb};
use thiserror::Error;

use crate::scalar::Real;

use super::{Image, ImageError};

#[derive(Debug, Error)]
pub enum PngError {
    #[error("{path}: {source}")]
    Codec {
        path: String,
        #[source]
        source: image::ImageError,
    },
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// Bit depth used when writing PNG files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

/// Converts a decoded image, dropping alpha. Gray inputs stay single-channel.
pub fn from_dynamic<T: Real>(dynamic: DynamicImage) -> Result<Image<T>, ImageError> {
    let (w, h) = (dynamic.width() as usize, dynamic.height() as usize);
    match dynamic {
        DynamicImage::ImageLuma8(buf) => Image::from_u8(h, w, 1, buf.as_raw()),
        DynamicImage::ImageLumaA8(_) => Image::from_u8(h, w, 1, dynamic.to_luma8().as_raw()),
        DynamicImage::ImageRgb8(buf) => Image::from_u8(h, w, 3, buf.as_raw()),
        DynamicImage::ImageLuma16(buf) => Image::from_u16(h, w, 1, buf.as_raw()),
        DynamicImage::ImageLumaA16(_) => Image::from_u16(h, w, 1, dynamic.to_luma16().as_raw()),
        DynamicImage::ImageRgb16(buf) => Image::from_u16(h, w, 3, buf.as_raw()),
        DynamicImage::ImageRgba16(_) => Image::from_u16(h, w, 3, dynamic.to_rgb16().as_raw()),
        other => Image::from_u8(h, w, 3, other.to_rgb8().as_raw()),
    }
}

pub fn to_dynamic<T: Real>(img: &Image<T>, depth: BitDepth) -> DynamicImage {
    let (w, h) = (img.width() as u32, img.height() as u32);
    match (img.channels(), depth) {
        (1, BitDepth::Eight) => DynamicImage::ImageLuma8(
            ImageBuffer::<Luma<u8>, _>::from_raw(w, h, img.to_u8()).expect("buffer sized from image"),
        ),
        (1, BitDepth::Sixteen) => DynamicImage::ImageLuma16(
            ImageBuffer::<Luma<u16>, _>::from_raw(w, h, img.to_u16()).expect("buffer sized from image"),
        ),
        (_, BitDepth::Eight) => DynamicImage::ImageRgb8(
            ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, img.to_u8()).expect("buffer sized from image"),
        ),
        (_, BitDepth::Sixteen) => DynamicImage::ImageRgb16(
            ImageBuffer::<Rgb<u16>, _>::from_raw(w, h, img.to_u16()).expect("buffer sized from image"),
        ),
    }
}

pub fn decode_png<T: Real>(bytes: &[u8]) -> Result<Image<T>, PngError> {
    let dynamic = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|source| PngError::Codec { path: "<memory>".into(), source })?;
    Ok(from_dynamic(dynamic)?)
}

pub fn read_png<T: Real>(path: impl AsRef<Path>) -> Result<Image<T>, PngError> {
    let path = path.as_ref();
    let dynamic = image::open(path).map_err(|source| PngError::Codec { path: path.display().to_string(), source })?;
    Ok(from_dynamic(dynamic)?)
}

/// Reads a PNG and reports whether it stored 16-bit samples.
pub fn read_png_depth<T: Real>(path: impl AsRef<Path>) -> Result<(Image<T>, BitDepth), PngError> {
    let path = path.as_ref();
    let dynamic = image::open(path).map_err(|source| PngError::Codec { path: path.display().to_string(), source })?;
    let depth = if dynamic.color().bits_per_pixel() / u16::from(dynamic.color().channel_count()) > 8 {
        BitDepth::Sixteen
    } else {
        BitDepth::Eight
    };
    Ok((from_dynamic(dynamic)?, depth))
}

pub fn write_png<T: Real>(img: &Image<T>, path: impl AsRef<Path>, depth: BitDepth) -> Result<(), PngError> {
    let path = path.as_ref();
    to_dynamic(img, depth)
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| PngError::Codec { path: path.display().to_string(), source })
}
