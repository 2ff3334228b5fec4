use crate::scalar::Real;

use super::{Image, ImageError};

const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

/// BT.601 luma; single-channel inputs are returned unchanged.
pub fn rgb_to_gray<T: Real>(img: &Image<T>) -> Image<T> {
    if img.channels() == 1 {
        return img.clone();
    }
    let data: Vec<T> = img
        .data()
        .chunks_exact(3)
        .map(|p| T::of(LUMA[0] * p[0].as_f64() + LUMA[1] * p[1].as_f64() + LUMA[2] * p[2].as_f64()))
        .collect();
    Image::new(img.height(), img.width(), 1, data).expect("luma of finite values is finite")
}

pub fn gray_to_rgb<T: Real>(img: &Image<T>) -> Result<Image<T>, ImageError> {
    if img.channels() != 1 {
        return Err(ImageError::ChannelMismatch { expected: 1, actual: img.channels() });
    }
    let data = img.data().iter().flat_map(|&v| [v, v, v]).collect();
    Image::new(img.height(), img.width(), 3, data)
}
