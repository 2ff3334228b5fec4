//! Pluggable per-frame cleaners: classical filters and a forward-only
//! residual CNN executor.

mod cnn;
mod weights;

use std::sync::Arc;

use thiserror::Error;

use crate::imgcore::{convolve2d, gaussian_kernel, Border, Image, ImageError, Kernel2D};
use crate::scalar::Real;

pub use cnn::{
    cnn_forward, cnn_forward_raw, Activation, CnnWeights, Conv, ResBlock, Tensor, DEFAULT_BLOCKS, DEFAULT_CHANNELS,
};
pub use weights::{decode_weights, encode_weights, load_weights, save_weights, WEIGHT_MAGIC, WEIGHT_VERSION};

#[derive(Debug, Error)]
pub enum WeightError {
    #[error("weight file I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic, expected \"RBVW\"")]
    BadMagic,
    #[error("unsupported weight file version {0}")]
    Version(u32),
    #[error("unknown activation tag {0:#04x}")]
    Activation(u8),
    #[error("truncated weight file: {needed} bytes needed at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("{0} trailing bytes after the last tensor")]
    TrailingBytes(usize),
    #[error("expected tensor {expected}, found {found}")]
    UnexpectedTensor { expected: String, found: String },
    #[error("tensor {tensor} has shape {found:?}, expected {expected:?}")]
    Shape {
        tensor: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("tensor {tensor} contains a non-finite value")]
    NonFinite { tensor: String },
}

#[derive(Debug, Error)]
pub enum CleanerError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Weights(#[from] WeightError),
    #[error("cleaner expects {expected}-channel images, got {actual}")]
    ChannelMismatch { expected: usize, actual: usize },
    #[error("invalid cleaner: {0}")]
    InvalidModel(String),
}

/// A cleaner applied independently to each frame.
#[derive(Debug, Clone)]
pub enum CleanerModel {
    Identity,
    /// Per-channel median over a `size x size` window (odd size).
    Median(usize),
    /// Isotropic Gaussian smoothing with the given sigma in pixels.
    GaussianDenoise(f64),
    /// Mean over a `size x size` window (odd size).
    BoxBlur(usize),
    Cnn(Arc<CnnWeights>),
}

impl CleanerModel {
    pub fn validate(&self) -> Result<(), CleanerError> {
        match self {
            CleanerModel::Identity => Ok(()),
            CleanerModel::Median(k) | CleanerModel::BoxBlur(k) if k % 2 == 0 => {
                Err(CleanerError::InvalidModel(format!("window size must be odd, got {k}")))
            }
            CleanerModel::Median(_) | CleanerModel::BoxBlur(_) => Ok(()),
            CleanerModel::GaussianDenoise(s) if !(*s > 0.0) || !s.is_finite() => {
                Err(CleanerError::InvalidModel(format!("sigma must be positive, got {s}")))
            }
            CleanerModel::GaussianDenoise(_) => Ok(()),
            CleanerModel::Cnn(w) => Ok(w.validate()?),
        }
    }

    pub fn name(&self) -> String {
        match self {
            CleanerModel::Identity => "identity".into(),
            CleanerModel::Median(k) => format!("median({k})"),
            CleanerModel::GaussianDenoise(s) => format!("gaussian({s})"),
            CleanerModel::BoxBlur(k) => format!("box({k})"),
            CleanerModel::Cnn(w) => format!("cnn({}x{})", w.num_blocks(), w.channels()),
        }
    }
}

/// Applies `model` once. Dimensions are preserved and the output is clamped to `[0, 1]`.
pub fn clean<T: Real>(img: &Image<T>, model: &CleanerModel) -> Result<Image<T>, CleanerError> {
    model.validate()?;
    let out = match model {
        CleanerModel::Identity => return Ok(img.clone()),
        CleanerModel::Median(k) => median_filter(img, *k),
        CleanerModel::GaussianDenoise(sigma) => {
            let fit = img.height().min(img.width());
            let mut size = 2 * (3.0 * sigma).ceil() as usize + 1;
            if size > fit {
                size = if fit % 2 == 0 { fit - 1 } else { fit };
            }
            if size < 3 {
                return Ok(img.clamp01());
            }
            convolve2d(img, &gaussian_kernel(size, *sigma, *sigma, 0.0)?)?
        }
        CleanerModel::BoxBlur(k) => convolve2d(img, &Kernel2D::box_filter(*k)?)?,
        CleanerModel::Cnn(w) => return cnn_forward(img, w),
    };
    Ok(out.clamp01())
}

fn median_filter<T: Real>(img: &Image<T>, size: usize) -> Image<T> {
    let (h, w, c) = img.dims();
    let r = (size / 2) as isize;
    let src = img.data();
    let mut window = Vec::with_capacity(size * size);
    let mut out = Vec::with_capacity(src.len());
    for y in 0..h as isize {
        for x in 0..w as isize {
            for ch in 0..c {
                window.clear();
                for dy in -r..=r {
                    let sy = Border::Reflect.resolve(y + dy, h).expect("reflect always resolves");
                    for dx in -r..=r {
                        let sx = Border::Reflect.resolve(x + dx, w).expect("reflect always resolves");
                        window.push(src[(sy * w + sx) * c + ch]);
                    }
                }
                let mid = window.len() / 2;
                let (_, m, _) = window.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).expect("finite"));
                out.push(*m);
            }
        }
    }
    Image::new(h, w, c, out).expect("median of finite values is finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(h: usize, w: usize, c: usize, seed: u64) -> Image<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(h, w, c, |_, _, _| rng.gen::<f64>()).unwrap()
    }

    #[test]
    fn identity_returns_input() {
        let img = random_image(7, 9, 3, 0);
        assert_eq!(clean(&img, &CleanerModel::Identity).unwrap(), img);
    }

    #[test]
    fn median_removes_salt() {
        let mut img = Image::<f64>::filled(9, 9, 1, 0.3).unwrap();
        img.set(4, 4, 0, 1.0);
        let out = clean(&img, &CleanerModel::Median(3)).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.3));
    }

    #[test]
    fn median_matches_sorted_window_oracle() {
        let img = random_image(6, 7, 1, 1);
        let out = clean(&img, &CleanerModel::Median(3)).unwrap();
        let refl = |i: isize, n: isize| if i < 0 { -i } else if i >= n { 2 * (n - 1) - i } else { i } as usize;
        for y in 0..6isize {
            for x in 0..7isize {
                let mut v: Vec<f64> = (-1..=1)
                    .flat_map(|dy| (-1..=1).map(move |dx| (dy, dx)))
                    .map(|(dy, dx)| img.get(refl(y + dy, 6), refl(x + dx, 7), 0))
                    .collect();
                v.sort_by(|a, b| a.partial_cmp(b).unwrap());
                assert_eq!(out.get(y as usize, x as usize, 0), v[4]);
            }
        }
    }

    #[test]
    fn cleaners_keep_dims_and_range() {
        let img = random_image(12, 10, 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let models = [
            CleanerModel::Identity,
            CleanerModel::Median(5),
            CleanerModel::GaussianDenoise(1.2),
            CleanerModel::GaussianDenoise(40.0),
            CleanerModel::BoxBlur(3),
            CleanerModel::Cnn(Arc::new(CnnWeights::random(3, 4, 1, 0.6, &mut rng))),
        ];
        for m in &models {
            let out = clean(&img, m).unwrap();
            assert_eq!(out.dims(), img.dims(), "{}", m.name());
            assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)), "{}", m.name());
        }
    }

    #[test]
    fn cnn_dispatch_matches_forward() {
        let img = random_image(8, 8, 3, 4);
        let w = Arc::new(CnnWeights::random(3, 4, 2, 0.4, &mut ChaCha8Rng::seed_from_u64(5)));
        assert_eq!(clean(&img, &CleanerModel::Cnn(w.clone())).unwrap(), cnn_forward(&img, &w).unwrap());
    }

    #[test]
    fn cnn_channel_mismatch() {
        let img = random_image(8, 8, 1, 6);
        let w = Arc::new(CnnWeights::random(3, 4, 1, 0.4, &mut ChaCha8Rng::seed_from_u64(5)));
        assert!(matches!(
            clean(&img, &CleanerModel::Cnn(w)),
            Err(CleanerError::ChannelMismatch { expected: 3, actual: 1 })
        ));
    }

    #[test]
    fn invalid_models_rejected() {
        let img = random_image(8, 8, 1, 7);
        assert!(clean(&img, &CleanerModel::Median(4)).is_err());
        assert!(clean(&img, &CleanerModel::GaussianDenoise(0.0)).is_err());
    }
}
