//! No-reference quality assessment from natural-scene statistics.

mod brisque;
mod niqe;
mod nss;

use thiserror::Error;

use crate::imgcore::ImageError;

pub use brisque::{brisque_features, BrisqueModel, BRISQUE_FEATURES};
pub use niqe::{
    feature_gaussian, fit_pristine, niqe_features, niqe_score, FeatureVector, NiqeModel, NiqeParams, NiqePatch,
    DEFAULT_PATCH_SIZE, DEFAULT_SHARPNESS_FRACTION, MIN_PRISTINE_IMAGES, NIQE_FEATURES, NIQE_MAGIC, NIQE_VERSION,
};
pub use nss::{
    fit_aggd, fit_ggd, mscn, AggdFit, GgdFit, ALPHA_MAX, ALPHA_MIN, ALPHA_STEP, MIN_FIT_SAMPLES, MSCN_C, MSCN_SIGMA,
    MSCN_WINDOW,
};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("expected a single-channel image, got {0} channels")]
    NotGray(usize),
    #[error("need at least 100 samples to fit, got {0}")]
    TooFewSamples(usize),
    #[error("degenerate samples: {0}")]
    Degenerate(&'static str),
    #[error("image {height}x{width} is smaller than the {patch}-pixel patch")]
    TooSmall { height: usize, width: usize, patch: usize },
    #[error("patch size must be even and at least 24, got {0}")]
    PatchSize(usize),
    #[error("sharpness fraction must lie in [0, 1], got {0}")]
    SharpnessFraction(f64),
    #[error("pristine corpus needs at least 10 images, got {0}")]
    TooFewImages(usize),
    #[error("only {0} pristine patches qualified, need at least 36")]
    TooFewPatches(usize),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("model file I/O: {0}")]
    Io(#[from] std::io::Error),
}
