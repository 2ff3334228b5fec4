//! Second-order degradation operators: blur, resize, noise, JPEG and video
//! compression, plus their per-sequence composition.

mod chain;
mod encoder;
mod ops;
mod resize;
mod spec;
mod video;

pub use chain::{apply_chain, VideoBackend, CHAIN_SCALE};
pub use encoder::{format_frame_name, EncoderTemplate, ExternalEncoder};
pub use ops::{apply_blur, apply_jpeg, apply_noise, PHOTON_LEVELS};
pub use resize::{apply_resize, resize_to};
pub use spec::{
    BlurSpec, CodecBackend, CodecName, DegradeRanges, JpegSpec, NoiseKind, NoiseSpec, ResizeMode, ResizeSpec,
    VideoCodecSpec, SURROGATE_QUANT_K,
};
pub use video::{apply_video_compression, surrogate_compress, DCT_BLOCK};

use thiserror::Error;

use crate::imgcore::ImageError;

#[derive(Debug, Error)]
pub enum DegradeError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("{param} = {value} outside [{min}, {max}]")]
    OutOfRange {
        param: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("invalid range for {param}: [{min}, {max}]")]
    InvalidRange { param: &'static str, min: f64, max: f64 },
    #[error("{0} must offer at least one choice")]
    EmptyChoice(&'static str),
    #[error("unknown {kind} '{name}'")]
    UnknownName { kind: &'static str, name: String },
    #[error("resize by {scale} gives degenerate {height}x{width} output")]
    DegenerateResize { height: i64, width: i64, scale: f64 },
    #[error("jpeg codec failed: {0}")]
    Jpeg(#[source] image::ImageError),
    #[error("external encoder {stage} failed (exit status {status:?}): {stderr}")]
    Encoder {
        stage: &'static str,
        status: Option<i32>,
        stderr: String,
    },
    #[error("external encoder is not configured")]
    EncoderMissing,
    #[error("encoder returned {actual} frames, expected {expected}")]
    FrameCount { expected: usize, actual: usize },
    #[error("encoder I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("encoder frame exchange: {0}")]
    Png(#[from] crate::imgcore::io::PngError),
    #[error("timeline has {timeline} slots but the sequence has {frames} frames")]
    TimelineLength { timeline: usize, frames: usize },
    #[error("frame {frame}, stage {stage}: {source}")]
    Stage {
        frame: usize,
        stage: &'static str,
        #[source]
        source: Box<DegradeError>,
    },
}

impl DegradeError {
    pub(crate) fn at(frame: usize, stage: &'static str) -> impl FnOnce(DegradeError) -> DegradeError {
        move |e| DegradeError::Stage { frame, stage, source: Box::new(e) }
    }
}
