use rayon::prelude::*;

use crate::imgcore::{FrameSequence, Image, ImageError};
use crate::rng::KeyedRng;
use crate::scalar::Real;
use crate::schedule::{Component, DegradationTimeline, Order, ParamVector};

use super::{
    apply_blur, apply_jpeg, apply_noise, resize_to, surrogate_compress, CodecBackend, DegradeError,
    ExternalEncoder, ResizeMode,
};

/// Ratio between ground-truth and synthesized low-resolution sides.
pub const CHAIN_SCALE: usize = 4;

/// Where the sequence-wide video compression stage runs.
#[derive(Debug, Clone, Copy)]
pub enum VideoBackend<'a> {
    Surrogate,
    External(&'a ExternalEncoder),
}

const STAGES: [[&str; 4]; 2] = [["blur1", "resize1", "noise1", "jpeg1"], ["blur2", "resize2", "noise2", "jpeg2"]];

fn degrade_frame<T: Real>(
    hr: &Image<T>,
    p: &ParamVector,
    keyed: &KeyedRng,
    sequence: u64,
    slot: usize,
) -> Result<Image<T>, DegradeError> {
    let mut x = hr.clone();
    for order in [Order::First, Order::Second] {
        let [blur, resize, noise, jpeg] = STAGES[order.index()];

        // Kernels wider than a shrunken frame are cut to the largest odd side that fits.
        let mut spec = p.blur_spec(order);
        let fit = {
            let m = x.height().min(x.width());
            if m % 2 == 0 { m - 1 } else { m }
        };
        spec.kernel_size = spec.kernel_size.min(fit);
        if spec.kernel_size >= 3 {
            x = apply_blur(&x, &spec).map_err(DegradeError::at(slot, blur))?;
        }

        let r = p.resize_spec(order);
        let oh = ((x.height() as f64 * r.scale).round() as usize).max(1);
        let ow = ((x.width() as f64 * r.scale).round() as usize).max(1);
        x = resize_to(&x, oh, ow, r.mode).map_err(DegradeError::at(slot, resize))?;

        let mut rng = keyed.stream(sequence, slot as u64, noise);
        x = apply_noise(&x, &p.noise_spec(order), &mut rng).map_err(DegradeError::at(slot, noise))?;

        x = apply_jpeg(&x, &p.jpeg_spec(order)).map_err(DegradeError::at(slot, jpeg))?;
    }
    Ok(x)
}

/// Runs the two-pass degradation chain over a ground-truth sequence.
///
/// Each frame passes blur, resize, noise and JPEG twice with the parameters of
/// its timeline slot. Frames whose second-pass size differs from slot 0 are
/// area-resampled to slot 0's size, the whole sequence is video-compressed,
/// and a final area resize produces exactly `1 / CHAIN_SCALE` of the input
/// resolution. The surrogate codec quantizes each frame with the step of its
/// own slot's bitrate; an external encoder receives the mean bitrate.
pub fn apply_chain<T: Real>(
    hr: &FrameSequence<T>,
    timeline: &DegradationTimeline,
    keyed: &KeyedRng,
    sequence: u64,
    video: VideoBackend<'_>,
) -> Result<FrameSequence<T>, DegradeError> {
    if timeline.len() != hr.len() {
        return Err(DegradeError::TimelineLength { timeline: timeline.len(), frames: hr.len() });
    }
    let (h, w, _) = hr.dims();
    if h % CHAIN_SCALE != 0 {
        return Err(ImageError::NotDivisible { axis: "height", len: h, scale: CHAIN_SCALE }.into());
    }
    if w % CHAIN_SCALE != 0 {
        return Err(ImageError::NotDivisible { axis: "width", len: w, scale: CHAIN_SCALE }.into());
    }

    let frames: Vec<Image<T>> = hr
        .frames()
        .par_iter()
        .enumerate()
        .map(|(i, f)| degrade_frame(f, timeline.slot(i), keyed, sequence, i))
        .collect::<Result<_, _>>()?;

    let (th, tw) = (frames[0].height(), frames[0].width());
    let frames = frames
        .into_iter()
        .enumerate()
        .map(|(i, f)| resize_to(&f, th, tw, ResizeMode::Area).map_err(DegradeError::at(i, "video")))
        .collect::<Result<Vec<_>, _>>()?;
    let seq = FrameSequence::new(frames)?;

    let compressed = match video {
        VideoBackend::Surrogate => {
            let quants: Vec<f64> =
                timeline.slots().iter().map(|p| p.video_spec(CodecBackend::Surrogate).surrogate_quant).collect();
            surrogate_compress(&seq, &quants)
        }
        VideoBackend::External(encoder) => {
            let mean = timeline.slots().iter().map(|p| p.value(Component::Bitrate)).sum::<f64>() / timeline.len() as f64;
            let codec = timeline.slot(0).discrete().codec;
            encoder.round_trip(&seq, codec, mean.round() as u32)
        }
    }
    .map_err(DegradeError::at(0, "video"))?;

    let (lh, lw) = (h / CHAIN_SCALE, w / CHAIN_SCALE);
    let out = compressed
        .frames()
        .iter()
        .enumerate()
        .map(|(i, f)| resize_to(f, lh, lw, ResizeMode::Area).map_err(DegradeError::at(i, "final_resize")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FrameSequence::new(out)?)
}
