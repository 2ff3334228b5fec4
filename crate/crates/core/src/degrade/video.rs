use std::sync::OnceLock;

use crate::imgcore::{Border, FrameSequence, Image};
use crate::scalar::Real;

use super::{CodecBackend, DegradeError, ExternalEncoder, VideoCodecSpec};

/// Transform block side of the surrogate codec.
pub const DCT_BLOCK: usize = 8;

/// Orthonormal DCT-II basis, `basis[k][n]`.
fn dct_basis() -> &'static [[f64; DCT_BLOCK]; DCT_BLOCK] {
    static BASIS: OnceLock<[[f64; DCT_BLOCK]; DCT_BLOCK]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut m = [[0.0; DCT_BLOCK]; DCT_BLOCK];
        let n = DCT_BLOCK as f64;
        for (k, row) in m.iter_mut().enumerate() {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            for (i, v) in row.iter_mut().enumerate() {
                *v = scale * (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2.0 * n)).cos();
            }
        }
        m
    })
}

type Block = [[f64; DCT_BLOCK]; DCT_BLOCK];

fn forward(block: &Block) -> Block {
    let m = dct_basis();
    let mut tmp = [[0.0; DCT_BLOCK]; DCT_BLOCK];
    for k in 0..DCT_BLOCK {
        for x in 0..DCT_BLOCK {
            tmp[k][x] = (0..DCT_BLOCK).map(|y| m[k][y] * block[y][x]).sum();
        }
    }
    let mut out = [[0.0; DCT_BLOCK]; DCT_BLOCK];
    for k in 0..DCT_BLOCK {
        for l in 0..DCT_BLOCK {
            out[k][l] = (0..DCT_BLOCK).map(|x| tmp[k][x] * m[l][x]).sum();
        }
    }
    out
}

fn inverse(coef: &Block) -> Block {
    let m = dct_basis();
    let mut tmp = [[0.0; DCT_BLOCK]; DCT_BLOCK];
    for y in 0..DCT_BLOCK {
        for l in 0..DCT_BLOCK {
            tmp[y][l] = (0..DCT_BLOCK).map(|k| m[k][y] * coef[k][l]).sum();
        }
    }
    let mut out = [[0.0; DCT_BLOCK]; DCT_BLOCK];
    for y in 0..DCT_BLOCK {
        for x in 0..DCT_BLOCK {
            out[y][x] = (0..DCT_BLOCK).map(|l| tmp[y][l] * m[l][x]).sum();
        }
    }
    out
}

/// Block-DCT inter-frame codec with one quantization step per frame.
///
/// Frame 0 is intra-coded; every later frame codes its residual against the
/// previous reconstruction, so quantization loss propagates through time.
/// Sides that are not multiples of 8 are reflect-padded and cropped back.
pub fn surrogate_compress<T: Real>(seq: &FrameSequence<T>, quants: &[f64]) -> Result<FrameSequence<T>, DegradeError> {
    if quants.len() != seq.len() {
        return Err(DegradeError::TimelineLength { timeline: quants.len(), frames: seq.len() });
    }
    if let Some(&q) = quants.iter().find(|q| !(**q > 0.0) || !q.is_finite()) {
        return Err(DegradeError::OutOfRange { param: "video.surrogate_quant", value: q, min: 0.0, max: f64::INFINITY });
    }
    let (h, w, c) = seq.dims();
    let ph = h.div_ceil(DCT_BLOCK) * DCT_BLOCK;
    let pw = w.div_ceil(DCT_BLOCK) * DCT_BLOCK;
    let rows: Vec<usize> = (0..ph).map(|y| Border::Reflect.resolve(y as isize, h).unwrap()).collect();
    let cols: Vec<usize> = (0..pw).map(|x| Border::Reflect.resolve(x as isize, w).unwrap()).collect();

    let mut recon = vec![0.0f64; ph * pw * c];
    let mut out = Vec::with_capacity(seq.len());
    for (frame, &q) in seq.frames().iter().zip(quants) {
        let src = frame.data();
        let mut next = vec![0.0f64; ph * pw * c];
        for by in (0..ph).step_by(DCT_BLOCK) {
            for bx in (0..pw).step_by(DCT_BLOCK) {
                for ch in 0..c {
                    let mut residual = [[0.0; DCT_BLOCK]; DCT_BLOCK];
                    for (dy, row) in residual.iter_mut().enumerate() {
                        for (dx, r) in row.iter_mut().enumerate() {
                            let (y, x) = (by + dy, bx + dx);
                            let cur = src[(rows[y] * w + cols[x]) * c + ch].as_f64();
                            *r = cur - recon[(y * pw + x) * c + ch];
                        }
                    }
                    let mut coef = forward(&residual);
                    for v in coef.iter_mut().flatten() {
                        *v = (*v / q).round() * q;
                    }
                    let decoded = inverse(&coef);
                    for (dy, row) in decoded.iter().enumerate() {
                        for (dx, r) in row.iter().enumerate() {
                            let i = ((by + dy) * pw + bx + dx) * c + ch;
                            next[i] = (recon[i] + r).clamp(0.0, 1.0);
                        }
                    }
                }
            }
        }
        recon = next;
        let mut data = Vec::with_capacity(h * w * c);
        for y in 0..h {
            for x in 0..w {
                for ch in 0..c {
                    data.push(T::of(recon[(y * pw + x) * c + ch]));
                }
            }
        }
        out.push(Image::new(h, w, c, data)?);
    }
    Ok(FrameSequence::new(out)?)
}

/// Compresses a whole sequence with the backend named by `spec`.
pub fn apply_video_compression<T: Real>(
    seq: &FrameSequence<T>,
    spec: &VideoCodecSpec,
    encoder: Option<&ExternalEncoder>,
) -> Result<FrameSequence<T>, DegradeError> {
    match spec.backend {
        CodecBackend::Surrogate => surrogate_compress(seq, &vec![spec.surrogate_quant; seq.len()]),
        CodecBackend::External => encoder.ok_or(DegradeError::EncoderMissing)?.round_trip(seq, spec.codec, spec.bitrate),
    }
}
