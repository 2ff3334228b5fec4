use crate::imgcore::{area_downsample, Image};
use crate::scalar::Real;

use super::{DegradeError, ResizeMode, ResizeSpec};

const CUBIC_A: f64 = -0.75;

/// Resamples by `spec.scale`, rounding each output side to the nearest pixel.
pub fn apply_resize<T: Real>(img: &Image<T>, spec: &ResizeSpec) -> Result<Image<T>, DegradeError> {
    let oh = (img.height() as f64 * spec.scale).round();
    let ow = (img.width() as f64 * spec.scale).round();
    if !(oh >= 1.0 && ow >= 1.0) {
        return Err(DegradeError::DegenerateResize { height: oh as i64, width: ow as i64, scale: spec.scale });
    }
    resize_to(img, oh as usize, ow as usize, spec.mode)
}

/// Resamples to an explicit output size.
///
/// Sampling follows the half-pixel convention; `area` averages the input
/// cells each output cell overlaps (adaptive average pooling) and reduces to
/// exact block means for integer factors.
pub fn resize_to<T: Real>(img: &Image<T>, out_h: usize, out_w: usize, mode: ResizeMode) -> Result<Image<T>, DegradeError> {
    let (h, w, c) = img.dims();
    if out_h == 0 || out_w == 0 {
        return Err(DegradeError::DegenerateResize { height: out_h as i64, width: out_w as i64, scale: 0.0 });
    }
    if (out_h, out_w) == (h, w) {
        return Ok(img.clone());
    }
    if mode == ResizeMode::Area && h % out_h == 0 && w % out_w == 0 && h / out_h == w / out_w {
        return Ok(area_downsample(img, h / out_h)?);
    }
    let row_taps = axis_taps(h, out_h, mode);
    let col_taps = axis_taps(w, out_w, mode);
    let src = img.data();

    // Columns first into an h x out_w buffer, then rows.
    let mut tmp = vec![0.0f64; h * out_w * c];
    for y in 0..h {
        for (ox, taps) in col_taps.iter().enumerate() {
            for ch in 0..c {
                let mut acc = 0.0;
                for &(sx, wt) in taps {
                    acc += wt * src[(y * w + sx) * c + ch].as_f64();
                }
                tmp[(y * out_w + ox) * c + ch] = acc;
            }
        }
    }
    let mut out = Vec::with_capacity(out_h * out_w * c);
    for taps in &row_taps {
        for ox in 0..out_w {
            for ch in 0..c {
                let mut acc = 0.0;
                for &(sy, wt) in taps {
                    acc += wt * tmp[(sy * out_w + ox) * c + ch];
                }
                if mode == ResizeMode::Bicubic {
                    acc = acc.clamp(0.0, 1.0);
                }
                out.push(T::of(acc));
            }
        }
    }
    Ok(Image::new(out_h, out_w, c, out)?)
}

fn cubic(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        ((CUBIC_A + 2.0) * x - (CUBIC_A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((CUBIC_A * x - 5.0 * CUBIC_A) * x + 8.0 * CUBIC_A) * x - 4.0 * CUBIC_A
    } else {
        0.0
    }
}

/// Source taps `(index, weight)` for every output coordinate along one axis.
fn axis_taps(n_in: usize, n_out: usize, mode: ResizeMode) -> Vec<Vec<(usize, f64)>> {
    let ratio = n_in as f64 / n_out as f64;
    (0..n_out)
        .map(|o| match mode {
            ResizeMode::Nearest => vec![(((o * n_in) / n_out).min(n_in - 1), 1.0)],
            ResizeMode::Area => {
                let start = (o * n_in) / n_out;
                let end = ((o + 1) * n_in).div_ceil(n_out);
                let wt = 1.0 / (end - start) as f64;
                (start..end).map(|i| (i, wt)).collect()
            }
            ResizeMode::Bilinear => {
                let src = ((o as f64 + 0.5) * ratio - 0.5).max(0.0);
                let i0 = (src.floor() as usize).min(n_in - 1);
                let i1 = (i0 + 1).min(n_in - 1);
                let t = src - i0 as f64;
                vec![(i0, 1.0 - t), (i1, t)]
            }
            ResizeMode::Bicubic => {
                let src = (o as f64 + 0.5) * ratio - 0.5;
                let base = src.floor();
                let t = src - base;
                (-1..=2)
                    .map(|k| {
                        let idx = (base as isize + k).clamp(0, n_in as isize - 1) as usize;
                        (idx, cubic(k as f64 - t))
                    })
                    .collect()
            }
        })
        .collect()
}
