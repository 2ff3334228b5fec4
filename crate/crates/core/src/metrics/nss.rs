//! Natural-scene statistics: MSCN coefficients and generalized Gaussian fits.

use std::sync::OnceLock;

use statrs::function::gamma::ln_gamma;

use crate::imgcore::{gaussian_kernel, Border, Image};
use crate::scalar::Real;

use super::MetricsError;

/// Side of the local weighting window.
pub const MSCN_WINDOW: usize = 7;
/// Standard deviation of the local weighting window, in pixels.
pub const MSCN_SIGMA: f64 = 7.0 / 6.0;
/// Stabilizing constant added to the local deviation (0-255 intensity scale).
pub const MSCN_C: f64 = 1.0;
/// Smallest sample count accepted by the distribution fits.
pub const MIN_FIT_SAMPLES: usize = 100;

pub const ALPHA_MIN: f64 = 0.2;
pub const ALPHA_MAX: f64 = 10.0;
pub const ALPHA_STEP: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgdFit {
    pub alpha: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggdFit {
    pub alpha: f64,
    pub mean_offset: f64,
    pub sigma_left: f64,
    pub sigma_right: f64,
}

/// MSCN coefficients and the local deviation map, both row-major.
pub(crate) struct MscnMaps {
    pub coeffs: Vec<f64>,
    pub sigma: Vec<f64>,
}

pub(crate) fn mscn_maps<T: Real>(gray: &Image<T>) -> Result<MscnMaps, MetricsError> {
    let (h, w, c) = gray.dims();
    if c != 1 {
        return Err(MetricsError::NotGray(c));
    }
    let k = gaussian_kernel::<f64>(MSCN_WINDOW, MSCN_SIGMA, MSCN_SIGMA, 0.0)?;
    let r = k.radius() as isize;
    let px: Vec<f64> = gray.data().iter().map(|v| v.as_f64() * 255.0).collect();
    let rows: Vec<usize> = (-r..h as isize + r).map(|i| Border::Replicate.resolve(i, h).unwrap()).collect();
    let cols: Vec<usize> = (-r..w as isize + r).map(|i| Border::Replicate.resolve(i, w).unwrap()).collect();
    let mut coeffs = Vec::with_capacity(h * w);
    let mut sigma = Vec::with_capacity(h * w);
    for y in 0..h {
        for x in 0..w {
            // Moments about the centre sample keep flat regions exactly zero.
            let centre = px[y * w + x];
            let (mut m1, mut m2) = (0.0, 0.0);
            for ky in 0..k.size() {
                let row = rows[y + ky] * w;
                for kx in 0..k.size() {
                    let d = px[row + cols[x + kx]] - centre;
                    let wt = k.at(ky, kx);
                    m1 += wt * d;
                    m2 += wt * d * d;
                }
            }
            let s = (m2 - m1 * m1).max(0.0).sqrt();
            coeffs.push(-m1 / (s + MSCN_C));
            sigma.push(s);
        }
    }
    Ok(MscnMaps { coeffs, sigma })
}

/// Mean-subtracted contrast-normalized coefficients `(I - mu) / (sigma + 1)`
/// of a single-channel image, with `I` on the 0-255 scale and `mu`, `sigma`
/// the Gaussian-weighted local mean and deviation (replicated borders).
pub fn mscn<T: Real>(gray: &Image<T>) -> Result<Image<T>, MetricsError> {
    let maps = mscn_maps(gray)?;
    Ok(Image::new(gray.height(), gray.width(), 1, maps.coeffs.into_iter().map(T::of).collect())?)
}

/// `Gamma(1/a) Gamma(3/a) / Gamma(2/a)^2` on the shape grid.
fn rho_table() -> &'static [(f64, f64)] {
    static TABLE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = ((ALPHA_MAX - ALPHA_MIN) / ALPHA_STEP).round() as usize;
        (0..=n)
            .map(|i| {
                let a = ALPHA_MIN + i as f64 * ALPHA_STEP;
                (a, (ln_gamma(1.0 / a) + ln_gamma(3.0 / a) - 2.0 * ln_gamma(2.0 / a)).exp())
            })
            .collect()
    })
}

fn alpha_for_rho(target: f64) -> f64 {
    let mut best = (f64::INFINITY, ALPHA_MIN);
    for &(a, rho) in rho_table() {
        let d = (rho - target).abs();
        if d < best.0 {
            best = (d, a);
        }
    }
    best.1
}

fn check_samples(samples: &[f64]) -> Result<(), MetricsError> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(MetricsError::TooFewSamples(samples.len()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(MetricsError::Degenerate("non-finite sample"));
    }
    Ok(())
}

/// Moment-matching fit of a zero-mean generalized Gaussian.
pub fn fit_ggd(samples: &[f64]) -> Result<GgdFit, MetricsError> {
    check_samples(samples)?;
    let n = samples.len() as f64;
    let m1 = samples.iter().map(|v| v.abs()).sum::<f64>() / n;
    let m2 = samples.iter().map(|v| v * v).sum::<f64>() / n;
    if m2 == 0.0 {
        return Err(MetricsError::Degenerate("zero variance"));
    }
    Ok(GgdFit { alpha: alpha_for_rho(m2 / (m1 * m1)), sigma: m2.sqrt() })
}

/// Moment-matching fit of an asymmetric generalized Gaussian with separate
/// left and right scales.
pub fn fit_aggd(samples: &[f64]) -> Result<AggdFit, MetricsError> {
    check_samples(samples)?;
    let (mut nl, mut sl, mut nr, mut sr) = (0usize, 0.0, 0usize, 0.0);
    let mut abs_sum = 0.0;
    for &v in samples {
        abs_sum += v.abs();
        if v < 0.0 {
            nl += 1;
            sl += v * v;
        } else if v > 0.0 {
            nr += 1;
            sr += v * v;
        }
    }
    if nl == 0 || nr == 0 {
        return Err(MetricsError::Degenerate("samples lie on one side of zero"));
    }
    let n = samples.len() as f64;
    let sigma_left = (sl / nl as f64).sqrt();
    let sigma_right = (sr / nr as f64).sqrt();
    let gamma = sigma_left / sigma_right;
    let m1 = abs_sum / n;
    let m2 = (sl + sr) / n;
    let r_hat = m1 * m1 / m2;
    let big_r = r_hat * (gamma.powi(3) + 1.0) * (gamma + 1.0) / (gamma * gamma + 1.0).powi(2);
    let alpha = alpha_for_rho(1.0 / big_r);
    let g1 = ln_gamma(1.0 / alpha);
    let g2 = ln_gamma(2.0 / alpha);
    let g3 = ln_gamma(3.0 / alpha);
    let beta_scale = (0.5 * (g1 - g3)).exp();
    let mean_offset = (sigma_right - sigma_left) * beta_scale * (g2 - g1).exp();
    Ok(AggdFit { alpha, mean_offset, sigma_left, sigma_right })
}
