//! BRISQUE-style spatial features with an optional linear regressor.

use std::path::Path;

use crate::imgcore::{area_downsample, Image};
use crate::scalar::Real;

use super::nss::{fit_aggd, fit_ggd, mscn_maps};
use super::MetricsError;

pub const BRISQUE_FEATURES: usize = 36;

fn scale_features(coeffs: &[f64], h: usize, w: usize) -> Result<[f64; 18], MetricsError> {
    let g = fit_ggd(coeffs)?;
    let mut out = [0.0; 18];
    out[0] = g.alpha;
    out[1] = g.sigma * g.sigma;
    let shifts: [(usize, isize); 4] = [(0, 1), (1, 0), (1, 1), (1, -1)];
    for (i, (dy, dx)) in shifts.into_iter().enumerate() {
        let mut prod = Vec::with_capacity(h * w);
        for y in 0..h - dy {
            for x in 0..w {
                let nx = x as isize + dx;
                if (0..w as isize).contains(&nx) {
                    prod.push(coeffs[y * w + x] * coeffs[(y + dy) * w + nx as usize]);
                }
            }
        }
        let a = fit_aggd(&prod)?;
        out[2 + 4 * i..6 + 4 * i].copy_from_slice(&[
            a.alpha,
            a.mean_offset,
            a.sigma_left * a.sigma_left,
            a.sigma_right * a.sigma_right,
        ]);
    }
    Ok(out)
}

/// Whole-image features at full and half resolution: per scale the GGD shape
/// and variance of the MSCN map, then shape, mean and left/right variances of
/// the AGGD fitted to each of the four neighbour products.
pub fn brisque_features<T: Real>(gray: &Image<T>) -> Result<[f64; BRISQUE_FEATURES], MetricsError> {
    let (h, w, c) = gray.dims();
    if c != 1 {
        return Err(MetricsError::NotGray(c));
    }
    let (eh, ew) = (h - h % 2, w - w % 2);
    if eh < 14 || ew < 14 {
        return Err(MetricsError::TooSmall { height: h, width: w, patch: 14 });
    }
    let img = gray.crop(0, 0, eh, ew)?;
    let full = mscn_maps(&img)?;
    let half = mscn_maps(&area_downsample(&img, 2)?)?;
    let mut out = [0.0; BRISQUE_FEATURES];
    out[..18].copy_from_slice(&scale_features(&full.coeffs, eh, ew)?);
    out[18..].copy_from_slice(&scale_features(&half.coeffs, eh / 2, ew / 2)?);
    Ok(out)
}

/// Linear quality regressor over the BRISQUE features.
///
/// Text form: whitespace-separated numbers, the bias first and then one
/// weight per feature. Lines starting with `#` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct BrisqueModel {
    pub bias: f64,
    pub weights: [f64; BRISQUE_FEATURES],
}

impl BrisqueModel {
    pub fn parse(text: &str) -> Result<Self, MetricsError> {
        let vals = text
            .lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .flat_map(str::split_whitespace)
            .map(|t| t.parse::<f64>().map_err(|_| MetricsError::InvalidModel(format!("not a number: {t:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if vals.len() != BRISQUE_FEATURES + 1 {
            return Err(MetricsError::InvalidModel(format!(
                "expected {} numbers, found {}",
                BRISQUE_FEATURES + 1,
                vals.len()
            )));
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(MetricsError::InvalidModel("non-finite coefficient".into()));
        }
        let mut weights = [0.0; BRISQUE_FEATURES];
        weights.copy_from_slice(&vals[1..]);
        Ok(Self { bias: vals[0], weights })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MetricsError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn score(&self, features: &[f64; BRISQUE_FEATURES]) -> f64 {
        self.bias + self.weights.iter().zip(features).map(|(w, f)| w * f).sum::<f64>()
    }
}
