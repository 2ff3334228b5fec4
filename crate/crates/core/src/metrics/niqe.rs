//! NIQE: patch features, pristine model fitting and scoring.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::imgcore::{area_downsample, Image};
use crate::scalar::Real;

use super::nss::{fit_aggd, fit_ggd, mscn_maps, MscnMaps};
use super::MetricsError;

pub const NIQE_FEATURES: usize = 36;
pub const DEFAULT_PATCH_SIZE: usize = 96;
pub const DEFAULT_SHARPNESS_FRACTION: f64 = 0.75;
/// Smallest pristine corpus accepted by [`fit_pristine`].
pub const MIN_PRISTINE_IMAGES: usize = 10;

pub const NIQE_MAGIC: &[u8; 4] = b"NIQM";
pub const NIQE_VERSION: u32 = 1;

pub type FeatureVector = [f64; NIQE_FEATURES];

/// Neighbour offsets for the pairwise products: horizontal, vertical, main
/// diagonal, anti-diagonal.
const SHIFTS: [(usize, isize); 4] = [(0, 1), (1, 0), (1, 1), (1, -1)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NiqeParams {
    /// Patch side at full resolution; the half scale uses `patch_size / 2`.
    pub patch_size: usize,
    /// Pristine patches must be at least this fraction of the sharpest patch.
    pub sharpness_fraction: f64,
}

impl Default for NiqeParams {
    fn default() -> Self {
        Self { patch_size: DEFAULT_PATCH_SIZE, sharpness_fraction: DEFAULT_SHARPNESS_FRACTION }
    }
}

impl NiqeParams {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.patch_size < 24 || self.patch_size % 2 != 0 {
            return Err(MetricsError::PatchSize(self.patch_size));
        }
        if !(0.0..=1.0).contains(&self.sharpness_fraction) {
            return Err(MetricsError::SharpnessFraction(self.sharpness_fraction));
        }
        Ok(())
    }
}

/// Features of one patch.
#[derive(Debug, Clone, PartialEq)]
pub struct NiqePatch {
    pub row: usize,
    pub col: usize,
    /// Mean local deviation over the patch at full resolution.
    pub sharpness: f64,
    pub features: FeatureVector,
}

fn scale_features(maps: &MscnMaps, w: usize, top: usize, left: usize, p: usize) -> Result<[f64; 18], MetricsError> {
    let at = |y: usize, x: usize| maps.coeffs[(top + y) * w + left + x];
    let samples: Vec<f64> = (0..p).flat_map(|y| (0..p).map(move |x| (y, x))).map(|(y, x)| at(y, x)).collect();
    let g = fit_ggd(&samples)?;
    let mut out = [0.0; 18];
    out[0] = g.alpha;
    out[1] = g.sigma;
    for (i, &(dy, dx)) in SHIFTS.iter().enumerate() {
        let mut prod = Vec::with_capacity(p * p);
        for y in 0..p - dy {
            for x in 0..p {
                let nx = x as isize + dx;
                if nx < 0 || nx >= p as isize {
                    continue;
                }
                prod.push(at(y, x) * at(y + dy, nx as usize));
            }
        }
        let a = fit_aggd(&prod)?;
        out[2 + 4 * i..6 + 4 * i].copy_from_slice(&[a.alpha, a.mean_offset, a.sigma_left, a.sigma_right]);
    }
    Ok(out)
}

/// Features for every non-overlapping `patch_size` patch of a single-channel
/// image, in row-major patch order.
pub fn niqe_features<T: Real>(gray: &Image<T>, patch_size: usize) -> Result<Vec<NiqePatch>, MetricsError> {
    NiqeParams { patch_size, ..NiqeParams::default() }.validate()?;
    let (h, w, c) = gray.dims();
    if c != 1 {
        return Err(MetricsError::NotGray(c));
    }
    if h < patch_size || w < patch_size {
        return Err(MetricsError::TooSmall { height: h, width: w, patch: patch_size });
    }
    let (rows, cols) = (h / patch_size, w / patch_size);
    let (ch, cw) = (rows * patch_size, cols * patch_size);
    let img = gray.crop(0, 0, ch, cw)?;
    let full = mscn_maps(&img)?;
    let half = mscn_maps(&area_downsample(&img, 2)?)?;
    let hp = patch_size / 2;
    (0..rows * cols)
        .into_par_iter()
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            let f1 = scale_features(&full, cw, r * patch_size, c * patch_size, patch_size)?;
            let f2 = scale_features(&half, cw / 2, r * hp, c * hp, hp)?;
            let mut features = [0.0; NIQE_FEATURES];
            features[..18].copy_from_slice(&f1);
            features[18..].copy_from_slice(&f2);
            let mut sharp = 0.0;
            for y in r * patch_size..(r + 1) * patch_size {
                sharp += full.sigma[y * cw + c * patch_size..y * cw + (c + 1) * patch_size].iter().sum::<f64>();
            }
            Ok(NiqePatch { row: r, col: c, sharpness: sharp / (patch_size * patch_size) as f64, features })
        })
        .collect()
}

/// Mean and unbiased covariance (row-major) of a set of feature vectors.
/// A single vector has zero covariance.
pub fn feature_gaussian(vectors: &[FeatureVector]) -> (FeatureVector, Vec<f64>) {
    let n = vectors.len();
    let mut mu = [0.0; NIQE_FEATURES];
    for v in vectors {
        for (m, x) in mu.iter_mut().zip(v) {
            *m += x;
        }
    }
    mu.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = vec![0.0; NIQE_FEATURES * NIQE_FEATURES];
    if n > 1 {
        for v in vectors {
            for i in 0..NIQE_FEATURES {
                let di = v[i] - mu[i];
                for j in i..NIQE_FEATURES {
                    cov[i * NIQE_FEATURES + j] += di * (v[j] - mu[j]);
                }
            }
        }
        for i in 0..NIQE_FEATURES {
            for j in i..NIQE_FEATURES {
                let c = cov[i * NIQE_FEATURES + j] / (n - 1) as f64;
                cov[i * NIQE_FEATURES + j] = c;
                cov[j * NIQE_FEATURES + i] = c;
            }
        }
    }
    (mu, cov)
}

/// Multivariate Gaussian over pristine patch features.
#[derive(Debug, Clone, PartialEq)]
pub struct NiqeModel {
    pub patch_size: usize,
    pub mu: FeatureVector,
    /// Row-major 36 x 36 covariance.
    pub cov: Vec<f64>,
}

impl NiqeModel {
    pub fn validate(&self) -> Result<(), MetricsError> {
        let n = NIQE_FEATURES;
        if self.cov.len() != n * n {
            return Err(MetricsError::InvalidModel(format!("covariance has {} entries", self.cov.len())));
        }
        if self.mu.iter().chain(&self.cov).any(|v| !v.is_finite()) {
            return Err(MetricsError::InvalidModel("non-finite value".into()));
        }
        for i in 0..n {
            if self.cov[i * n + i] < 0.0 {
                return Err(MetricsError::InvalidModel(format!("negative variance at {i}")));
            }
            for j in 0..i {
                let (a, b) = (self.cov[i * n + j], self.cov[j * n + i]);
                if (a - b).abs() > 1e-9 * a.abs().max(b.abs()).max(1.0) {
                    return Err(MetricsError::InvalidModel(format!("covariance not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 8 * (NIQE_FEATURES + self.cov.len()));
        out.extend_from_slice(NIQE_MAGIC);
        out.extend_from_slice(&NIQE_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.patch_size as u32).to_le_bytes());
        for v in self.mu.iter().chain(&self.cov) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, MetricsError> {
        let n = NIQE_FEATURES;
        let expected = 12 + 8 * (n + n * n);
        if bytes.len() < 4 || &bytes[..4] != NIQE_MAGIC {
            return Err(MetricsError::InvalidModel("bad magic, expected \"NIQM\"".into()));
        }
        if bytes.len() < 12 {
            return Err(MetricsError::InvalidModel(format!("truncated header: {} bytes", bytes.len())));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != NIQE_VERSION {
            return Err(MetricsError::InvalidModel(format!("unsupported version {version}")));
        }
        if bytes.len() != expected {
            return Err(MetricsError::InvalidModel(format!("expected {expected} bytes, found {}", bytes.len())));
        }
        let patch_size = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let vals: Vec<f64> = bytes[12..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let mut mu = [0.0; NIQE_FEATURES];
        mu.copy_from_slice(&vals[..n]);
        let model = Self { patch_size, mu, cov: vals[n..].to_vec() };
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MetricsError> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MetricsError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

/// Fits the pristine model from the sharpest patches of each image.
pub fn fit_pristine<T: Real>(images: &[Image<T>], params: &NiqeParams) -> Result<NiqeModel, MetricsError> {
    params.validate()?;
    if images.len() < MIN_PRISTINE_IMAGES {
        return Err(MetricsError::TooFewImages(images.len()));
    }
    let mut selected = Vec::new();
    for img in images {
        let patches = niqe_features(img, params.patch_size)?;
        let peak = patches.iter().map(|p| p.sharpness).fold(0.0, f64::max);
        let cut = params.sharpness_fraction * peak;
        selected.extend(patches.into_iter().filter(|p| p.sharpness >= cut).map(|p| p.features));
    }
    if selected.len() < NIQE_FEATURES {
        return Err(MetricsError::TooFewPatches(selected.len()));
    }
    let (mu, cov) = feature_gaussian(&selected);
    Ok(NiqeModel { patch_size: params.patch_size, mu, cov })
}

/// Distance between the pristine model and the Gaussian fitted to every patch
/// of `gray`, using the pseudo-inverse of the pooled covariance.
pub fn niqe_score<T: Real>(gray: &Image<T>, model: &NiqeModel) -> Result<f64, MetricsError> {
    model.validate()?;
    let feats: Vec<FeatureVector> = niqe_features(gray, model.patch_size)?.into_iter().map(|p| p.features).collect();
    let (mu, cov) = feature_gaussian(&feats);
    let n = NIQE_FEATURES;
    let pooled = DMatrix::from_fn(n, n, |i, j| (model.cov[i * n + j] + cov[i * n + j]) / 2.0);
    let d = DVector::from_fn(n, |i, _| model.mu[i] - mu[i]);
    if d.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let svd = pooled.svd(true, true);
    let tol = svd.singular_values.max() * n as f64 * f64::EPSILON;
    let pinv = svd.pseudo_inverse(tol).map_err(|e| MetricsError::InvalidModel(e.into()))?;
    Ok(d.dot(&(pinv * &d)).max(0.0).sqrt())
}
