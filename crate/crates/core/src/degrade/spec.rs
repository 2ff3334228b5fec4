use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DegradeError;

/// `surrogate_quant = SURROGATE_QUANT_K / bitrate`. At the bitrate range
/// `[1e4, 1e5]` this gives DCT quantization steps in `[0.05, 0.5]` on
/// orthonormal 8x8 coefficients of `[0, 1]` intensities.
pub const SURROGATE_QUANT_K: f64 = 5000.0;

/// Sampling ranges for every degradation parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegradeRanges {
    /// Odd kernel sides, inclusive.
    pub blur_kernel_size: (usize, usize),
    pub blur_sigma: (f64, f64),
    pub blur_rotation: (f64, f64),
    pub resize_scale: (f64, f64),
    pub resize_modes: Vec<ResizeMode>,
    /// Gaussian noise standard deviation on `[0, 1]` intensities.
    pub gaussian_sigma: (f64, f64),
    pub poisson_scale: (f64, f64),
    /// Probability of Gaussian (vs Poisson) noise for a sequence.
    pub gaussian_noise_prob: f64,
    pub gray_noise_prob: f64,
    pub jpeg_quality: (f64, f64),
    pub bitrate: (f64, f64),
    pub codecs: Vec<CodecName>,
}

impl Default for DegradeRanges {
    fn default() -> Self {
        Self {
            blur_kernel_size: (7, 21),
            blur_sigma: (0.2, 3.0),
            blur_rotation: (0.0, PI),
            resize_scale: (0.15, 1.5),
            resize_modes: vec![ResizeMode::Area, ResizeMode::Bilinear, ResizeMode::Bicubic],
            gaussian_sigma: (1.0 / 255.0, 30.0 / 255.0),
            poisson_scale: (0.05, 3.0),
            gaussian_noise_prob: 0.5,
            gray_noise_prob: 0.4,
            jpeg_quality: (30.0, 95.0),
            bitrate: (1e4, 1e5),
            codecs: vec![CodecName::Libx264, CodecName::H264, CodecName::Mpeg4],
        }
    }
}

fn check_range(param: &'static str, (min, max): (f64, f64)) -> Result<(), DegradeError> {
    if !(min.is_finite() && max.is_finite() && min <= max) {
        return Err(DegradeError::InvalidRange { param, min, max });
    }
    Ok(())
}

fn check_value(param: &'static str, value: f64, (min, max): (f64, f64)) -> Result<(), DegradeError> {
    if !(value >= min && value <= max) {
        return Err(DegradeError::OutOfRange { param, value, min, max });
    }
    Ok(())
}

impl DegradeRanges {
    pub fn validate(&self) -> Result<(), DegradeError> {
        let (kmin, kmax) = self.blur_kernel_size;
        if kmin % 2 == 0 || kmax % 2 == 0 || kmin < 1 || kmin > kmax {
            return Err(DegradeError::InvalidRange { param: "blur_kernel_size", min: kmin as f64, max: kmax as f64 });
        }
        check_range("blur_sigma", self.blur_sigma)?;
        if self.blur_sigma.0 <= 0.0 {
            return Err(DegradeError::InvalidRange {
                param: "blur_sigma",
                min: self.blur_sigma.0,
                max: self.blur_sigma.1,
            });
        }
        check_range("blur_rotation", self.blur_rotation)?;
        check_range("resize_scale", self.resize_scale)?;
        if self.resize_scale.0 <= 0.0 {
            return Err(DegradeError::InvalidRange {
                param: "resize_scale",
                min: self.resize_scale.0,
                max: self.resize_scale.1,
            });
        }
        check_range("gaussian_sigma", self.gaussian_sigma)?;
        check_range("poisson_scale", self.poisson_scale)?;
        if self.gaussian_sigma.0 < 0.0 || self.poisson_scale.0 < 0.0 {
            return Err(DegradeError::InvalidRange { param: "noise", min: -1.0, max: 0.0 });
        }
        check_range("jpeg_quality", self.jpeg_quality)?;
        if self.jpeg_quality.0 < 1.0 || self.jpeg_quality.1 > 100.0 {
            return Err(DegradeError::InvalidRange {
                param: "jpeg_quality",
                min: self.jpeg_quality.0,
                max: self.jpeg_quality.1,
            });
        }
        check_range("bitrate", self.bitrate)?;
        if self.bitrate.0 <= 0.0 {
            return Err(DegradeError::InvalidRange { param: "bitrate", min: self.bitrate.0, max: self.bitrate.1 });
        }
        for (param, p) in [("gaussian_noise_prob", self.gaussian_noise_prob), ("gray_noise_prob", self.gray_noise_prob)] {
            check_value(param, p, (0.0, 1.0))?;
        }
        if self.resize_modes.is_empty() {
            return Err(DegradeError::EmptyChoice("resize_modes"));
        }
        if self.codecs.is_empty() {
            return Err(DegradeError::EmptyChoice("codecs"));
        }
        Ok(())
    }

    /// All odd kernel sides in the configured range.
    pub fn kernel_sizes(&self) -> Vec<usize> {
        (self.blur_kernel_size.0..=self.blur_kernel_size.1).step_by(2).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlurSpec {
    pub kernel_size: usize,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub rotation: f64,
}

impl BlurSpec {
    pub fn new(kernel_size: usize, sigma_x: f64, sigma_y: f64, rotation: f64) -> Result<Self, DegradeError> {
        let spec = Self { kernel_size, sigma_x, sigma_y, rotation };
        spec.validate(&DegradeRanges::default())?;
        Ok(spec)
    }

    pub fn validate(&self, ranges: &DegradeRanges) -> Result<(), DegradeError> {
        let (kmin, kmax) = ranges.blur_kernel_size;
        if self.kernel_size % 2 == 0 || self.kernel_size < kmin || self.kernel_size > kmax {
            return Err(DegradeError::OutOfRange {
                param: "blur.kernel_size",
                value: self.kernel_size as f64,
                min: kmin as f64,
                max: kmax as f64,
            });
        }
        check_value("blur.sigma_x", self.sigma_x, ranges.blur_sigma)?;
        check_value("blur.sigma_y", self.sigma_y, ranges.blur_sigma)?;
        check_value("blur.rotation", self.rotation, ranges.blur_rotation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResizeMode {
    Area,
    Bilinear,
    Bicubic,
    Nearest,
}

impl ResizeMode {
    pub const ALL: [ResizeMode; 4] = [ResizeMode::Area, ResizeMode::Bilinear, ResizeMode::Bicubic, ResizeMode::Nearest];

    pub fn name(self) -> &'static str {
        match self {
            ResizeMode::Area => "area",
            ResizeMode::Bilinear => "bilinear",
            ResizeMode::Bicubic => "bicubic",
            ResizeMode::Nearest => "nearest",
        }
    }
}

impl fmt::Display for ResizeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ResizeMode {
    type Err = DegradeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| DegradeError::UnknownName { kind: "resize mode", name: s.to_string() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResizeSpec {
    pub scale: f64,
    pub mode: ResizeMode,
}

impl ResizeSpec {
    pub fn new(scale: f64, mode: ResizeMode) -> Result<Self, DegradeError> {
        let spec = Self { scale, mode };
        spec.validate(&DegradeRanges::default())?;
        Ok(spec)
    }

    pub fn validate(&self, ranges: &DegradeRanges) -> Result<(), DegradeError> {
        check_value("resize.scale", self.scale, ranges.resize_scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    /// Additive Gaussian noise with standard deviation `sigma`.
    Gaussian { sigma: f64 },
    /// Photon-count noise scaled by `scale`.
    Poisson { scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Share one noise field across all channels.
    pub gray_noise: bool,
}

impl NoiseSpec {
    pub fn gaussian(sigma: f64, gray_noise: bool) -> Result<Self, DegradeError> {
        let spec = Self { kind: NoiseKind::Gaussian { sigma }, gray_noise };
        spec.validate(&DegradeRanges::default())?;
        Ok(spec)
    }

    pub fn poisson(scale: f64, gray_noise: bool) -> Result<Self, DegradeError> {
        let spec = Self { kind: NoiseKind::Poisson { scale }, gray_noise };
        spec.validate(&DegradeRanges::default())?;
        Ok(spec)
    }

    pub fn validate(&self, ranges: &DegradeRanges) -> Result<(), DegradeError> {
        match self.kind {
            NoiseKind::Gaussian { sigma } => check_value("noise.sigma", sigma, ranges.gaussian_sigma),
            NoiseKind::Poisson { scale } => check_value("noise.poisson_scale", scale, ranges.poisson_scale),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JpegSpec {
    pub quality: u8,
}

impl JpegSpec {
    pub fn new(quality: u8) -> Result<Self, DegradeError> {
        let spec = Self { quality };
        spec.validate(&DegradeRanges::default())?;
        Ok(spec)
    }

    pub fn validate(&self, ranges: &DegradeRanges) -> Result<(), DegradeError> {
        check_value("jpeg.quality", self.quality as f64, ranges.jpeg_quality)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodecName {
    Libx264,
    H264,
    Mpeg4,
}

impl CodecName {
    pub const ALL: [CodecName; 3] = [CodecName::Libx264, CodecName::H264, CodecName::Mpeg4];

    pub fn name(self) -> &'static str {
        match self {
            CodecName::Libx264 => "libx264",
            CodecName::H264 => "h264",
            CodecName::Mpeg4 => "mpeg4",
        }
    }
}

impl fmt::Display for CodecName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CodecName {
    type Err = DegradeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| DegradeError::UnknownName { kind: "codec", name: s.to_string() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodecBackend {
    /// Built-in block-DCT inter-frame codec.
    Surrogate,
    /// Frames piped through a configured encoder command.
    External,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VideoCodecSpec {
    pub backend: CodecBackend,
    pub codec: CodecName,
    pub bitrate: u32,
    /// DCT quantization step of the surrogate codec.
    pub surrogate_quant: f64,
}

impl VideoCodecSpec {
    /// Spec for a bitrate within the default range; the surrogate step follows the bitrate.
    pub fn new(backend: CodecBackend, codec: CodecName, bitrate: u32) -> Result<Self, DegradeError> {
        check_value("video.bitrate", bitrate as f64, DegradeRanges::default().bitrate)?;
        Ok(Self::from_bitrate(backend, codec, bitrate))
    }

    pub(crate) fn from_bitrate(backend: CodecBackend, codec: CodecName, bitrate: u32) -> Self {
        Self { backend, codec, bitrate, surrogate_quant: SURROGATE_QUANT_K / bitrate.max(1) as f64 }
    }

    /// Surrogate spec with an explicit quantization step, bypassing the bitrate mapping.
    pub fn surrogate_with_quant(quant: f64) -> Result<Self, DegradeError> {
        if !(quant > 0.0) || !quant.is_finite() {
            return Err(DegradeError::OutOfRange { param: "video.surrogate_quant", value: quant, min: 0.0, max: f64::INFINITY });
        }
        Ok(Self {
            backend: CodecBackend::Surrogate,
            codec: CodecName::Libx264,
            bitrate: (SURROGATE_QUANT_K / quant).round().clamp(1.0, u32::MAX as f64) as u32,
            surrogate_quant: quant,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        DegradeRanges::default().validate().unwrap();
        assert_eq!(DegradeRanges::default().kernel_sizes(), vec![7, 9, 11, 13, 15, 17, 19, 21]);
    }

    #[test]
    fn spec_ranges_enforced() {
        assert!(BlurSpec::new(7, 0.2, 3.0, 0.0).is_ok());
        assert!(BlurSpec::new(8, 1.0, 1.0, 0.0).is_err());
        assert!(BlurSpec::new(23, 1.0, 1.0, 0.0).is_err());
        assert!(BlurSpec::new(7, 0.1, 1.0, 0.0).is_err());
        assert!(ResizeSpec::new(0.1, ResizeMode::Area).is_err());
        assert!(ResizeSpec::new(1.5, ResizeMode::Nearest).is_ok());
        assert!(NoiseSpec::gaussian(31.0 / 255.0, false).is_err());
        assert!(NoiseSpec::poisson(3.0, true).is_ok());
        assert!(JpegSpec::new(29).is_err());
        assert!(JpegSpec::new(95).is_ok());
        assert!(VideoCodecSpec::new(CodecBackend::Surrogate, CodecName::Mpeg4, 9_999).is_err());
        let v = VideoCodecSpec::new(CodecBackend::External, CodecName::H264, 10_000).unwrap();
        assert!((v.surrogate_quant - 0.5).abs() < 1e-12);
    }

    #[test]
    fn names_round_trip() {
        for m in ResizeMode::ALL {
            assert_eq!(m.name().parse::<ResizeMode>().unwrap(), m);
        }
        for c in CodecName::ALL {
            assert_eq!(c.to_string().parse::<CodecName>().unwrap(), c);
        }
        assert!("vp9".parse::<CodecName>().is_err());
    }
}
