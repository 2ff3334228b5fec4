//! Versioned TOML run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use vsrkit::cleaner::{load_weights, CleanerModel};
use vsrkit::degrade::{CodecBackend, DegradeRanges, EncoderTemplate, ExternalEncoder};
use vsrkit::loader::{Scheme, DEFAULT_PATTERN};
use vsrkit::refine::{RefineConfig, DEFAULT_MAX_ITERS, DEFAULT_THETA};
use vsrkit::schedule::{Component, ParamSpace, WalkSpec, DEFAULT_STEP_FRACTION};

pub const CONFIG_VERSION: u32 = 1;
/// Path of a TOML encoder template; selects the external video backend.
pub const ENCODER_TEMPLATE_ENV: &str = "VSRKIT_ENCODER_TEMPLATE";

/// Problem with the user's configuration or flags, reported as a usage error.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub seed: Option<u64>,
    #[serde(default)]
    pub degrade: DegradeRanges,
    #[serde(default)]
    pub walk: WalkConfig,
    #[serde(default)]
    pub loader: LoaderConfig,
    #[serde(default)]
    pub refine: RefineSection,
    #[serde(default)]
    pub encoder: EncoderSection,
    #[serde(default)]
    pub paths: PathsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkConfig {
    /// Step standard deviation as a fraction of each component's range.
    pub step_fraction: f64,
    /// Per-component overrides in physical units, keyed like `blur1.sigma_x`.
    pub steps: BTreeMap<String, f64>,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self { step_fraction: DEFAULT_STEP_FRACTION, steps: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoaderConfig {
    pub scheme: String,
    pub length: usize,
    pub iterations: usize,
    pub latency_ms: f64,
    pub pattern: String,
    pub patch_size: usize,
}

impl Default for LoaderConfig {
    fn default() -> Self {
        Self {
            scheme: "stochastic".into(),
            length: 30,
            iterations: 50,
            latency_ms: 0.0,
            pattern: DEFAULT_PATTERN.into(),
            patch_size: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineSection {
    /// One of identity, median, gaussian, box, cnn.
    pub cleaner: String,
    pub median_size: usize,
    pub box_size: usize,
    pub gaussian_sigma: f64,
    pub weights: Option<PathBuf>,
    pub theta: f64,
    pub max_iters: usize,
}

impl Default for RefineSection {
    fn default() -> Self {
        Self {
            cleaner: "median".into(),
            median_size: 3,
            box_size: 3,
            gaussian_sigma: 1.0,
            weights: None,
            theta: DEFAULT_THETA,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSection {
    pub backend: Option<CodecBackend>,
    /// TOML file holding the encode/decode command templates.
    pub template: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: None,
            degrade: DegradeRanges::default(),
            walk: WalkConfig::default(),
            loader: LoaderConfig::default(),
            refine: RefineSection::default(),
            encoder: EncoderSection::default(),
            paths: PathsConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| usage(format!("invalid config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            bail!(usage(format!("version: unsupported config version {} (expected {CONFIG_VERSION})", self.version)));
        }
        self.degrade.validate().map_err(|e| usage(format!("degrade: {e}")))?;
        self.walk_spec(0)?;
        self.scheme()?;
        RefineConfig::new(self.refine.theta, self.refine.max_iters).map_err(|e| usage(format!("refine: {e}")))?;
        if self.loader.length == 0 || self.loader.iterations == 0 {
            bail!(usage("loader: length and iterations must be positive"));
        }
        if !(self.loader.latency_ms >= 0.0 && self.loader.latency_ms.is_finite()) {
            bail!(usage("loader.latency_ms: must be a non-negative number"));
        }
        Ok(())
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| usage("seed: required (set it in the config or pass --seed)"))
    }

    pub fn scheme(&self) -> Result<Scheme> {
        self.loader.scheme.parse().map_err(|e| usage(format!("loader.scheme: {e}")))
    }

    pub fn walk_spec(&self, seed: u64) -> Result<WalkSpec> {
        let w = &self.walk;
        if !(w.step_fraction >= 0.0 && w.step_fraction.is_finite()) {
            bail!(usage("walk.step_fraction: must be a non-negative number"));
        }
        let mut spec = WalkSpec::with_step_fraction(ParamSpace::from_ranges(&self.degrade), w.step_fraction, seed);
        for (name, &step) in &w.steps {
            let c = Component::from_name(name).ok_or_else(|| usage(format!("walk.steps: unknown component '{name}'")))?;
            if !(step >= 0.0 && step.is_finite()) {
                bail!(usage(format!("walk.steps.{name}: must be a non-negative number")));
            }
            spec.steps[c.index()] = step;
        }
        Ok(spec)
    }

    pub fn refine_config(&self) -> Result<RefineConfig> {
        RefineConfig::new(self.refine.theta, self.refine.max_iters).map_err(|e| usage(format!("refine: {e}")))
    }

    pub fn cleaner(&self) -> Result<CleanerModel> {
        let r = &self.refine;
        let model = match r.cleaner.as_str() {
            "identity" => CleanerModel::Identity,
            "median" => CleanerModel::Median(r.median_size),
            "gaussian" => CleanerModel::GaussianDenoise(r.gaussian_sigma),
            "box" => CleanerModel::BoxBlur(r.box_size),
            "cnn" => {
                let path = r.weights.as_ref().ok_or_else(|| usage("refine.weights: required for the cnn cleaner"))?;
                let w = load_weights(path).with_context(|| format!("loading weights {}", path.display()))?;
                CleanerModel::Cnn(Arc::new(w))
            }
            other => bail!(usage(format!("refine.cleaner: unknown cleaner '{other}'"))),
        };
        model.validate().map_err(|e| usage(format!("refine: {e}")))?;
        Ok(model)
    }

    /// External encoder when selected by the config or the environment.
    pub fn encoder(&self) -> Result<Option<ExternalEncoder>> {
        let template_path = self.encoder.template.clone().or_else(|| std::env::var_os(ENCODER_TEMPLATE_ENV).map(PathBuf::from));
        let backend = self.encoder.backend.unwrap_or(if template_path.is_some() {
            CodecBackend::External
        } else {
            CodecBackend::Surrogate
        });
        if backend == CodecBackend::Surrogate {
            return Ok(None);
        }
        let template = match template_path {
            Some(p) => {
                let text = std::fs::read_to_string(&p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
                toml::from_str::<EncoderTemplate>(&text)
                    .map_err(|e| usage(format!("{}: invalid encoder template: {}", p.display(), e.message())))?
            }
            None => EncoderTemplate::default(),
        };
        Ok(Some(ExternalEncoder::new(template)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::parse("version = 1\nseed = 7\n").unwrap();
        assert_eq!(cfg.seed().unwrap(), 7);
        assert_eq!(cfg.degrade, DegradeRanges::default());
        assert_eq!(cfg.scheme().unwrap(), Scheme::Stochastic);
    }

    #[test]
    fn missing_seed_is_a_usage_error() {
        let cfg = RunConfig::parse("version = 1\n").unwrap();
        let err = cfg.seed().unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
        assert!(err.to_string().contains("seed"));
    }

    #[test]
    fn unknown_field_is_named() {
        let err = RunConfig::parse("version = 1\nseed = 1\n[degrade]\nblur_sigmas = [0.1, 0.2]\n").unwrap_err();
        assert!(err.to_string().contains("blur_sigmas"), "{err}");
    }

    #[test]
    fn wrong_version_rejected() {
        assert!(RunConfig::parse("version = 2\nseed = 1\n").unwrap_err().to_string().contains("version"));
    }

    #[test]
    fn invalid_range_is_named() {
        let err = RunConfig::parse("version = 1\nseed = 1\n[degrade]\nblur_sigma = [3.0, 1.0]\n").unwrap_err();
        assert!(err.to_string().contains("degrade"), "{err}");
    }

    #[test]
    fn step_overrides_apply() {
        let cfg = RunConfig::parse("version = 1\nseed = 1\n[walk.steps]\n\"video.bitrate\" = 0.0\n").unwrap();
        let spec = cfg.walk_spec(1).unwrap();
        assert_eq!(spec.steps[Component::Bitrate.index()], 0.0);
        assert!(RunConfig::parse("version = 1\n[walk.steps]\nnope = 1.0\n").is_err());
    }

    #[test]
    fn cleaner_selection() {
        let mut cfg = RunConfig::default();
        cfg.refine.cleaner = "gaussian".into();
        assert!(matches!(cfg.cleaner().unwrap(), CleanerModel::GaussianDenoise(_)));
        cfg.refine.cleaner = "cnn".into();
        assert!(cfg.cleaner().unwrap_err().downcast_ref::<UsageError>().is_some());
        cfg.refine.cleaner = "wavelet".into();
        assert!(cfg.cleaner().is_err());
    }

    #[test]
    fn default_config_round_trips_through_toml() {
        let mut cfg = RunConfig::default();
        cfg.seed = Some(3);
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
    }
}
