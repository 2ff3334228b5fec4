//! Test-time refinement: repeated cleaning until successive outputs settle.

use std::fmt;

use thiserror::Error;

use crate::cleaner::{clean, CleanerError, CleanerModel};
use crate::imgcore::{mean_abs_diff, Image};
use crate::scalar::Real;

/// Default threshold for models trained without an adversarial loss.
pub const DEFAULT_THETA: f64 = 1.5;
/// Threshold for adversarially trained models.
pub const GAN_THETA: f64 = 5.0;
pub const DEFAULT_MAX_ITERS: usize = 10;

#[derive(Debug, Error)]
pub enum RefineError {
    #[error("theta must be a non-negative number, got {0}")]
    Theta(f64),
    #[error("max_iters must be at least 1")]
    MaxIters,
    #[error(transparent)]
    Cleaner(#[from] CleanerError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    /// Stop once the mean absolute change between successive outputs,
    /// measured on the 0-255 scale over all pixels and channels, drops below this.
    pub theta: f64,
    pub max_iters: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self { theta: DEFAULT_THETA, max_iters: DEFAULT_MAX_ITERS }
    }
}

impl RefineConfig {
    pub fn new(theta: f64, max_iters: usize) -> Result<Self, RefineError> {
        let cfg = Self { theta, max_iters };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), RefineError> {
        if self.theta.is_nan() || self.theta < 0.0 {
            return Err(RefineError::Theta(self.theta));
        }
        if self.max_iters == 0 {
            return Err(RefineError::MaxIters);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Threshold,
    Cap,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Threshold => "threshold",
            StopReason::Cap => "cap",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineTrace {
    /// Mean absolute change (0-255 scale) produced by each application.
    pub diffs: Vec<f64>,
    pub stop: StopReason,
}

impl RefineTrace {
    pub fn iterations(&self) -> usize {
        self.diffs.len()
    }

    /// Single-line record: `iterations=N stop=REASON diffs=d1,d2,...`.
    pub fn to_record(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for RefineTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let diffs: Vec<String> = self.diffs.iter().map(|d| format!("{d:.6}")).collect();
        write!(f, "iterations={} stop={} diffs={}", self.iterations(), self.stop.name(), diffs.join(","))
    }
}

/// Applies the cleaner once, then again while the last change is at least
/// `theta` and fewer than `max_iters` applications have run.
pub fn dynamic_refine<T: Real>(
    img: &Image<T>,
    cleaner: &CleanerModel,
    cfg: &RefineConfig,
) -> Result<(Image<T>, RefineTrace), RefineError> {
    cfg.validate()?;
    let mut prev = img.clone();
    let mut diffs = Vec::new();
    loop {
        let next = clean(&prev, cleaner)?;
        let diff = mean_abs_diff(&next, &prev).map_err(CleanerError::from)? * 255.0;
        diffs.push(diff);
        prev = next;
        if diff < cfg.theta {
            return Ok((prev, RefineTrace { diffs, stop: StopReason::Threshold }));
        }
        if diffs.len() >= cfg.max_iters {
            return Ok((prev, RefineTrace { diffs, stop: StopReason::Cap }));
        }
    }
}

/// Applies the cleaner exactly `n` times.
pub fn fixed_refine<T: Real>(img: &Image<T>, cleaner: &CleanerModel, n: usize) -> Result<Image<T>, RefineError> {
    let mut x = img.clone();
    for _ in 0..n {
        x = clean(&x, cleaner)?;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noisy(h: usize, w: usize, seed: u64) -> Image<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(h, w, 1, |y, x, _| {
            let base = if (y / 4 + x / 4) % 2 == 0 { 0.3 } else { 0.7 };
            (base + rng.gen_range(-0.2..0.2f64)).clamp(0.0, 1.0)
        })
        .unwrap()
    }

    #[test]
    fn identity_stops_after_one() {
        let img = noisy(16, 16, 1);
        let (out, trace) = dynamic_refine(&img, &CleanerModel::Identity, &RefineConfig::default()).unwrap();
        assert_eq!(out, img);
        assert_eq!(trace.diffs, vec![0.0]);
        assert_eq!(trace.stop, StopReason::Threshold);
    }

    #[test]
    fn zero_theta_hits_cap() {
        let img = noisy(16, 16, 2);
        let cfg = RefineConfig::new(0.0, 4).unwrap();
        let (_, trace) = dynamic_refine(&img, &CleanerModel::BoxBlur(3), &cfg).unwrap();
        assert_eq!(trace.iterations(), 4);
        assert_eq!(trace.stop, StopReason::Cap);
    }

    #[test]
    fn infinite_theta_applies_once() {
        let img = noisy(16, 16, 3);
        let cfg = RefineConfig::new(f64::INFINITY, 10).unwrap();
        let (out, trace) = dynamic_refine(&img, &CleanerModel::Median(3), &cfg).unwrap();
        assert_eq!(trace.iterations(), 1);
        assert_eq!(out, clean(&img, &CleanerModel::Median(3)).unwrap());
    }

    #[test]
    fn matches_loop_oracle() {
        let img = noisy(24, 20, 4);
        let cleaner = CleanerModel::BoxBlur(3);
        let cfg = RefineConfig::default();
        let (out, trace) = dynamic_refine(&img, &cleaner, &cfg).unwrap();

        let mut xs = vec![img.clone()];
        let mut n = 0;
        loop {
            xs.push(clean(xs.last().unwrap(), &cleaner).unwrap());
            n += 1;
            let (a, b) = (&xs[n], &xs[n - 1]);
            let d = a.data().iter().zip(b.data()).map(|(p, q)| (p - q).abs()).sum::<f64>() / a.data().len() as f64;
            if d * 255.0 < cfg.theta || n == cfg.max_iters {
                break;
            }
        }
        assert_eq!(trace.iterations(), n);
        assert_eq!(&out, xs.last().unwrap());
    }

    #[test]
    fn median_fixed_point_stops_by_second() {
        let img = clean(&noisy(16, 16, 5), &CleanerModel::Median(3)).unwrap();
        let img = fixed_refine(&img, &CleanerModel::Median(3), 20).unwrap();
        let (_, trace) = dynamic_refine(&img, &CleanerModel::Median(3), &RefineConfig::new(0.0, 10).unwrap()).unwrap();
        assert_eq!(trace.diffs[0], 0.0);
        assert_eq!(trace.stop, StopReason::Cap);
        let (_, trace) = dynamic_refine(&img, &CleanerModel::Median(3), &RefineConfig::default()).unwrap();
        assert!(trace.iterations() <= 2);
        assert_eq!(*trace.diffs.last().unwrap(), 0.0);
    }

    #[test]
    fn fixed_refine_composes() {
        let img = noisy(12, 12, 6);
        let m = CleanerModel::Median(3);
        assert_eq!(fixed_refine(&img, &m, 0).unwrap(), img);
        assert_eq!(fixed_refine(&img, &m, 1).unwrap(), clean(&img, &m).unwrap());
        let mut x = img.clone();
        for _ in 0..5 {
            x = clean(&x, &m).unwrap();
        }
        assert_eq!(fixed_refine(&img, &m, 5).unwrap(), x);
    }

    #[test]
    fn config_validation() {
        assert!(RefineConfig::new(-1.0, 3).is_err());
        assert!(RefineConfig::new(f64::NAN, 3).is_err());
        assert!(RefineConfig::new(1.0, 0).is_err());
    }

    #[test]
    fn record_format() {
        let t = RefineTrace { diffs: vec![3.0, 0.5], stop: StopReason::Threshold };
        assert_eq!(t.to_record(), "iterations=2 stop=threshold diffs=3.000000,0.500000");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn stop_contract(seed in 0u64..1000, theta in 0.0f64..8.0, cap in 1usize..6, k in prop::sample::select(vec![3usize, 5])) {
                let img = noisy(12, 12, seed);
                let cfg = RefineConfig::new(theta, cap).unwrap();
                let (_, trace) = dynamic_refine(&img, &CleanerModel::BoxBlur(k), &cfg).unwrap();
                prop_assert!(trace.iterations() >= 1 && trace.iterations() <= cap);
                let last = *trace.diffs.last().unwrap();
                match trace.stop {
                    StopReason::Threshold => prop_assert!(last < theta),
                    StopReason::Cap => prop_assert_eq!(trace.iterations(), cap),
                }
                for d in &trace.diffs[..trace.diffs.len() - 1] {
                    prop_assert!(*d >= theta);
                }
            }
        }
    }
}
