use crate::scalar::Real;

use super::{area_downsample, FrameSequence, Image, ImageError};

/// How a per-frame penalty is reduced over pixels and channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Mean,
    Sum,
}

/// Per-frame reduction used by [`charbonnier`]; frames are always summed.
pub const LOSS_REDUCTION: Reduction = Reduction::Mean;

/// Default Charbonnier epsilon for `[0, 1]` intensities.
pub const CHARBONNIER_EPS: f64 = 1e-3;

/// Weight of the perceptual term in the fine-tuning objective. Recorded only.
pub const PERCEPTUAL_LOSS_WEIGHT: f64 = 1.0;

/// Weight of the adversarial term in the fine-tuning objective. Recorded only.
pub const ADVERSARIAL_LOSS_WEIGHT: f64 = 5e-2;

/// Upper bound reported by [`psnr`] for identical images.
pub const PSNR_CAP: f64 = 100.0;

fn check_pair<T: Real>(a: &Image<T>, b: &Image<T>) -> Result<(), ImageError> {
    if !a.same_dims(b) {
        return Err(ImageError::DimensionMismatch { left: a.dims(), right: b.dims() });
    }
    Ok(())
}

/// Charbonnier penalty `sqrt(d^2 + eps^2)` reduced with [`LOSS_REDUCTION`].
pub fn charbonnier<T: Real>(a: &Image<T>, b: &Image<T>, eps: f64) -> Result<f64, ImageError> {
    charbonnier_with(a, b, eps, LOSS_REDUCTION)
}

pub fn charbonnier_with<T: Real>(
    a: &Image<T>,
    b: &Image<T>,
    eps: f64,
    reduction: Reduction,
) -> Result<f64, ImageError> {
    check_pair(a, b)?;
    if !(eps > 0.0) {
        return Err(ImageError::NonPositiveEps(eps));
    }
    // sqrt(d^2 + eps^2) = eps + d^2 / (sqrt(d^2 + eps^2) + eps); the excess term is exactly
    // zero for d = 0, so identical inputs give exactly eps.
    let excess: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| {
            let d = x.as_f64() - y.as_f64();
            let d2 = d * d;
            d2 / ((d2 + eps * eps).sqrt() + eps)
        })
        .sum();
    let n = a.data().len() as f64;
    Ok(match reduction {
        Reduction::Mean => eps + excess / n,
        Reduction::Sum => eps * n + excess,
    })
}

/// Sum over frames of the Charbonnier distance between each cleaned frame and
/// the area-downsampled ground truth.
pub fn cleaning_loss<T: Real>(
    cleaned: &FrameSequence<T>,
    gt_hr: &FrameSequence<T>,
    scale: usize,
    eps: f64,
) -> Result<f64, ImageError> {
    if cleaned.len() != gt_hr.len() {
        return Err(ImageError::LengthMismatch { left: cleaned.len(), right: gt_hr.len() });
    }
    let (h, w, c) = cleaned.dims();
    let (gh, gw, gc) = gt_hr.dims();
    if gh != h * scale || gw != w * scale || gc != c {
        return Err(ImageError::DimensionMismatch { left: (h * scale, w * scale, c), right: (gh, gw, gc) });
    }
    let mut total = 0.0;
    for (x, z) in cleaned.frames().iter().zip(gt_hr.frames()) {
        total += charbonnier(x, &area_downsample(z, scale)?, eps)?;
    }
    Ok(total)
}

/// Sum over frames of the Charbonnier distance between restored and ground-truth frames.
pub fn output_loss<T: Real>(
    restored: &FrameSequence<T>,
    gt_hr: &FrameSequence<T>,
    eps: f64,
) -> Result<f64, ImageError> {
    if restored.len() != gt_hr.len() {
        return Err(ImageError::LengthMismatch { left: restored.len(), right: gt_hr.len() });
    }
    let mut total = 0.0;
    for (y, z) in restored.frames().iter().zip(gt_hr.frames()) {
        total += charbonnier(y, z, eps)?;
    }
    Ok(total)
}

pub fn mse<T: Real>(a: &Image<T>, b: &Image<T>) -> Result<f64, ImageError> {
    check_pair(a, b)?;
    let s: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| {
            let d = x.as_f64() - y.as_f64();
            d * d
        })
        .sum();
    Ok(s / a.data().len() as f64)
}

/// Mean absolute difference over all pixels and channels jointly.
pub fn mean_abs_diff<T: Real>(a: &Image<T>, b: &Image<T>) -> Result<f64, ImageError> {
    check_pair(a, b)?;
    let s: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x.as_f64() - y.as_f64()).abs()).sum();
    Ok(s / a.data().len() as f64)
}

/// Peak signal-to-noise ratio in dB for unit peak, capped at [`PSNR_CAP`].
pub fn psnr<T: Real>(a: &Image<T>, b: &Image<T>) -> Result<f64, ImageError> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (1.0 / m).log10()).min(PSNR_CAP))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(h: usize, w: usize, c: usize, rng: &mut ChaCha8Rng) -> Image<f64> {
        Image::from_fn(h, w, c, |_, _, _| rng.gen::<f64>()).unwrap()
    }

    fn charbonnier_oracle(a: &Image<f64>, b: &Image<f64>, eps: f64) -> f64 {
        let n = a.data().len() as f64;
        a.data().iter().zip(b.data()).map(|(x, y)| ((x - y).powi(2) + eps * eps).sqrt()).sum::<f64>() / n
    }

    #[test]
    fn charbonnier_of_identical_is_eps() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = random_image(13, 7, 3, &mut rng);
        assert_eq!(charbonnier(&a, &a, 1e-3).unwrap(), 1e-3);
    }

    #[test]
    fn charbonnier_constant_offset() {
        let a = Image::<f64>::filled(4, 4, 1, 0.6).unwrap();
        let b = Image::<f64>::filled(4, 4, 1, 0.5).unwrap();
        let v = charbonnier(&a, &b, 1e-3).unwrap();
        let d = 0.6f64 - 0.5;
        assert!((v - (d * d + 1e-6).sqrt()).abs() < 1e-12);
        assert!((v - 0.100005).abs() < 1e-6);
    }

    #[test]
    fn charbonnier_matches_elementwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_image(9, 11, 3, &mut rng);
        let b = random_image(9, 11, 3, &mut rng);
        assert!((charbonnier(&a, &b, 1e-3).unwrap() - charbonnier_oracle(&a, &b, 1e-3)).abs() < 1e-9);
        let sum = charbonnier_with(&a, &b, 1e-3, Reduction::Sum).unwrap();
        assert!((sum - charbonnier_oracle(&a, &b, 1e-3) * 297.0).abs() < 1e-9);
    }

    #[test]
    fn charbonnier_rejects_bad_input() {
        let a = Image::<f64>::zeros(4, 4, 1).unwrap();
        let b = Image::<f64>::zeros(4, 5, 1).unwrap();
        assert!(matches!(charbonnier(&a, &b, 1e-3), Err(ImageError::DimensionMismatch { .. })));
        assert!(matches!(charbonnier(&a, &a, 0.0), Err(ImageError::NonPositiveEps(_))));
    }

    #[test]
    fn cleaning_loss_exact_match_gives_l_eps() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let gt: Vec<_> = (0..4).map(|_| random_image(16, 8, 3, &mut rng)).collect();
        let cleaned: Vec<_> = gt.iter().map(|z| area_downsample(z, 4).unwrap()).collect();
        let v = cleaning_loss(
            &FrameSequence::new(cleaned).unwrap(),
            &FrameSequence::new(gt).unwrap(),
            4,
            1e-3,
        )
        .unwrap();
        assert!((v - 4e-3).abs() < 1e-15);
    }

    #[test]
    fn cleaning_loss_single_frame_is_charbonnier() {
        let gt = Image::<f64>::filled(8, 8, 1, 0.5).unwrap();
        let cleaned = Image::<f64>::filled(2, 2, 1, 0.4).unwrap();
        let v = cleaning_loss(
            &FrameSequence::new(vec![cleaned.clone()]).unwrap(),
            &FrameSequence::new(vec![gt.clone()]).unwrap(),
            4,
            1e-3,
        )
        .unwrap();
        let direct = charbonnier(&cleaned, &area_downsample(&gt, 4).unwrap(), 1e-3).unwrap();
        assert_eq!(v, direct);
    }

    #[test]
    fn cleaning_loss_scale_mismatch() {
        let gt = FrameSequence::new(vec![Image::<f64>::zeros(8, 8, 1).unwrap()]).unwrap();
        let cleaned = FrameSequence::new(vec![Image::<f64>::zeros(4, 4, 1).unwrap()]).unwrap();
        assert!(matches!(cleaning_loss(&cleaned, &gt, 4, 1e-3), Err(ImageError::DimensionMismatch { .. })));
    }

    #[test]
    fn output_loss_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let frames: Vec<_> = (0..5).map(|_| random_image(6, 6, 3, &mut rng)).collect();
        let seq = FrameSequence::new(frames).unwrap();
        assert!((output_loss(&seq, &seq, 1e-3).unwrap() - 5e-3).abs() < 1e-15);

        let z = Image::<f64>::filled(4, 4, 1, 0.3).unwrap();
        let y2 = Image::<f64>::filled(4, 4, 1, 0.5).unwrap();
        let restored = FrameSequence::new(vec![z.clone(), y2]).unwrap();
        let gt = FrameSequence::new(vec![z.clone(), z]).unwrap();
        let eps = 1e-3;
        let d = 0.5f64 - 0.3;
        let expected = eps + (d * d + eps * eps).sqrt();
        assert!((output_loss(&restored, &gt, eps).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn psnr_values() {
        let a = Image::<f64>::filled(4, 4, 3, 0.5).unwrap();
        let b = Image::<f64>::filled(4, 4, 3, 0.4).unwrap();
        assert_eq!(psnr(&a, &a).unwrap(), 100.0);
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_image(10, 10, 3, &mut rng);
        let y = random_image(10, 10, 3, &mut rng);
        let m: f64 = x.data().iter().zip(y.data()).map(|(p, q)| (p - q).powi(2)).sum::<f64>() / 300.0;
        assert!((psnr(&x, &y).unwrap() - 10.0 * (1.0 / m).log10()).abs() < 1e-6);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn charbonnier_lower_bounds(seed in 0u64..100_000, eps in 1e-4f64..1e-1) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_image(5, 5, 1, &mut rng);
                let b = random_image(5, 5, 1, &mut rng);
                let v = charbonnier(&a, &b, eps).unwrap();
                prop_assert!(v > eps);
                prop_assert!(v >= mean_abs_diff(&a, &b).unwrap());
                prop_assert_eq!(charbonnier(&a, &a, eps).unwrap(), eps);
            }
        }
    }
}
