use std::io::Cursor;

use image::codecs::jpeg::JpegEncoder;
use image::ExtendedColorType;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::imgcore::io::from_dynamic;
use crate::imgcore::{convolve2d, gaussian_kernel, Image};
use crate::scalar::Real;

use super::{BlurSpec, DegradeError, JpegSpec, NoiseKind, NoiseSpec};

/// Photon levels per unit intensity in the Poisson noise simulation.
pub const PHOTON_LEVELS: f64 = 256.0;

pub fn apply_blur<T: Real>(img: &Image<T>, spec: &BlurSpec) -> Result<Image<T>, DegradeError> {
    let kernel = gaussian_kernel(spec.kernel_size, spec.sigma_x, spec.sigma_y, spec.rotation)?;
    Ok(convolve2d(img, &kernel)?)
}

/// Adds noise and clamps to `[0, 1]`.
///
/// Poisson noise draws `k ~ Poisson(x * PHOTON_LEVELS)` and adds
/// `scale * (k / PHOTON_LEVELS - x)`. With `gray_noise` a single field is
/// computed on the BT.601 luma and shared by every channel.
pub fn apply_noise<T: Real, R: Rng + ?Sized>(
    img: &Image<T>,
    spec: &NoiseSpec,
    rng: &mut R,
) -> Result<Image<T>, DegradeError> {
    let (h, w, c) = img.dims();
    let field_channels = if spec.gray_noise { 1 } else { c };
    let src = img.data();
    let mut field = Vec::with_capacity(h * w * field_channels);
    match spec.kind {
        NoiseKind::Gaussian { sigma } => {
            for _ in 0..h * w * field_channels {
                let z: f64 = StandardNormal.sample(rng);
                field.push(sigma * z);
            }
        }
        NoiseKind::Poisson { scale } => {
            for p in 0..h * w {
                for fc in 0..field_channels {
                    let x = if spec.gray_noise && c == 3 {
                        let px = &src[p * 3..p * 3 + 3];
                        0.299 * px[0].as_f64() + 0.587 * px[1].as_f64() + 0.114 * px[2].as_f64()
                    } else {
                        src[p * c + fc].as_f64()
                    };
                    let lambda = x.clamp(0.0, 1.0) * PHOTON_LEVELS;
                    let k = if lambda > 0.0 {
                        Poisson::new(lambda).expect("positive finite rate").sample(rng)
                    } else {
                        0.0
                    };
                    field.push(scale * (k / PHOTON_LEVELS - x));
                }
            }
        }
    }
    let data = src
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let (p, ch) = (i / c, i % c);
            let n = if spec.gray_noise { field[p] } else { field[p * c + ch] };
            T::of((v.as_f64() + n).clamp(0.0, 1.0))
        })
        .collect();
    Ok(Image::new(h, w, c, data)?)
}

/// Baseline JPEG encode at `spec.quality` followed by decode.
pub fn apply_jpeg<T: Real>(img: &Image<T>, spec: &JpegSpec) -> Result<Image<T>, DegradeError> {
    let (h, w, c) = img.dims();
    let color = if c == 1 { ExtendedColorType::L8 } else { ExtendedColorType::Rgb8 };
    let mut buf = Cursor::new(Vec::new());
    JpegEncoder::new_with_quality(&mut buf, spec.quality.clamp(1, 100))
        .encode(&img.to_u8(), w as u32, h as u32, color)
        .map_err(DegradeError::Jpeg)?;
    let decoded = image::load_from_memory_with_format(buf.get_ref(), image::ImageFormat::Jpeg).map_err(DegradeError::Jpeg)?;
    let out: Image<T> = from_dynamic(decoded)?;
    if out.dims() != (h, w, c) {
        return Err(crate::imgcore::ImageError::DimensionMismatch { left: (h, w, c), right: out.dims() }.into());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::{psnr, Kernel2D};
    use crate::synth::DeadLeaves;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn natural(h: usize, w: usize, seed: u64) -> Image<f64> {
        DeadLeaves::default().render(h, w, 3, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn blur_keeps_constants() {
        let flat = Image::<f64>::filled(24, 24, 3, 0.37).unwrap();
        let out = apply_blur(&flat, &BlurSpec::new(21, 3.0, 0.4, 1.2).unwrap()).unwrap();
        assert!(out.data().iter().all(|v| (v - 0.37).abs() < 1e-12));
    }

    #[test]
    fn near_delta_blur_is_transparent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let img = Image::<f64>::from_fn(32, 32, 3, |_, _, _| rng.gen::<f64>()).unwrap();
        let out = apply_blur(&img, &BlurSpec::new(7, 0.2, 0.2, 0.0).unwrap()).unwrap();
        // Off-centre weight is exp(-12.5) relative to the centre.
        let k = gaussian_kernel::<f64>(7, 0.2, 0.2, 0.0).unwrap();
        assert!(k.at(3, 3) > 0.99998);
        assert!(psnr(&img, &out).unwrap() > 40.0);
    }

    #[test]
    fn blur_is_kernel_composition() {
        let img = natural(32, 32, 1);
        let spec = BlurSpec::new(13, 3.0, 3.0, 0.0).unwrap();
        let k: Kernel2D<f64> = gaussian_kernel(13, 3.0, 3.0, 0.0).unwrap();
        assert_eq!(apply_blur(&img, &spec).unwrap(), convolve2d(&img, &k).unwrap());
    }

    #[test]
    fn gaussian_noise_moments() {
        let img = Image::<f64>::filled(1000, 1000, 1, 0.5).unwrap();
        let spec = NoiseSpec::gaussian(1.0 / 255.0, false).unwrap();
        let out = apply_noise(&img, &spec, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let n = out.data().len() as f64;
        let mean = out.data().iter().sum::<f64>() / n;
        let sd = (out.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!((sd * 255.0 - 1.0).abs() < 0.1, "sd = {}", sd * 255.0);
    }

    #[test]
    fn noise_is_seed_deterministic() {
        let img = natural(20, 20, 2);
        for spec in [NoiseSpec::gaussian(0.05, false).unwrap(), NoiseSpec::poisson(1.5, true).unwrap()] {
            let a = apply_noise(&img, &spec, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
            let b = apply_noise(&img, &spec, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, img);
        }
    }

    #[test]
    fn gray_noise_is_shared_across_channels() {
        let img = Image::<f64>::filled(16, 16, 3, 0.5).unwrap();
        let spec = NoiseSpec::gaussian(10.0 / 255.0, true).unwrap();
        let out = apply_noise(&img, &spec, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        for p in out.data().chunks_exact(3) {
            assert_eq!(p[0], p[1]);
            assert_eq!(p[1], p[2]);
        }
        let poisson = NoiseSpec::poisson(1.0, true).unwrap();
        let out = apply_noise(&img, &poisson, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        for p in out.data().chunks_exact(3) {
            assert_eq!(p[0], p[1]);
            assert_eq!(p[1], p[2]);
        }
    }

    #[test]
    fn poisson_noise_is_unbiased_and_scales() {
        let img = Image::<f64>::filled(300, 300, 1, 0.4).unwrap();
        let sd = |scale: f64| {
            let out = apply_noise(&img, &NoiseSpec::poisson(scale, false).unwrap(), &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
            let n = out.data().len() as f64;
            let mean = out.data().iter().sum::<f64>() / n;
            assert!((mean - 0.4).abs() < 2e-3);
            (out.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
        };
        // Count std is sqrt(0.4 * 256) / 256.
        let expected = (0.4f64 * PHOTON_LEVELS).sqrt() / PHOTON_LEVELS;
        assert!((sd(1.0) / expected - 1.0).abs() < 0.05);
        assert!((sd(2.0) / sd(1.0) - 2.0).abs() < 0.05);
    }

    #[test]
    fn jpeg_quality_ordering_and_determinism() {
        let img = natural(64, 64, 7);
        let hi = apply_jpeg(&img, &JpegSpec::new(95).unwrap()).unwrap();
        let lo = apply_jpeg(&img, &JpegSpec::new(30).unwrap()).unwrap();
        let p_hi = psnr(&img, &hi).unwrap();
        let p_lo = psnr(&img, &lo).unwrap();
        assert!(p_hi > 35.0, "q95 psnr {p_hi}");
        assert!(p_lo < p_hi);
        assert_eq!(hi, apply_jpeg(&img, &JpegSpec::new(95).unwrap()).unwrap());
        assert_eq!(hi.dims(), img.dims());
    }

    #[test]
    fn jpeg_gray_keeps_single_channel() {
        let img = natural(24, 40, 8).channel(0);
        let out = apply_jpeg(&img, &JpegSpec::new(60).unwrap()).unwrap();
        assert_eq!(out.dims(), (24, 40, 1));
    }
}
