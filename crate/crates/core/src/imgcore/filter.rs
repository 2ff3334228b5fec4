use crate::scalar::Real;

use super::{Image, ImageError, Kernel2D};

/// Out-of-range sample policy for spatial filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Border {
    /// Mirror without repeating the edge sample (`dcb|abcd|cba`).
    Reflect,
    /// Repeat the edge sample (`aaa|abcd|ddd`).
    Replicate,
    /// Out-of-range samples are zero.
    Zero,
}

impl Border {
    /// Maps a possibly out-of-range coordinate onto `0..n`, `None` meaning zero.
    pub(crate) fn resolve(self, i: isize, n: usize) -> Option<usize> {
        let n = n as isize;
        if (0..n).contains(&i) {
            return Some(i as usize);
        }
        match self {
            Border::Zero => None,
            Border::Replicate => Some(i.clamp(0, n - 1) as usize),
            Border::Reflect => {
                if n == 1 {
                    return Some(0);
                }
                let period = 2 * (n - 1);
                let mut j = i.rem_euclid(period);
                if j >= n {
                    j = period - j;
                }
                Some(j as usize)
            }
        }
    }
}

/// Per-channel 2-D correlation with reflect borders.
pub fn convolve2d<T: Real>(img: &Image<T>, kernel: &Kernel2D<T>) -> Result<Image<T>, ImageError> {
    convolve2d_with(img, kernel, Border::Reflect)
}

pub fn convolve2d_with<T: Real>(
    img: &Image<T>,
    kernel: &Kernel2D<T>,
    border: Border,
) -> Result<Image<T>, ImageError> {
    let (h, w, c) = img.dims();
    let ks = kernel.size();
    if ks > h.min(w) {
        return Err(ImageError::KernelLargerThanImage { kernel: ks, height: h, width: w });
    }
    let r = kernel.radius() as isize;
    let rows: Vec<Option<usize>> = (-r..h as isize + r).map(|i| border.resolve(i, h)).collect();
    let cols: Vec<Option<usize>> = (-r..w as isize + r).map(|i| border.resolve(i, w)).collect();
    let src = img.data();
    let mut out = vec![T::zero(); h * w * c];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = T::zero();
                for dy in 0..ks {
                    let Some(sy) = rows[y + dy] else { continue };
                    for dx in 0..ks {
                        let Some(sx) = cols[x + dx] else { continue };
                        acc = acc + kernel.at(dy, dx) * src[(sy * w + sx) * c + ch];
                    }
                }
                out[(y * w + x) * c + ch] = acc;
            }
        }
    }
    Image::new(h, w, c, out)
}

/// Normalized, rotated anisotropic Gaussian sampled at integer offsets.
///
/// `sigma_x` acts along the kernel's own x-axis before rotation by `rotation`
/// radians (counter-clockwise in `(x, y)` with `y` pointing down the rows).
pub fn gaussian_kernel<T: Real>(
    size: usize,
    sigma_x: f64,
    sigma_y: f64,
    rotation: f64,
) -> Result<Kernel2D<T>, ImageError> {
    if size % 2 == 0 {
        return Err(ImageError::EvenKernel(size));
    }
    if size < 3 {
        return Err(ImageError::KernelTooSmall { size, min: 3 });
    }
    for s in [sigma_x, sigma_y] {
        if !(s > 0.0) || !s.is_finite() {
            return Err(ImageError::NonPositiveSigma(s));
        }
    }
    // Inverse covariance of R diag(sx^2, sy^2) R^T.
    let (sin, cos) = rotation.sin_cos();
    let (ix, iy) = (1.0 / (sigma_x * sigma_x), 1.0 / (sigma_y * sigma_y));
    let a = cos * cos * ix + sin * sin * iy;
    let b = sin * cos * (ix - iy);
    let d = sin * sin * ix + cos * cos * iy;

    let r = (size / 2) as f64;
    let mut raw = Vec::with_capacity(size * size);
    for row in 0..size {
        let y = row as f64 - r;
        for col in 0..size {
            let x = col as f64 - r;
            raw.push((-0.5 * (a * x * x + 2.0 * b * x * y + d * y * y)).exp());
        }
    }
    let total: f64 = raw.iter().sum();
    Kernel2D::new(size, raw.into_iter().map(|v| T::of(v / total)).collect())
}

/// Exact block-mean downsampling by an integer factor.
pub fn area_downsample<T: Real>(img: &Image<T>, scale: usize) -> Result<Image<T>, ImageError> {
    if scale == 0 {
        return Err(ImageError::InvalidScale(scale));
    }
    let (h, w, c) = img.dims();
    if h % scale != 0 {
        return Err(ImageError::NotDivisible { axis: "height", len: h, scale });
    }
    if w % scale != 0 {
        return Err(ImageError::NotDivisible { axis: "width", len: w, scale });
    }
    if scale == 1 {
        return Ok(img.clone());
    }
    let (oh, ow) = (h / scale, w / scale);
    let norm = T::of(1.0 / (scale * scale) as f64);
    let src = img.data();
    let mut out = Vec::with_capacity(oh * ow * c);
    for oy in 0..oh {
        for ox in 0..ow {
            for ch in 0..c {
                let mut acc = T::zero();
                for y in oy * scale..(oy + 1) * scale {
                    for x in ox * scale..(ox + 1) * scale {
                        acc = acc + src[(y * w + x) * c + ch];
                    }
                }
                out.push(acc * norm);
            }
        }
    }
    Image::new(oh, ow, c, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(h: usize, w: usize, c: usize, seed: u64) -> Image<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(h, w, c, |_, _, _| rng.gen::<f64>()).unwrap()
    }

    fn reflect_oracle(i: isize, n: isize) -> usize {
        let mut i = i;
        while i < 0 || i >= n {
            if i < 0 {
                i = -i;
            }
            if i >= n {
                i = 2 * (n - 1) - i;
            }
        }
        i as usize
    }

    #[test]
    fn reflect_matches_mirror_definition() {
        for n in 2..7usize {
            for i in -20isize..20 {
                assert_eq!(Border::Reflect.resolve(i, n), Some(reflect_oracle(i, n as isize)), "i={i} n={n}");
            }
        }
        assert_eq!(Border::Reflect.resolve(-3, 1), Some(0));
        assert_eq!(Border::Replicate.resolve(-3, 4), Some(0));
        assert_eq!(Border::Replicate.resolve(9, 4), Some(3));
        assert_eq!(Border::Zero.resolve(4, 4), None);
    }

    #[test]
    fn downsample_constant() {
        let img = Image::<f64>::filled(16, 8, 3, 0.5).unwrap();
        let out = area_downsample(&img, 4).unwrap();
        assert_eq!(out.dims(), (4, 2, 3));
        assert!(out.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn downsample_checkerboard() {
        let img = Image::<f64>::new(2, 2, 1, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let out = area_downsample(&img, 2).unwrap();
        assert_eq!(out.dims(), (1, 1, 1));
        assert_eq!(out.data(), &[0.5]);
    }

    #[test]
    fn downsample_matches_block_mean_oracle() {
        let img = random_image(8, 8, 1, 7);
        let out = area_downsample(&img, 2).unwrap();
        for oy in 0..4 {
            for ox in 0..4 {
                let mut s = 0.0;
                for dy in 0..2 {
                    for dx in 0..2 {
                        s += img.get(2 * oy + dy, 2 * ox + dx, 0);
                    }
                }
                assert!((out.get(oy, ox, 0) - s / 4.0).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn downsample_reports_offending_axis() {
        let img = Image::<f64>::zeros(8, 6, 1).unwrap();
        match area_downsample(&img, 4) {
            Err(ImageError::NotDivisible { axis, .. }) => assert_eq!(axis, "width"),
            other => panic!("unexpected {other:?}"),
        }
        let img = Image::<f64>::zeros(6, 8, 1).unwrap();
        match area_downsample(&img, 4) {
            Err(ImageError::NotDivisible { axis, .. }) => assert_eq!(axis, "height"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn delta_kernel_is_identity() {
        let img = random_image(9, 5, 3, 1);
        let out = convolve2d(&img, &Kernel2D::delta()).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn box_kernel_preserves_constant() {
        let img = Image::<f64>::filled(10, 10, 1, 0.3).unwrap();
        let out = convolve2d(&img, &Kernel2D::box_filter(5).unwrap()).unwrap();
        assert!(out.data().iter().all(|v| (v - 0.3).abs() < 1e-15));
    }

    #[test]
    fn convolution_matches_nested_sum_oracle() {
        let img = random_image(12, 12, 1, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let raw: Vec<f64> = (0..9).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let kernel = Kernel2D::normalized(3, raw.iter().map(|v| v / total).collect()).unwrap();
        let out = convolve2d(&img, &kernel).unwrap();
        for y in 0..12isize {
            for x in 0..12isize {
                let mut acc = 0.0;
                for ky in -1..=1isize {
                    for kx in -1..=1isize {
                        let sy = reflect_oracle(y + ky, 12);
                        let sx = reflect_oracle(x + kx, 12);
                        acc += kernel.at((ky + 1) as usize, (kx + 1) as usize) * img.get(sy, sx, 0);
                    }
                }
                assert!((out.get(y as usize, x as usize, 0) - acc).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn kernel_larger_than_image_rejected() {
        let img = Image::<f64>::zeros(4, 8, 1).unwrap();
        assert!(matches!(
            convolve2d(&img, &Kernel2D::box_filter(5).unwrap()),
            Err(ImageError::KernelLargerThanImage { .. })
        ));
    }

    #[test]
    fn gaussian_small_symmetric() {
        let k = gaussian_kernel::<f64>(3, 0.5, 0.5, 0.0).unwrap();
        assert!((k.sum() - 1.0).abs() < 1e-6);
        for dy in 0..3 {
            for dx in 0..3 {
                assert!((k.at(dy, dx) - k.at(2 - dy, 2 - dx)).abs() < 1e-15);
                assert!((k.at(dy, dx) - k.at(dx, dy)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn isotropic_gaussian_ignores_rotation() {
        let base = gaussian_kernel::<f64>(9, 1.3, 1.3, 0.0).unwrap();
        for rot in [0.3, 1.0, 2.5, 3.1] {
            let k = gaussian_kernel::<f64>(9, 1.3, 1.3, rot).unwrap();
            for (a, b) in k.weights().iter().zip(base.weights()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn anisotropic_gaussian_matches_density_oracle() {
        // Oracle: rotate the offset into the kernel frame and evaluate the separable density there.
        let (size, sx, sy, rot) = (7usize, 2.0f64, 0.5f64, std::f64::consts::FRAC_PI_4);
        let k = gaussian_kernel::<f64>(size, sx, sy, rot).unwrap();
        let mut dens = vec![];
        for row in 0..size {
            for col in 0..size {
                let (x, y) = (col as f64 - 3.0, row as f64 - 3.0);
                let u = x * rot.cos() + y * rot.sin();
                let v = -x * rot.sin() + y * rot.cos();
                dens.push((-(u * u) / (2.0 * sx * sx) - (v * v) / (2.0 * sy * sy)).exp());
            }
        }
        let total: f64 = dens.iter().sum();
        for (a, b) in k.weights().iter().zip(&dens) {
            assert!((a - b / total).abs() < 1e-12);
        }
        // Elongated along the 45 degree diagonal.
        assert!(k.at(0, 0) > k.at(0, 6));
    }

    #[test]
    fn gaussian_rejects_bad_arguments() {
        assert!(matches!(gaussian_kernel::<f64>(4, 1.0, 1.0, 0.0), Err(ImageError::EvenKernel(4))));
        assert!(matches!(gaussian_kernel::<f64>(5, 0.0, 1.0, 0.0), Err(ImageError::NonPositiveSigma(_))));
        assert!(matches!(gaussian_kernel::<f64>(5, 1.0, -1.0, 0.0), Err(ImageError::NonPositiveSigma(_))));
    }

    #[test]
    fn convolution_is_bit_reproducible() {
        let img = random_image(20, 17, 3, 5);
        let k = gaussian_kernel::<f64>(5, 1.1, 0.7, 0.4).unwrap();
        assert_eq!(convolve2d(&img, &k).unwrap(), convolve2d(&img, &k).unwrap());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn normalized_kernel_preserves_means(seed in 0u64..10_000, size in prop::sample::select(vec![3usize, 5]),
                                                 sx in 0.3f64..3.0, sy in 0.3f64..3.0, rot in 0.0f64..3.14,
                                                 level in 0.0f64..1.0) {
                let k = gaussian_kernel::<f64>(size, sx, sy, rot).unwrap();
                let flat = Image::<f64>::filled(16, 16, 1, level).unwrap();
                let out = convolve2d(&flat, &k).unwrap();
                prop_assert!(out.data().iter().all(|v| (v - level).abs() < 1e-12));

                let img = random_image(128, 128, 1, seed);
                let out = convolve2d(&img, &k).unwrap();
                prop_assert!((out.mean() - img.mean()).abs() < 2e-3);
            }

            #[test]
            fn downsample_of_constant_is_constant(level in 0.0f64..1.0, s in 1usize..6, bh in 1usize..4, bw in 1usize..4) {
                let img = Image::<f64>::filled(s * bh, s * bw, 3, level).unwrap();
                let out = area_downsample(&img, s).unwrap();
                prop_assert_eq!(out.dims(), (bh, bw, 3));
                prop_assert!(out.data().iter().all(|v| (v - level).abs() < 1e-15));
            }
        }
    }
}
