//! Synthetic natural-image surrogates for desk experiments.
//!
//! The dead-leaves model (occluding discs with power-law radii) reproduces the
//! scale invariance and edge statistics of natural photographs closely enough
//! for NSS metrics to separate clean from corrupted content.

use std::path::Path;

use rand::Rng;

use crate::imgcore::io::{write_png, BitDepth, PngError};
use crate::imgcore::{convolve2d, gaussian_kernel, Image, ImageError};
use crate::rng::KeyedRng;
use crate::scalar::Real;

/// Parameters of the dead-leaves generator.
#[derive(Debug, Clone, Copy)]
pub struct DeadLeaves {
    pub min_radius: f64,
    pub max_radius: f64,
    pub discs: usize,
    /// Gaussian anti-aliasing sigma in pixels; 0 disables it.
    pub smoothing: f64,
}

impl Default for DeadLeaves {
    fn default() -> Self {
        Self { min_radius: 2.0, max_radius: 40.0, discs: 1500, smoothing: 0.7 }
    }
}

impl DeadLeaves {
    pub fn render<T: Real, R: Rng + ?Sized>(
        &self,
        height: usize,
        width: usize,
        channels: usize,
        rng: &mut R,
    ) -> Result<Image<T>, ImageError> {
        let mut canvas = vec![f64::NAN; height * width * channels];
        let mut covered = 0usize;
        // Front-to-back: a pixel keeps the first disc that covers it.
        for _ in 0..self.discs {
            if covered == height * width {
                break;
            }
            // Radius density ~ r^-3 via inverse CDF.
            let u: f64 = rng.gen();
            let (a, b) = (self.min_radius.powi(-2), self.max_radius.powi(-2));
            let r = (a - u * (a - b)).powf(-0.5);
            let cy = rng.gen_range(-r..height as f64 + r);
            let cx = rng.gen_range(-r..width as f64 + r);
            let base: Vec<f64> = (0..channels).map(|_| rng.gen_range(0.08..0.92)).collect();
            let (gy, gx) = (rng.gen_range(-0.004..0.004), rng.gen_range(-0.004..0.004));
            let freq = rng.gen_range(0.15..0.9);
            let amp = rng.gen_range(0.0..0.06);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let y0 = (cy - r).floor().max(0.0) as usize;
            let y1 = ((cy + r).ceil().max(0.0) as usize).min(height);
            let x0 = (cx - r).floor().max(0.0) as usize;
            let x1 = ((cx + r).ceil().max(0.0) as usize).min(width);
            for y in y0..y1 {
                for x in x0..x1 {
                    let (dy, dx) = (y as f64 - cy, x as f64 - cx);
                    if dy * dy + dx * dx > r * r {
                        continue;
                    }
                    let i = (y * width + x) * channels;
                    if !canvas[i].is_nan() {
                        continue;
                    }
                    covered += 1;
                    let texture = amp * (freq * (dx + 0.5 * dy) + phase).sin();
                    for c in 0..channels {
                        canvas[i + c] = (base[c] + gy * dy + gx * dx + texture).clamp(0.02, 0.98);
                    }
                }
            }
        }
        let fill: f64 = rng.gen_range(0.2..0.8);
        let data = canvas.into_iter().map(|v| T::of(if v.is_nan() { fill } else { v })).collect();
        let img = Image::new(height, width, channels, data)?;
        if self.smoothing > 0.0 {
            let k = gaussian_kernel(3, self.smoothing, self.smoothing, 0.0)?;
            return convolve2d(&img, &k);
        }
        Ok(img)
    }
}

/// Writes `sequences` directories of `frames` numerically named PNGs each.
/// Frames are windows drifting across a larger canvas, imitating camera motion.
pub fn write_sequence_corpus(
    root: &Path,
    sequences: usize,
    frames: usize,
    height: usize,
    width: usize,
    seed: u64,
) -> Result<Vec<std::path::PathBuf>, PngError> {
    let keyed = KeyedRng::new(seed);
    let mut dirs = Vec::with_capacity(sequences);
    for s in 0..sequences {
        let dir = root.join(format!("{s:03}"));
        std::fs::create_dir_all(&dir).map_err(|e| PngError::Codec {
            path: dir.display().to_string(),
            source: image::ImageError::IoError(e),
        })?;
        let mut rng = keyed.stream(s as u64, 0, "corpus");
        let (ch, cw) = (height + frames, width + 2 * frames);
        let canvas: Image<f32> = DeadLeaves { discs: 3000, ..DeadLeaves::default() }.render(ch, cw, 3, &mut rng)?;
        for f in 0..frames {
            let frame = canvas.crop(f, 2 * f, height, width)?;
            write_png(&frame, dir.join(format!("{f:08}.png")), BitDepth::Eight)?;
        }
        dirs.push(dir);
    }
    Ok(dirs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_is_deterministic_and_in_range() {
        let k = KeyedRng::new(5);
        let a: Image<f64> = DeadLeaves::default().render(48, 40, 3, &mut k.stream(0, 0, "t")).unwrap();
        let b: Image<f64> = DeadLeaves::default().render(48, 40, 3, &mut k.stream(0, 0, "t")).unwrap();
        assert_eq!(a, b);
        assert!(a.data().iter().all(|v| (0.0..=1.0).contains(v)));
        let var = a.data().iter().map(|v| (v - a.mean()).powi(2)).sum::<f64>() / a.data().len() as f64;
        assert!(var > 1e-3);
    }

    #[test]
    fn corpus_layout() {
        let dir = tempfile::tempdir().unwrap();
        let seqs = write_sequence_corpus(dir.path(), 2, 3, 16, 20, 1).unwrap();
        assert_eq!(seqs.len(), 2);
        for s in seqs {
            let mut names: Vec<_> = std::fs::read_dir(&s).unwrap().map(|e| e.unwrap().file_name()).collect();
            names.sort();
            assert_eq!(names, vec!["00000000.png", "00000001.png", "00000002.png"]);
        }
    }
}
