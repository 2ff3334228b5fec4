use crate::scalar::Real;

use super::ImageError;

/// Row-major raster with 1 (gray) or 3 (RGB) interleaved channels.
///
/// Intensities are nominally in `[0, 1]`; intermediate results such as MSCN
/// coefficients or pre-clamp network outputs may leave that range, so only
/// finiteness is enforced by [`Image::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T> {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<T>,
}

impl<T: Real> Image<T> {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<T>) -> Result<Self, ImageError> {
        check_shape(height, width, channels)?;
        let expected = height * width * channels;
        if data.len() != expected {
            return Err(ImageError::DataLength { expected, actual: data.len() });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(ImageError::NonFinite { index: i });
        }
        Ok(Self { height, width, channels, data })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: T) -> Result<Self, ImageError> {
        check_shape(height, width, channels)?;
        Ok(Self { height, width, channels, data: vec![value; height * width * channels] })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Result<Self, ImageError> {
        Self::filled(height, width, channels, T::zero())
    }

    /// Builds an image by evaluating `f(y, x, c)` for every element.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> T,
    ) -> Result<Self, ImageError> {
        check_shape(height, width, channels)?;
        let mut data = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(y, x, c));
                }
            }
        }
        Self::new(height, width, channels, data)
    }

    /// 8-bit samples mapped to `v / 255`.
    pub fn from_u8(height: usize, width: usize, channels: usize, bytes: &[u8]) -> Result<Self, ImageError> {
        let data = bytes.iter().map(|&b| T::of(b as f64 / 255.0)).collect();
        Self::new(height, width, channels, data)
    }

    /// 16-bit samples mapped to `v / 65535`.
    pub fn from_u16(height: usize, width: usize, channels: usize, words: &[u16]) -> Result<Self, ImageError> {
        let data = words.iter().map(|&w| T::of(w as f64 / 65535.0)).collect();
        Self::new(height, width, channels, data)
    }

    /// Quantizes to 8 bits with clamping and round-half-away rounding.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|v| (v.as_f64().clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }

    pub fn to_u16(&self) -> Vec<u16> {
        self.data
            .iter()
            .map(|v| (v.as_f64().clamp(0.0, 1.0) * 65535.0).round() as u16)
            .collect()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn index(&self, y: usize, x: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> T {
        self.data[self.index(y, x, c)]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, v: T) {
        let i = self.index(y, x, c);
        self.data[i] = v;
    }

    /// Elementwise map. The closure must keep values finite.
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn clamp01(&self) -> Self {
        self.map(|v| v.max(T::zero()).min(T::one()))
    }

    pub fn cast<U: Real>(&self) -> Image<U> {
        Image {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }

    /// Extracts one channel as a single-channel image.
    pub fn channel(&self, c: usize) -> Self {
        let data = self.data.iter().skip(c).step_by(self.channels).copied().collect();
        Self { height: self.height, width: self.width, channels: 1, data }
    }

    /// Copies a `h x w` window starting at `(top, left)`.
    pub fn crop(&self, top: usize, left: usize, h: usize, w: usize) -> Result<Self, ImageError> {
        if top + h > self.height || left + w > self.width || h == 0 || w == 0 {
            return Err(ImageError::CropOutOfBounds {
                top,
                left,
                height: h,
                width: w,
                image_height: self.height,
                image_width: self.width,
            });
        }
        let c = self.channels;
        let mut data = Vec::with_capacity(h * w * c);
        for y in top..top + h {
            let start = self.index(y, left, 0);
            data.extend_from_slice(&self.data[start..start + w * c]);
        }
        Ok(Self { height: h, width: w, channels: c, data })
    }

    pub fn same_dims(&self, other: &Self) -> bool {
        self.dims() == other.dims()
    }

    pub fn mean(&self) -> T {
        let sum: f64 = self.data.iter().map(|v| v.as_f64()).sum();
        T::of(sum / self.data.len() as f64)
    }
}

fn check_shape(height: usize, width: usize, channels: usize) -> Result<(), ImageError> {
    if channels != 1 && channels != 3 {
        return Err(ImageError::Channels(channels));
    }
    if height == 0 || width == 0 {
        return Err(ImageError::Empty { height, width });
    }
    Ok(())
}

/// Ordered frames with homogeneous dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence<T> {
    frames: Vec<Image<T>>,
}

impl<T: Real> FrameSequence<T> {
    pub fn new(frames: Vec<Image<T>>) -> Result<Self, ImageError> {
        let first = frames.first().ok_or(ImageError::EmptySequence)?;
        let dims = first.dims();
        if let Some(i) = frames.iter().position(|f| f.dims() != dims) {
            return Err(ImageError::HeterogeneousSequence { index: i, expected: dims, actual: frames[i].dims() });
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[Image<T>] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Image<T>> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    /// Always false; sequences are non-empty by construction.
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.frames[0].dims()
    }

    pub fn get(&self, i: usize) -> Option<&Image<T>> {
        self.frames.get(i)
    }
}

/// Odd-sided square correlation kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D<T> {
    size: usize,
    weights: Vec<T>,
}

impl<T: Real> Kernel2D<T> {
    pub fn new(size: usize, weights: Vec<T>) -> Result<Self, ImageError> {
        if size % 2 == 0 {
            return Err(ImageError::EvenKernel(size));
        }
        if weights.len() != size * size {
            return Err(ImageError::DataLength { expected: size * size, actual: weights.len() });
        }
        if let Some(i) = weights.iter().position(|v| !v.is_finite()) {
            return Err(ImageError::NonFinite { index: i });
        }
        Ok(Self { size, weights })
    }

    /// Like [`Kernel2D::new`], additionally requiring the weights to sum to 1 within 1e-6.
    pub fn normalized(size: usize, weights: Vec<T>) -> Result<Self, ImageError> {
        let k = Self::new(size, weights)?;
        let sum = k.sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(ImageError::NotNormalized(sum));
        }
        Ok(k)
    }

    pub fn delta() -> Self {
        Self { size: 1, weights: vec![T::one()] }
    }

    pub fn box_filter(size: usize) -> Result<Self, ImageError> {
        let w = T::of(1.0 / (size * size) as f64);
        Self::new(size, vec![w; size * size])
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn radius(&self) -> usize {
        self.size / 2
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    #[inline]
    pub fn at(&self, dy: usize, dx: usize) -> T {
        self.weights[dy * self.size + dx]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().map(|w| w.as_f64()).sum()
    }
}
