use rand::Rng;
use rayon::prelude::*;

use crate::imgcore::Image;
use crate::scalar::Real;

use super::{CleanerError, WeightError};

/// Pointwise nonlinearity inside residual blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    /// Leaky rectifier with negative slope 0.1.
    LeakyRelu,
}

impl Activation {
    pub fn tag(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::LeakyRelu => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Relu),
            1 => Some(Activation::LeakyRelu),
            _ => None,
        }
    }

    #[inline]
    fn apply<T: Real>(self, v: T) -> T {
        match self {
            Activation::Relu => v.max(T::zero()),
            Activation::LeakyRelu => {
                if v >= T::zero() {
                    v
                } else {
                    v * T::of(0.1)
                }
            }
        }
    }
}

/// Named row-major `f32` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(name: impl Into<String>, dims: Vec<usize>, data: Vec<f32>) -> Self {
        Self { name: name.into(), dims, data }
    }

    pub fn zeros(name: impl Into<String>, dims: Vec<usize>) -> Self {
        let n = dims.iter().product();
        Self::new(name, dims, vec![0.0; n])
    }
}

/// One 3x3 convolution: weight `[out, in, 3, 3]`, bias `[out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Conv {
    pub fn in_channels(&self) -> usize {
        self.weight.dims.get(1).copied().unwrap_or(0)
    }

    pub fn out_channels(&self) -> usize {
        self.weight.dims.first().copied().unwrap_or(0)
    }

    fn zeros(prefix: &str, out_c: usize, in_c: usize) -> Self {
        Self {
            weight: Tensor::zeros(format!("{prefix}.weight"), vec![out_c, in_c, 3, 3]),
            bias: Tensor::zeros(format!("{prefix}.bias"), vec![out_c]),
        }
    }

    fn random<R: Rng + ?Sized>(prefix: &str, out_c: usize, in_c: usize, scale: f32, rng: &mut R) -> Self {
        let mut c = Self::zeros(prefix, out_c, in_c);
        c.weight.data.iter_mut().for_each(|v| *v = rng.gen_range(-scale..scale));
        c.bias.data.iter_mut().for_each(|v| *v = rng.gen_range(-scale..scale));
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResBlock {
    pub conv1: Conv,
    pub conv2: Conv,
}

/// Weights of the residual cleaning network:
/// head conv, `num_blocks` x (conv, rectifier, conv, skip), tail conv.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnWeights {
    pub activation: Activation,
    /// Adds the network input to the tail output.
    pub global_residual: bool,
    pub head: Conv,
    pub blocks: Vec<ResBlock>,
    pub tail: Conv,
}

/// Default feature width of the cleaning network.
pub const DEFAULT_CHANNELS: usize = 64;
/// Default residual block count of the cleaning network.
pub const DEFAULT_BLOCKS: usize = 20;

impl CnnWeights {
    pub fn zeros(image_channels: usize, channels: usize, num_blocks: usize) -> Self {
        Self {
            activation: Activation::Relu,
            global_residual: false,
            head: Conv::zeros("head", channels, image_channels),
            blocks: (0..num_blocks)
                .map(|i| ResBlock {
                    conv1: Conv::zeros(&format!("blocks.{i}.conv1"), channels, channels),
                    conv2: Conv::zeros(&format!("blocks.{i}.conv2"), channels, channels),
                })
                .collect(),
            tail: Conv::zeros("tail", image_channels, channels),
        }
    }

    /// Uniform weights in `[-scale, scale)`.
    pub fn random<R: Rng + ?Sized>(image_channels: usize, channels: usize, num_blocks: usize, scale: f32, rng: &mut R) -> Self {
        Self {
            activation: Activation::Relu,
            global_residual: false,
            head: Conv::random("head", channels, image_channels, scale, rng),
            blocks: (0..num_blocks)
                .map(|i| ResBlock {
                    conv1: Conv::random(&format!("blocks.{i}.conv1"), channels, channels, scale, rng),
                    conv2: Conv::random(&format!("blocks.{i}.conv2"), channels, channels, scale, rng),
                })
                .collect(),
            tail: Conv::random("tail", image_channels, channels, scale, rng),
        }
    }

    pub fn channels(&self) -> usize {
        self.head.out_channels()
    }

    pub fn image_channels(&self) -> usize {
        self.head.in_channels()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Tensors in file order.
    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut out = vec![&self.head.weight, &self.head.bias];
        for b in &self.blocks {
            out.extend([&b.conv1.weight, &b.conv1.bias, &b.conv2.weight, &b.conv2.bias]);
        }
        out.extend([&self.tail.weight, &self.tail.bias]);
        out
    }

    /// Checks names, shapes and finiteness of every tensor.
    pub fn validate(&self) -> Result<(), WeightError> {
        let (ic, c) = (self.image_channels(), self.channels());
        if ic != 1 && ic != 3 {
            return Err(WeightError::Shape {
                tensor: self.head.weight.name.clone(),
                expected: vec![c, 3, 3, 3],
                found: self.head.weight.dims.clone(),
            });
        }
        let mut expected: Vec<(String, Vec<usize>)> =
            vec![("head.weight".into(), vec![c, ic, 3, 3]), ("head.bias".into(), vec![c])];
        for i in 0..self.blocks.len() {
            for conv in ["conv1", "conv2"] {
                expected.push((format!("blocks.{i}.{conv}.weight"), vec![c, c, 3, 3]));
                expected.push((format!("blocks.{i}.{conv}.bias"), vec![c]));
            }
        }
        expected.push(("tail.weight".into(), vec![ic, c, 3, 3]));
        expected.push(("tail.bias".into(), vec![ic]));
        for (t, (name, dims)) in self.tensors().into_iter().zip(expected) {
            if t.name != name {
                return Err(WeightError::UnexpectedTensor { expected: name, found: t.name.clone() });
            }
            if t.dims != dims || t.data.len() != dims.iter().product::<usize>() {
                return Err(WeightError::Shape { tensor: name, expected: dims, found: t.dims.clone() });
            }
            if t.data.iter().any(|v| !v.is_finite()) {
                return Err(WeightError::NonFinite { tensor: name });
            }
        }
        Ok(())
    }
}

/// Zero-padded 3x3 convolution over a channel-major `[in_c, h, w]` buffer.
pub(crate) fn conv3x3<T: Real>(input: &[T], h: usize, w: usize, conv: &Conv) -> Vec<T> {
    let (out_c, in_c) = (conv.out_channels(), conv.in_channels());
    let plane = h * w;
    let mut out = vec![T::zero(); out_c * plane];
    let weights: Vec<T> = conv.weight.data.iter().map(|&v| T::of(v as f64)).collect();
    out.par_chunks_mut(plane).enumerate().for_each(|(oc, dst)| {
        dst.iter_mut().for_each(|v| *v = T::of(conv.bias.data[oc] as f64));
        for ic in 0..in_c {
            let src = &input[ic * plane..(ic + 1) * plane];
            let k = &weights[(oc * in_c + ic) * 9..(oc * in_c + ic + 1) * 9];
            for ky in 0..3 {
                for kx in 0..3 {
                    let wv = k[ky * 3 + kx];
                    if wv == T::zero() {
                        continue;
                    }
                    // Output (y, x) reads input (y + ky - 1, x + kx - 1).
                    let y0 = if ky == 0 { 1 } else { 0 };
                    let y1 = if ky == 2 { h - 1 } else { h };
                    let x0 = if kx == 0 { 1 } else { 0 };
                    let x1 = if kx == 2 { w - 1 } else { w };
                    for y in y0..y1 {
                        let sy = y + ky - 1;
                        let drow = &mut dst[y * w..(y + 1) * w];
                        let srow = &src[sy * w..(sy + 1) * w];
                        for x in x0..x1 {
                            drow[x] = drow[x] + wv * srow[x + kx - 1];
                        }
                    }
                }
            }
        }
    });
    out
}

fn to_planar<T: Real>(img: &Image<T>) -> Vec<T> {
    let (h, w, c) = img.dims();
    let mut out = vec![T::zero(); h * w * c];
    for (i, &v) in img.data().iter().enumerate() {
        let (p, ch) = (i / c, i % c);
        out[ch * h * w + p] = v;
    }
    out
}

fn from_planar<T: Real>(planar: &[T], h: usize, w: usize, c: usize) -> Result<Image<T>, CleanerError> {
    let mut data = vec![T::zero(); h * w * c];
    for (i, v) in data.iter_mut().enumerate() {
        let (p, ch) = (i / c, i % c);
        *v = planar[ch * h * w + p];
    }
    Ok(Image::new(h, w, c, data)?)
}

/// Network output before clamping.
pub fn cnn_forward_raw<T: Real>(img: &Image<T>, weights: &CnnWeights) -> Result<Image<T>, CleanerError> {
    weights.validate()?;
    let (h, w, c) = img.dims();
    if c != weights.image_channels() {
        return Err(CleanerError::ChannelMismatch { expected: weights.image_channels(), actual: c });
    }
    let input = to_planar(img);
    let mut feat = conv3x3(&input, h, w, &weights.head);
    for block in &weights.blocks {
        let mut t = conv3x3(&feat, h, w, &block.conv1);
        t.iter_mut().for_each(|v| *v = weights.activation.apply(*v));
        let t = conv3x3(&t, h, w, &block.conv2);
        feat.iter_mut().zip(t).for_each(|(f, r)| *f = *f + r);
    }
    let mut out = conv3x3(&feat, h, w, &weights.tail);
    if weights.global_residual {
        out.iter_mut().zip(&input).for_each(|(o, i)| *o = *o + *i);
    }
    from_planar(&out, h, w, c)
}

/// Cleaned image: [`cnn_forward_raw`] clamped to `[0, 1]`.
pub fn cnn_forward<T: Real>(img: &Image<T>, weights: &CnnWeights) -> Result<Image<T>, CleanerError> {
    Ok(cnn_forward_raw(img, weights)?.clamp01())
}
