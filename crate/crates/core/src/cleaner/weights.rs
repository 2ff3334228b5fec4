//! Portable weight file for the cleaning network.
//!
//! Layout (all integers little-endian):
//!
//! | field       | type                                                        |
//! |-------------|-------------------------------------------------------------|
//! | magic       | `b"RBVW"`                                                   |
//! | version     | `u32` = 1                                                   |
//! | activation  | `u8`: bits 0..7 activation (0 relu, 1 leaky relu 0.1); bit 7 global residual |
//! | channels    | `u32` feature width                                         |
//! | num_blocks  | `u32`                                                       |
//! | tensors     | repeated: `u16` name length, name bytes, `u8` rank, rank x `u32` dims, row-major `f32` data |
//!
//! Tensors appear in the order `head.weight`, `head.bias`, then for each block
//! `blocks.{i}.conv1.weight`, `.conv1.bias`, `.conv2.weight`, `.conv2.bias`,
//! then `tail.weight`, `tail.bias`. Convolution weights are `[out, in, 3, 3]`.

use std::path::Path;

use super::cnn::{Activation, CnnWeights, Conv, ResBlock, Tensor};
use super::WeightError;

pub const WEIGHT_MAGIC: &[u8; 4] = b"RBVW";
pub const WEIGHT_VERSION: u32 = 1;
const GLOBAL_RESIDUAL_BIT: u8 = 0x80;

pub fn encode_weights(w: &CnnWeights) -> Result<Vec<u8>, WeightError> {
    w.validate()?;
    let mut out = Vec::new();
    out.extend_from_slice(WEIGHT_MAGIC);
    out.extend_from_slice(&WEIGHT_VERSION.to_le_bytes());
    let mut tag = w.activation.tag();
    if w.global_residual {
        tag |= GLOBAL_RESIDUAL_BIT;
    }
    out.push(tag);
    out.extend_from_slice(&(w.channels() as u32).to_le_bytes());
    out.extend_from_slice(&(w.num_blocks() as u32).to_le_bytes());
    for t in w.tensors() {
        let name = t.name.as_bytes();
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name);
        out.push(t.dims.len() as u8);
        for &d in &t.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WeightError> {
        if self.bytes.len() - self.pos < n {
            return Err(WeightError::Truncated { offset: self.pos, needed: n });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, WeightError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, WeightError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, WeightError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn tensor(&mut self) -> Result<Tensor, WeightError> {
        let len = self.u16()? as usize;
        let name = String::from_utf8_lossy(self.take(len)?).into_owned();
        let rank = self.u8()? as usize;
        let dims = (0..rank).map(|_| self.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        let n = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or(WeightError::Shape {
            tensor: name.clone(),
            expected: vec![],
            found: dims.clone(),
        })?;
        let raw = self.take(n.checked_mul(4).ok_or(WeightError::Truncated { offset: self.pos, needed: usize::MAX })?)?;
        let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Tensor { name, dims, data })
    }

    fn conv(&mut self) -> Result<Conv, WeightError> {
        Ok(Conv { weight: self.tensor()?, bias: self.tensor()? })
    }
}

pub fn decode_weights(bytes: &[u8]) -> Result<CnnWeights, WeightError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != WEIGHT_MAGIC {
        return Err(WeightError::BadMagic);
    }
    let version = r.u32()?;
    if version != WEIGHT_VERSION {
        return Err(WeightError::Version(version));
    }
    let tag = r.u8()?;
    let activation = Activation::from_tag(tag & !GLOBAL_RESIDUAL_BIT).ok_or(WeightError::Activation(tag))?;
    let channels = r.u32()? as usize;
    let num_blocks = r.u32()? as usize;
    let head = r.conv()?;
    let blocks = (0..num_blocks)
        .map(|_| Ok(ResBlock { conv1: r.conv()?, conv2: r.conv()? }))
        .collect::<Result<Vec<_>, WeightError>>()?;
    let tail = r.conv()?;
    if r.pos != bytes.len() {
        return Err(WeightError::TrailingBytes(bytes.len() - r.pos));
    }
    let w = CnnWeights { activation, global_residual: tag & GLOBAL_RESIDUAL_BIT != 0, head, blocks, tail };
    w.validate()?;
    if w.channels() != channels {
        return Err(WeightError::Shape {
            tensor: "head.weight".into(),
            expected: vec![channels, w.image_channels(), 3, 3],
            found: w.head.weight.dims.clone(),
        });
    }
    Ok(w)
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<CnnWeights, WeightError> {
    decode_weights(&std::fs::read(path)?)
}

pub fn save_weights(w: &CnnWeights, path: impl AsRef<Path>) -> Result<(), WeightError> {
    std::fs::write(path, encode_weights(w)?)?;
    Ok(())
}
