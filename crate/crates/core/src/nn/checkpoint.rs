//! Binary checkpoint of a Q-network and its optimizer state.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic       8 bytes   "UAVQNET\0"
//! version     u32       1
//! tag_len     u32       provenance tag length, then tag_len UTF-8 bytes
//! n_sizes     u32       then n_sizes x u32 layer sizes
//! params      f64 ...   per layer: weights row-major (inputs x outputs), bias
//! has_adam    u8        0 or 1
//!   lr beta1 beta2 eps  4 x f64
//!   step      u64
//!   m, v      f64 ...   same layout as params
//! ```
//!
//! Decoding is strict: unknown versions, trailing bytes and non-finite
//! parameters are rejected.

use ndarray::{Array1, Array2};

use super::adam::{Adam, AdamHyper};
use super::mlp::{Dense, Mlp};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"UAVQNET\0";
pub const VERSION: u32 = 1;

const MAX_LAYERS: usize = 64;
const MAX_WIDTH: usize = 1 << 20;
const MAX_TAG: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Free-form provenance, e.g. config hash and seeds.
    pub tag: String,
    pub net: Mlp,
    pub adam: Option<Adam>,
}

impl Checkpoint {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.net.param_count() * 8 * 3);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.tag.len() as u32).to_le_bytes());
        out.extend_from_slice(self.tag.as_bytes());
        let sizes = self.net.sizes();
        out.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
        for s in &sizes {
            out.extend_from_slice(&(*s as u32).to_le_bytes());
        }
        write_layers(&mut out, self.net.layers());
        match &self.adam {
            None => out.push(0),
            Some(adam) => {
                out.push(1);
                let h = adam.hyper;
                for v in [h.lr, h.beta1, h.beta2, h.eps] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                out.extend_from_slice(&adam.step.to_le_bytes());
                write_layers(&mut out, &adam.m);
                write_layers(&mut out, &adam.v);
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let tag_len = r.u32()? as usize;
        if tag_len > MAX_TAG {
            return Err(Error::Checkpoint(format!("tag length {tag_len} too large")));
        }
        let tag = std::str::from_utf8(r.take(tag_len)?)
            .map_err(|e| Error::Checkpoint(format!("tag is not UTF-8: {e}")))?
            .to_owned();
        let n_sizes = r.u32()? as usize;
        if !(2..=MAX_LAYERS + 1).contains(&n_sizes) {
            return Err(Error::Checkpoint(format!("layer count {n_sizes} out of range")));
        }
        let mut sizes = Vec::with_capacity(n_sizes);
        for _ in 0..n_sizes {
            let s = r.u32()? as usize;
            if s == 0 || s > MAX_WIDTH {
                return Err(Error::Checkpoint(format!("layer width {s} out of range")));
            }
            sizes.push(s);
        }
        let params: usize = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        if params.saturating_mul(8) > r.remaining() {
            return Err(Error::Checkpoint(format!(
                "{params} parameters declared but only {} bytes remain",
                r.remaining()
            )));
        }
        let net = Mlp::from_layers(read_layers(&mut r, &sizes)?)?;
        let adam = match r.u8()? {
            0 => None,
            1 => {
                let hyper = AdamHyper { lr: r.f64()?, beta1: r.f64()?, beta2: r.f64()?, eps: r.f64()? };
                let step = r.u64()?;
                if params.saturating_mul(16) > r.remaining() {
                    return Err(Error::Checkpoint("truncated optimizer state".into()));
                }
                let m = read_layers(&mut r, &sizes)?;
                let v = read_layers(&mut r, &sizes)?;
                Some(Adam { hyper, step, m, v })
            }
            other => return Err(Error::Checkpoint(format!("bad optimizer flag {other}"))),
        };
        if r.remaining() != 0 {
            return Err(Error::Checkpoint(format!("{} trailing bytes", r.remaining())));
        }
        if !net.is_finite() {
            return Err(Error::Checkpoint("non-finite parameter".into()));
        }
        Ok(Self { tag, net, adam })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        crate::harness::io::write_atomic(path, &self.encode())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::Missing(format!("checkpoint {}: {e}", path.display())))?;
        Self::decode(&bytes)
    }
}

fn write_layers(out: &mut Vec<u8>, layers: &[Dense]) {
    for l in layers {
        for v in l.weights.iter().chain(l.bias.iter()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

fn read_layers(r: &mut Reader<'_>, sizes: &[usize]) -> Result<Vec<Dense>> {
    sizes
        .windows(2)
        .map(|w| {
            let weights: Vec<f64> = (0..w[0] * w[1]).map(|_| r.f64()).collect::<Result<_>>()?;
            let bias: Vec<f64> = (0..w[1]).map(|_| r.f64()).collect::<Result<_>>()?;
            Ok(Dense {
                weights: Array2::from_shape_vec((w[0], w[1]), weights).map_err(|e| Error::Checkpoint(e.to_string()))?,
                bias: Array1::from(bias),
            })
        })
        .collect()
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(Error::Checkpoint(format!("unexpected end of data at byte {} (wanted {n})", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
