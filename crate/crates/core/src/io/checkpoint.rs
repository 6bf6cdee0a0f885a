//! Binary checkpoints.
//!
//! Layout (little endian):
//!
//! ```text
//! magic "ARTGANCK" | version u32
//! config: u32 length + UTF-8 JSON
//! step u64
//! rng: seed [u8; 32] | stream u64 | word position u128
//! groups u32, each: name | params u32, each:
//!     name | trainable u8 | ndim u32 | dims u64… | values f64…
//! optimizers u32, each: name | step u64 | tensors u32, each:
//!     len u64 | m f64… | v f64…
//! SHA-256 of everything above
//! ```
//!
//! Names are a u32 length followed by UTF-8 bytes.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{io_err, Error, Result};
use crate::params::ModelParams;
use crate::trainer::adam::AdamState;

pub const MAGIC: &[u8; 8] = b"ARTGANCK";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config_json: String,
    pub step: u64,
    pub rng: RngState,
    pub groups: Vec<(String, ModelParams)>,
    pub optimizers: Vec<(String, AdamState)>,
}

impl Checkpoint {
    pub fn group(&self, name: &str) -> Option<&ModelParams> {
        self.groups.iter().find(|(n, _)| n == name).map(|(_, p)| p)
    }

    pub fn optimizer(&self, name: &str) -> Option<&AdamState> {
        self.optimizers.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Vec::new();
        w.extend_from_slice(MAGIC);
        w.extend_from_slice(&VERSION.to_le_bytes());
        put_str(&mut w, &self.config_json);
        w.extend_from_slice(&self.step.to_le_bytes());
        w.extend_from_slice(&self.rng.seed);
        w.extend_from_slice(&self.rng.stream.to_le_bytes());
        w.extend_from_slice(&self.rng.word_pos.to_le_bytes());
        w.extend_from_slice(&(self.groups.len() as u32).to_le_bytes());
        for (name, params) in &self.groups {
            put_str(&mut w, name);
            w.extend_from_slice(&(params.len() as u32).to_le_bytes());
            for p in params.iter() {
                put_str(&mut w, &p.name);
                w.push(p.trainable as u8);
                w.extend_from_slice(&(p.shape.len() as u32).to_le_bytes());
                for d in &p.shape {
                    w.extend_from_slice(&(*d as u64).to_le_bytes());
                }
                put_f64s(&mut w, &p.data);
            }
        }
        w.extend_from_slice(&(self.optimizers.len() as u32).to_le_bytes());
        for (name, s) in &self.optimizers {
            put_str(&mut w, name);
            w.extend_from_slice(&s.step.to_le_bytes());
            w.extend_from_slice(&(s.m.len() as u32).to_le_bytes());
            for (m, v) in s.m.iter().zip(&s.v) {
                w.extend_from_slice(&(m.len() as u64).to_le_bytes());
                put_f64s(&mut w, m);
                put_f64s(&mut w, v);
            }
        }
        let digest = Sha256::digest(&w);
        w.extend_from_slice(&digest);
        w
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 4 + 32 {
            return Err(reject("file too short"));
        }
        if &bytes[..8] != MAGIC {
            return Err(reject("bad magic"));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(reject("checksum mismatch"));
        }
        let mut r = Reader { buf: body, pos: 8 };
        let version = r.u32()?;
        if version != VERSION {
            return Err(reject(&format!("unsupported version {version}, expected {VERSION}")));
        }
        let config_json = r.string()?;
        let step = r.u64()?;
        let mut seed = [0u8; 32];
        seed.copy_from_slice(r.take(32)?);
        let stream = r.u64()?;
        let word_pos = u128::from_le_bytes(r.take(16)?.try_into().unwrap());
        let mut groups = Vec::new();
        for _ in 0..r.u32()? {
            let name = r.string()?;
            let mut params = ModelParams::new();
            for _ in 0..r.u32()? {
                let pname = r.string()?;
                let trainable = match r.take(1)?[0] {
                    0 => false,
                    1 => true,
                    b => return Err(reject(&format!("bad trainable flag {b}"))),
                };
                let ndim = r.u32()? as usize;
                let shape = (0..ndim).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
                let n = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or_else(|| reject("shape overflow"))?;
                let data = r.f64s(n)?;
                params
                    .push(pname, &shape, data, trainable)
                    .map_err(|e| reject(&e.to_string()))?;
            }
            groups.push((name, params));
        }
        let mut optimizers = Vec::new();
        for _ in 0..r.u32()? {
            let name = r.string()?;
            let ostep = r.u64()?;
            let (mut m, mut v) = (Vec::new(), Vec::new());
            for _ in 0..r.u32()? {
                let n = r.u64()? as usize;
                m.push(r.f64s(n)?);
                v.push(r.f64s(n)?);
            }
            optimizers.push((name, AdamState { step: ostep, m, v }));
        }
        if r.pos != body.len() {
            return Err(reject("trailing bytes"));
        }
        Ok(Self {
            config_json,
            step,
            rng: RngState { seed, stream, word_pos },
            groups,
            optimizers,
        })
    }
}

fn reject(msg: &str) -> Error {
    Error::Checkpoint(msg.to_string())
}

fn put_str(w: &mut Vec<u8>, s: &str) {
    w.extend_from_slice(&(s.len() as u32).to_le_bytes());
    w.extend_from_slice(s.as_bytes());
}

fn put_f64s(w: &mut Vec<u8>, xs: &[f64]) {
    for x in xs {
        w.extend_from_slice(&x.to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| reject("truncated"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| reject("invalid UTF-8 name"))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| reject("length overflow"))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn checkpoint_save(path: impl AsRef<Path>, ck: &Checkpoint) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, ck.to_bytes()).map_err(io_err(path))
}

pub fn checkpoint_load(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    Checkpoint::from_bytes(&bytes)
}
