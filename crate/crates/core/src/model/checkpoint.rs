//! Versioned binary checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes   "ACNNCKPT"
//! version    u32       FORMAT_VERSION
//! header_len u64
//! header     header_len bytes of UTF-8 JSON (CheckpointHeader)
//! tensors    for each header.tensors entry, in order: product(shape) f64 values
//! digest     32 bytes  SHA-256 of every preceding byte
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::config::ModelConfig;
use crate::model::params::ParamStore;
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 8] = b"ACNNCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CheckpointHeader {
    config: ModelConfig,
    vocab: Vec<String>,
    rng_algorithm: String,
    seed: u64,
    step: u64,
    tensors: Vec<TensorEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    /// Token strings in id order, reserved ids included.
    pub vocab: Vec<String>,
    pub rng_algorithm: String,
    pub seed: u64,
    pub step: u64,
    pub tensors: Vec<(String, Tensor)>,
}

impl Checkpoint {
    pub fn from_params(
        config: &ModelConfig,
        params: &ParamStore,
        vocab: Vec<String>,
        seed: u64,
        step: u64,
    ) -> Self {
        Self {
            config: config.clone(),
            vocab,
            rng_algorithm: crate::rng::RNG_ALGORITHM.to_string(),
            seed,
            step,
            tensors: params
                .iter()
                .map(|(n, t)| (n.to_string(), t.clone()))
                .collect(),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = CheckpointHeader {
            config: self.config.clone(),
            vocab: self.vocab.clone(),
            rng_algorithm: self.rng_algorithm.clone(),
            seed: self.seed,
            step: self.step,
            tensors: self
                .tensors
                .iter()
                .map(|(name, t)| TensorEntry {
                    name: name.clone(),
                    shape: t.shape().to_vec(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header)
            .map_err(|e| Error::Corrupt(format!("header encode: {e}")))?;
        let data_len: usize = self.tensors.iter().map(|(_, t)| t.len() * 8).sum();
        let mut out = Vec::with_capacity(20 + json.len() + data_len + 32);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for (_, t) in &self.tensors {
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let corrupt = |msg: &str| Error::Corrupt(msg.to_string());
        if bytes.len() < 20 + 32 {
            return Err(corrupt("file too short"));
        }
        if &bytes[..8] != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(Error::Mismatch(format!(
                "checkpoint format version {version}, this build reads {FORMAT_VERSION}"
            )));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(corrupt("checksum mismatch (truncated or modified file)"));
        }
        let header_len = u64::from_le_bytes(body[12..20].try_into().expect("8 bytes")) as usize;
        let header_end = 20usize
            .checked_add(header_len)
            .filter(|&e| e <= body.len())
            .ok_or_else(|| corrupt("header length past end of file"))?;
        let header: CheckpointHeader = serde_json::from_slice(&body[20..header_end])
            .map_err(|e| Error::Corrupt(format!("header: {e}")))?;
        let mut pos = header_end;
        let mut tensors = Vec::with_capacity(header.tensors.len());
        for entry in &header.tensors {
            let count: usize = entry.shape.iter().product();
            let end = pos + count * 8;
            if end > body.len() {
                return Err(corrupt("tensor data past end of file"));
            }
            let data = body[pos..end]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            tensors.push((entry.name.clone(), Tensor::from_vec(&entry.shape, data)?));
            pos = end;
        }
        if pos != body.len() {
            return Err(corrupt("trailing bytes after tensor data"));
        }
        Ok(Self {
            config: header.config,
            vocab: header.vocab,
            rng_algorithm: header.rng_algorithm,
            seed: header.seed,
            step: header.step,
            tensors,
        })
    }

    /// Writes to a temporary sibling and renames it into place.
    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        write_atomic(path, &bytes)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Loads and rejects checkpoints whose model config differs from `expected`.
    pub fn load_expecting(path: &Path, expected: &ModelConfig) -> Result<Self> {
        let ck = Self::load(path)?;
        if &ck.config != expected {
            return Err(Error::Mismatch(format!(
                "checkpoint holds model {:?}, expected {:?}",
                ck.config.name, expected.name
            )));
        }
        Ok(ck)
    }

    /// Rebuilds the network and restores every parameter.
    pub fn restore(&self) -> Result<(crate::model::Network, ParamStore)> {
        let mut rng = crate::rng::Rng::new(self.seed);
        let (net, mut params) = crate::model::build(&self.config, &mut rng)?;
        params.load_values(self.tensors.clone())?;
        Ok((net, params))
    }
}

/// Writes to a temporary sibling, syncs, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp-write");
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| Error::io(path, e))
}
