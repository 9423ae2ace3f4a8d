//! Checkpoint container.
//!
//! Little-endian layout:
//!
//! ```text
//! magic "MMCK" | version u32 (=1) | epoch u64 | adam_t u64
//! adam beta1 f64 | beta2 f64 | epsilon f64
//! meta_len u32 | meta (UTF-8, free-form JSON)
//! count u32
//! count × { name_len u32 | name | dtype u8 (1=f32, 2=f64) | ndim u8 | dims u64×ndim | payload }
//! ```
//!
//! Payloads are row-major. Adam moments are stored as `adam.m/<param>` and
//! `adam.v/<param>`. Entries are written in name order.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use super::{AdamConfig, AdamState, Dtype, Network, Scalar, Tensor};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"MMCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum StoredTensor {
    F32(Tensor<f32>),
    F64(Tensor<f64>),
}

impl StoredTensor {
    fn dims(&self) -> &[usize] {
        match self {
            StoredTensor::F32(t) => t.dims(),
            StoredTensor::F64(t) => t.dims(),
        }
    }

    fn dtype(&self) -> Dtype {
        match self {
            StoredTensor::F32(_) => Dtype::F32,
            StoredTensor::F64(_) => Dtype::F64,
        }
    }

    fn wrap<T: Scalar>(t: &Tensor<T>) -> Self {
        // exact for the two supported element types
        match T::DTYPE {
            Dtype::F32 => StoredTensor::F32(t.cast()),
            Dtype::F64 => StoredTensor::F64(t.cast()),
        }
    }

    fn unwrap_as<T: Scalar>(&self, name: &str) -> Result<Tensor<T>> {
        match (self, T::DTYPE) {
            (StoredTensor::F32(t), Dtype::F32) => Ok(t.cast()),
            (StoredTensor::F64(t), Dtype::F64) => Ok(t.cast()),
            (s, want) => Err(Error::CheckpointMismatch(format!(
                "{name} stored as {:?}, requested {want:?}",
                s.dtype()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub meta: String,
    pub epoch: u64,
    pub adam_t: u64,
    pub adam: AdamConfig,
    pub tensors: BTreeMap<String, StoredTensor>,
}

const ADAM_M: &str = "adam.m/";
const ADAM_V: &str = "adam.v/";

impl Checkpoint {
    pub fn capture<T: Scalar>(net: &Network<T>, adam: Option<&AdamState<T>>, epoch: u64, meta: String) -> Self {
        let mut tensors: BTreeMap<String, StoredTensor> = net
            .named_tensors()
            .iter()
            .map(|(k, v)| (k.clone(), StoredTensor::wrap(v)))
            .collect();
        let (mut adam_t, mut cfg) = (0, AdamConfig::default());
        if let Some(a) = adam {
            adam_t = a.t;
            cfg = a.config;
            for ((p, m), v) in net.params().zip(&a.m).zip(&a.v) {
                tensors.insert(format!("{ADAM_M}{}", p.name), StoredTensor::wrap(m));
                tensors.insert(format!("{ADAM_V}{}", p.name), StoredTensor::wrap(v));
            }
        }
        Checkpoint {
            meta,
            epoch,
            adam_t,
            adam: cfg,
            tensors,
        }
    }

    /// Loads weights and running statistics into `net`.
    pub fn restore<T: Scalar>(&self, net: &mut Network<T>) -> Result<()> {
        let mut named = BTreeMap::new();
        for (k, v) in &self.tensors {
            if k.starts_with(ADAM_M) || k.starts_with(ADAM_V) {
                continue;
            }
            named.insert(k.clone(), v.unwrap_as::<T>(k)?);
        }
        net.load_named(&named)
    }

    /// Optimizer state aligned with `net`'s parameter order, if stored.
    pub fn adam_state<T: Scalar>(&self, net: &Network<T>) -> Result<Option<AdamState<T>>> {
        if !self.tensors.keys().any(|k| k.starts_with(ADAM_M)) {
            return Ok(None);
        }
        let mut m = Vec::new();
        let mut v = Vec::new();
        for p in net.params() {
            for (prefix, out) in [(ADAM_M, &mut m), (ADAM_V, &mut v)] {
                let key = format!("{prefix}{}", p.name);
                let t = self
                    .tensors
                    .get(&key)
                    .ok_or_else(|| Error::CheckpointMismatch(format!("missing {key}")))?
                    .unwrap_as::<T>(&key)?;
                if t.dims() != p.value.dims() {
                    return Err(Error::CheckpointMismatch(format!("{key} has shape {:?}", t.dims())));
                }
                out.push(t);
            }
        }
        Ok(Some(AdamState {
            config: self.adam,
            t: self.adam_t,
            m,
            v,
        }))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(CHECKPOINT_MAGIC);
        buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        buf.extend_from_slice(&self.epoch.to_le_bytes());
        buf.extend_from_slice(&self.adam_t.to_le_bytes());
        for f in [self.adam.beta1, self.adam.beta2, self.adam.epsilon] {
            buf.extend_from_slice(&f.to_le_bytes());
        }
        buf.extend_from_slice(&(self.meta.len() as u32).to_le_bytes());
        buf.extend_from_slice(self.meta.as_bytes());
        buf.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, t) in &self.tensors {
            buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
            buf.extend_from_slice(name.as_bytes());
            buf.push(t.dtype().code());
            buf.push(t.dims().len() as u8);
            for &d in t.dims() {
                buf.extend_from_slice(&(d as u64).to_le_bytes());
            }
            match t {
                StoredTensor::F32(t) => t.data().iter().for_each(|v| v.write_le(&mut buf)),
                StoredTensor::F64(t) => t.data().iter().for_each(|v| v.write_le(&mut buf)),
            }
        }
        w.write_all(&buf)
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)
            .map_err(|e| Error::Format(format!("reading checkpoint: {e}")))?;
        let mut cur = Cursor { bytes: &bytes, pos: 0 };
        if cur.take(4)? != CHECKPOINT_MAGIC {
            return Err(Error::Format("bad checkpoint magic".into()));
        }
        let version = cur.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let epoch = cur.u64()?;
        let adam_t = cur.u64()?;
        let adam = AdamConfig {
            beta1: cur.f64()?,
            beta2: cur.f64()?,
            epsilon: cur.f64()?,
        };
        let meta_len = cur.u32()? as usize;
        let meta = String::from_utf8(cur.take(meta_len)?.to_vec())
            .map_err(|_| Error::Format("checkpoint meta is not UTF-8".into()))?;
        let count = cur.u32()?;
        let mut tensors = BTreeMap::new();
        for _ in 0..count {
            let nl = cur.u32()? as usize;
            let name = String::from_utf8(cur.take(nl)?.to_vec())
                .map_err(|_| Error::Format("tensor name is not UTF-8".into()))?;
            let dtype = Dtype::from_code(cur.take(1)?[0])
                .ok_or_else(|| Error::Format(format!("{name}: unknown dtype")))?;
            let ndim = cur.take(1)?[0] as usize;
            let dims = (0..ndim).map(|_| cur.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let n: usize = dims.iter().product();
            let payload = cur.take(n * dtype.size())?;
            let t = match dtype {
                Dtype::F32 => StoredTensor::F32(Tensor::new(
                    dims,
                    payload.chunks_exact(4).map(f32::read_le).collect(),
                )?),
                Dtype::F64 => StoredTensor::F64(Tensor::new(
                    dims,
                    payload.chunks_exact(8).map(f64::read_le).collect(),
                )?),
            };
            tensors.insert(name, t);
        }
        if cur.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after checkpoint".into()));
        }
        Ok(Checkpoint {
            meta,
            epoch,
            adam_t,
            adam,
            tensors,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let p = path.as_ref();
        let f = std::fs::File::create(p).map_err(|e| Error::io(p, e))?;
        self.write_to(std::io::BufWriter::new(f)).map_err(|e| Error::io(p, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let p = path.as_ref();
        let f = std::fs::File::open(p).map_err(|e| Error::io(p, e))?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format("truncated checkpoint".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
