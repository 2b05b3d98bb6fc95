//! `FDNW` weight files: little-endian named f32 tensors with a trailing
//! CRC-32.

use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"FDNW";
const VERSION: u32 = 1;
const DTYPE_F32: u8 = 0;

/// Parameter tensor of arbitrary rank, c-order.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightTensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl WeightTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::invalid(format!(
                "weight dims {dims:?} need {n} values, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    fn dims_n<const N: usize>(&self, op: &str) -> Result<[usize; N]> {
        self.dims
            .as_slice()
            .try_into()
            .map_err(|_| Error::shape(op, format!("expected rank-{N} weights, got {:?}", self.dims)))
    }

    pub(crate) fn dims2(&self, op: &str) -> Result<[usize; 2]> {
        self.dims_n(op)
    }

    pub(crate) fn dims3(&self, op: &str) -> Result<[usize; 3]> {
        self.dims_n(op)
    }

    pub(crate) fn dims4(&self, op: &str) -> Result<[usize; 4]> {
        self.dims_n(op)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightRecord {
    pub name: String,
    pub tensor: WeightTensor,
}

/// Ordered collection of named weight tensors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightFile {
    pub records: Vec<WeightRecord>,
}

impl WeightFile {
    pub fn get(&self, name: &str) -> Option<&WeightTensor> {
        self.records.iter().find(|r| r.name == name).map(|r| &r.tensor)
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: WeightTensor) {
        let name = name.into();
        match self.records.iter_mut().find(|r| r.name == name) {
            Some(r) => r.tensor = tensor,
            None => self.records.push(WeightRecord { name, tensor }),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.records.len() as u32).to_le_bytes());
        for r in &self.records {
            out.extend_from_slice(&(r.name.len() as u16).to_le_bytes());
            out.extend_from_slice(r.name.as_bytes());
            out.push(DTYPE_F32);
            out.push(r.tensor.dims.len() as u8);
            for d in &r.tensor.dims {
                out.extend_from_slice(&(*d as u32).to_le_bytes());
            }
            for v in &r.tensor.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let bad = |m: String| Error::WeightLoad(format!("fdnw: {m}"));
        if bytes.len() < 16 || &bytes[..4] != MAGIC {
            return Err(bad("missing FDNW header".into()));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().unwrap());
        let actual = crc32fast::hash(body);
        if stored != actual {
            return Err(bad(format!("crc mismatch: stored {stored:08x}, computed {actual:08x}")));
        }
        let mut r = Reader { buf: body, pos: 4 };
        let version = r.u32()?;
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let count = r.u32()? as usize;
        let mut records = Vec::with_capacity(count.min(4096));
        for _ in 0..count {
            let name_len = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| bad("record name is not UTF-8".into()))?
                .to_string();
            let dtype = r.u8()?;
            if dtype != DTYPE_F32 {
                return Err(bad(format!("record {name}: unsupported dtype {dtype}")));
            }
            let rank = r.u8()? as usize;
            let dims = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let n: usize = dims.iter().product();
            let raw = r.take(n.checked_mul(4).ok_or_else(|| bad(format!("record {name}: size overflow")))?)?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            if records.iter().any(|x: &WeightRecord| x.name == name) {
                return Err(bad(format!("duplicate record {name}")));
            }
            records.push(WeightRecord {
                name,
                tensor: WeightTensor { dims, data },
            });
        }
        if r.pos != body.len() {
            return Err(bad(format!("{} trailing bytes before checksum", body.len() - r.pos)));
        }
        Ok(Self { records })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&bytes)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::WeightLoad("fdnw: truncated record".into())),
        }
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}
