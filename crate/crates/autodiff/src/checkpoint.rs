//! The `LNCK` checkpoint format.
//!
//! All integers and floats little-endian:
//!
//! ```text
//! magic        4 bytes  "LNCK"
//! version      u16      = 1
//! header_len   u32
//! header       header_len bytes of UTF-8 key=value text
//! param_count  u32
//! per parameter, in store order:
//!   name_len   u32
//!   name       name_len bytes of UTF-8
//!   rank       u16
//!   dims       rank x u32
//!   values     prod(dims) x f32
//!   adam_m     prod(dims) x f32
//!   adam_v     prod(dims) x f32
//!   step       u64      optimizer updates applied
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Result, TensorError};
use crate::param::{ParamStore, Parameter};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"LNCK";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Free-form `key=value` text; the model stores its configuration here.
    pub header: String,
    pub params: ParamStore<f32>,
}

fn put_f32s(out: &mut Vec<u8>, t: &Tensor<f32>) {
    for v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(TensorError::Format {
                offset: self.pos,
                message: format!("truncated while reading {what}"),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn utf8(&mut self, n: usize, what: &str) -> Result<String> {
        let at = self.pos;
        let raw = self.take(n, what)?;
        String::from_utf8(raw.to_vec()).map_err(|_| TensorError::Format {
            offset: at,
            message: format!("{what} is not valid UTF-8"),
        })
    }

    fn f32s(&mut self, shape: &[usize], what: &str) -> Result<Tensor<f32>> {
        let n: usize = shape.iter().product();
        let raw = self.take(n.saturating_mul(4), what)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Tensor::from_vec(shape, data)
    }
}

impl Checkpoint {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.header.len() as u32).to_le_bytes());
        out.extend_from_slice(self.header.as_bytes());
        out.extend_from_slice(&(self.params.len() as u32).to_le_bytes());
        for p in self.params.iter() {
            out.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
            out.extend_from_slice(p.name.as_bytes());
            out.extend_from_slice(&(p.value.shape().len() as u16).to_le_bytes());
            for &d in p.value.shape() {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            put_f32s(&mut out, &p.value);
            put_f32s(&mut out, &p.m);
            put_f32s(&mut out, &p.v);
            out.extend_from_slice(&p.step.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut c = Cursor { bytes, pos: 0 };
        if c.take(4, "magic")? != MAGIC {
            return Err(TensorError::Format {
                offset: 0,
                message: "bad magic, expected \"LNCK\"".into(),
            });
        }
        let version = c.u16("version")?;
        if version != VERSION {
            return Err(TensorError::Version {
                found: version,
                expected: VERSION,
            });
        }
        let header_len = c.u32("header length")? as usize;
        let header = c.utf8(header_len, "header")?;
        let count = c.u32("parameter count")?;
        let mut params = ParamStore::new();
        for k in 0..count {
            let name_len = c.u32("name length")? as usize;
            let name = c.utf8(name_len, &format!("name of parameter {k}"))?;
            let rank = c.u16("rank")? as usize;
            let shape = (0..rank)
                .map(|_| c.u32("dim").map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            let value = c.f32s(&shape, &format!("values of {name}"))?;
            let m = c.f32s(&shape, &format!("first moment of {name}"))?;
            let v = c.f32s(&shape, &format!("second moment of {name}"))?;
            let step = c.u64("step")?;
            params.push(Parameter {
                name,
                value,
                m,
                v,
                step,
            });
        }
        if c.pos != bytes.len() {
            return Err(TensorError::Format {
                offset: c.pos,
                message: "trailing bytes after last parameter".into(),
            });
        }
        Ok(Checkpoint { header, params })
    }

    /// Writes to a temporary sibling and renames it into place so an
    /// interrupted save never clobbers the previous file.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let tmp = path.with_extension("lnck.tmp");
        fs::write(&tmp, self.encode())?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::decode(&fs::read(path)?)
    }
}
