//! The `LBLT` container for lattice snapshots and boundary masks.
//!
//! Layout, all integers and floats little-endian:
//!
//! | bytes          | content                                   |
//! |----------------|-------------------------------------------|
//! | 4              | magic `LBLT`                              |
//! | 2              | format version, `u16` = 1                 |
//! | 2              | rank, `u16`                               |
//! | 4 * rank       | dims, `u32` each (x, y, channels)         |
//! | 4 * prod(dims) | `f32` values, row-major, channel innermost|
//!
//! Solver states are narrowed from `f64` to `f32` on save. Masks use the
//! same container with one channel holding 0.0 or 1.0.

use std::fs;
use std::path::Path;

use crate::error::{LbmError, Result};
use crate::lattice::Q;
use crate::state::{BoundaryMask, LatticeState};

pub const MAGIC: &[u8; 4] = b"LBLT";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub dims: Vec<u32>,
    pub values: Vec<f32>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(LbmError::Format {
                offset: self.pos,
                message: format!(
                    "truncated while reading {what}: need {n} bytes, {} left",
                    self.bytes.len() - self.pos
                ),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

impl Snapshot {
    pub fn new(dims: Vec<u32>, values: Vec<f32>) -> Result<Self> {
        let expected: usize = dims.iter().map(|&d| d as usize).product();
        if expected != values.len() {
            return Err(LbmError::Shape(format!(
                "dims {dims:?} need {expected} values, got {}",
                values.len()
            )));
        }
        Ok(Snapshot { dims, values })
    }

    pub fn from_state(state: &LatticeState) -> Self {
        Snapshot {
            dims: vec![state.nx as u32, state.ny as u32, Q as u32],
            values: state.f.iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn from_mask(mask: &BoundaryMask) -> Self {
        Snapshot {
            dims: vec![mask.nx as u32, mask.ny as u32, 1],
            values: mask.values().into_iter().map(|v| v as f32).collect(),
        }
    }

    fn grid_dims(&self, channels: u32) -> Result<(usize, usize)> {
        match self.dims.as_slice() {
            &[nx, ny, c] if c == channels => Ok((nx as usize, ny as usize)),
            other => Err(LbmError::Shape(format!(
                "expected dims (nx, ny, {channels}), found {other:?}"
            ))),
        }
    }

    pub fn to_state(&self) -> Result<LatticeState> {
        let (nx, ny) = self.grid_dims(Q as u32)?;
        LatticeState::from_vec(nx, ny, self.values.iter().map(|&v| v as f64).collect())
    }

    pub fn to_mask(&self) -> Result<BoundaryMask> {
        let (nx, ny) = self.grid_dims(1)?;
        let values: Vec<f64> = self.values.iter().map(|&v| v as f64).collect();
        BoundaryMask::from_values(nx, ny, &values)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 4 * self.dims.len() + 4 * self.values.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dims.len() as u16).to_le_bytes());
        for d in &self.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4, "magic")?;
        if magic != MAGIC {
            return Err(LbmError::Format {
                offset: 0,
                message: format!("bad magic {magic:?}, expected \"LBLT\""),
            });
        }
        let version = r.u16("version")?;
        if version != VERSION {
            return Err(LbmError::Version {
                found: version as u32,
                expected: VERSION as u32,
            });
        }
        let rank = r.u16("rank")? as usize;
        let mut dims = Vec::with_capacity(rank);
        for k in 0..rank {
            dims.push(r.u32(&format!("dim {k}"))?);
        }
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
            .ok_or_else(|| LbmError::Format {
                offset: 8,
                message: format!("dims {dims:?} overflow"),
            })?;
        let data_start = r.pos;
        let raw = r.take(count.saturating_mul(4), "values")?;
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if r.pos != bytes.len() {
            return Err(LbmError::Format {
                offset: r.pos,
                message: format!(
                    "{} trailing bytes after {count} values starting at {data_start}",
                    bytes.len() - r.pos
                ),
            });
        }
        Ok(Snapshot { dims, values })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.encode()).map_err(|e| LbmError::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| LbmError::io(path, e))?;
        Self::decode(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let s = Snapshot::new(vec![1, 2, 1], vec![0.5, -1.0]).unwrap();
        let bytes = s.encode();
        assert_eq!(&bytes[..4], b"LBLT");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..8], &[3, 0]);
        assert_eq!(&bytes[8..12], &[1, 0, 0, 0]);
        assert_eq!(&bytes[12..16], &[2, 0, 0, 0]);
        assert_eq!(&bytes[20..24], &0.5f32.to_le_bytes());
        assert_eq!(bytes.len(), 28);
    }

    #[test]
    fn truncated_file_is_a_format_error() {
        let bytes = Snapshot::new(vec![2, 2, 1], vec![0.0; 4]).unwrap().encode();
        for cut in [0, 3, 7, 10, bytes.len() - 1] {
            match Snapshot::decode(&bytes[..cut]) {
                Err(LbmError::Format { .. }) => {}
                other => panic!("cut at {cut}: {other:?}"),
            }
        }
    }

    #[test]
    fn version_two_is_rejected() {
        let mut bytes = Snapshot::new(vec![1], vec![0.0]).unwrap().encode();
        bytes[4] = 2;
        match Snapshot::decode(&bytes) {
            Err(LbmError::Version { found, expected }) => assert_eq!((found, expected), (2, 1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mask_round_trip() {
        let mut mask = BoundaryMask::fluid(4, 3);
        mask.set_solid(2, 1, true);
        let back = Snapshot::decode(&Snapshot::from_mask(&mask).encode())
            .unwrap()
            .to_mask()
            .unwrap();
        assert_eq!(back, mask);
        assert!(Snapshot::from_mask(&mask).to_state().is_err());
    }

    proptest! {
        #[test]
        fn state_round_trip_is_f32_exact(nx in 1usize..5, ny in 1usize..5, seed in any::<u64>()) {
            let mut state = LatticeState::zeros(nx, ny);
            let mut s = seed | 1;
            for v in state.f.iter_mut() {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                *v = (s % 10_000) as f64 / 7_777.0 - 0.3;
            }
            let back = Snapshot::decode(&Snapshot::from_state(&state).encode()).unwrap().to_state().unwrap();
            for (a, b) in back.f.iter().zip(&state.f) {
                prop_assert_eq!(*a, *b as f32 as f64);
            }
        }
    }
}
