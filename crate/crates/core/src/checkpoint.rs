//! Binary checkpoint of one trajectory.
//!
//! Layout (all integers and floats little-endian):
//!
//! | offset | type          | field                         |
//! |--------|---------------|-------------------------------|
//! | 0      | `[u8; 4]`     | magic `CAVS`                  |
//! | 4      | `u32`         | format version                |
//! | 8      | `u64`         | atom count `N`                |
//! | 16     | `f64`         | time `t̃`                      |
//! | 24     | `[f64; N]`    | positions `x̃` (unwrapped)     |
//! |        | `[f64; N]`    | momenta `p̃`                   |
//! |        | `u32` + bytes | RNG state blob (length first) |
//! |        | `u64`         | trajectory index              |

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::physics::SystemState;
use crate::rng::{NoiseStream, RngBlobError};

pub const MAGIC: &[u8; 4] = b"CAVS";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("bad magic {0:?}, not a checkpoint")]
    BadMagic([u8; 4]),
    #[error("checkpoint format version {found} is not supported (expected {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("checkpoint truncated: need {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("{0} trailing bytes after checkpoint")]
    Trailing(usize),
    #[error(transparent)]
    Rng(#[from] RngBlobError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub state: SystemState,
    pub traj_index: u64,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let s = &self.state;
        let n = s.n_atoms();
        let rng = s.rng.to_bytes();
        let mut out = Vec::with_capacity(24 + 16 * n + 4 + rng.len() + 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(n as u64).to_le_bytes());
        out.extend_from_slice(&s.t.to_le_bytes());
        for v in s.x.iter().chain(&s.p) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(rng.len() as u32).to_le_bytes());
        out.extend_from_slice(&rng);
        out.extend_from_slice(&self.traj_index.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader { bytes, pos: 0 };
        let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
        if &magic != MAGIC {
            return Err(CheckpointError::BadMagic(magic));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(CheckpointError::Version { found: version });
        }
        let n = r.u64()? as usize;
        // reject absurd sizes before allocating
        let needed = n.checked_mul(16).and_then(|v| v.checked_add(r.pos + 8)).unwrap_or(usize::MAX);
        if needed > bytes.len() {
            return Err(CheckpointError::Truncated { needed, have: bytes.len() });
        }
        let t = r.f64()?;
        let x = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        let p = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        let rng_len = r.u32()? as usize;
        let rng = NoiseStream::from_bytes(r.take(rng_len)?)?;
        let traj_index = r.u64()?;
        if r.pos != bytes.len() {
            return Err(CheckpointError::Trailing(bytes.len() - r.pos));
        }
        Ok(Checkpoint { state: SystemState { x, p, t, rng }, traj_index })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::from_bytes(&fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(CheckpointError::Truncated { needed: end, have: self.bytes.len() });
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
