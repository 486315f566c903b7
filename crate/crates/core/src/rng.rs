//! Counter-based random streams.
//!
//! Each trajectory owns the ChaCha8 stream `stream(master_seed, index)`. The
//! generator state is a (key, stream id, word position) triple, so it can be
//! serialized exactly and results never depend on thread scheduling.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Size of [`NoiseStream::to_bytes`] output.
pub const RNG_BLOB_LEN: usize = 32 + 8 + 16;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("rng state blob has {0} bytes, expected {RNG_BLOB_LEN}")]
pub struct RngBlobError(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoiseStream {
    inner: ChaCha8Rng,
}

impl NoiseStream {
    /// Independent stream `index` under `master_seed`.
    pub fn stream(master_seed: u64, index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(index);
        NoiseStream { inner }
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn stream_id(&self) -> u64 {
        self.inner.get_stream()
    }

    pub fn to_bytes(&self) -> [u8; RNG_BLOB_LEN] {
        let mut out = [0u8; RNG_BLOB_LEN];
        out[..32].copy_from_slice(&self.inner.get_seed());
        out[32..40].copy_from_slice(&self.inner.get_stream().to_le_bytes());
        out[40..].copy_from_slice(&self.inner.get_word_pos().to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, RngBlobError> {
        if bytes.len() != RNG_BLOB_LEN {
            return Err(RngBlobError(bytes.len()));
        }
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&bytes[..32]);
        let stream = u64::from_le_bytes(bytes[32..40].try_into().unwrap());
        let pos = u128::from_le_bytes(bytes[40..].try_into().unwrap());
        let mut inner = ChaCha8Rng::from_seed(seed);
        inner.set_stream(stream);
        inner.set_word_pos(pos);
        Ok(NoiseStream { inner })
    }
}

impl RngCore for NoiseStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
