//! Length-prefixed SHA-256 over a sequence of fields.

use sha2::{Digest, Sha256};

pub(crate) struct FieldHasher(Sha256);

impl FieldHasher {
    pub(crate) fn new(domain: &str) -> Self {
        let mut h = FieldHasher(Sha256::new());
        h.bytes(domain.as_bytes());
        h
    }

    pub(crate) fn bytes(&mut self, data: &[u8]) -> &mut Self {
        self.0.update((data.len() as u64).to_le_bytes());
        self.0.update(data);
        self
    }

    pub(crate) fn str(&mut self, s: &str) -> &mut Self {
        self.bytes(s.as_bytes())
    }

    pub(crate) fn u64(&mut self, v: u64) -> &mut Self {
        self.bytes(&v.to_le_bytes())
    }

    pub(crate) fn finish(self) -> [u8; 32] {
        self.0.finalize().into()
    }
}

/// First eight bytes of a SHA-256 digest of `s`, little endian.
pub(crate) fn hash64(domain: &str, s: &str) -> u64 {
    let mut h = FieldHasher::new(domain);
    h.str(s);
    let out = h.finish();
    u64::from_le_bytes([out[0], out[1], out[2], out[3], out[4], out[5], out[6], out[7]])
}
