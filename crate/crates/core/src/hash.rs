//! Stable 64-bit hashing for substructure identifiers.
//!
//! Identifiers must be reproducible across builds and platforms because
//! Sort&Slice vocabularies are persisted to disk. All hashing goes through
//! 64-bit FNV-1a over the little-endian byte encoding of each field:
//!
//! ```text
//! h = 0xcbf29ce484222325
//! for each byte b: h = (h ^ b) * 0x100000001b3   (wrapping)
//! ```
//!
//! Unsigned fields are written as `u64` little-endian (8 bytes), signed
//! fields as `i64` little-endian, booleans as a single `u64` 0 or 1.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Clone, Copy)]
pub struct StableHasher {
    state: u64,
}

impl Default for StableHasher {
    fn default() -> Self {
        Self::new()
    }
}

impl StableHasher {
    pub fn new() -> Self {
        Self { state: FNV_OFFSET }
    }

    pub fn write_bytes(&mut self, bytes: &[u8]) -> &mut Self {
        for &b in bytes {
            self.state ^= u64::from(b);
            self.state = self.state.wrapping_mul(FNV_PRIME);
        }
        self
    }

    pub fn write_u64(&mut self, v: u64) -> &mut Self {
        self.write_bytes(&v.to_le_bytes())
    }

    pub fn write_i64(&mut self, v: i64) -> &mut Self {
        self.write_bytes(&v.to_le_bytes())
    }

    pub fn write_bool(&mut self, v: bool) -> &mut Self {
        self.write_u64(u64::from(v))
    }

    pub fn finish(&self) -> u64 {
        self.state
    }
}
