use std::fmt;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

/// 256-bit hash output.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Digest(#[serde(with = "hex_bytes")] pub [u8; 32]);

impl Digest {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        if s.len() != 64 {
            return None;
        }
        let mut out = [0u8; 32];
        for (i, chunk) in s.as_bytes().chunks(2).enumerate() {
            let pair = std::str::from_utf8(chunk).ok()?;
            out[i] = u8::from_str_radix(pair, 16).ok()?;
        }
        Some(Digest(out))
    }

    pub fn to_biguint(&self) -> BigUint {
        BigUint::from_bytes_be(&self.0)
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

mod hex_bytes {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::Digest(*bytes).to_hex())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let s = String::deserialize(d)?;
        super::Digest::from_hex(&s)
            .map(|d| d.0)
            .ok_or_else(|| D::Error::custom("expected 64 hex digits"))
    }
}

/// Builds the canonical byte string that every hash, signature and tag is
/// computed over: each field is a 4-byte big-endian length followed by its
/// big-endian bytes, fields concatenated in message order.
#[derive(Debug, Default, Clone)]
pub struct CanonicalEncoder {
    buf: Vec<u8>,
}

impl CanonicalEncoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field(&mut self, bytes: &[u8]) -> &mut Self {
        let len = u32::try_from(bytes.len()).expect("field longer than 4 GiB");
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.extend_from_slice(bytes);
        self
    }

    /// Minimal big-endian magnitude; zero encodes as an empty field.
    pub fn uint(&mut self, value: &BigUint) -> &mut Self {
        if value.is_zero() {
            self.field(&[])
        } else {
            self.field(&value.to_bytes_be())
        }
    }

    pub fn u64(&mut self, value: u64) -> &mut Self {
        self.field(&value.to_be_bytes())
    }

    pub fn u32(&mut self, value: u32) -> &mut Self {
        self.field(&value.to_be_bytes())
    }

    pub fn u16(&mut self, value: u16) -> &mut Self {
        self.field(&value.to_be_bytes())
    }

    pub fn u8(&mut self, value: u8) -> &mut Self {
        self.field(&[value])
    }

    pub fn str(&mut self, value: &str) -> &mut Self {
        self.field(value.as_bytes())
    }

    pub fn digest(&mut self, value: &Digest) -> &mut Self {
        self.field(&value.0)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.buf
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }

    pub fn hash(&self) -> Digest {
        hash(&self.buf)
    }
}

/// SHA-256 over the given bytes.
pub fn hash(bytes: &[u8]) -> Digest {
    Digest(Sha256::digest(bytes).into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_distinct() {
        assert_eq!(hash(b"SS cert"), hash(b"SS cert"));
        assert_ne!(hash(b"SS cert"), hash(b"BS cert"));
    }

    #[test]
    fn known_answer() {
        assert_eq!(
            hash(b"abc").to_hex(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn encoding_layout() {
        let mut enc = CanonicalEncoder::new();
        enc.uint(&BigUint::from(0x0102u32)).u64(7).uint(&BigUint::from(0u32));
        assert_eq!(
            enc.as_bytes(),
            &[0, 0, 0, 2, 1, 2, 0, 0, 0, 8, 0, 0, 0, 0, 0, 0, 0, 7, 0, 0, 0, 0]
        );
    }

    #[test]
    fn length_prefix_separates_fields() {
        let mut a = CanonicalEncoder::new();
        a.str("ab").str("c");
        let mut b = CanonicalEncoder::new();
        b.str("a").str("bc");
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn hex_round_trip() {
        let d = hash(b"x");
        assert_eq!(Digest::from_hex(&d.to_hex()), Some(d));
        assert_eq!(Digest::from_hex("zz"), None);
    }
}
