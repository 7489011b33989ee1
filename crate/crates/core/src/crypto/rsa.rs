//! Textbook RSA: no padding, no blinding, not constant time. Good enough to
//! give the handshake models real encryptions and signatures to check, and
//! nothing more.

use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::arith::{mod_inverse, modexp, random_prime};
use super::hash::Digest;
use super::CryptoError;

pub const DEFAULT_PUBLIC_EXPONENT: u32 = 65_537;

/// Modulus size used for principals. Large enough that a 256-bit pre-PAK and
/// a SHA-256 digest both fit below `n` without reduction.
pub const PRINCIPAL_MODULUS_BITS: u64 = 576;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RsaPublicKey {
    pub n: BigUint,
    pub e: BigUint,
}

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PkKeyPair {
    n: BigUint,
    e: BigUint,
    d: BigUint,
}

impl fmt::Debug for PkKeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PkKeyPair")
            .field("n", &self.n)
            .field("e", &self.e)
            .finish_non_exhaustive()
    }
}

impl PkKeyPair {
    pub fn from_parts(n: BigUint, e: BigUint, d: BigUint) -> Self {
        Self { n, e, d }
    }

    /// Generates a key with a modulus of `bits` bits (two primes of `bits/2`).
    pub fn generate<R: RngCore + ?Sized>(bits: u64, rng: &mut R) -> Self {
        let e = BigUint::from(DEFAULT_PUBLIC_EXPONENT);
        loop {
            let p = random_prime(bits / 2, rng);
            let q = random_prime(bits - bits / 2, rng);
            if p == q {
                continue;
            }
            let n = &p * &q;
            if n.bits() != bits {
                continue;
            }
            let phi = (&p - 1u32) * (&q - 1u32);
            if let Some(d) = mod_inverse(&e, &phi) {
                return Self { n, e, d };
            }
        }
    }

    pub fn public(&self) -> RsaPublicKey {
        RsaPublicKey {
            n: self.n.clone(),
            e: self.e.clone(),
        }
    }

    pub fn modulus(&self) -> &BigUint {
        &self.n
    }

    pub fn decrypt(&self, c: &BigUint) -> Result<BigUint, CryptoError> {
        pk_decrypt(self, c)
    }

    pub fn sign(&self, message: &[u8]) -> BigUint {
        sign(self, message)
    }

    /// Signs a precomputed digest.
    pub fn sign_digest(&self, digest: &Digest) -> BigUint {
        let m = digest.to_biguint() % &self.n;
        modexp(&m, &self.d, &self.n).expect("modulus > 1")
    }
}

impl RsaPublicKey {
    pub fn encrypt(&self, m: &BigUint) -> Result<BigUint, CryptoError> {
        pk_encrypt(self, m)
    }

    pub fn verify(&self, message: &[u8], signature: &BigUint) -> bool {
        verify_sig(self, message, signature)
    }

    pub fn verify_digest(&self, digest: &Digest, signature: &BigUint) -> bool {
        if *signature >= self.n || self.n <= BigUint::one() {
            return false;
        }
        let expected = digest.to_biguint() % &self.n;
        modexp(signature, &self.e, &self.n).is_ok_and(|m| m == expected)
    }
}

pub fn pk_encrypt(key: &RsaPublicKey, m: &BigUint) -> Result<BigUint, CryptoError> {
    if *m >= key.n {
        return Err(CryptoError::PlaintextOutOfRange);
    }
    modexp(m, &key.e, &key.n)
}

pub fn pk_decrypt(key: &PkKeyPair, c: &BigUint) -> Result<BigUint, CryptoError> {
    if *c >= key.n {
        return Err(CryptoError::PlaintextOutOfRange);
    }
    modexp(c, &key.d, &key.n)
}

/// Hash-then-sign: `H(message)^d mod n`.
pub fn sign(key: &PkKeyPair, message: &[u8]) -> BigUint {
    key.sign_digest(&super::hash::hash(message))
}

pub fn verify_sig(key: &RsaPublicKey, message: &[u8], signature: &BigUint) -> bool {
    key.verify_digest(&super::hash::hash(message), signature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn textbook() -> PkKeyPair {
        PkKeyPair::from_parts(3233u32.into(), 17u32.into(), 2753u32.into())
    }

    #[test]
    fn textbook_vector() {
        let kp = textbook();
        let c = kp.public().encrypt(&65u32.into()).unwrap();
        assert_eq!(c, BigUint::from(2790u32));
        assert_eq!(kp.decrypt(&c).unwrap(), BigUint::from(65u32));
        assert_eq!(kp.public().encrypt(&0u32.into()).unwrap(), BigUint::from(0u32));
        assert_eq!(
            kp.public().encrypt(&3233u32.into()),
            Err(CryptoError::PlaintextOutOfRange)
        );
    }

    #[test]
    fn textbook_round_trip_is_exhaustive_identity() {
        let kp = textbook();
        let public = kp.public();
        for m in 0u32..3233 {
            let m = BigUint::from(m);
            assert_eq!(kp.decrypt(&public.encrypt(&m).unwrap()).unwrap(), m);
        }
    }

    #[test]
    fn generated_keys_work() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let kp = PkKeyPair::generate(PRINCIPAL_MODULUS_BITS, &mut rng);
        assert_eq!(kp.modulus().bits(), PRINCIPAL_MODULUS_BITS);
        let m = BigUint::from(0xdead_beef_u64) << 200;
        assert_eq!(kp.decrypt(&kp.public().encrypt(&m).unwrap()).unwrap(), m);
    }

    #[test]
    fn signatures() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let kp = PkKeyPair::generate(PRINCIPAL_MODULUS_BITS, &mut rng);
        let other = PkKeyPair::generate(PRINCIPAL_MODULUS_BITS, &mut rng);
        let sig = kp.sign(b"authorization request");
        assert!(kp.public().verify(b"authorization request", &sig));
        assert!(!kp.public().verify(b"authorization requesu", &sig));
        assert!(!other.public().verify(b"authorization request", &sig));
        assert!(!kp.public().verify(b"authorization request", &(sig + 1u32)));
    }
}
