//! Diffie-Hellman group arithmetic, nonces and the hash bindings that tie a
//! public value to a transported nonce.

use std::fmt;
use std::path::Path;

use num_bigint::BigUint;
use num_traits::One;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::arith::{is_probable_prime, modexp, uniform_inclusive};
use super::hash::{CanonicalEncoder, Digest};
use super::CryptoError;

/// Prime modulus `q` and generator `g`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DhGroup {
    q: BigUint,
    g: BigUint,
}

impl DhGroup {
    pub fn new(q: BigUint, g: BigUint) -> Result<Self, CryptoError> {
        if !is_probable_prime(&q) {
            return Err(CryptoError::InvalidGroup("modulus is not prime".into()));
        }
        if g <= BigUint::one() || g >= q {
            return Err(CryptoError::InvalidGroup("generator outside (1, q)".into()));
        }
        // order 1 or 2 would make every shared secret guessable
        if modexp(&g, &BigUint::from(2u32), &q)?.is_one() {
            return Err(CryptoError::InvalidGroup("generator has order <= 2".into()));
        }
        Ok(Self { q, g })
    }

    /// The desk-scale group used throughout the tests: q = 23, g = 5.
    pub fn toy() -> Self {
        Self::new(BigUint::from(23u32), BigUint::from(5u32)).expect("23 is prime")
    }

    /// 512-bit safe prime with g = 4 generating the prime-order subgroup.
    pub fn realistic() -> Self {
        Self::parse_fixture(include_str!("../../fixtures/groups/realistic.txt"))
            .expect("bundled fixture is valid")
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn g(&self) -> &BigUint {
        &self.g
    }

    /// Parses the fixture format: decimal `q` on the first line, decimal `g`
    /// on the second. Blank lines and `#` comments are ignored.
    pub fn parse_fixture(text: &str) -> Result<Self, CryptoError> {
        let mut values = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.parse::<BigUint>()
                    .map_err(|_| CryptoError::Fixture(format!("not a decimal integer: {l}")))
            });
        let q = values
            .next()
            .ok_or_else(|| CryptoError::Fixture("missing q".into()))??;
        let g = values
            .next()
            .ok_or_else(|| CryptoError::Fixture("missing g".into()))??;
        if values.next().is_some() {
            return Err(CryptoError::Fixture("trailing parameters".into()));
        }
        Self::new(q, g)
    }

    pub fn load_fixture(path: &Path) -> Result<Self, CryptoError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CryptoError::Fixture(format!("{}: {e}", path.display())))?;
        Self::parse_fixture(&text)
    }

    /// True iff `1 < y < q`.
    pub fn is_valid_public(&self, y: &BigUint) -> bool {
        *y > BigUint::one() && *y < self.q
    }
}

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DhKeyPair {
    x_private: BigUint,
    y_public: BigUint,
}

impl fmt::Debug for DhKeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DhKeyPair")
            .field("y_public", &self.y_public)
            .finish_non_exhaustive()
    }
}

impl DhKeyPair {
    /// Draws `x` uniformly from `[2, q-2]`.
    pub fn generate<R: RngCore + ?Sized>(group: &DhGroup, rng: &mut R) -> Self {
        let low = BigUint::from(2u32);
        let high = group.q() - 2u32;
        let x = if high < low {
            low
        } else {
            uniform_inclusive(&low, &high, rng)
        };
        Self::from_private(group, x).expect("exponent drawn in range")
    }

    /// Builds a keypair from a chosen exponent in `[1, q-2]`.
    pub fn from_private(group: &DhGroup, x: BigUint) -> Result<Self, CryptoError> {
        if x < BigUint::one() || x > group.q() - 2u32 {
            return Err(CryptoError::ExponentOutOfRange);
        }
        let y = modexp(group.g(), &x, group.q())?;
        if !group.is_valid_public(&y) {
            return Err(CryptoError::ExponentOutOfRange);
        }
        Ok(Self {
            x_private: x,
            y_public: y,
        })
    }

    pub fn public(&self) -> &BigUint {
        &self.y_public
    }

    pub fn private_exponent(&self) -> &BigUint {
        &self.x_private
    }

    /// `AK = peer_public ^ x mod q`.
    pub fn derive_ak(&self, peer_public: &BigUint, group: &DhGroup) -> Result<AuthorizationKey, CryptoError> {
        derive_ak(self, peer_public, group)
    }
}

pub fn gen_dh_keypair<R: RngCore + ?Sized>(group: &DhGroup, rng: &mut R) -> DhKeyPair {
    DhKeyPair::generate(group, rng)
}

/// The shared authorization key both ends of a handshake agree on.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AuthorizationKey(pub BigUint);

impl AuthorizationKey {
    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

impl fmt::Display for AuthorizationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

pub fn derive_ak(own: &DhKeyPair, peer_public: &BigUint, group: &DhGroup) -> Result<AuthorizationKey, CryptoError> {
    if !group.is_valid_public(peer_public) {
        return Err(CryptoError::PeerPublicOutOfRange);
    }
    Ok(AuthorizationKey(modexp(peer_public, &own.x_private, group.q())?))
}

/// 64-bit random challenge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Nonce(pub u64);

impl Nonce {
    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        Nonce(rng.next_u64())
    }

    pub fn value(self) -> u64 {
        self.0
    }
}

impl fmt::Display for Nonce {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#018x}", self.0)
    }
}

/// Public direction-separating transform on nonces: bitwise complement.
pub fn f_transform(nonce: Nonce) -> Nonce {
    Nonce(!nonce.0)
}

/// `H(y || nonce)` over the canonical encoding.
pub fn bind_tag(y: &BigUint, nonce: Nonce) -> Digest {
    let mut enc = CanonicalEncoder::new();
    enc.uint(y).u64(nonce.0);
    enc.hash()
}

/// `H(nonce)`, the final confirmation value.
pub fn confirm_tag(nonce: Nonce) -> Digest {
    let mut enc = CanonicalEncoder::new();
    enc.u64(nonce.0);
    enc.hash()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn big(v: u32) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn forced_exponents() {
        let g = DhGroup::toy();
        assert_eq!(DhKeyPair::from_private(&g, big(6)).unwrap().public(), &big(8));
        assert_eq!(DhKeyPair::from_private(&g, big(1)).unwrap().public(), &big(5));
        assert!(DhKeyPair::from_private(&g, big(0)).is_err());
        assert!(DhKeyPair::from_private(&g, big(22)).is_err());
    }

    #[test]
    fn fixture_agreement() {
        let g = DhGroup::toy();
        let ms = DhKeyPair::from_private(&g, big(6)).unwrap();
        let bs = DhKeyPair::from_private(&g, big(15)).unwrap();
        assert_eq!(bs.public(), &big(19));
        let a = derive_ak(&ms, bs.public(), &g).unwrap();
        let b = derive_ak(&bs, ms.public(), &g).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.value(), &big(2));
    }

    #[test]
    fn unit_exponents_agree_on_generator() {
        let g = DhGroup::toy();
        let one = DhKeyPair::from_private(&g, big(1)).unwrap();
        assert_eq!(derive_ak(&one, one.public(), &g).unwrap().value(), &big(5));
    }

    #[test]
    fn rejects_degenerate_peer() {
        let g = DhGroup::toy();
        let kp = DhKeyPair::from_private(&g, big(6)).unwrap();
        for bad in [0u32, 1, 23, 40] {
            assert_eq!(derive_ak(&kp, &big(bad), &g), Err(CryptoError::PeerPublicOutOfRange));
        }
    }

    #[test]
    fn generation_is_seeded() {
        let g = DhGroup::toy();
        let a = DhKeyPair::generate(&g, &mut ChaCha20Rng::seed_from_u64(9));
        let b = DhKeyPair::generate(&g, &mut ChaCha20Rng::seed_from_u64(9));
        assert_eq!(a, b);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..200 {
            let kp = DhKeyPair::generate(&g, &mut rng);
            assert!(kp.private_exponent() >= &big(2) && kp.private_exponent() <= &big(21));
        }
    }

    #[test]
    fn group_validation() {
        assert!(DhGroup::new(big(24), big(5)).is_err());
        assert!(DhGroup::new(big(23), big(1)).is_err());
        assert!(DhGroup::new(big(23), big(23)).is_err());
        assert!(DhGroup::new(big(23), big(22)).is_err()); // order 2
        let r = DhGroup::realistic();
        assert_eq!(r.q().bits(), 512);
        assert!(is_probable_prime(&((r.q() - 1u32) / 2u32)));
    }

    #[test]
    fn fixture_parsing() {
        assert_eq!(DhGroup::parse_fixture("# toy\n23\n5\n").unwrap(), DhGroup::toy());
        assert!(DhGroup::parse_fixture("23\n").is_err());
        assert!(DhGroup::parse_fixture("23\nfive\n").is_err());
        assert!(DhGroup::parse_fixture("23\n5\n7\n").is_err());
    }

    #[test]
    fn f_is_complement() {
        assert_eq!(f_transform(Nonce(0)), Nonce(u64::MAX));
        for n in [0, u64::MAX, 0xAAAA_AAAA_AAAA_AAAA, 0x5555_5555_5555_5555, 1, 1 << 63] {
            let n = Nonce(n);
            assert_eq!(f_transform(f_transform(n)), n);
            assert_ne!(f_transform(n), n);
        }
    }

    #[test]
    fn bind_tags() {
        let y = big(19);
        let n = Nonce(0x0123_4567_89ab_cdef);
        assert_eq!(bind_tag(&y, n), bind_tag(&y, n));
        assert_ne!(bind_tag(&y, n), bind_tag(&big(8), n));
        assert_ne!(bind_tag(&y, f_transform(n)), bind_tag(&y, n));
        assert_ne!(confirm_tag(n), confirm_tag(f_transform(n)));
    }
}
