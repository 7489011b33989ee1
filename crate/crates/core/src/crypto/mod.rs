//! Cryptographic primitives for the handshake models: modular arithmetic,
//! Diffie-Hellman, textbook RSA, SHA-256 bindings and simplified
//! certificates. All randomness comes from an explicitly passed RNG.

pub mod arith;
pub mod cert;
pub mod dh;
pub mod hash;
pub mod rsa;

use thiserror::Error;

pub use arith::{is_probable_prime, mod_inverse, modexp};
pub use cert::{issue_cert, verify_cert, CertError, Certificate, CertificateAuthority, TrustAnchor};
pub use dh::{
    bind_tag, confirm_tag, derive_ak, f_transform, gen_dh_keypair, AuthorizationKey, DhGroup, DhKeyPair, Nonce,
};
pub use hash::{hash, CanonicalEncoder, Digest};
pub use rsa::{pk_decrypt, pk_encrypt, sign, verify_sig, PkKeyPair, RsaPublicKey, PRINCIPAL_MODULUS_BITS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("modulus must be greater than 1")]
    ModulusTooSmall,
    #[error("plaintext or ciphertext not below the modulus")]
    PlaintextOutOfRange,
    #[error("peer public value outside (1, q)")]
    PeerPublicOutOfRange,
    #[error("private exponent outside the permitted range")]
    ExponentOutOfRange,
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("bad group fixture: {0}")]
    Fixture(String),
}
