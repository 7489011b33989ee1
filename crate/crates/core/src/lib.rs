pub mod adversary;
pub mod cpn;
pub mod crypto;
pub mod nets;
pub mod protocol;

/// Seeded random source used everywhere a run needs randomness.
pub type LabRng = rand_chacha::ChaCha20Rng;
/// Residues modulo an RSA modulus or a DH prime.
pub type Residue = num_bigint::BigUint;
/// Scalar used for monitor statistics.
pub type Stat = f64;
