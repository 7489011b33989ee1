//! Modular arithmetic shared by the Diffie-Hellman and RSA code.
//!
//! Everything here is generic over [`num_integer::Integer`], so the same
//! square-and-multiply routine serves `u64` fixtures in tests and
//! [`BigUint`] in the protocol runs.

use num_bigint::{BigInt, BigUint, RandBigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;

use super::CryptoError;

/// Computes `base^exponent mod modulus` by right-to-left square-and-multiply.
///
/// Performs `O(log exponent)` multiplications. For fixed-width integer types
/// the caller must keep `(modulus - 1)^2` within range.
pub fn modexp<T>(base: &T, exponent: &T, modulus: &T) -> Result<T, CryptoError>
where
    T: Integer + Clone,
{
    if *modulus <= T::one() {
        return Err(CryptoError::ModulusTooSmall);
    }
    let two = T::one() + T::one();
    let mut result = T::one();
    let mut acc = base.mod_floor(modulus);
    let mut e = exponent.clone();
    while !e.is_zero() {
        if e.is_odd() {
            result = (result * acc.clone()).mod_floor(modulus);
        }
        acc = (acc.clone() * acc).mod_floor(modulus);
        e = e.div_floor(&two);
    }
    Ok(result)
}

/// Multiplicative inverse of `a` modulo `m`, if it exists.
pub fn mod_inverse(a: &BigUint, m: &BigUint) -> Option<BigUint> {
    let a = BigInt::from_biguint(Sign::Plus, a.clone());
    let m = BigInt::from_biguint(Sign::Plus, m.clone());
    let egcd = a.extended_gcd(&m);
    if !egcd.gcd.is_one() {
        return None;
    }
    egcd.x.mod_floor(&m).to_biguint()
}

const WITNESSES: [u32; 20] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
];

/// Miller-Rabin with a fixed witness set. Deterministic for every input
/// below 3.3e24 and overwhelmingly likely correct above that.
pub fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &p in &WITNESSES {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    let n_minus_one = n - 1u32;
    let mut d = n_minus_one.clone();
    let mut s = 0u32;
    while d.is_even() {
        d >>= 1;
        s += 1;
    }
    'witness: for &a in &WITNESSES {
        let a = BigUint::from(a);
        let mut x = modexp(&a, &d, n).expect("n > 1");
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Draws a random prime with exactly `bits` bits.
pub fn random_prime<R: RngCore + ?Sized>(bits: u64, rng: &mut R) -> BigUint {
    assert!(bits >= 8, "prime too small to be useful");
    loop {
        let mut candidate = rng.gen_biguint(bits);
        candidate.set_bit(bits - 1, true);
        candidate.set_bit(0, true);
        if is_probable_prime(&candidate) {
            return candidate;
        }
    }
}

/// Uniform draw from the closed range `[low, high]`.
pub fn uniform_inclusive<R: RngCore + ?Sized>(low: &BigUint, high: &BigUint, rng: &mut R) -> BigUint {
    rng.gen_biguint_range(low, &(high + 1u32))
}
