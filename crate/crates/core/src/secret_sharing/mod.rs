//! Splitting primitives: threshold sharing over ℤ_q, k-way XOR splitting and
//! equal-halves concatenation splitting.

mod bits;
mod field;
mod shamir;
mod split;

use thiserror::Error;

pub use bits::BitString;
pub use field::{is_prime, FieldElement, Modulus, Polynomial, MAX_MODULUS};
pub use shamir::{
    random_polynomial, shamir_reconstruct, shamir_split, shares_from_polynomial,
    LeadingCoefficient, ShamirParams, ShamirShare,
};
pub use split::{concat_join, concat_split, xor_combine, xor_split, xor_split_with};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SharingError {
    #[error("modulus {0} is not a prime below 2^31")]
    NotPrime(u64),
    #[error("value {value} is outside Z_{modulus}")]
    OutOfField { value: u64, modulus: u64 },
    #[error("threshold {threshold} is invalid for {shares} shares")]
    BadThreshold { threshold: usize, shares: usize },
    #[error("{shares} shares need a modulus larger than {modulus}")]
    TooManyShares { shares: usize, modulus: u64 },
    #[error("need at least {need} shares, got {have}")]
    NotEnoughShares { have: usize, need: usize },
    #[error("duplicate share index {0}")]
    DuplicateIndex(u64),
    #[error("share index {0} is not a nonzero field element")]
    BadIndex(u64),
    #[error("shares or coefficients come from different moduli")]
    MixedModuli,
    #[error("polynomial needs at least one coefficient")]
    EmptyPolynomial,
    #[error("bit length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("xor splitting needs at least 2 fragments, got {0}")]
    TooFewFragments(usize),
    #[error("bit string of odd length {0} cannot be halved")]
    OddLength(usize),
    #[error("empty bit string")]
    Empty,
    #[error("malformed hex {0:?}")]
    InvalidHex(String),
}

/// One piece of a split secret, tagged with the scheme that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Share {
    Shamir(ShamirShare),
    Xor { index: usize, fragment: BitString },
    Concat { index: usize, half: BitString },
}

impl Share {
    pub fn scheme(&self) -> &'static str {
        match self {
            Share::Shamir(_) => "shamir",
            Share::Xor { .. } => "xor",
            Share::Concat { .. } => "concat",
        }
    }

    pub fn index(&self) -> u64 {
        match self {
            Share::Shamir(s) => s.index,
            Share::Xor { index, .. } | Share::Concat { index, .. } => *index as u64,
        }
    }
}
