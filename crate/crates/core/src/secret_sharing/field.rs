use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::SharingError;

/// Largest modulus accepted. Products of two elements stay below 2^62.
pub const MAX_MODULUS: u64 = 1 << 31;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// A prime modulus `q` for the field ℤ_q.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Modulus(u64);

impl Modulus {
    pub fn new(q: u64) -> Result<Self, SharingError> {
        if q > MAX_MODULUS || !is_prime(q) {
            return Err(SharingError::NotPrime(q));
        }
        Ok(Modulus(q))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn element(self, value: u64) -> FieldElement {
        FieldElement {
            value: value % self.0,
            modulus: self,
        }
    }

    pub fn zero(self) -> FieldElement {
        self.element(0)
    }

    pub fn one(self) -> FieldElement {
        self.element(1)
    }

    /// Number of secret bits that always fit below the modulus: floor(log2 q).
    pub fn chunk_bits(self) -> usize {
        (63 - self.0.leading_zeros()) as usize
    }

    /// Bits needed to encode any element: ceil(log2 q).
    pub fn element_bits(self) -> usize {
        (64 - (self.0 - 1).leading_zeros()) as usize
    }
}

impl TryFrom<u64> for Modulus {
    type Error = SharingError;

    fn try_from(q: u64) -> Result<Self, Self::Error> {
        Modulus::new(q)
    }
}

impl From<Modulus> for u64 {
    fn from(m: Modulus) -> u64 {
        m.0
    }
}

/// Element of ℤ_q.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    modulus: Modulus,
}

impl FieldElement {
    pub fn new(value: u64, modulus: Modulus) -> Result<Self, SharingError> {
        if value >= modulus.get() {
            return Err(SharingError::OutOfField {
                value,
                modulus: modulus.get(),
            });
        }
        Ok(FieldElement { value, modulus })
    }

    pub fn value(self) -> u64 {
        self.value
    }

    pub fn modulus(self) -> Modulus {
        self.modulus
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    pub fn pow(self, mut exp: u64) -> Self {
        let mut base = self;
        let mut acc = self.modulus.one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem. `None` for zero.
    pub fn inverse(self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(self.pow(self.modulus.get() - 2))
        }
    }

    fn check(self, other: Self) {
        assert_eq!(
            self.modulus, other.modulus,
            "field elements from different moduli"
        );
    }
}

impl Add for FieldElement {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        self.check(rhs);
        self.modulus.element(self.value + rhs.value)
    }
}

impl Sub for FieldElement {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        self.check(rhs);
        self.modulus
            .element(self.value + self.modulus.get() - rhs.value)
    }
}

impl Mul for FieldElement {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        self.check(rhs);
        self.modulus.element(self.value * rhs.value)
    }
}

impl Neg for FieldElement {
    type Output = Self;

    fn neg(self) -> Self {
        self.modulus.zero() - self
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.modulus.get())
    }
}

/// Polynomial over ℤ_q; `coefficients[i]` multiplies x^i, so the constant
/// term is the shared secret.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    coefficients: Vec<FieldElement>,
}

impl Polynomial {
    pub fn new(coefficients: Vec<FieldElement>) -> Result<Self, SharingError> {
        let first = coefficients.first().ok_or(SharingError::EmptyPolynomial)?;
        let modulus = first.modulus();
        if coefficients.iter().any(|c| c.modulus() != modulus) {
            return Err(SharingError::MixedModuli);
        }
        Ok(Polynomial { coefficients })
    }

    pub fn coefficients(&self) -> &[FieldElement] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn modulus(&self) -> Modulus {
        self.coefficients[0].modulus()
    }

    pub fn evaluate(&self, x: FieldElement) -> FieldElement {
        self.coefficients
            .iter()
            .rev()
            .fold(self.modulus().zero(), |acc, &c| acc * x + c)
    }
}
