use std::fmt;

use rand::RngCore;

use super::SharingError;

/// Fixed-length bit sequence, most significant bit first.
///
/// This is the carrier for every secret, link key, mask and ciphertext in
/// the crate. The canonical textual form is lowercase hex, left-padded to
/// `ceil(len / 4)` digits.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self { bits: vec![false; len] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Parses a string of `0`/`1` characters. Panics on any other character;
    /// intended for literals in code and tests.
    pub fn from_bin(s: &str) -> Self {
        Self {
            bits: s
                .chars()
                .map(|c| match c {
                    '0' => false,
                    '1' => true,
                    other => panic!("invalid binary digit {other:?}"),
                })
                .collect(),
        }
    }

    /// Builds a `len`-bit string from the low bits of `value`.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64, "from_u64 supports at most 64 bits");
        Self {
            bits: (0..len).rev().map(|i| (value >> i) & 1 == 1).collect(),
        }
    }

    pub fn random<R: RngCore + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut bits = Vec::with_capacity(len);
        let mut word = 0u64;
        for i in 0..len {
            if i % 64 == 0 {
                word = rng.next_u64();
            }
            bits.push(word & 1 == 1);
            word >>= 1;
        }
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|b| !b)
    }

    /// Interprets the string as an unsigned big-endian integer.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len() <= 64, "to_u64 supports at most 64 bits");
        self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString, SharingError> {
        if self.len() != other.len() {
            return Err(SharingError::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(BitString {
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a ^ b).collect(),
        })
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut bits = self.bits.clone();
        bits.extend_from_slice(&other.bits);
        BitString { bits }
    }

    pub fn slice(&self, start: usize, end: usize) -> BitString {
        BitString {
            bits: self.bits[start..end].to_vec(),
        }
    }

    pub fn to_hex(&self) -> String {
        let digits = self.len().div_ceil(4);
        let pad = digits * 4 - self.len();
        let mut padded = vec![false; pad];
        padded.extend_from_slice(&self.bits);
        padded
            .chunks(4)
            .map(|nibble| {
                let v = nibble.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
                char::from_digit(v, 16).expect("nibble < 16")
            })
            .collect()
    }

    /// Parses hex produced by [`BitString::to_hex`] for a string of `len` bits.
    pub fn from_hex(hex: &str, len: usize) -> Result<BitString, SharingError> {
        let digits = len.div_ceil(4);
        if hex.len() != digits {
            return Err(SharingError::InvalidHex(hex.to_string()));
        }
        let mut bits = Vec::with_capacity(digits * 4);
        for c in hex.chars() {
            let v = c
                .to_digit(16)
                .filter(|_| !c.is_ascii_uppercase())
                .ok_or_else(|| SharingError::InvalidHex(hex.to_string()))?;
            bits.extend((0..4).rev().map(|i| (v >> i) & 1 == 1));
        }
        let pad = digits * 4 - len;
        if bits[..pad].iter().any(|&b| b) {
            return Err(SharingError::InvalidHex(hex.to_string()));
        }
        Ok(BitString {
            bits: bits[pad..].to_vec(),
        })
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(")?;
        for &b in &self.bits {
            write!(f, "{}", b as u8)?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{}", b as u8)?;
        }
        Ok(())
    }
}
