//! Threshold sharing over a prime field.
//!
//! A secret `s ∈ ℤ_q` is hidden as the constant term of a random polynomial
//! of degree `t - 1`; share `i` is the point `(i, f(i))`. Any `t` points fix
//! the polynomial, and `t - 1` points are consistent with every secret.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::field::{FieldElement, Modulus, Polynomial};
use super::SharingError;

/// How the top coefficient `a_{t-1}` is drawn.
///
/// `Uniform` draws it from all of ℤ_q, which makes any `t - 1` shares
/// exactly independent of the secret. `NonZero` redraws until it is nonzero
/// so the polynomial has full degree; a coalition holding `t - 1` shares can
/// then rule out exactly one candidate secret.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeadingCoefficient {
    #[default]
    Uniform,
    NonZero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShamirParams {
    pub modulus: Modulus,
    pub threshold: usize,
    pub share_count: usize,
    #[serde(default)]
    pub leading: LeadingCoefficient,
}

impl ShamirParams {
    pub fn new(q: u64, threshold: usize, share_count: usize) -> Result<Self, SharingError> {
        let params = ShamirParams {
            modulus: Modulus::new(q)?,
            threshold,
            share_count,
            leading: LeadingCoefficient::default(),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_leading(mut self, leading: LeadingCoefficient) -> Self {
        self.leading = leading;
        self
    }

    pub fn validate(&self) -> Result<(), SharingError> {
        let (t, k, q) = (self.threshold, self.share_count, self.modulus.get());
        if t < 1 || t > k {
            return Err(SharingError::BadThreshold { threshold: t, shares: k });
        }
        if k as u64 >= q {
            return Err(SharingError::TooManyShares { shares: k, modulus: q });
        }
        Ok(())
    }
}

/// One point `(x, f(x))` of a sharing polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ShamirShare {
    pub index: u64,
    pub value: FieldElement,
}

/// Draws a random polynomial with constant term `secret` under `params`.
pub fn random_polynomial<R: Rng + ?Sized>(
    secret: FieldElement,
    params: &ShamirParams,
    rng: &mut R,
) -> Result<Polynomial, SharingError> {
    params.validate()?;
    let q = params.modulus;
    if secret.modulus() != q {
        return Err(SharingError::MixedModuli);
    }
    let mut coefficients = vec![secret];
    for i in 1..params.threshold {
        let top = i == params.threshold - 1;
        let low = match params.leading {
            LeadingCoefficient::NonZero if top => 1,
            _ => 0,
        };
        coefficients.push(q.element(rng.gen_range(low..q.get())));
    }
    Polynomial::new(coefficients)
}

/// Evaluates `poly` at `x = 1..=share_count`.
pub fn shares_from_polynomial(
    poly: &Polynomial,
    share_count: usize,
) -> Result<Vec<ShamirShare>, SharingError> {
    let q = poly.modulus();
    if share_count as u64 >= q.get() {
        return Err(SharingError::TooManyShares {
            shares: share_count,
            modulus: q.get(),
        });
    }
    if poly.degree() + 1 > share_count {
        return Err(SharingError::BadThreshold {
            threshold: poly.degree() + 1,
            shares: share_count,
        });
    }
    Ok((1..=share_count as u64)
        .map(|x| ShamirShare {
            index: x,
            value: poly.evaluate(q.element(x)),
        })
        .collect())
}

pub fn shamir_split<R: Rng + ?Sized>(
    secret: FieldElement,
    params: &ShamirParams,
    rng: &mut R,
) -> Result<Vec<ShamirShare>, SharingError> {
    let poly = random_polynomial(secret, params, rng)?;
    shares_from_polynomial(&poly, params.share_count)
}

/// Lagrange interpolation at zero over the first `threshold` shares.
pub fn shamir_reconstruct(
    shares: &[ShamirShare],
    threshold: usize,
) -> Result<FieldElement, SharingError> {
    if threshold == 0 || shares.len() < threshold {
        return Err(SharingError::NotEnoughShares {
            have: shares.len(),
            need: threshold,
        });
    }
    let q = shares[0].value.modulus();
    if shares.iter().any(|s| s.value.modulus() != q) {
        return Err(SharingError::MixedModuli);
    }
    let mut seen = BTreeSet::new();
    for s in shares {
        if s.index == 0 || s.index >= q.get() {
            return Err(SharingError::BadIndex(s.index));
        }
        if !seen.insert(s.index) {
            return Err(SharingError::DuplicateIndex(s.index));
        }
    }

    let used = &shares[..threshold];
    let mut acc = q.zero();
    for (i, si) in used.iter().enumerate() {
        let xi = q.element(si.index);
        let mut basis = q.one();
        for (j, sj) in used.iter().enumerate() {
            if i == j {
                continue;
            }
            let xj = q.element(sj.index);
            basis = basis * xj * (xj - xi).inverse().expect("indices are distinct");
        }
        acc = acc + si.value * basis;
    }
    Ok(acc)
}
