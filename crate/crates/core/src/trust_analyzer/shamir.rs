//! Threshold-share views.
//!
//! Share encodings are non-linear in the key, but everything else a node
//! sees is linear in link keys and share encodings. Link keys are
//! eliminated first: with them placed in the lowest columns, echelon rows
//! whose pivot lies past them mention only key and share bits. Those rows
//! are then checked against every sharing polynomial, chunk by chunk.

use std::collections::BTreeMap;

use super::gf2::{Echelon, Insert};
use super::linear::Columns;
use super::{entropy_of, AnalysisError, Engine, LinearView, SecretModel, ShamirLayout, TrustVerdict};
use crate::key_fabric::Network;
use crate::secret_sharing::{LeadingCoefficient, Modulus, ShamirParams, ShamirShare};
use crate::symbolic::BitVar;

/// Most polynomials enumerated per chunk.
const POLYNOMIAL_LIMIT: u64 = 1 << 24;

/// Exact posterior of a field secret given some shares of it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Posterior {
    /// Number of polynomials consistent with the shares, per secret value.
    pub counts: Vec<u64>,
}

impl Posterior {
    pub fn entropy(&self) -> f64 {
        entropy_of(self.counts.iter().copied())
    }

    pub fn is_uniform(&self) -> bool {
        self.counts.iter().all(|c| *c > 0 && *c == self.counts[0])
    }

    pub fn support(&self) -> usize {
        self.counts.iter().filter(|c| **c > 0).count()
    }
}

/// Coefficient tuples `(a_1, …, a_{t-1})` allowed by the sampling policy.
fn coefficient_space(params: &ShamirParams) -> Result<Vec<Vec<u64>>, AnalysisError> {
    let q = params.modulus.get();
    let t = params.threshold;
    let size = (1..t).try_fold(1u64, |acc, i| {
        let choices = if i == t - 1 && params.leading == LeadingCoefficient::NonZero {
            q - 1
        } else {
            q
        };
        acc.checked_mul(choices)
    });
    match size {
        Some(s) if s <= POLYNOMIAL_LIMIT => {}
        _ => {
            return Err(AnalysisError::DomainTooLarge {
                bits: ((t - 1) as f64 * (q as f64).log2()).ceil() as usize,
                limit: POLYNOMIAL_LIMIT.trailing_zeros() as usize,
            })
        }
    }
    let mut out = vec![Vec::new()];
    for i in 1..t {
        let low = if i == t - 1 && params.leading == LeadingCoefficient::NonZero {
            1
        } else {
            0
        };
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (low..q).map(move |a| {
                    let mut p = prefix.clone();
                    p.push(a);
                    p
                })
            })
            .collect();
    }
    Ok(out)
}

fn eval(q: u64, secret: u64, coeffs: &[u64], x: u64) -> u64 {
    // Horner from the top coefficient down to the secret
    let acc = coeffs.iter().rev().fold(0u64, |acc, a| (acc * x + a) % q);
    (acc * x + secret) % q
}

/// Enumerates every secret in ℤ_q and every admissible coefficient tuple,
/// counting the polynomials that pass through all of `shares`.
pub fn shamir_posterior(shares: &[ShamirShare], params: &ShamirParams) -> Result<Posterior, AnalysisError> {
    let q = params.modulus;
    for s in shares {
        if s.value.modulus() != q {
            return Err(AnalysisError::NonLinear("share from another field".into()));
        }
    }
    let space = coefficient_space(params)?;
    let mut counts = vec![0u64; q.get() as usize];
    for secret in 0..q.get() {
        for coeffs in &space {
            if shares
                .iter()
                .all(|s| eval(q.get(), secret, coeffs, s.index) == s.value.value())
            {
                counts[secret as usize] += 1;
            }
        }
    }
    Ok(Posterior { counts })
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    /// Bit `r` (MSB first) of the key chunk.
    Secret { chunk: usize, r: usize },
    /// Bit `r` of share `share`'s encoding of the chunk.
    Block { share: usize, chunk: usize, r: usize },
}

impl Slot {
    fn chunk(self) -> usize {
        match self {
            Slot::Secret { chunk, .. } | Slot::Block { chunk, .. } => chunk,
        }
    }
}

/// A projected row: the slots it XORs together and its right-hand side.
type Constraint = (Vec<Slot>, bool);

struct ChunkResult {
    counts: Vec<u64>,
    inconsistent: bool,
}

struct ChunkEnumerator<'a> {
    layout: &'a ShamirLayout,
    q: Modulus,
    width: usize,
    space: Vec<Vec<u64>>,
}

impl ChunkEnumerator<'_> {
    fn run_chunk(&self, chunk: usize, constraints: &[(Vec<Slot>, bool)]) -> ChunkResult {
        let b = self.layout.chunk_bits[chunk];
        let k = self.layout.params.share_count;
        let q = self.q.get();
        let mut counts = vec![0u64; 1 << b];
        let mut inconsistent = false;
        let mut ys = vec![0u64; k];
        for secret in 0..(1u64 << b) {
            for coeffs in &self.space {
                for (i, y) in ys.iter_mut().enumerate() {
                    *y = eval(q, secret, coeffs, i as u64 + 1);
                }
                let ok = constraints.iter().all(|(slots, rhs)| {
                    let v = slots.iter().fold(false, |acc, s| {
                        acc ^ match *s {
                            Slot::Secret { r, .. } => secret >> (b - 1 - r) & 1 == 1,
                            Slot::Block { share, r, .. } => ys[share] >> (self.width - 1 - r) & 1 == 1,
                        }
                    });
                    v == *rhs
                });
                if ok {
                    counts[secret as usize] += 1;
                } else {
                    inconsistent = true;
                }
            }
        }
        ChunkResult { counts, inconsistent }
    }
}

pub(super) fn classify(net: &Network, model: &SecretModel, view: &LinearView) -> Result<TrustVerdict, AnalysisError> {
    let layout = model
        .shamir
        .as_ref()
        .ok_or_else(|| AnalysisError::NonLinear("no sharing layout".into()))?;
    let q = layout.params.modulus;
    let width = q.element_bits();
    let secret_bits = model.secret.len();

    let mut slots: BTreeMap<BitVar, Slot> = BTreeMap::new();
    let mut chunk_of = Vec::with_capacity(secret_bits);
    for (j, &b) in layout.chunk_bits.iter().enumerate() {
        chunk_of.extend((0..b).map(|r| (j, r)));
    }
    if chunk_of.len() != secret_bits {
        return Err(AnalysisError::NonLinear("chunk layout does not cover the key".into()));
    }
    for (pos, t) in model.secret.terms().iter().enumerate() {
        if t.vars().len() != 1 || t.constant_part() {
            return Err(AnalysisError::NonLinear("key bits must be primitive".into()));
        }
        let (chunk, r) = chunk_of[pos];
        slots.insert(t.vars()[0], Slot::Secret { chunk, r });
    }
    for (share, row) in layout.blocks.iter().enumerate() {
        for (chunk, id) in row.iter().enumerate() {
            for (r, bit) in net.vars().get(*id).bit_range().enumerate() {
                slots.insert(bit, Slot::Block { share, chunk, r });
            }
        }
    }

    // nuisance variables take the low columns
    let mut order: Vec<BitVar> = view
        .basis_variables()
        .into_iter()
        .filter(|v| !slots.contains_key(v))
        .collect();
    let nuisance = order.len();
    order.extend(slots.keys().copied());
    let cols = Columns::ordered(order.clone());

    let engine = ChunkEnumerator {
        layout,
        q,
        width,
        space: coefficient_space(&layout.params)?,
    };
    let n_chunks = layout.chunk_bits.len();

    let project = |basis: &Echelon| -> Result<Vec<Vec<Constraint>>, AnalysisError> {
        let mut per_chunk = vec![Vec::new(); n_chunks];
        for (pivot, row, rhs) in basis.rows() {
            if pivot < nuisance {
                continue;
            }
            let s: Vec<Slot> = row.ones().map(|c| slots[&order[c]]).collect();
            let chunk = s[0].chunk();
            if s.iter().any(|x| x.chunk() != chunk) {
                return Err(AnalysisError::ChunkCrossing);
            }
            per_chunk[chunk].push((s, rhs));
        }
        Ok(per_chunk)
    };

    let mut basis = Echelon::new(cols.width());
    let mut witness = None;
    let mut constrained = 0;
    let mut i = 0;
    while i < view.rows.len() {
        let entry = view.rows[i].entry;
        while i < view.rows.len() && view.rows[i].entry == entry {
            let r = &view.rows[i];
            if basis.insert(cols.row(&r.vars), r.rhs) == Insert::Contradiction {
                return Err(AnalysisError::Inconsistent);
            }
            i += 1;
        }
        let now = basis.rows().filter(|(p, _, _)| *p >= nuisance).count();
        if witness.is_none() && now > constrained {
            constrained = now;
            let per_chunk = project(&basis)?;
            let hit = per_chunk
                .iter()
                .enumerate()
                .any(|(j, c)| !c.is_empty() && engine.run_chunk(j, c).inconsistent);
            if hit {
                witness = Some(view.witness(entry));
            }
        }
    }

    let per_chunk = project(&basis)?;
    let mut determined = 0;
    let mut uniform = true;
    let mut entropy = 0.0;
    let mut offset = 0;
    for (j, constraints) in per_chunk.iter().enumerate() {
        let b = layout.chunk_bits[j];
        let res = engine.run_chunk(j, constraints);
        let live: Vec<u64> = (0..1u64 << b).filter(|s| res.counts[*s as usize] > 0).collect();
        for r in 0..b {
            let bit = |s: u64| s >> (b - 1 - r) & 1 == 1;
            if live.iter().all(|s| bit(*s) == bit(live[0])) {
                let truth = model.secret.terms()[offset + r].eval(|v| net.vars().truth(v));
                if bit(live[0]) != truth {
                    return Err(AnalysisError::Unsound(offset + r));
                }
                determined += 1;
            }
        }
        uniform &= res.counts.iter().all(|c| *c > 0 && *c == res.counts[0]);
        entropy += entropy_of(res.counts.iter().copied());
        offset += b;
    }
    Ok(TrustVerdict::decide(
        secret_bits,
        determined,
        uniform,
        witness,
        entropy,
        Engine::Shamir,
    ))
}
