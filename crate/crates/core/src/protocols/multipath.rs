//! Multipath forwarding of secret shares.
//!
//! The secret is split into one share per path and every share is forwarded
//! hop-by-hop along its own path. Relays see only the share travelling
//! through them.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::fat::fat_forward;
use super::paths::PathSet;
use super::ProtocolError;
use crate::key_fabric::{Network, NodeId, Role};
use crate::secret_sharing::{
    random_polynomial, shamir_reconstruct, shares_from_polynomial, xor_combine, BitString,
    ShamirParams, ShamirShare,
};
use crate::symbolic::{LinExpr, Tracked, VarId, VarKind};
use crate::trust_analyzer::{Material, SecretModel, ShamirLayout};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    Xor { k: usize },
    Shamir(ShamirParams),
}

impl Scheme {
    pub fn share_count(&self) -> usize {
        match self {
            Scheme::Xor { k } => *k,
            Scheme::Shamir(p) => p.share_count,
        }
    }
}

/// Width in bits of the share payload carried on each path.
pub fn share_payload_bits(scheme: &Scheme, secret_bits: usize) -> usize {
    match scheme {
        Scheme::Xor { .. } => secret_bits,
        Scheme::Shamir(p) => {
            let chunks = secret_bits.div_ceil(p.modulus.chunk_bits());
            chunks * p.modulus.element_bits()
        }
    }
}

#[derive(Clone, Debug)]
pub struct MultipathOutcome {
    /// Bob's reconstruction; `None` when too few shares arrived.
    pub recovered: Option<BitString>,
    /// Indices (0-based) of the paths whose share reached Bob.
    pub delivered_paths: Vec<usize>,
    pub keys_consumed: usize,
    pub model: SecretModel,
}

fn fragment_label(i: usize) -> String {
    format!("K_S{}", i + 1)
}

/// Sends `secret` from the first to the last node of every path in `paths`.
/// Paths listed in `failed` are unavailable and carry nothing.
#[allow(clippy::too_many_arguments)]
pub fn pat_multipath_send<R: Rng + ?Sized>(
    net: &mut Network,
    alice: &NodeId,
    bob: &NodeId,
    secret: &Tracked,
    scheme: &Scheme,
    paths: &PathSet,
    failed: &BTreeSet<usize>,
    rng: &mut R,
) -> Result<MultipathOutcome, ProtocolError> {
    let k = scheme.share_count();
    if paths.len() != k {
        return Err(ProtocolError::PathCountMismatch {
            paths: paths.len(),
            shares: k,
        });
    }
    for p in &paths.paths {
        if p.first() != Some(alice) || p.last() != Some(bob) {
            return Err(ProtocolError::PathEndpoints);
        }
    }
    match scheme {
        Scheme::Xor { k } => xor_multipath(net, alice, bob, secret, *k, paths, failed, rng),
        Scheme::Shamir(params) => shamir_multipath(net, alice, bob, secret, params, paths, failed, rng),
    }
}

#[allow(clippy::too_many_arguments)]
fn xor_multipath<R: Rng + ?Sized>(
    net: &mut Network,
    alice: &NodeId,
    bob: &NodeId,
    secret: &Tracked,
    k: usize,
    paths: &PathSet,
    failed: &BTreeSet<usize>,
    rng: &mut R,
) -> Result<MultipathOutcome, ProtocolError> {
    if k < 2 {
        return Err(crate::secret_sharing::SharingError::TooFewFragments(k).into());
    }
    let mut fragments = Vec::with_capacity(k);
    let mut last = secret.clone();
    for i in 0..k - 1 {
        let value = BitString::random(secret.len(), rng);
        let f = net.vars_mut().fresh(fragment_label(i), VarKind::PartyRandom, value);
        last = last.xor(&f)?;
        fragments.push(f);
    }
    fragments.push(last);
    for (i, f) in fragments.iter().enumerate() {
        net.note(alice, Role::Computed, &fragment_label(i), f.clone());
    }

    let mut received: Vec<Option<Tracked>> = vec![None; k];
    let mut keys = 0;
    for (i, f) in fragments.iter().enumerate() {
        if failed.contains(&i) {
            continue;
        }
        let out = fat_forward(net, &paths.paths[i], f, &fragment_label(i), None)?;
        keys += out.hops;
        received[i] = Some(out.delivered);
    }
    let delivered_paths: Vec<usize> = (0..k).filter(|i| received[*i].is_some()).collect();

    let model = SecretModel {
        secret: secret.expr.clone(),
        material: fragments
            .iter()
            .enumerate()
            .map(|(i, f)| Material {
                label: fragment_label(i),
                expr: f.expr.clone(),
            })
            .collect(),
        shamir: None,
    };

    let recovered = if delivered_paths.len() == k {
        let got: Vec<BitString> = received.iter().flatten().map(|t| t.value.clone()).collect();
        let combined = xor_combine(&got)?;
        let mut folded = received[0].clone().expect("all delivered");
        for r in received.iter().skip(1).flatten() {
            folded = folded.xor(r)?;
        }
        debug_assert_eq!(folded.value, combined);
        net.note(bob, Role::Computed, "K_S", folded);
        Some(combined)
    } else {
        None
    };
    Ok(MultipathOutcome {
        recovered,
        delivered_paths,
        keys_consumed: keys,
        model,
    })
}

/// Splits the secret into chunks of `chunk_bits` bits (the last may be
/// shorter); each chunk is below the modulus.
pub fn chunk_layout(secret_bits: usize, params: &ShamirParams) -> Vec<usize> {
    let b = params.modulus.chunk_bits();
    (0..secret_bits.div_ceil(b))
        .map(|j| b.min(secret_bits - j * b))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn shamir_multipath<R: Rng + ?Sized>(
    net: &mut Network,
    alice: &NodeId,
    bob: &NodeId,
    secret: &Tracked,
    params: &ShamirParams,
    paths: &PathSet,
    failed: &BTreeSet<usize>,
    rng: &mut R,
) -> Result<MultipathOutcome, ProtocolError> {
    params.validate()?;
    let q = params.modulus;
    let k = params.share_count;
    let w = q.element_bits();
    let chunks = chunk_layout(secret.len(), params);

    // shares[i][j]: share i of chunk j
    let mut shares: Vec<Vec<ShamirShare>> = vec![Vec::with_capacity(chunks.len()); k];
    let mut offset = 0;
    for &cb in &chunks {
        let value = secret.value.slice(offset, offset + cb).to_u64();
        offset += cb;
        let poly = random_polynomial(q.element(value), params, rng)?;
        for (i, s) in shares_from_polynomial(&poly, k)?.into_iter().enumerate() {
            shares[i].push(s);
        }
    }

    let mut blocks: Vec<Vec<VarId>> = Vec::with_capacity(k);
    let mut payloads = Vec::with_capacity(k);
    for (i, row) in shares.iter().enumerate() {
        let mut ids = Vec::with_capacity(row.len());
        let mut payload: Option<Tracked> = None;
        for (j, s) in row.iter().enumerate() {
            let bits = BitString::from_u64(s.value.value(), w);
            let (id, t) = net
                .vars_mut()
                .register(format!("{}.c{j}", fragment_label(i)), VarKind::ShareBlock, bits);
            ids.push(id);
            payload = Some(match payload {
                None => t,
                Some(p) => p.concat(&t),
            });
        }
        let payload = payload.ok_or(ProtocolError::EmptySecret)?;
        net.note(alice, Role::Computed, &fragment_label(i), payload.clone());
        blocks.push(ids);
        payloads.push(payload);
    }

    let mut keys = 0;
    let mut received: Vec<Option<Tracked>> = vec![None; k];
    for (i, p) in payloads.iter().enumerate() {
        if failed.contains(&i) {
            continue;
        }
        let out = fat_forward(net, &paths.paths[i], p, &fragment_label(i), Some(i as u64 + 1))?;
        keys += out.hops;
        received[i] = Some(out.delivered);
    }
    let delivered_paths: Vec<usize> = (0..k).filter(|i| received[*i].is_some()).collect();

    let model = SecretModel {
        secret: secret.expr.clone(),
        material: blocks
            .iter()
            .enumerate()
            .map(|(i, ids)| Material {
                label: fragment_label(i),
                expr: ids
                    .iter()
                    .map(|id| net.vars().tracked(*id).expr)
                    .fold(LinExpr::default(), |acc, e| acc.concat(&e)),
            })
            .collect(),
        shamir: Some(ShamirLayout {
            params: *params,
            chunk_bits: chunks.clone(),
            blocks,
        }),
    };

    let t = params.threshold;
    let recovered = if delivered_paths.len() >= t {
        // the t lowest delivered path indices
        let chosen = &delivered_paths[..t];
        let mut out = BitString::default();
        for (j, &cb) in chunks.iter().enumerate() {
            let pts: Vec<ShamirShare> = chosen
                .iter()
                .map(|&i| {
                    let bits = received[i].as_ref().expect("delivered").value.slice(j * w, (j + 1) * w);
                    ShamirShare {
                        index: i as u64 + 1,
                        value: q.element(bits.to_u64()),
                    }
                })
                .collect();
            let value = shamir_reconstruct(&pts, t)?.value();
            if value >= 1u64 << cb {
                return Err(ProtocolError::ChunkOverflow { chunk: j, value });
            }
            out = out.concat(&BitString::from_u64(value, cb));
        }
        net.note(
            bob,
            Role::Computed,
            "K_S",
            Tracked {
                value: out.clone(),
                expr: secret.expr.clone(),
            },
        );
        Some(out)
    } else {
        None
    };

    Ok(MultipathOutcome {
        recovered,
        delivered_paths,
        keys_consumed: keys,
        model,
    })
}
