//! Classifies what a node, or a coalition of nodes, learns about the
//! end-to-end key from everything it legitimately saw.
//!
//! A view is the union of the members' transcripts. Every transcript value
//! carries its derivation as a GF(2) expression over primitive unknowns, so
//! each observed bit is one linear equation. Three engines read those
//! equations:
//!
//! * `linear`: Gaussian elimination. Exact for XOR-only protocols at any
//!   key length.
//! * `enumerate`: brute force over the unknowns, split into independent
//!   components. Used as an oracle for the linear engine.
//! * `shamir`: eliminates link keys linearly, then enumerates sharing
//!   polynomials chunk by chunk.
//!
//! Levels: FAT when every key bit is pinned; NAT when the key is uniform
//! given the view and the view is independent of the share material; PAT
//! otherwise.

mod enumerate;
pub mod gf2;
mod linear;
mod shamir;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::key_fabric::{FabricError, Network, NodeId, Role};
use crate::secret_sharing::ShamirParams;
use crate::symbolic::{BitTerm, BitVar, LinExpr, VarId};

pub use enumerate::ENUMERATION_LIMIT;
pub use shamir::{shamir_posterior, Posterior};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("the key has no bits")]
    EmptySecret,
    #[error("enumeration over {bits} unknown bits exceeds the limit of {limit}")]
    DomainTooLarge { bits: usize, limit: usize },
    #[error("{0}")]
    NonLinear(String),
    #[error("a constraint mixes several sharing chunks")]
    ChunkCrossing,
    #[error("transcript equations are inconsistent")]
    Inconsistent,
    #[error("deduced value of key bit {0} disagrees with the true value")]
    Unsound(usize),
}

/// One named piece of share material: an XOR fragment, a threshold share,
/// or a half of a split string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Material {
    pub label: String,
    pub expr: LinExpr,
}

/// How threshold shares were laid out: chunk widths of the key, and for
/// share `i` the variable holding its encoding of chunk `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShamirLayout {
    pub params: ShamirParams,
    pub chunk_bits: Vec<usize>,
    pub blocks: Vec<Vec<VarId>>,
}

/// What counts as the key and as share material in one run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecretModel {
    pub secret: LinExpr,
    pub material: Vec<Material>,
    pub shamir: Option<ShamirLayout>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TrustLevel {
    Nat,
    Pat,
    Fat,
}

impl TrustLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            TrustLevel::Nat => "NAT",
            TrustLevel::Pat => "PAT",
            TrustLevel::Fat => "FAT",
        }
    }
}

impl std::fmt::Display for TrustLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Linear,
    Enumeration,
    Shamir,
}

/// The transcript entry after which the view first depends on share
/// material.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub node: NodeId,
    pub seq: u64,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrustVerdict {
    pub level: TrustLevel,
    pub secret_bits: usize,
    pub determined_bits: usize,
    pub posterior_entropy_bits: f64,
    pub correlation_witness: Option<Witness>,
    pub engine: Engine,
}

impl TrustVerdict {
    fn decide(
        secret_bits: usize,
        determined_bits: usize,
        uniform: bool,
        correlation_witness: Option<Witness>,
        posterior_entropy_bits: f64,
        engine: Engine,
    ) -> Self {
        let level = if determined_bits == secret_bits {
            TrustLevel::Fat
        } else if uniform && correlation_witness.is_none() {
            TrustLevel::Nat
        } else {
            TrustLevel::Pat
        };
        TrustVerdict {
            level,
            secret_bits,
            determined_bits,
            posterior_entropy_bits,
            correlation_witness,
            engine,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Coalition {
    members: BTreeSet<NodeId>,
}

impl Coalition {
    pub fn new<I: IntoIterator<Item = NodeId>>(net: &Network, members: I) -> Result<Self, AnalysisError> {
        let members: BTreeSet<NodeId> = members.into_iter().collect();
        for m in &members {
            if !net.topology().contains(m) {
                return Err(AnalysisError::UnknownNode(m.to_string()));
            }
        }
        Ok(Coalition { members })
    }

    pub fn members(&self) -> &BTreeSet<NodeId> {
        &self.members
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViewEntry {
    pub node: NodeId,
    pub seq: u64,
    pub role: Role,
    pub label: String,
}

/// One observed bit: XOR of `vars` equals `rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViewRow {
    pub vars: Vec<BitVar>,
    pub rhs: bool,
    pub entry: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinearView {
    pub entries: Vec<ViewEntry>,
    pub rows: Vec<ViewRow>,
}

impl LinearView {
    /// Primitive bits the view mentions.
    pub fn basis_variables(&self) -> BTreeSet<BitVar> {
        self.rows.iter().flat_map(|r| r.vars.iter().copied()).collect()
    }

    pub fn witness(&self, entry: usize) -> Witness {
        let e = &self.entries[entry];
        Witness {
            node: e.node.clone(),
            seq: e.seq,
            label: e.label.clone(),
        }
    }
}

/// Equations for everything the coalition saw, in the order it was seen.
/// Bits that are constant on every input contribute no row.
pub fn build_linear_view(net: &Network, coalition: &Coalition) -> Result<LinearView, AnalysisError> {
    let mut all = Vec::new();
    for m in coalition.members() {
        let t = net
            .transcript(m)
            .ok_or_else(|| AnalysisError::UnknownNode(m.to_string()))?;
        all.extend(t.entries().iter().map(|e| (m, e)));
    }
    all.sort_by_key(|(_, e)| e.seq);
    let mut view = LinearView::default();
    for (node, e) in all {
        let idx = view.entries.len();
        view.entries.push(ViewEntry {
            node: node.clone(),
            seq: e.seq,
            role: e.role,
            label: e.label.clone(),
        });
        for (i, term) in e.value.expr.terms().iter().enumerate() {
            let rhs = e.value.value.bit(i) ^ term.constant_part();
            if term.vars().is_empty() {
                if rhs {
                    return Err(AnalysisError::Inconsistent);
                }
                continue;
            }
            view.rows.push(ViewRow {
                vars: term.vars().to_vec(),
                rhs,
                entry: idx,
            });
        }
    }
    Ok(view)
}

/// For each target functional, its value if the view pins it.
pub fn span_closure(view: &LinearView, targets: &[BitTerm]) -> Vec<Option<bool>> {
    linear::span_closure(view, targets)
}

pub fn classify_coalition(net: &Network, model: &SecretModel, coalition: &Coalition) -> Result<TrustVerdict, AnalysisError> {
    let engine = if model.shamir.is_some() {
        Engine::Shamir
    } else {
        Engine::Linear
    };
    classify_with(net, model, coalition, engine)
}

pub fn classify_node(net: &Network, model: &SecretModel, node: &NodeId) -> Result<TrustVerdict, AnalysisError> {
    classify_coalition(net, model, &Coalition::new(net, [node.clone()])?)
}

pub fn classify_with(
    net: &Network,
    model: &SecretModel,
    coalition: &Coalition,
    engine: Engine,
) -> Result<TrustVerdict, AnalysisError> {
    if model.secret.is_empty() {
        return Err(AnalysisError::EmptySecret);
    }
    let view = build_linear_view(net, coalition)?;
    match engine {
        Engine::Linear => {
            if model.shamir.is_some() {
                return Err(AnalysisError::NonLinear(
                    "threshold shares depend non-linearly on the key".into(),
                ));
            }
            linear::classify(net, model, &view)
        }
        Engine::Enumeration => {
            if model.shamir.is_some() {
                return shamir::classify(net, model, &view);
            }
            enumerate::classify(net, model, &view)
        }
        Engine::Shamir => shamir::classify(net, model, &view),
    }
}

/// Exact posterior entropy of the key by enumeration.
pub fn posterior_entropy(net: &Network, model: &SecretModel, coalition: &Coalition) -> Result<f64, AnalysisError> {
    classify_with(net, model, coalition, Engine::Enumeration).map(|v| v.posterior_entropy_bits)
}

/// Lets `tappers` overhear `channel`; later verdicts include what they saw.
pub fn apply_tap(net: &mut Network, channel: &str, tappers: &[NodeId]) -> Result<(), FabricError> {
    net.apply_tap(channel, tappers)
}

/// Shannon entropy of a distribution given by counts. Uniform support is
/// special-cased so powers of two come out exact.
pub(crate) fn entropy_of<I: IntoIterator<Item = u64>>(counts: I) -> f64 {
    let counts: Vec<u64> = counts.into_iter().filter(|c| *c > 0).collect();
    if counts.is_empty() {
        return 0.0;
    }
    if counts.iter().all(|c| *c == counts[0]) {
        return (counts.len() as f64).log2();
    }
    let total: u64 = counts.iter().sum();
    let t = total as f64;
    counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            -p * p.log2()
        })
        .sum()
}

#[cfg(test)]
mod tests;
