//! Values paired with their derivation.
//!
//! Every primitive random quantity in a run (the secret, party randomness,
//! each provisioned link key, each share payload) is registered once in a
//! [`VarTable`] and receives a contiguous range of bit variables. Values that
//! travel through the protocols are [`Tracked`]: the concrete bits plus, for
//! each bit, the XOR of primitive bit variables (and a constant) that
//! produced it. The trust analyzer reads transcripts through these
//! expressions.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::secret_sharing::{BitString, SharingError};

/// Global index of one primitive bit.
pub type BitVar = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    /// Alice's end-to-end secret.
    Secret,
    /// Locally generated party randomness (XOR pads, decentralized halves).
    PartyRandom,
    /// A provisioned link key.
    LinkKey,
    /// A threshold-share payload; a non-linear function of the secret.
    ShareBlock,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarInfo {
    pub name: String,
    pub kind: VarKind,
    pub offset: BitVar,
    pub value: BitString,
}

impl VarInfo {
    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn bit_range(&self) -> std::ops::Range<BitVar> {
        self.offset..self.offset + self.len() as BitVar
    }
}

/// Registry of primitive unknowns together with their true values.
#[derive(Clone, Debug, Default)]
pub struct VarTable {
    vars: Vec<VarInfo>,
    total_bits: BitVar,
}

impl VarTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a fresh primitive and returns it as a tracked value.
    pub fn fresh(&mut self, name: impl Into<String>, kind: VarKind, value: BitString) -> Tracked {
        self.register(name, kind, value).1
    }

    pub fn register(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        value: BitString,
    ) -> (VarId, Tracked) {
        assert!(!value.is_empty(), "primitives must have at least one bit");
        let offset = self.total_bits;
        self.total_bits += value.len() as BitVar;
        let expr = LinExpr::identity(offset, value.len());
        self.vars.push(VarInfo {
            name: name.into(),
            kind,
            offset,
            value: value.clone(),
        });
        (VarId(self.vars.len() as u32 - 1), Tracked { value, expr })
    }

    pub fn vars(&self) -> &[VarInfo] {
        &self.vars
    }

    pub fn get(&self, id: VarId) -> &VarInfo {
        &self.vars[id.0 as usize]
    }

    pub fn by_name(&self, name: &str) -> Option<(VarId, &VarInfo)> {
        self.vars
            .iter()
            .enumerate()
            .find(|(_, v)| v.name == name)
            .map(|(i, v)| (VarId(i as u32), v))
    }

    pub fn total_bits(&self) -> BitVar {
        self.total_bits
    }

    /// Variable owning global bit `bit`, and the bit's position inside it.
    pub fn locate(&self, bit: BitVar) -> (VarId, usize) {
        let idx = self.vars.partition_point(|v| v.offset <= bit) - 1;
        (VarId(idx as u32), (bit - self.vars[idx].offset) as usize)
    }

    /// True value of one global bit.
    pub fn truth(&self, bit: BitVar) -> bool {
        let (id, pos) = self.locate(bit);
        self.get(id).value.bit(pos)
    }

    pub fn tracked(&self, id: VarId) -> Tracked {
        let v = self.get(id);
        Tracked {
            value: v.value.clone(),
            expr: LinExpr::identity(v.offset, v.len()),
        }
    }
}

/// XOR of primitive bits plus a constant.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BitTerm {
    vars: Vec<BitVar>,
    constant: bool,
}

impl BitTerm {
    pub fn var(v: BitVar) -> Self {
        BitTerm {
            vars: vec![v],
            constant: false,
        }
    }

    pub fn constant(c: bool) -> Self {
        BitTerm {
            vars: Vec::new(),
            constant: c,
        }
    }

    pub fn vars(&self) -> &[BitVar] {
        &self.vars
    }

    pub fn constant_part(&self) -> bool {
        self.constant
    }

    pub fn xor(&self, other: &BitTerm) -> BitTerm {
        let (a, b) = (&self.vars, &other.vars);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        BitTerm {
            vars: out,
            constant: self.constant ^ other.constant,
        }
    }

    pub fn eval(&self, value_of: impl Fn(BitVar) -> bool) -> bool {
        self.vars.iter().fold(self.constant, |acc, &v| acc ^ value_of(v))
    }
}

/// Per-bit linear expression of a bit string.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct LinExpr {
    bits: Vec<BitTerm>,
}

impl LinExpr {
    pub fn identity(offset: BitVar, len: usize) -> Self {
        LinExpr {
            bits: (0..len as BitVar).map(|i| BitTerm::var(offset + i)).collect(),
        }
    }

    pub fn constant(value: &BitString) -> Self {
        LinExpr {
            bits: value.bits().iter().map(|&b| BitTerm::constant(b)).collect(),
        }
    }

    pub fn from_terms(bits: Vec<BitTerm>) -> Self {
        LinExpr { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn terms(&self) -> &[BitTerm] {
        &self.bits
    }

    pub fn xor(&self, other: &LinExpr) -> Result<LinExpr, SharingError> {
        if self.len() != other.len() {
            return Err(SharingError::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(LinExpr {
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a.xor(b)).collect(),
        })
    }

    pub fn concat(&self, other: &LinExpr) -> LinExpr {
        let mut bits = self.bits.clone();
        bits.extend_from_slice(&other.bits);
        LinExpr { bits }
    }

    pub fn slice(&self, start: usize, end: usize) -> LinExpr {
        LinExpr {
            bits: self.bits[start..end].to_vec(),
        }
    }

    /// Primitive bits this expression touches.
    pub fn support(&self) -> BTreeSet<BitVar> {
        self.bits.iter().flat_map(|t| t.vars.iter().copied()).collect()
    }

    pub fn eval(&self, value_of: impl Fn(BitVar) -> bool + Copy) -> BitString {
        BitString::from_bits(self.bits.iter().map(|t| t.eval(value_of)).collect())
    }

    pub fn eval_truth(&self, table: &VarTable) -> BitString {
        self.eval(|v| table.truth(v))
    }

    /// Decomposes the expression as an XOR of whole primitives, each placed
    /// at a bit offset, plus a constant. `None` when some primitive enters
    /// only partially or out of order.
    pub fn placements(&self, table: &VarTable) -> Option<(Vec<Placement>, BitString)> {
        use std::collections::BTreeMap;
        let mut seen: BTreeMap<VarId, Vec<(usize, usize)>> = BTreeMap::new();
        for (pos, term) in self.bits.iter().enumerate() {
            for &v in &term.vars {
                let (id, inner) = table.locate(v);
                seen.entry(id).or_default().push((pos, inner));
            }
        }
        let mut out = Vec::new();
        for (id, mut hits) in seen {
            let len = table.get(id).len();
            hits.sort_by_key(|&(_, inner)| inner);
            if hits.len() != len || hits.iter().enumerate().any(|(i, &(_, inner))| inner != i) {
                return None;
            }
            let at = hits[0].0;
            if hits.iter().any(|&(pos, inner)| pos != at + inner) {
                return None;
            }
            out.push(Placement { var: id, at });
        }
        let constant = BitString::from_bits(self.bits.iter().map(|t| t.constant).collect());
        Some((out, constant))
    }
}

/// A whole primitive XORed into a bit string starting at bit `at`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Placement {
    pub var: VarId,
    pub at: usize,
}

/// A concrete bit string together with its linear derivation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tracked {
    pub value: BitString,
    pub expr: LinExpr,
}

impl Tracked {
    pub fn constant(value: BitString) -> Self {
        Tracked {
            expr: LinExpr::constant(&value),
            value,
        }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn xor(&self, other: &Tracked) -> Result<Tracked, SharingError> {
        Ok(Tracked {
            value: self.value.xor(&other.value)?,
            expr: self.expr.xor(&other.expr)?,
        })
    }

    pub fn concat(&self, other: &Tracked) -> Tracked {
        Tracked {
            value: self.value.concat(&other.value),
            expr: self.expr.concat(&other.expr),
        }
    }

    pub fn slice(&self, start: usize, end: usize) -> Tracked {
        Tracked {
            value: self.value.slice(start, end),
            expr: self.expr.slice(start, end),
        }
    }

    /// Appends zero bits up to `len`.
    pub fn pad_to(&self, len: usize) -> Tracked {
        if self.len() >= len {
            return self.clone();
        }
        self.concat(&Tracked::constant(BitString::zeros(len - self.len())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_cancels_shared_variables() {
        let mut t = VarTable::new();
        let s = t.fresh("K_S", VarKind::Secret, BitString::from_bin("1010"));
        let k = t.fresh("K_A1", VarKind::LinkKey, BitString::from_bin("0110"));
        let c = s.xor(&k).unwrap();
        assert_eq!(c.value, BitString::from_bin("1100"));
        let back = c.xor(&k).unwrap();
        assert_eq!(back, s);
        assert_eq!(c.expr.eval_truth(&t), c.value);
    }

    #[test]
    fn locate_maps_bits_to_variables() {
        let mut t = VarTable::new();
        t.fresh("a", VarKind::Secret, BitString::zeros(3));
        t.fresh("b", VarKind::LinkKey, BitString::zeros(5));
        assert_eq!(t.locate(0), (VarId(0), 0));
        assert_eq!(t.locate(2), (VarId(0), 2));
        assert_eq!(t.locate(3), (VarId(1), 0));
        assert_eq!(t.locate(7), (VarId(1), 4));
    }

    #[test]
    fn placements_recover_concatenation_layout() {
        let mut t = VarTable::new();
        let a = t.fresh("a", VarKind::PartyRandom, BitString::from_bin("10"));
        let b = t.fresh("b", VarKind::PartyRandom, BitString::from_bin("01"));
        let k = t.fresh("k", VarKind::LinkKey, BitString::from_bin("1111"));
        let v = a.concat(&b).xor(&k).unwrap();
        let (parts, constant) = v.expr.placements(&t).unwrap();
        assert!(constant.is_zero());
        assert_eq!(
            parts,
            vec![
                Placement { var: VarId(0), at: 0 },
                Placement { var: VarId(1), at: 2 },
                Placement { var: VarId(2), at: 0 },
            ]
        );
        let partial = a.concat(&b).slice(1, 3);
        assert!(partial.expr.placements(&t).is_none());
    }
}
