//! Brute-force posterior over the unknowns.
//!
//! Primitive bits are grouped into components: two bits share a component
//! when some observed equation, key bit or share-material bit mentions
//! both. Components are independent under the uniform prior, so each is
//! enumerated on its own and the results multiply.

use std::collections::{BTreeMap, HashMap};

use super::{entropy_of, AnalysisError, Engine, LinearView, SecretModel, TrustVerdict};
use crate::key_fabric::Network;
use crate::symbolic::BitVar;

/// Largest component, in bits, that will be enumerated.
pub const ENUMERATION_LIMIT: usize = 20;

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut c = x;
        while self.parent[c] != r {
            let next = self.parent[c];
            self.parent[c] = r;
            c = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.parent[a.max(b)] = a.min(b);
        }
    }
}

/// Equations, key bits and material bits of one component as bit masks
/// over its local variables.
#[derive(Default)]
struct Component {
    vars: Vec<BitVar>,
    rows: Vec<(u32, bool, usize)>,
    targets: Vec<(usize, u32, bool)>,
    material: Vec<u32>,
}

struct Outcome {
    /// Per key bit: pinned value, if any.
    pinned: Vec<(usize, bool)>,
    uniform: bool,
    entropy: f64,
    dependent: bool,
}

fn parity(x: u32) -> bool {
    x.count_ones() & 1 == 1
}

/// Keeps a maximal independent subset of the material masks; the tuple of
/// all material bits is a function of this subset and vice versa.
fn independent(masks: &[u32]) -> Vec<u32> {
    let mut basis: Vec<u32> = Vec::new();
    let mut kept = Vec::new();
    for &m in masks {
        let mut r = m;
        for &b in &basis {
            r = r.min(r ^ b);
        }
        if r != 0 {
            basis.push(r);
            basis.sort_unstable_by(|a, b| b.cmp(a));
            kept.push(m);
        }
    }
    kept
}

impl Component {
    fn run(&self, upto: usize) -> Outcome {
        let n = self.vars.len();
        let rows: Vec<(u32, bool)> = self
            .rows
            .iter()
            .filter(|r| r.2 < upto)
            .map(|r| (r.0, r.1))
            .collect();
        let material = independent(&self.material);
        let mut counts: HashMap<u64, u64> = HashMap::new();
        let mut by_share: HashMap<u32, (u64, u64)> = HashMap::new();
        for a in 0u32..(1u32 << n) {
            let ok = rows.iter().all(|&(m, rhs)| parity(m & a) == rhs);
            let mut s = 0u32;
            for (i, &m) in material.iter().enumerate() {
                s |= (parity(m & a) as u32) << i;
            }
            let slot = by_share.entry(s).or_default();
            slot.0 += 1;
            if ok {
                slot.1 += 1;
                let mut key = 0u64;
                for (i, &(_, m, c)) in self.targets.iter().enumerate() {
                    key |= ((parity(m & a) ^ c) as u64) << i;
                }
                *counts.entry(key).or_default() += 1;
            }
        }
        let (first_total, first_hit) = *by_share.values().next().expect("at least one assignment");
        let dependent = by_share
            .values()
            .any(|&(total, hit)| hit * first_total != first_hit * total);
        let support: Vec<u64> = counts.keys().copied().collect();
        let pinned = self
            .targets
            .iter()
            .enumerate()
            .filter_map(|(i, &(pos, _, _))| {
                let v = support[0] >> i & 1;
                support.iter().all(|k| k >> i & 1 == v).then_some((pos, v == 1))
            })
            .collect();
        let full = 1u64 << self.targets.len();
        let even = counts.values().all(|c| *c == counts[&support[0]]);
        Outcome {
            pinned,
            uniform: counts.len() as u64 == full && even,
            entropy: entropy_of(counts.values().copied()),
            dependent,
        }
    }
}

fn components(view: &LinearView, model: &SecretModel) -> Result<Vec<Component>, AnalysisError> {
    let targets = model.secret.terms();
    let material: Vec<&[BitVar]> = model
        .material
        .iter()
        .flat_map(|m| m.expr.terms().iter().map(|t| t.vars()))
        .collect();
    let groups: Vec<&[BitVar]> = view
        .rows
        .iter()
        .map(|r| r.vars.as_slice())
        .chain(targets.iter().map(|t| t.vars()))
        .chain(material.iter().copied())
        .collect();

    let mut local: BTreeMap<BitVar, usize> = BTreeMap::new();
    for g in &groups {
        for v in g.iter() {
            let next = local.len();
            local.entry(*v).or_insert(next);
        }
    }
    let mut uf = UnionFind {
        parent: (0..local.len()).collect(),
    };
    for g in &groups {
        for w in g.windows(2) {
            uf.union(local[&w[0]], local[&w[1]]);
        }
    }

    let mut comps: BTreeMap<usize, Component> = BTreeMap::new();
    let mut slot: BTreeMap<BitVar, (usize, usize)> = BTreeMap::new();
    for (&v, &i) in &local {
        let root = uf.find(i);
        let c = comps.entry(root).or_default();
        slot.insert(v, (root, c.vars.len()));
        c.vars.push(v);
    }
    for c in comps.values() {
        if c.vars.len() > ENUMERATION_LIMIT {
            return Err(AnalysisError::DomainTooLarge {
                bits: c.vars.len(),
                limit: ENUMERATION_LIMIT,
            });
        }
    }
    let mask = |vars: &[BitVar]| -> (usize, u32) {
        let root = slot[&vars[0]].0;
        let m = vars.iter().fold(0u32, |m, v| m ^ (1 << slot[v].1));
        (root, m)
    };
    for r in &view.rows {
        let (root, m) = mask(&r.vars);
        comps.get_mut(&root).expect("component").rows.push((m, r.rhs, r.entry));
    }
    for (pos, t) in targets.iter().enumerate() {
        if t.vars().is_empty() {
            continue;
        }
        let (root, m) = mask(t.vars());
        let c = comps.get_mut(&root).expect("component");
        if c.targets.len() == 64 {
            return Err(AnalysisError::DomainTooLarge {
                bits: 64,
                limit: ENUMERATION_LIMIT,
            });
        }
        c.targets.push((pos, m, t.constant_part()));
    }
    for vars in material.into_iter().filter(|v| !v.is_empty()) {
        let (root, m) = mask(vars);
        comps.get_mut(&root).expect("component").material.push(m);
    }
    Ok(comps.into_values().collect())
}

pub(super) fn classify(net: &Network, model: &SecretModel, view: &LinearView) -> Result<TrustVerdict, AnalysisError> {
    let targets = model.secret.terms();
    let comps = components(view, model)?;
    let n_entries = view.entries.len();

    let mut determined = targets.iter().filter(|t| t.vars().is_empty()).count();
    let mut uniform = determined == 0;
    let mut entropy = 0.0;
    let mut dependent = false;
    for c in &comps {
        let out = c.run(n_entries);
        for (pos, v) in out.pinned {
            if v != targets[pos].eval(|b| net.vars().truth(b)) {
                return Err(AnalysisError::Unsound(pos));
            }
            determined += 1;
        }
        uniform &= out.uniform;
        entropy += out.entropy;
        dependent |= out.dependent;
    }

    let witness = if dependent {
        let first = (1..=n_entries)
            .find(|&upto| comps.iter().any(|c| c.run(upto).dependent))
            .expect("full view is dependent");
        Some(view.witness(first - 1))
    } else {
        None
    };
    Ok(TrustVerdict::decide(
        targets.len(),
        determined,
        uniform,
        witness,
        entropy,
        Engine::Enumeration,
    ))
}
