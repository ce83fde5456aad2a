use std::collections::{BTreeMap, BTreeSet};

use super::gf2::{BitRow, Echelon, Insert};
use super::{AnalysisError, Engine, LinearView, SecretModel, TrustVerdict};
use crate::key_fabric::Network;
use crate::symbolic::{BitTerm, BitVar};

/// Compact column numbering for the primitive bits an analysis touches.
pub(super) struct Columns {
    index: BTreeMap<BitVar, usize>,
}

impl Columns {
    pub(super) fn new<I: IntoIterator<Item = BitVar>>(vars: I) -> Self {
        let set: BTreeSet<BitVar> = vars.into_iter().collect();
        Columns {
            index: set.into_iter().enumerate().map(|(i, v)| (v, i)).collect(),
        }
    }

    /// Columns in the given order; callers use this to put some variables
    /// below others.
    pub(super) fn ordered(vars: Vec<BitVar>) -> Self {
        Columns {
            index: vars.into_iter().enumerate().map(|(i, v)| (v, i)).collect(),
        }
    }

    pub(super) fn width(&self) -> usize {
        self.index.len()
    }

    pub(super) fn row(&self, vars: &[BitVar]) -> BitRow {
        let mut r = BitRow::zeros(self.width());
        for v in vars {
            r.flip(self.index[v]);
        }
        r
    }
}

fn model_vars(view: &LinearView, targets: &[BitTerm], extra: &[&BitTerm]) -> Columns {
    Columns::new(
        view.rows
            .iter()
            .flat_map(|r| r.vars.iter().copied())
            .chain(targets.iter().flat_map(|t| t.vars().iter().copied()))
            .chain(extra.iter().flat_map(|t| t.vars().iter().copied())),
    )
}

pub(super) fn span_closure(view: &LinearView, targets: &[BitTerm]) -> Vec<Option<bool>> {
    let cols = model_vars(view, targets, &[]);
    let mut basis = Echelon::new(cols.width());
    for r in &view.rows {
        basis.insert(cols.row(&r.vars), r.rhs);
    }
    targets
        .iter()
        .map(|t| {
            let (rest, v) = basis.reduce(cols.row(t.vars()), false);
            rest.is_zero().then_some(v ^ t.constant_part())
        })
        .collect()
}

pub(super) fn classify(net: &Network, model: &SecretModel, view: &LinearView) -> Result<TrustVerdict, AnalysisError> {
    let targets = model.secret.terms();
    let material: Vec<&BitTerm> = model.material.iter().flat_map(|m| m.expr.terms()).collect();
    let cols = model_vars(view, targets, &material);
    let width = cols.width();

    let mut shares = Echelon::new(width);
    for t in &material {
        shares.insert(cols.row(t.vars()), false);
    }

    // view alone, and view plus share material, grown entry by entry
    let mut basis = Echelon::new(width);
    let mut joint = shares.clone();
    let mut witness = None;
    let mut i = 0;
    while i < view.rows.len() {
        let entry = view.rows[i].entry;
        while i < view.rows.len() && view.rows[i].entry == entry {
            let r = &view.rows[i];
            if basis.insert(cols.row(&r.vars), r.rhs) == Insert::Contradiction {
                return Err(AnalysisError::Inconsistent);
            }
            joint.insert(cols.row(&r.vars), false);
            i += 1;
        }
        if witness.is_none() && basis.rank() + shares.rank() > joint.rank() {
            witness = Some(view.witness(entry));
        }
    }

    let mut determined = 0;
    let mut with_secret = basis.clone();
    for (pos, t) in targets.iter().enumerate() {
        let row = cols.row(t.vars());
        let (rest, v) = basis.reduce(row.clone(), false);
        if rest.is_zero() {
            let deduced = v ^ t.constant_part();
            if deduced != t.eval(|b| net.vars().truth(b)) {
                return Err(AnalysisError::Unsound(pos));
            }
            determined += 1;
        }
        with_secret.insert(row, false);
    }
    // key bits still free once the view is fixed
    let free = with_secret.rank() - basis.rank();
    let uniform = free == targets.len();
    Ok(TrustVerdict::decide(
        targets.len(),
        determined,
        uniform,
        witness,
        free as f64,
        Engine::Linear,
    ))
}
