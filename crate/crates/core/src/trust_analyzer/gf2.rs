//! Dense GF(2) rows and an incremental echelon basis.

use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitRow {
    words: Vec<u64>,
}

impl BitRow {
    pub fn zeros(width: usize) -> Self {
        BitRow {
            words: vec![0; width.div_ceil(64)],
        }
    }

    pub fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn xor_assign(&mut self, other: &BitRow) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn lowest(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            (0..64).filter(move |b| w >> b & 1 == 1).map(move |b| i * 64 + b)
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Insert {
    Added,
    Redundant,
    /// The row reduced to `0 = 1`.
    Contradiction,
}

/// Rows keyed by their lowest set column. Each stored row has no bits below
/// its pivot, so reduction walks strictly upwards.
#[derive(Clone, Debug)]
pub struct Echelon {
    width: usize,
    rows: BTreeMap<usize, (BitRow, bool)>,
}

impl Echelon {
    pub fn new(width: usize) -> Self {
        Echelon {
            width,
            rows: BTreeMap::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `row` as far as the basis allows. A zero result means the
    /// row lies in the span, and the returned bit is its implied value.
    pub fn reduce(&self, mut row: BitRow, mut rhs: bool) -> (BitRow, bool) {
        while let Some(p) = row.lowest() {
            match self.rows.get(&p) {
                Some((r, b)) => {
                    row.xor_assign(r);
                    rhs ^= b;
                }
                None => break,
            }
        }
        (row, rhs)
    }

    pub fn insert(&mut self, row: BitRow, rhs: bool) -> Insert {
        let (row, rhs) = self.reduce(row, rhs);
        match row.lowest() {
            Some(p) => {
                self.rows.insert(p, (row, rhs));
                Insert::Added
            }
            None if rhs => Insert::Contradiction,
            None => Insert::Redundant,
        }
    }

    pub fn contains(&self, row: &BitRow) -> bool {
        self.reduce(row.clone(), false).0.is_zero()
    }

    /// Stored rows in pivot order.
    pub fn rows(&self) -> impl Iterator<Item = (usize, &BitRow, bool)> {
        self.rows.iter().map(|(p, (r, b))| (*p, r, *b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(width: usize, ones: &[usize]) -> BitRow {
        let mut r = BitRow::zeros(width);
        for &i in ones {
            r.flip(i);
        }
        r
    }

    #[test]
    fn span_membership_by_hand() {
        let mut e = Echelon::new(3);
        assert_eq!(e.insert(row(3, &[0, 1]), true), Insert::Added);
        assert_eq!(e.insert(row(3, &[1]), false), Insert::Added);
        // x0 = (x0 ^ x1) ^ x1 = 1
        let (r, v) = e.reduce(row(3, &[0]), false);
        assert!(r.is_zero());
        assert!(v);
        assert!(!e.contains(&row(3, &[2])));
        assert_eq!(e.insert(row(3, &[0]), false), Insert::Contradiction);
        assert_eq!(e.insert(row(3, &[0]), true), Insert::Redundant);
    }

    #[test]
    fn wide_rows_cross_word_boundaries() {
        let mut e = Echelon::new(130);
        e.insert(row(130, &[3, 70, 129]), false);
        e.insert(row(130, &[70]), false);
        assert!(e.contains(&row(130, &[3, 129])));
        assert_eq!(row(130, &[65, 129]).ones().collect::<Vec<_>>(), vec![65, 129]);
    }

    fn rank_oracle(rows: &[u16]) -> usize {
        // rank by counting the distinct elements of the span
        let mut span = std::collections::BTreeSet::from([0u16]);
        for &r in rows {
            let next: Vec<u16> = span.iter().map(|s| s ^ r).collect();
            span.extend(next);
        }
        span.len().trailing_zeros() as usize
    }

    proptest! {
        #[test]
        fn rank_matches_span_size(rows in proptest::collection::vec(0u16..(1 << 10), 0..12)) {
            let mut e = Echelon::new(10);
            for &r in &rows {
                let ones: Vec<usize> = (0..10).filter(|i| r >> i & 1 == 1).collect();
                e.insert(row(10, &ones), false);
            }
            prop_assert_eq!(e.rank(), rank_oracle(&rows));
        }
    }
}
